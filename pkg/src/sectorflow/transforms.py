"""Coordinate charts flattening the free-boundary problem onto a fixed interval.

Four charts are used, all sharing theta = arctan(x/y) in [-theta0, theta0]:

* ``omega``: rho = (1/2) log(x^2+y^2), s = t (plain log-polar, untransformed time)
* ``v``:     rho = (1/2) log((x^2+y^2)/(t + 1/n)), s = (1/2) log(t + 1/n);
             n = inf selects the limiting chart rho = (1/2) log((x^2+y^2)/t)
* ``w``:     rho = -(1/2) log((x^2+y^2)/(T-t)), s = -(1/2) log(T-t)
* ``r``:     plain polar radius, untransformed time

The boundary transfer functions returned by :func:`boundary_transfer` are all
algebraically tan(theta0 + arctan k) (times r for the r-chart); the sign each
chart's Neumann condition applies to them is given by :func:`boundary_signs`.
All functions here are pure and stateless.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import ChartFoldError, LawRangeError, PreconditionError


@dataclass(frozen=True)
class ChartId:
    """Identifier of one chart; ``n`` only for v (math.inf allowed), ``T`` only for w."""

    tag: str
    n: float = None
    T: float = None

    def __post_init__(self):
        if self.tag not in ("omega", "v", "w", "r"):
            raise PreconditionError(f"unknown chart tag {self.tag!r}")
        if self.tag == "v" and (self.n is None or self.n < 1):
            raise PreconditionError("v-chart needs n >= 1 (math.inf for the limiting chart)")
        if self.tag == "w" and (self.T is None or self.T <= 0):
            raise PreconditionError("w-chart needs a horizon T > 0")

    @classmethod
    def omega(cls):
        return cls("omega")

    @classmethod
    def v(cls, n):
        return cls("v", n=float(n))

    @classmethod
    def v_limiting(cls):
        return cls("v", n=math.inf)

    @classmethod
    def w(cls, T):
        return cls("w", T=float(T))

    @classmethod
    def r(cls):
        return cls("r")

    @property
    def limiting(self):
        return self.tag == "v" and math.isinf(self.n)

    def time(self, s):
        """Physical time t corresponding to rescaled time s."""
        if self.tag in ("omega", "r"):
            return s
        if self.tag == "v":
            return np.exp(2 * s) if self.limiting else np.exp(2 * s) - 1.0 / self.n
        return self.T - np.exp(-2 * s)

    def rescaled(self, t):
        """Rescaled time s corresponding to physical time t."""
        if self.tag in ("omega", "r"):
            return t
        if self.tag == "v":
            arg = t if self.limiting else t + 1.0 / self.n
            if np.any(np.asarray(arg) <= 0):
                raise PreconditionError("time outside the v-chart window")
            return 0.5 * np.log(arg)
        if np.any(np.asarray(t) >= self.T) or np.any(np.asarray(t) < 0):
            raise PreconditionError("w-chart needs 0 <= t < T")
        return -0.5 * np.log(self.T - t)

    def s0(self):
        """Chart time at the datum slice t = 0."""
        if self.limiting:
            raise PreconditionError("the limiting v-chart cannot represent t = 0")
        return float(self.rescaled(0.0))


@dataclass(frozen=True)
class ChartPoint:
    """A chart point; ``rho`` holds the plain radius and ``s`` the plain time for the r-chart."""

    theta: float
    rho: float
    s: float


def _check_sector(x, y, geometry):
    if geometry is not None:
        slack = 1e-12 * (abs(x) + abs(y) + 1.0)
        if y < abs(x) * geometry.tan_beta - slack:
            raise PreconditionError(f"point ({x}, {y}) lies outside the closed sector")


def to_chart(chart, x, y, t, geometry=None):
    """Map a physical point (x, y) at time t to chart coordinates."""
    r2 = x * x + y * y
    if r2 == 0.0:
        raise PreconditionError("the origin is a log singularity of every chart")
    _check_sector(x, y, geometry)
    theta = math.atan2(x, y)
    if chart.tag == "omega":
        return ChartPoint(theta, 0.5 * math.log(r2), t)
    if chart.tag == "v":
        if t < 0:
            raise PreconditionError("v-chart needs t >= 0")
        s = float(chart.rescaled(t))
        return ChartPoint(theta, 0.5 * math.log(r2) - s, s)
    if chart.tag == "w":
        s = float(chart.rescaled(t))
        return ChartPoint(theta, -0.5 * math.log(r2) - s, s)
    return ChartPoint(theta, math.sqrt(r2), t)


def from_chart(chart, p):
    """Exact inverse of to_chart."""
    if chart.tag == "omega":
        rad = math.exp(p.rho)
        return rad * math.sin(p.theta), rad * math.cos(p.theta), p.s
    if chart.tag == "v":
        rad = math.exp(p.s + p.rho)
        return rad * math.sin(p.theta), rad * math.cos(p.theta), float(chart.time(p.s))
    if chart.tag == "w":
        rad = math.exp(-p.s - p.rho)
        return rad * math.sin(p.theta), rad * math.cos(p.theta), float(chart.time(p.s))
    return p.rho * math.sin(p.theta), p.rho * math.cos(p.theta), p.s


def _denominator(chart, theta, value, d_theta):
    """The chart-validity denominator, positive wherever the gradient bound holds."""
    if chart.tag in ("omega", "v"):
        return np.cos(theta) + d_theta * np.sin(theta)
    if chart.tag == "w":
        return np.cos(theta) - d_theta * np.sin(theta)
    return np.cos(theta) + (d_theta / value) * np.sin(theta)


def convert_derivatives(chart, theta, value, d_theta, d_theta2, d_s, s, geometry=None):
    """Exact algebraic conversion of chart derivatives to (u_x, u_xx, u_t).

    ``d_theta``, ``d_theta2``, ``d_s`` are the field's theta- and s-derivatives
    at the point; ``value`` is the field itself.  Raises ChartFoldError when
    the chart denominator drops below the geometric floor (a lost gradient
    bound upstream).
    """
    theta = np.asarray(theta, dtype=float)
    floor = geometry.epsilon1 if geometry is not None else 1e-12
    den = _denominator(chart, theta, value, d_theta)
    if np.any(den < floor):
        raise ChartFoldError(
            f"chart denominator {float(np.min(den))} below floor {floor}: gradient bound lost"
        )
    sin, cos = np.sin(theta), np.cos(theta)
    if chart.tag == "omega":
        D = cos + d_theta * sin
        ux = (d_theta * cos - sin) / D
        uxx = (d_theta2 - d_theta**2 - 1.0) / (np.exp(value) * D**3)
        ut = np.exp(value) * d_s / D
    elif chart.tag == "v":
        D = cos + d_theta * sin
        ux = (d_theta * cos - sin) / D
        uxx = (d_theta2 - d_theta**2 - 1.0) / (np.exp(s + value) * D**3)
        ut = np.exp(value - s) * (1.0 + d_s) / (2.0 * D)
    elif chart.tag == "w":
        Dw = d_theta * sin - cos  # negative of the validity denominator
        ux = (d_theta * cos + sin) / Dw
        uxx = np.exp(s + value) * (d_theta2 + d_theta**2 + 1.0) / Dw**3
        ut = np.exp(s - value) * (1.0 + d_s) / (2.0 * Dw)
    else:
        r = value
        Dr = d_theta * sin + r * cos
        ux = (d_theta * cos - r * sin) / Dr
        uxx = (r * d_theta2 - 2.0 * d_theta**2 - r * r) / Dr**3
        ut = r * d_s / Dr
    return ux, uxx, ut


def boundary_signs(chart):
    """Signs (left, right) the Neumann data applies to the boundary transfer.

    field_theta(-theta0, s) = left * transfer(side=1), and
    field_theta(+theta0, s) = right * transfer(side=2).
    """
    return (1.0, -1.0) if chart.tag == "w" else (-1.0, 1.0)


def boundary_transfer(chart, side, s, value, laws, geometry):
    """Transfer function carrying a contact-slope law into the chart's Neumann data.

    Algebraically tan(theta0 + arctan k) with k evaluated at the physical
    (t, u) of the boundary point; the r-chart result carries an extra factor r.
    ``value`` is the field's boundary value (its radius for the r-chart).
    """
    law = laws[side - 1]
    th0 = geometry.theta0
    sin0, cos0 = math.sin(th0), math.cos(th0)
    if chart.tag == "omega":
        t_phys, u_val = s, np.exp(value) * cos0
    elif chart.tag == "v":
        t_phys, u_val = chart.time(s), np.exp(s + value) * cos0
    elif chart.tag == "w":
        t_phys, u_val = chart.time(s), np.exp(-s - value) * cos0
    else:
        t_phys, u_val = s, value * cos0
    k = law(t_phys, u_val)
    den = cos0 - k * sin0
    if np.any(np.asarray(den) <= 0):
        raise LawRangeError(f"law value k={k} makes the transfer denominator non-positive")
    transfer = (sin0 + k * cos0) / den
    if chart.tag == "r":
        transfer = transfer * value
    return transfer


@dataclass
class RecoveredSolution:
    """Physical-space snapshot recovered from one chart field."""

    x: np.ndarray  # uniform grid on [-xi1, xi2]
    u: np.ndarray
    xi1: float
    xi2: float
    t: float
    theta: np.ndarray
    x_nodes: np.ndarray
    u_nodes: np.ndarray
    ux_nodes: np.ndarray

    def interp(self, x):
        return PchipInterpolator(self.x_nodes, self.u_nodes)(x)


def _fd_theta(values, h):
    """Second-order first derivative on a uniform grid (one-sided at the ends)."""
    d = np.empty_like(values)
    d[1:-1] = (values[2:] - values[:-2]) / (2 * h)
    d[0] = (-3 * values[0] + 4 * values[1] - values[2]) / (2 * h)
    d[-1] = (3 * values[-1] - 4 * values[-2] + values[-3]) / (2 * h)
    return d


def chart_radius(chart, values, s):
    """Physical radius of each chart node."""
    if chart.tag == "omega":
        return np.exp(values)
    if chart.tag == "v":
        return np.exp(s + values)
    if chart.tag == "w":
        return np.exp(-s - values)
    return np.asarray(values, dtype=float)


def recover_solution(chart, theta, values, s, geometry, n_x=None):
    """Map a chart field at rescaled time s back to (u on an x-grid, xi1, xi2, t).

    Uses the chart inverse node by node, checks the monotone parametrization,
    and resamples onto a uniform x grid with a monotone (Fritsch-Carlson) cubic.
    """
    theta = np.asarray(theta, dtype=float)
    values = np.asarray(values, dtype=float)
    rad = chart_radius(chart, values, s)
    x_nodes = rad * np.sin(theta)
    u_nodes = rad * np.cos(theta)
    if np.any(np.diff(x_nodes) <= 0):
        raise ChartFoldError("recovered x is not strictly increasing: chart fold")
    h = theta[1] - theta[0]
    d_theta = _fd_theta(values, h)
    ux_nodes, _, _ = convert_derivatives(
        chart, theta, values, d_theta, np.zeros_like(values), np.zeros_like(values), s,
        geometry=geometry,
    )
    xi1, xi2 = -x_nodes[0], x_nodes[-1]
    t = float(chart.time(s))
    n_x = n_x or 2 * len(theta) - 1
    x = np.linspace(-xi1, xi2, n_x)
    u = PchipInterpolator(x_nodes, u_nodes)(x)
    return RecoveredSolution(x, u, float(xi1), float(xi2), t, theta, x_nodes, u_nodes, ux_nodes)


def represent(chart, s, u_func, support, theta_grid):
    """Chart field of a known graph u(x) on [support[0], support[1]] at time s.

    Solves arctan(x / u(x)) = theta per grid node (the angle is strictly
    monotone along an admissible graph) and converts the radius to the chart's
    field value.  The graph's endpoints must lie on the sector rays whenever
    the grid includes +-theta0.
    """
    x_lo, x_hi = support

    def angle(x):
        return math.atan2(x, float(u_func(x)))

    a_lo, a_hi = angle(x_lo), angle(x_hi)
    out = np.empty_like(np.asarray(theta_grid, dtype=float))
    for i, th in enumerate(np.asarray(theta_grid, dtype=float)):
        if th <= a_lo + 1e-14:
            x_b = x_lo
        elif th >= a_hi - 1e-14:
            x_b = x_hi
        else:
            x_b = brentq(lambda x: angle(x) - th, x_lo, x_hi, xtol=1e-15, rtol=8.9e-16)
        u_b = float(u_func(x_b))
        rho_tot = 0.5 * math.log(x_b * x_b + u_b * u_b)
        if chart.tag == "omega":
            out[i] = rho_tot
        elif chart.tag == "v":
            out[i] = rho_tot - s
        elif chart.tag == "w":
            out[i] = -rho_tot - s
        else:
            out[i] = math.exp(rho_tot)
    return out
