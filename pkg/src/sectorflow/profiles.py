"""Classical selfsimilar profiles of the constant-slope problem, by shooting.

The expanding profile phi solves a(phi') phi'' = phi - z phi' with contact data
phi(-p1) = p1 tan(beta), phi'(-p1) = -gamma1, phi(p2) = p2 tan(beta),
phi'(p2) = gamma2 (gamma1 + gamma2 > 0); the shrinking profile psi solves
a(psi') psi'' = z psi' - psi with the analogous data and gamma1 + gamma2 < 0.
The contact abscissae p1, p2 are themselves unknown, so we shoot from z = 0
over (value, slope) there and locate the sector-line contacts by event
detection.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .domain import InitialDatum
from .errors import ConvergenceError, PreconditionError

_ZMAX = 50.0


@dataclass
class Profile:
    """One classical profile with its contact parameters and a dense sample table."""

    kind: str  # "expanding" | "shrinking"
    gamma1: float
    gamma2: float
    p1: float
    p2: float
    z: np.ndarray
    value: np.ndarray
    slope: np.ndarray
    tan_beta: float
    diffusivity: object
    alternates: list = field(default_factory=list)

    def __post_init__(self):
        self._val_spline = CubicHermiteSpline(self.z, self.value, self.slope)
        if self.kind == "expanding":
            slope_d = (self.value - self.z * self.slope) / self.diffusivity(self.slope)
        else:
            slope_d = (self.z * self.slope - self.value) / self.diffusivity(self.slope)
        self._slp_spline = CubicHermiteSpline(self.z, self.slope, slope_d)

    @property
    def q1(self):
        return self.p1

    @property
    def q2(self):
        return self.p2

    @property
    def extrema(self):
        return float(np.min(self.value)), float(np.max(self.value))

    def value_at(self, z):
        z = np.asarray(z, dtype=float)
        out = self._val_spline(np.clip(z, -self.p1, self.p2))
        out = np.where((z < -self.p1 - 1e-14) | (z > self.p2 + 1e-14), np.nan, out)
        return out if out.ndim else float(out)

    def slope_at(self, z):
        z = np.asarray(z, dtype=float)
        out = self._slp_spline(np.clip(z, -self.p1, self.p2))
        out = np.where((z < -self.p1 - 1e-14) | (z > self.p2 + 1e-14), np.nan, out)
        return out if out.ndim else float(out)


def _shoot(a, kind, val0, slp0, tan_beta, sign, rtol, atol):
    """Integrate one half-trajectory from z=0 until it meets its sector line.

    sign=+1 integrates rightwards against the ray y = z tan(beta); sign=-1
    leftwards against y = -z tan(beta).  Returns (p, end_slope, dense_sol)
    with p > 0 the contact |z|, or None if the shot never lands.
    """
    if kind == "expanding":

        def rhs(z, y):
            aval = a(y[1])
            return [y[1], (y[0] - z * y[1]) / aval if aval > 0 else 0.0]

    else:

        def rhs(z, y):
            aval = a(y[1])
            return [y[1], (z * y[1] - y[0]) / aval if aval > 0 else 0.0]

    def contact(z, y):
        return y[0] - sign * z * tan_beta

    contact.terminal = True

    def runaway(z, y):
        # keeps the shot inside the slope range where a(.) is trusted
        return y[1] * y[1] - tan_beta * tan_beta

    runaway.terminal = True

    sol = solve_ivp(
        rhs,
        (0.0, sign * _ZMAX),
        [val0, slp0],
        method="RK45",
        events=(contact, runaway),
        rtol=rtol,
        atol=atol,
        dense_output=True,
    )
    if len(sol.t_events[0]) == 0:
        return None
    z_hit = sol.t_events[0][0]
    y_hit = sol.y_events[0][0]
    return abs(z_hit), float(y_hit[1]), sol


def _residual(a, x, tan_beta, gamma1, gamma2, kind, rtol, atol):
    val0, slp0 = x
    if val0 <= 0:
        return None
    right = _shoot(a, kind, val0, slp0, tan_beta, +1, rtol, atol)
    left = _shoot(a, kind, val0, slp0, tan_beta, -1, rtol, atol)
    if right is None or left is None:
        return None
    p2, slope_r, _ = right
    p1, slope_l, _ = left
    return np.array([slope_l + gamma1, slope_r - gamma2]), (p1, p2)


def _newton_shoot(a, start, tan_beta, gamma1, gamma2, kind, shoot_tol, rtol, atol, max_iter=60):
    """Damped Newton on the two contact-slope residuals; returns (x, trace)."""
    x = np.array(start, dtype=float)
    res = _residual(a, x, tan_beta, gamma1, gamma2, kind, rtol, atol)
    if res is None:
        return None, []
    f, _ = res
    trace = [float(np.max(np.abs(f)))]
    for _ in range(max_iter):
        if np.max(np.abs(f)) < shoot_tol:
            return x, trace
        jac = np.empty((2, 2))
        for j in range(2):
            h = 1e-7 * (1.0 + abs(x[j]))
            xp = x.copy()
            xp[j] += h
            rp = _residual(a, xp, tan_beta, gamma1, gamma2, kind, rtol, atol)
            if rp is None:
                return None, trace
            jac[:, j] = (rp[0] - f) / h
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            return None, trace
        lam, accepted = 1.0, False
        for _ in range(8):
            res_new = _residual(a, x + lam * step, tan_beta, gamma1, gamma2, kind, rtol, atol)
            if res_new is not None and np.max(np.abs(res_new[0])) < np.max(np.abs(f)):
                x = x + lam * step
                f = res_new[0]
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            return None, trace
        trace.append(float(np.max(np.abs(f))))
    return (x, trace) if np.max(np.abs(f)) < shoot_tol else (None, trace)


def _build_profile(a, x, tan_beta, gamma1, gamma2, kind, rtol, atol, n_samples=1501):
    right = _shoot(a, kind, x[0], x[1], tan_beta, +1, rtol, atol)
    left = _shoot(a, kind, x[0], x[1], tan_beta, -1, rtol, atol)
    p2, _, sol_r = right
    p1, _, sol_l = left
    nl = max(3, int(round(n_samples * p1 / (p1 + p2))))
    zl = np.linspace(-p1, 0.0, nl)
    zr = np.linspace(0.0, p2, n_samples - nl + 1)
    yl = sol_l.sol(zl)
    yr = sol_r.sol(zr)
    z = np.concatenate([zl, zr[1:]])
    value = np.concatenate([yl[0], yr[0][1:]])
    slope = np.concatenate([yl[1], yr[1][1:]])
    # pin the contact points exactly onto the sector lines
    value[0], value[-1] = p1 * tan_beta, p2 * tan_beta
    return Profile(kind, gamma1, gamma2, float(p1), float(p2), z, value, slope, tan_beta, a)


def _start_grid():
    vals = np.linspace(0.1, 2.0, 8)
    slps = np.linspace(-0.5, 0.5, 5)
    return [(v, m) for v in vals for m in slps]


def solve_phi(a, gamma1, gamma2, geometry, shoot_tol=1e-10, rtol=1e-10, atol=1e-12):
    """Expanding profile phi(z; gamma1, gamma2) with contact abscissae (p1, p2)."""
    if gamma1 + gamma2 <= 0:
        raise PreconditionError("solve_phi needs gamma1 + gamma2 > 0")
    _check_slopes(gamma1, gamma2, geometry)
    tb = geometry.tan_beta
    starts = [(0.5, 0.5 * (gamma2 - gamma1))] + _start_grid()
    last_trace = None
    for start in starts:
        x, trace = _newton_shoot(a, start, tb, gamma1, gamma2, "expanding", shoot_tol, rtol, atol)
        if x is not None:
            return _build_profile(a, x, tb, gamma1, gamma2, "expanding", rtol, atol)
        last_trace = trace or last_trace
    raise ConvergenceError("shooting for phi diverged from every start", trace=last_trace)


def solve_psi(a, gamma1, gamma2, geometry, shoot_tol=1e-10, rtol=1e-10, atol=1e-12):
    """Shrinking profile psi(z; gamma1, gamma2) with contact abscissae (q1, q2).

    Existence is asserted by the theory but not uniqueness, so every multistart
    solution found is kept: the profile with smallest q1 + q2 is returned and
    the others are attached as ``alternates``.
    """
    if gamma1 + gamma2 >= 0:
        raise PreconditionError("solve_psi needs gamma1 + gamma2 < 0")
    _check_slopes(gamma1, gamma2, geometry)
    tb = geometry.tan_beta
    starts = [(0.5, 0.5 * (gamma2 - gamma1))] + _start_grid()
    found = {}
    last_trace = None
    for start in starts:
        # explore cheaply, then polish survivors at the full tolerance
        x, trace = _newton_shoot(
            a, start, tb, gamma1, gamma2, "shrinking", 1e-7, min(rtol * 1e4, 1e-6), min(atol * 1e4, 1e-9)
        )
        if x is None:
            last_trace = trace or last_trace
            continue
        x, trace = _newton_shoot(a, tuple(x), tb, gamma1, gamma2, "shrinking", shoot_tol, rtol, atol)
        if x is None:
            last_trace = trace or last_trace
            continue
        prof = _build_profile(a, x, tb, gamma1, gamma2, "shrinking", rtol, atol)
        key = (round(prof.p1, 6), round(prof.p2, 6))
        if key not in found:
            found[key] = prof
    if not found:
        raise ConvergenceError("shooting for psi diverged from every start", trace=last_trace)
    profs = sorted(found.values(), key=lambda pr: pr.p1 + pr.p2)
    best = profs[0]
    best.alternates = profs[1:]
    return best


def _check_slopes(gamma1, gamma2, geometry):
    bound = geometry.slope_bound
    if abs(gamma1) > bound or abs(gamma2) > bound:
        raise PreconditionError(f"|gamma_i| must stay within tan(beta)-sigma = {bound}")


def classical_eval(profile, x, t, shift=0.0):
    """Value of the classical space-time solution built from a profile.

    Expanding: sqrt(2(t+shift)) phi(x / sqrt(2(t+shift))), needs t + shift > 0.
    Shrinking: shift is the horizon T and the value is
    sqrt(2(T-t)) psi(x / sqrt(2(T-t))), needs t < T.  Out-of-support x gives
    NaN (the explicit "outside the free boundary" marker, not an exception).
    """
    if profile.kind == "expanding":
        tau = t + shift
        if tau <= 0:
            raise PreconditionError("expanding evaluation needs t + shift > 0")
    else:
        tau = shift - t
        if tau <= 0:
            raise PreconditionError("shrinking evaluation needs t < T")
    s = math.sqrt(2.0 * tau)
    return s * profile.value_at(np.asarray(x, dtype=float) / s)


def classical_support(profile, t, shift=0.0):
    """Free-boundary interval (-zeta1, zeta2) of the classical solution at time t."""
    tau = (t + shift) if profile.kind == "expanding" else (shift - t)
    s = math.sqrt(2.0 * tau)
    return profile.p1 * s, profile.p2 * s


def classical_datum(profile, scale_param, n=801):
    """Sample the classical solution at its time slice into an InitialDatum.

    For an expanding profile ``scale_param`` is the time t of the slice; for a
    shrinking profile it is the horizon T (slice taken at t = 0).  Either way
    the slice has endpoints at -p1 sqrt(2 scale_param), p2 sqrt(2 scale_param).
    """
    if scale_param <= 0:
        raise PreconditionError("scale parameter must be positive")
    s = math.sqrt(2.0 * scale_param)
    xi1, xi2 = profile.p1 * s, profile.p2 * s
    x = np.linspace(-xi1, xi2, n)
    u = s * profile.value_at(x / s)
    ux = profile.slope_at(x / s)
    u[0], u[-1] = xi1 * profile.tan_beta, xi2 * profile.tan_beta
    ux[0], ux[-1] = -profile.gamma1, profile.gamma2
    return InitialDatum(xi1, xi2, x, u, ux)
