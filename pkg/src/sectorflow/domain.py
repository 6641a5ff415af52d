"""Problem data for the sector flow: geometry, diffusivity, boundary laws, initial data.

The physical problem evolves the graph of a positive function u(x, t) inside the
planar sector S = {y > |x| tan(beta)} under u_t = a(u_x) u_xx, with the endpoints
sliding on the two boundary rays and the contact slopes prescribed by a pair of
boundary laws k_1, k_2.  Everything in this module is immutable after
construction and safe to share between concurrent computations.
"""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline
from scipy.optimize import brentq

from .errors import BracketError, DatumError, LawRangeError, PreconditionError


@dataclass(frozen=True)
class SectorGeometry:
    """Half-angle data of the sector and the admissible slope margin.

    ``beta`` is the ray half-angle measured from the x-axis (so the sector is
    {y > |x| tan(beta)}), ``sigma`` the margin keeping slopes strictly inside
    (-tan(beta), tan(beta)).
    """

    beta: float
    sigma: float

    def __post_init__(self):
        if not 0.0 < self.beta < math.pi / 2:
            raise PreconditionError(f"beta must lie in (0, pi/2), got {self.beta}")
        if not 0.0 < self.sigma < math.tan(self.beta):
            raise PreconditionError(
                f"sigma must lie in (0, tan(beta)) = (0, {math.tan(self.beta)}), got {self.sigma}"
            )

    @property
    def theta0(self):
        """Half-width of the angular interval: theta0 = pi/2 - beta."""
        return math.pi / 2 - self.beta

    @property
    def tan_beta(self):
        return math.tan(self.beta)

    @property
    def slope_bound(self):
        """Admissible slope bound tan(beta) - sigma."""
        return math.tan(self.beta) - self.sigma

    @property
    def epsilon1(self):
        """Lower floor for the chart denominator cos(theta) + rho_theta sin(theta)."""
        return 1.0 / (2.0 - self.sigma / math.tan(self.beta))

    @property
    def omega1(self):
        """A priori bound on |rho_theta| in any log-radial chart."""
        return (1.0 + math.tan(self.beta) - self.sigma) / (self.sigma * math.cos(self.beta))


class Diffusivity:
    """Evaluable diffusivity a(p) > 0 with its first derivative.

    Families: ``constant``, ``curvature`` (1/(1+p^2)), ``polynomial`` and
    ``tabulated`` (C^2 cubic-spline interpolation of samples).  Positivity on
    the admissible slope interval is checked by dense sampling when a geometry
    is supplied.
    """

    def __init__(self, family, value=None, coefficients=None, samples=None, geometry=None):
        self.family = family
        if family == "constant":
            if value is None or value <= 0:
                raise PreconditionError("constant diffusivity needs a positive value")
            self.value = float(value)
        elif family == "curvature":
            pass
        elif family == "polynomial":
            if coefficients is None:
                raise PreconditionError("polynomial diffusivity needs coefficients")
            self.coefficients = np.asarray(coefficients, dtype=float)
            self._deriv_coeffs = np.polyder(self.coefficients)
        elif family == "tabulated":
            if samples is None:
                raise PreconditionError("tabulated diffusivity needs (p, a) samples")
            p, a = np.asarray(samples[0], float), np.asarray(samples[1], float)
            self._spline = CubicSpline(p, a)
            self._spline_d = self._spline.derivative()
        else:
            raise PreconditionError(f"unknown diffusivity family {family!r}")
        if geometry is not None:
            self.validate_on(geometry)

    @classmethod
    def constant(cls, value=1.0, geometry=None):
        return cls("constant", value=value, geometry=geometry)

    @classmethod
    def curvature(cls, geometry=None):
        return cls("curvature", geometry=geometry)

    @classmethod
    def polynomial(cls, coefficients, geometry=None):
        return cls("polynomial", coefficients=coefficients, geometry=geometry)

    @classmethod
    def tabulated(cls, p_samples, a_samples, geometry=None):
        return cls("tabulated", samples=(p_samples, a_samples), geometry=geometry)

    def __call__(self, p):
        if self.family == "constant":
            return self.value * np.ones_like(np.asarray(p, dtype=float))
        if self.family == "curvature":
            p = np.asarray(p, dtype=float)
            return 1.0 / (1.0 + p * p)
        if self.family == "polynomial":
            return np.polyval(self.coefficients, p)
        return self._spline(p)

    def deriv(self, p):
        if self.family == "constant":
            return np.zeros_like(np.asarray(p, dtype=float))
        if self.family == "curvature":
            p = np.asarray(p, dtype=float)
            return -2.0 * p / (1.0 + p * p) ** 2
        if self.family == "polynomial":
            return np.polyval(self._deriv_coeffs, p)
        return self._spline_d(p)

    def validate_on(self, geometry, n=2001):
        """Check a(p) > 0 on [-tan(beta)+sigma, tan(beta)-sigma] by dense sampling."""
        p = np.linspace(-geometry.slope_bound, geometry.slope_bound, n)
        a = self(p)
        if not np.all(np.isfinite(a)) or np.min(a) <= 0.0:
            raise PreconditionError(
                f"diffusivity must be positive on |p| <= {geometry.slope_bound}; min was {np.min(a)}"
            )
        return float(np.min(a)), float(np.max(a))


def _frac(x):
    return x - np.floor(x)


@dataclass(frozen=True)
class PeriodicShape:
    """Smooth 1-periodic shape F(zeta, tau) used to realize discrete-similar laws.

    F(zeta, tau) = base + amp_u sin(2 pi freq_u zeta + phase_u)
                        + amp_t sin(2 pi freq_t tau + phase_t).
    Integer frequencies keep the 1-periodicity exact.
    """

    base: float
    amp_u: float = 0.0
    freq_u: int = 1
    phase_u: float = 0.0
    amp_t: float = 0.0
    freq_t: int = 1
    phase_t: float = 0.0

    def __call__(self, zeta, tau):
        out = self.base + self.amp_u * np.sin(2 * np.pi * self.freq_u * np.asarray(zeta) + self.phase_u)
        out = out + self.amp_t * np.sin(2 * np.pi * self.freq_t * np.asarray(tau) + self.phase_t)
        return out

    def range_bounds(self):
        """Exact range of F over the torus (sin terms attain +-1 independently)."""
        spread = abs(self.amp_u) + abs(self.amp_t)
        return self.base - spread, self.base + spread


class BoundaryLaw:
    """Evaluable contact-slope law k(t, u) with its similarity metadata.

    ``kind`` is one of ``constant``, ``expanding``, ``shrinking``,
    ``autonomous``.  The non-constant kinds are realized through a periodic
    shape in (log u mod log b, log t mod 2 log b) so that the defining scaling
    identity holds exactly wherever the logarithm clamp is inactive:

    * expanding:  k(t, u) = k(b^2 t, b u)
    * shrinking:  k(t, u) = k(b^-2 t + (1 - b^-2) T, b^-1 u)
    * autonomous: k(u) = k(b u)
    """

    def __init__(self, side, kind, shape=None, b=None, T=None, clamp_floor=1e-12, gamma=None):
        if side not in (1, 2):
            raise PreconditionError(f"side must be 1 or 2, got {side}")
        self.side = side
        self.kind = kind
        self.clamp_floor = float(clamp_floor)
        if kind == "constant":
            if gamma is None:
                raise PreconditionError("constant law needs gamma")
            self.gamma = float(gamma)
            self.shape = None
            self.b = float(b) if b else None
            self.T = None
            return
        if kind not in ("expanding", "shrinking", "autonomous"):
            raise PreconditionError(f"unknown law kind {kind!r}")
        if shape is None or b is None or b <= 1.0:
            raise PreconditionError("discrete-similar law needs a shape and a ratio b > 1")
        self.shape = shape
        self.b = float(b)
        self.T = float(T) if T is not None else None
        if kind == "shrinking" and self.T is None:
            raise PreconditionError("shrinking law needs the extinction horizon T")
        self.gamma = None

    @classmethod
    def constant(cls, side, gamma):
        return cls(side, "constant", gamma=gamma)

    def __call__(self, t, u):
        t = np.asarray(t, dtype=float)
        u = np.asarray(u, dtype=float)
        if self.kind == "constant":
            out = np.full(np.broadcast(t, u).shape, self.gamma)
            return out if out.ndim else float(out)
        logb = math.log(self.b)
        zeta = _frac(np.log(np.maximum(u, self.clamp_floor)) / logb)
        if self.kind == "autonomous":
            out = self.shape(zeta, 0.0)
        elif self.kind == "expanding":
            tau = _frac(np.log(np.maximum(t, self.clamp_floor)) / (2 * logb))
            out = self.shape(zeta, tau)
        else:  # shrinking: the similarity clock runs on T - t
            tau = _frac(np.log(np.maximum(self.T - t, self.clamp_floor)) / (2 * logb))
            out = self.shape(zeta, tau)
        out = np.asarray(out)
        return out if out.ndim else float(out)

    def kmin(self):
        """Greatest lower bound k0 of the law (exact for declarative shapes)."""
        if self.kind == "constant":
            return self.gamma
        if isinstance(self.shape, PeriodicShape):
            lo, hi = self.shape.range_bounds()
            if self.kind == "autonomous" or self.shape.amp_t == 0.0:
                return self.shape.base - abs(self.shape.amp_u)
            return lo
        return float(np.min(self._lattice_values()))

    def kmax(self):
        if self.kind == "constant":
            return self.gamma
        if isinstance(self.shape, PeriodicShape):
            if self.kind == "autonomous" or self.shape.amp_t == 0.0:
                return self.shape.base + abs(self.shape.amp_u)
            return self.shape.range_bounds()[1]
        return float(np.max(self._lattice_values()))

    def _lattice_values(self, n=50, span=1e6):
        t, u = _validation_lattice(self, n=n, span=span)
        return self(t[:, None], u[None, :])


def _validation_lattice(law, n=50, span=1e6):
    """Log-spaced (t, u) lattice over [clamp_floor, span]^2, shrinking-aware in t."""
    floor = law.clamp_floor
    u = np.geomspace(floor, span, n)
    if law.kind == "shrinking":
        t = law.T - np.geomspace(floor, law.T, n)
    else:
        t = np.geomspace(floor, span, n)
    return t, u


@dataclass
class ValidationReport:
    """Outcome of validate_boundary_law for one law."""

    side: int
    kind: str
    similarity_defect: float
    kmin: float
    kmax: float
    passes_similarity: bool
    passes_range: bool
    clamp_fraction: float
    ill_conditioned: bool

    @property
    def passed(self):
        return self.passes_similarity and self.passes_range


def validate_boundary_law(law, geometry, n=50, span=1e6, defect_tol=1e-12):
    """Check the similarity identity and the admissible range of a boundary law.

    The similarity defect is the max absolute difference between k and its
    scaled-argument image over a log-spaced lattice; the range check requires
    [kmin, kmax] strictly inside (-tan(beta)+sigma, tan(beta)-sigma).  Lattice
    points whose log argument hits the clamp floor are counted; more than 1%
    of them flags the law as ill-conditioned near the origin.
    """
    t, u = _validation_lattice(law, n=n, span=span)
    tt, uu = np.meshgrid(t, u, indexing="ij")
    k = law(tt, uu)
    b = law.b if law.b else 2.0
    if law.kind == "shrinking":
        k_scaled = law(tt / b**2 + (1 - 1 / b**2) * law.T, uu / b)
    elif law.kind == "autonomous":
        k_scaled = law(tt, b * uu)
    else:  # constant laws satisfy the expanding identity trivially
        k_scaled = law(b**2 * tt, b * uu)
    defect = float(np.max(np.abs(k - k_scaled)))

    clamped = np.zeros_like(tt, dtype=bool)
    clamped |= uu < law.clamp_floor
    if law.kind == "shrinking":
        clamped |= (law.T - tt) < law.clamp_floor
    else:
        clamped |= tt < law.clamp_floor
    clamp_fraction = float(np.mean(clamped))

    lo, hi = law.kmin(), law.kmax()
    in_range = (-geometry.tan_beta + geometry.sigma < lo) and (hi < geometry.tan_beta - geometry.sigma)
    return ValidationReport(
        side=law.side,
        kind=law.kind,
        similarity_defect=defect,
        kmin=lo,
        kmax=hi,
        passes_similarity=defect < defect_tol,
        passes_range=in_range,
        clamp_fraction=clamp_fraction,
        ill_conditioned=clamp_fraction > 0.01,
    )


def make_discrete_similar_law(shape, b, side, mode, T=None, clamp_floor=1e-12, geometry=None):
    """Construct a boundary law satisfying the requested scaling identity exactly.

    ``mode`` is ``expanding``, ``shrinking`` (requires T) or ``autonomous``.
    When a geometry is given, shapes whose range leaves the admissible slope
    interval are rejected at construction.
    """
    law = BoundaryLaw(side, mode, shape=shape, b=b, T=T, clamp_floor=clamp_floor)
    if geometry is not None:
        lo, hi = law.kmin(), law.kmax()
        if lo <= -geometry.tan_beta + geometry.sigma or hi >= geometry.tan_beta - geometry.sigma:
            raise LawRangeError(
                f"shape range [{lo}, {hi}] must lie strictly inside "
                f"(-{geometry.slope_bound}, {geometry.slope_bound})"
            )
    return law


class InitialDatum:
    """Positive initial graph on [-xi01, xi02] with endpoints on the sector rays.

    Stored as samples plus derivative samples on a uniform grid; every consumer
    interpolates with cubic Hermite pieces.
    """

    def __init__(self, xi01, xi02, x, u, ux):
        self.xi01 = float(xi01)
        self.xi02 = float(xi02)
        self.x = np.asarray(x, dtype=float)
        self.u = np.asarray(u, dtype=float)
        self.ux = np.asarray(ux, dtype=float)
        if self.x.shape != self.u.shape or self.x.shape != self.ux.shape:
            raise DatumError("x, u, ux must share one shape")
        self._spline = CubicHermiteSpline(self.x, self.u, self.ux)
        self._spline_d = self._spline.derivative()

    def __call__(self, x):
        return self._spline(x)

    def slope(self, x):
        return self._spline_d(x)

    @property
    def scale(self):
        return float(np.max(self.u))

    def validate(self, geometry, laws=None, tol=1e-8, compat_tol=None):
        """Raise DatumError on any violated structural invariant."""
        problems = []
        if np.min(self.u) <= 0.0:
            problems.append("u0 must be positive on the closed interval")
        tb = geometry.tan_beta
        if abs(self.u[0] - self.xi01 * tb) > tol * (1 + self.xi01):
            problems.append("left endpoint off the ray y = -x tan(beta)")
        if abs(self.u[-1] - self.xi02 * tb) > tol * (1 + self.xi02):
            problems.append("right endpoint off the ray y = x tan(beta)")
        if np.max(np.abs(self.ux)) > geometry.slope_bound + tol:
            problems.append(
                f"|u0x| max {np.max(np.abs(self.ux))} exceeds tan(beta)-sigma = {geometry.slope_bound}"
            )
        if laws is not None:
            ct = compat_tol if compat_tol is not None else tol
            k1, k2 = laws
            r1 = abs(self.ux[0] + float(k1(0.0, self.u[0])))
            r2 = abs(self.ux[-1] - float(k2(0.0, self.u[-1])))
            if r1 > ct:
                problems.append(f"left compatibility defect {r1}")
            if r2 > ct:
                problems.append(f"right compatibility defect {r2}")
        if problems:
            raise DatumError("; ".join(problems))
        return self

    def scaled(self, lam):
        """Similarity-scaled copy lam * u0(x / lam); rays are scale invariant."""
        if lam <= 0:
            raise PreconditionError("scaling factor must be positive")
        return InitialDatum(lam * self.xi01, lam * self.xi02, lam * self.x, lam * self.u, self.ux.copy())

    def to_csv(self, path=None, config_hash=None):
        """Two-column CSV (x, u0); returns the text when path is None."""
        buf = io.StringIO()
        if config_hash:
            buf.write(f"# config: {config_hash}\n")
        writer = csv.writer(buf)
        writer.writerow(["x", "u0"])
        for xi, ui in zip(self.x, self.u):
            writer.writerow([repr(float(xi)), repr(float(ui))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path_or_text):
        """Load (x, u0) rows; derivatives are rebuilt with a C^2 cubic spline."""
        if "\n" in str(path_or_text):
            text = path_or_text
        else:
            with open(path_or_text) as fh:
                text = fh.read()
        rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
        header, data = rows[0], rows[1:]
        if [h.strip() for h in header[:2]] != ["x", "u0"]:
            raise DatumError("datum CSV must start with header 'x,u0'")
        x = np.array([float(r[0]) for r in data])
        u = np.array([float(r[1]) for r in data])
        ux = CubicSpline(x, u).derivative()(x)
        return cls(-x[0], x[-1], x, u, ux)


def _bezier_datum(a1, a3, a2, n):
    """Graph samples of the quadratic Bezier A1 -> A3 -> A2 on a uniform x grid.

    The arc is tangent to segment A1A3 at A1 and to A3A2 at A2, and
    d2y/dx2 = 4 (u x v) / (dx/dtau)^3 keeps one sign (u, v the control legs),
    so the datum is strictly convex (or concave, if the corner opens downward).
    """
    (x1, y1), (x3, y3), (x2, y2) = a1, a3, a2
    ax = x1 - 2 * x3 + x2
    bx = 2 * (x3 - x1)
    xs = np.linspace(x1, x2, n)
    if abs(ax) < 1e-14 * max(abs(bx), 1.0):
        tau = (xs - x1) / bx
    else:
        disc = np.maximum(bx * bx - 4 * ax * (x1 - xs), 0.0)
        tau = (-bx + np.sqrt(disc)) / (2 * ax)
        alt = (2 * (x1 - xs)) / (bx + np.sqrt(disc))  # stable branch
        bad = (tau < -1e-12) | (tau > 1 + 1e-12)
        tau = np.where(bad, -alt, tau)
    tau = np.clip(tau, 0.0, 1.0)
    omt = 1.0 - tau
    ys = omt**2 * y1 + 2 * tau * omt * y3 + tau**2 * y2
    dx = 2 * (omt * (x3 - x1) + tau * (x2 - x3))
    dy = 2 * (omt * (y3 - y1) + tau * (y2 - y3))
    slope = dy / dx
    cross = (x3 - x1) * (y2 - y3) - (y3 - y1) * (x2 - x3)
    curv = 4.0 * cross / dx**3
    # pin the exact endpoint data (ray contact and tangent slopes)
    ys[0], ys[-1] = y1, y2
    slope[0] = (y3 - y1) / (x3 - x1)
    slope[-1] = (y2 - y3) / (x2 - x3)
    return xs, ys, slope, curv


def tangent_datum(geometry, laws, scale=1.0, epsilon_prime=0.05, n=801):
    """Two-tangent-line construction of an initial datum, at a given scale.

    Draws the line from A1 = (-scale, scale tan(beta)) with slope
    -k1(0, scale tan(beta)), picks A2 slightly beyond the contact abscissa x'
    on the right ray, draws the line from A2 with slope k2(0, .), and replaces
    the corner by the quadratic arc tangent to both lines at A1 and A2.
    Compatibility at both endpoints is exact by construction.  The corner opens
    upward (convex datum) in the expanding regime and downward (concave) in the
    shrinking regime.
    """
    k1, k2 = laws
    tb = geometry.tan_beta
    y1 = scale * tb
    s1 = -float(k1(0.0, y1))
    if abs(tb - s1) < 1e-14:
        raise PreconditionError("degenerate construction: k1(0, tan(beta)) too close to -tan(beta)")
    x_prime = scale * (tb + s1) / (tb - s1)  # = scale*(tanb - k1)/(tanb + k1)
    if x_prime <= 0:
        raise PreconditionError("degenerate construction: x' <= 0 (k1(0, tan(beta)) = tan(beta))")
    # expanding corner opens upward with A2 beyond x'; shrinking opens downward
    # with A2 inside x' (otherwise the tangent lines never cross between them)
    direction = 1.0 if float(k1(0.0, y1)) + float(k2(0.0, x_prime * tb)) > 0 else -1.0

    def corner(eps):
        x2 = x_prime + direction * scale * eps
        if x2 <= 0:
            return None
        y2 = x2 * tb
        s2 = float(k2(0.0, y2))
        if abs(s2 - s1) < 1e-14:
            return None
        x3 = (y2 - y1 - s1 * scale - s2 * x2) / (s1 - s2)
        y3 = y1 + s1 * (x3 + scale)
        ok = (-scale < x3 < x2) and y3 > abs(x3) * tb - 1e-12 * scale
        return (x2, y2, x3, y3) if ok else None

    geom = corner(epsilon_prime)
    if geom is None:
        lo, hi = 0.0, epsilon_prime
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if corner(mid) is not None else (lo, mid)
        raise PreconditionError(
            f"epsilon_prime={epsilon_prime} too large: the tangent-line corner leaves the sector; "
            f"maximal admissible epsilon_prime ~= {lo:.6g}"
        )
    x2, y2, x3, y3 = geom
    xs, ys, slope, _ = _bezier_datum((-scale, y1), (x3, y3), (x2, y2), n)
    datum = InitialDatum(scale, x2, xs, ys, slope)
    return datum.validate(geometry, laws, tol=1e-9 * max(1.0, scale))


def build_convex_datum(geometry, laws, epsilon_prime=0.05, n=801):
    """Smoothed two-segment convex initial datum (expanding regime).

    Returns the datum together with its achieved curvature floor
    eps = min over the grid of a(u0x) u0xx; the floor is reported, not targeted.
    Requires min k1 + min k2 > 0.
    """
    k1, k2 = laws
    if k1.kmin() + k2.kmin() <= 0:
        raise PreconditionError("build_convex_datum needs the expanding regime: min k1 + min k2 > 0")
    return tangent_datum(geometry, laws, scale=1.0, epsilon_prime=epsilon_prime, n=n)


def datum_curvature_floor(datum, diffusivity):
    """min over the grid of a(u0x) u0xx, with u0xx from the Hermite interpolant."""
    xs = datum.x
    d2 = datum._spline.derivative(2)(0.5 * (xs[1:] + xs[:-1]))
    a = diffusivity(datum.slope(0.5 * (xs[1:] + xs[:-1])))
    return float(np.min(a * d2))


def _scaled_profile(profile, c, x):
    """sqrt(2c) * profile(x / sqrt(2c)) on its support, NaN outside."""
    s = math.sqrt(2.0 * c)
    return s * profile.value_at(np.asarray(x) / s)


def sandwich_parameters(datum, profile_minus, profile_plus, tol=1e-10, n=1000):
    """Touching scalings of the classical sub/supersolutions around a datum.

    Expanding profiles: returns (t_minus, t_plus) with the largest t_minus and
    smallest t_plus such that sqrt(2 t_minus) phi^-(x/sqrt(2 t_minus)) <= u0 <=
    sqrt(2 t_plus) phi^+(x/sqrt(2 t_plus)) on the common interval.  Shrinking
    profiles give (T_minus, T_plus) in the same touching sense.  Bisection on
    the scaling parameter against a pointwise inequality oracle.
    """
    if np.min(datum.u) <= 0:
        raise PreconditionError("datum must be positive")
    scale0 = (datum.scale / max(profile_minus.extrema[1], 1e-300)) ** 2 / 2.0

    def below(c):
        # classical(c) <= datum on the common interval (with roundoff slack)
        s = math.sqrt(2.0 * c)
        lo = max(-datum.xi01, -profile_minus.p1 * s)
        hi = min(datum.xi02, profile_minus.p2 * s)
        if hi <= lo:
            return True
        x = np.linspace(lo, hi, n)
        return bool(np.all(_scaled_profile(profile_minus, c, x) <= datum(x) + 1e-12 * datum.scale))

    def above(c):
        s = math.sqrt(2.0 * c)
        lo = max(-datum.xi01, -profile_plus.p1 * s)
        hi = min(datum.xi02, profile_plus.p2 * s)
        if hi <= lo:
            return False
        x = np.linspace(lo, hi, n)
        covers = profile_plus.p1 * s >= datum.xi01 - 1e-12 and profile_plus.p2 * s >= datum.xi02 - 1e-12
        return covers and bool(np.all(datum(x) <= _scaled_profile(profile_plus, c, x) + 1e-12 * datum.scale))

    t_minus = _monotone_bisect(below, scale0, increasing_holds=False, tol=tol)
    t_plus = _monotone_bisect(above, scale0, increasing_holds=True, tol=tol)
    return t_minus, t_plus


def _monotone_bisect(pred, c0, increasing_holds, tol, max_doublings=200):
    """Edge of a monotone predicate on (0, inf) by bracketing + bisection.

    increasing_holds=True: pred False below the edge, True above; returns the
    smallest c where it holds.  False: pred True below, False above; returns
    the largest c where it holds.
    """
    lo = hi = c0
    if increasing_holds:
        while not pred(hi):
            hi *= 2.0
            if hi > c0 * 2.0**max_doublings:
                raise BracketError("no upper touching scale found")
        while pred(lo):
            lo /= 2.0
            if lo < c0 / 2.0**max_doublings:
                return 0.0
    else:
        while not pred(lo):
            lo /= 2.0
            if lo < c0 / 2.0**max_doublings:
                raise BracketError("no lower touching scale found")
        while pred(hi):
            hi *= 2.0
            if hi > c0 * 2.0**max_doublings:
                raise BracketError("datum dominates every scaling of the profile")
    # invariant: pred flips exactly once inside [lo, hi]
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if pred(mid) == increasing_holds:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@dataclass
class Tolerances:
    steady: float = 1e-8
    orbit: float = 1e-3
    shoot: float = 1e-10
    extinction: float = 1e-2

    def __post_init__(self):
        for name in ("steady", "orbit", "shoot", "extinction"):
            if getattr(self, name) <= 0:
                raise PreconditionError(f"tolerance {name} must be positive")


@dataclass
class RunConfig:
    """Everything a run needs: problem data, grid, stepping rule, tolerances."""

    geometry: SectorGeometry
    diffusivity: Diffusivity
    laws: tuple
    grid_points: int = 201
    time_rule: str = "semi-implicit"  # or "explicit-cfl"
    ds_cap: float = 5e-3
    cfl: float = 0.4
    tolerances: Tolerances = field(default_factory=Tolerances)
    step_error_target: float = 1e-6
    seed: int = 0
    s_end: float = 8.0
    t_end: float = 2.0
    horizons: tuple = (1.0, 4.0, 16.0)
    b: float = 2.0
    orbit_nodes: int = 64
    orbit_max_periods: int = 60
    epsilon_prime: float = 0.05

    def __post_init__(self):
        if self.grid_points < 21 or self.grid_points % 2 == 0:
            raise PreconditionError("grid_points must be odd and >= 21 (grid must contain theta = 0)")
        if self.time_rule not in ("semi-implicit", "explicit-cfl"):
            raise PreconditionError(f"unknown time rule {self.time_rule!r}")

    def theta_grid(self):
        return np.linspace(-self.geometry.theta0, self.geometry.theta0, self.grid_points)
