"""Fixed-domain parabolic stepper for the four transformed problems.

Each chart turns the free-boundary flow into a quasilinear heat equation
field_s = c(theta, field, field_theta) * field_thetatheta + rem(...) on the
fixed interval [-theta0, theta0], with nonlinear Neumann data given by the
chart's boundary transfer.  Interior derivatives are second-order central
differences; the Neumann rows use second-order ghost elimination with the
transfer evaluated at the new-level boundary unknown (scalar Newton).  The
semi-implicit mode treats the second derivative implicitly with coefficients
frozen at the old level and solves one tridiagonal system per Newton sweep;
the explicit mode is forward Euler under the usual parabolic step restriction.
"""

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from . import transforms
from .errors import BlowUpError, ChartFoldError, ConvergenceError, DatumError, PreconditionError


@dataclass
class EvolutionState:
    """Grid samples of one chart unknown at rescaled time s."""

    chart: transforms.ChartId
    theta: np.ndarray
    values: np.ndarray
    s: float
    step_count: int = 0
    diagnostics: dict = field(default_factory=lambda: {"min_denominator": np.inf, "max_abs_dtheta": 0.0})

    def __post_init__(self):
        if len(self.theta) % 2 == 0:
            raise PreconditionError("theta grid must be odd-sized (must contain theta = 0)")

    @property
    def h(self):
        return self.theta[1] - self.theta[0]

    def copy_with(self, values, s, steps=1):
        return EvolutionState(
            self.chart, self.theta, values, s, self.step_count + steps, dict(self.diagnostics)
        )


def init_state(chart, datum, config):
    """Represent an initial datum (given at t = 0) in a chart.

    Solves the scalar implicit relation defining the unknown at each grid
    theta; the relation is monotone along the graph thanks to the gradient
    bound.  The limiting v-chart cannot hold t = 0 and is rejected.
    """
    theta = config.theta_grid()
    s0 = chart.s0()
    try:
        values = transforms.represent(chart, s0, datum, (-datum.xi01, datum.xi02), theta)
    except ValueError as exc:
        raise DatumError(f"datum/chart incompatibility: {exc}") from exc
    return EvolutionState(chart, theta, values, float(s0))


def _fd_theta(values, h):
    d = np.empty_like(values)
    d[1:-1] = (values[2:] - values[:-2]) / (2 * h)
    d[0] = (-3 * values[0] + 4 * values[1] - values[2]) / (2 * h)
    d[-1] = (3 * values[-1] - 4 * values[-2] + values[-3]) / (2 * h)
    return d


def _chart_coefficients(chart, theta, values, d_theta, a):
    """Diffusion coefficient, remainder term, slope u_x and validity denominator."""
    sin, cos = np.sin(theta), np.cos(theta)
    if chart.tag == "omega":
        D = cos + d_theta * sin
        ux = (d_theta * cos - sin) / D
        c = a(ux) / (np.exp(2 * values) * D**2)
        rem = c * (-d_theta**2 - 1.0)
        den = D
    elif chart.tag == "v":
        D = cos + d_theta * sin
        ux = (d_theta * cos - sin) / D
        c = 2.0 * a(ux) / (np.exp(2 * values) * D**2)
        rem = c * (-d_theta**2 - 1.0) - 1.0
        den = D
    elif chart.tag == "w":
        Dw = d_theta * sin - cos
        ux = (d_theta * cos + sin) / Dw
        c = 2.0 * np.exp(2 * values) * a(ux) / Dw**2
        rem = c * (d_theta**2 + 1.0) - 1.0
        den = -Dw
    else:
        r = values
        Dr = d_theta * sin + r * cos
        ux = (d_theta * cos - r * sin) / Dr
        c = a(ux) / Dr**2
        rem = a(ux) * (-2.0 * d_theta**2 - r * r) / (r * Dr**2)
        den = Dr / r
    return c, rem, ux, den


def _boundary_slopes(chart, s, values, laws, geometry):
    """Signed Neumann data (left, right) for the current boundary values."""
    sl, sr = transforms.boundary_signs(chart)
    bl = sl * transforms.boundary_transfer(chart, 1, s, values[0], laws, geometry)
    br = sr * transforms.boundary_transfer(chart, 2, s, values[-1], laws, geometry)
    return float(bl), float(br)


def _check_validity(state, den, d_theta, geometry):
    floor = 0.5 * geometry.epsilon1  # analytic floor halved to absorb discretization error
    dmin = float(np.min(den))
    if not np.isfinite(dmin) or dmin < floor:
        raise ChartFoldError(
            f"chart denominator {dmin} under floor {floor} at s={state.s}: gradient bound lost"
        )
    diag = state.diagnostics
    diag["min_denominator"] = min(diag["min_denominator"], dmin)
    diag["max_abs_dtheta"] = max(diag["max_abs_dtheta"], float(np.max(np.abs(d_theta))))


def step(state, laws, a, ds, geometry, mode="semi-implicit", newton_tol=1e-12, newton_max=25):
    """Advance one time step; returns a new state (the input is not mutated)."""
    y = state.values
    theta, h = state.theta, state.h
    s_new = state.s + ds
    d_theta = _fd_theta(y, h)
    bl_old, br_old = _boundary_slopes(state.chart, state.s, y, laws, geometry)
    d_theta[0], d_theta[-1] = bl_old, br_old
    c, rem, _, den = _chart_coefficients(state.chart, theta, y, d_theta, a)
    _check_validity(state, den, d_theta, geometry)

    if mode == "explicit-cfl":
        ghost_l = y[1] - 2 * h * bl_old
        ghost_r = y[-2] + 2 * h * br_old
        ypad = np.concatenate([[ghost_l], y, [ghost_r]])
        ytt = (ypad[2:] - 2 * y + ypad[:-2]) / h**2
        y_new = y + ds * (c * ytt + rem)
    elif mode == "semi-implicit":
        y_new = _semi_implicit_solve(state, laws, a, ds, s_new, c, rem, geometry, newton_tol, newton_max)
    else:
        raise PreconditionError(f"unknown stepping mode {mode!r}")

    if not np.all(np.isfinite(y_new)):
        raise BlowUpError(f"non-finite values after step to s={s_new}", state=state)
    out = state.copy_with(y_new, s_new)
    return out


def _semi_implicit_solve(state, laws, a, ds, s_new, c, rem, geometry, newton_tol, newton_max):
    y = state.values
    h = state.h
    n = len(y)
    mu = ds * c / h**2
    b = y + ds * rem

    def transfers(y0, yn):
        sl, sr = transforms.boundary_signs(state.chart)
        bl = sl * transforms.boundary_transfer(state.chart, 1, s_new, y0, laws, geometry)
        br = sr * transforms.boundary_transfer(state.chart, 2, s_new, yn, laws, geometry)
        return float(bl), float(br)

    y0_hat, yn_hat = y[0], y[-1]
    eps = 1e-7
    for _ in range(newton_max):
        bl, br = transfers(y0_hat, yn_hat)
        bl_p, br_p = transfers(y0_hat + eps, yn_hat + eps)
        dbl = (bl_p - bl) / eps
        dbr = (br_p - br) / eps

        ab = np.zeros((3, n))
        ab[0, 2:] = -mu[1:-1]  # upper diagonal
        ab[2, :-2] = -mu[1:-1]  # lower diagonal
        ab[1, :] = 1.0 + 2.0 * mu
        rhs = b.copy()
        ab[0, 1] = -2.0 * mu[0]
        ab[1, 0] = 1.0 + 2.0 * mu[0] + 2.0 * mu[0] * h * dbl
        rhs[0] = b[0] - 2.0 * mu[0] * h * (bl - dbl * y0_hat)
        ab[2, -2] = -2.0 * mu[-1]
        ab[1, -1] = 1.0 + 2.0 * mu[-1] - 2.0 * mu[-1] * h * dbr
        rhs[-1] = b[-1] + 2.0 * mu[-1] * h * (br - dbr * yn_hat)

        y_new = solve_banded((1, 1), ab, rhs)
        res_l = abs(y_new[0] - y0_hat)
        res_r = abs(y_new[-1] - yn_hat)
        y0_hat, yn_hat = y_new[0], y_new[-1]
        if res_l < newton_tol * (1 + abs(y0_hat)) and res_r < newton_tol * (1 + abs(yn_hat)):
            return y_new
    raise ConvergenceError(
        f"boundary Newton failed after {newton_max} iterations at s={s_new}",
        trace=(res_l, res_r),
    )


def explicit_ds_limit(state, laws, a, geometry, cfl=0.4):
    """Parabolic step bound ds <= cfl * h^2 / (2 max c) for the explicit mode."""
    d_theta = _fd_theta(state.values, state.h)
    bl, br = _boundary_slopes(state.chart, state.s, state.values, laws, geometry)
    d_theta[0], d_theta[-1] = bl, br
    c, _, _, _ = _chart_coefficients(state.chart, state.theta, state.values, d_theta, a)
    return cfl * state.h**2 / (2.0 * float(np.max(c)))


class Trajectory:
    """Read-only record of an evolution: sampled states plus run diagnostics."""

    def __init__(self, chart, geometry):
        self.chart = chart
        self.geometry = geometry
        self.samples = []
        self.extinction_time = None
        self.extinction_trace = []
        self.diagnostics = {}

    @property
    def sample_s(self):
        return [st.s for st in self.samples]

    @property
    def times(self):
        return [float(self.chart.time(st.s)) for st in self.samples]

    def recovered(self, i, n_x=None):
        st = self.samples[i]
        return transforms.recover_solution(self.chart, st.theta, st.values, st.s, self.geometry, n_x=n_x)

    def export(self, outdir, config_hash=None):
        os.makedirs(outdir, exist_ok=True)
        for i, st in enumerate(self.samples):
            rec = self.recovered(i)
            path = os.path.join(outdir, f"snapshot_{i:04d}.csv")
            with open(path, "w") as fh:
                if config_hash:
                    fh.write(f"# config: {config_hash}\n")
                fh.write("theta,field,x,u\n")
                for th, val, x, u in zip(st.theta, st.values, rec.x_nodes, rec.u_nodes):
                    fh.write(f"{th!r},{val!r},{x!r},{u!r}\n")
        summary = {
            "chart": self.chart.tag,
            "samples": len(self.samples),
            "s_values": [float(s) for s in self.sample_s],
            "diagnostics": {k: float(v) for k, v in self.diagnostics.items()},
            "extinction_time": self.extinction_time,
        }
        with open(os.path.join(outdir, "run_summary.json"), "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
        return summary


def _extinction_extrapolate(trace):
    """Extinction time from the last samples of (t, min r).

    min r shrinks like sqrt(T - t) near extinction, so (min r)^2 is fitted as a
    quadratic polynomial of t and the root just beyond the final sample is the
    reported extinction time (raw threshold crossing is first-order biased).
    """
    pts = trace[-3:]
    t = np.array([p[0] for p in pts])
    m2 = np.array([p[1] ** 2 for p in pts])
    t_last = t[-1]
    if len(pts) >= 3:
        coeffs = np.polyfit(t - t_last, m2, 2)
        roots = np.roots(coeffs)
        real = [t_last + r.real for r in roots if abs(r.imag) < 1e-12 and r.real >= -1e-12]
        if real:
            return float(min(real))
    # linear fallback through the last two samples
    (t0, m0), (t1, m1) = trace[-2], trace[-1]
    slope = (m1**2 - m0**2) / (t1 - t0)
    return float(t1 - m1**2 / slope) if slope < 0 else float(t1)


def evolve(state, laws, a, until, config, sample_s=None, on_sample=None,
           extinction_threshold=None, max_steps=500_000):
    """Run the stepper until a rescaled time or until extinction.

    ``until`` is the final rescaled time s_end, or the string ``"extinction"``
    (r-chart only): then min r is monitored and the run stops once it drops
    under ``extinction_threshold`` (default: extinction tolerance times the
    initial radius scale), reporting the extrapolated extinction time.
    ``sample_s`` lists rescaled times to record; ``on_sample`` is called with
    each recorded state and may return True to stop early.
    """
    geometry = config.geometry
    mode = config.time_rule
    to_extinction = until == "extinction"
    if to_extinction and state.chart.tag != "r":
        raise PreconditionError("extinction monitoring needs the r-chart")
    s_end = math.inf if to_extinction else float(until)

    traj = Trajectory(state.chart, geometry)
    traj.samples.append(state)
    targets = [] if sample_s is None else [s for s in sorted(sample_s) if s > state.s + 1e-14]
    if on_sample is not None and on_sample(state):
        traj.diagnostics.update(state.diagnostics)
        return traj

    if to_extinction:
        scale0 = float(np.max(state.values))
        threshold = extinction_threshold or config.tolerances.extinction * scale0
        traj.extinction_trace.append((state.s, float(np.min(state.values))))

    ds = min(config.ds_cap, 1e-3) if mode == "semi-implicit" else None
    err_prev = config.step_error_target
    steps = 0
    while state.s < s_end - 1e-14:
        if steps >= max_steps:
            raise ConvergenceError(f"step budget {max_steps} exhausted at s={state.s}")
        if mode == "explicit-cfl":
            ds_now = explicit_ds_limit(state, laws, a, geometry, cfl=config.cfl)
        else:
            ds_now = ds
        cap = s_end - state.s
        if targets:
            cap = min(cap, targets[0] - state.s)
        ds_now = min(ds_now, cap)

        if mode == "explicit-cfl":
            state = step(state, laws, a, ds_now, geometry, mode=mode)
            steps += 1
        else:
            # step doubling: one full step against two half steps
            while True:
                big = step(state, laws, a, ds_now, geometry, mode=mode)
                half = step(state, laws, a, 0.5 * ds_now, geometry, mode=mode)
                small = step(half, laws, a, 0.5 * ds_now, geometry, mode=mode)
                err = float(np.max(np.abs(big.values - small.values)))
                scale = max(1.0, float(np.max(np.abs(small.values))))
                err_rel = err / scale
                tol = config.step_error_target
                if err_rel <= tol or ds_now <= 1e-12:
                    state = small
                    fac = 0.9 * (tol / max(err_rel, 1e-16)) ** 0.15 * (err_prev / max(err_rel, 1e-16)) ** 0.1
                    ds = min(config.ds_cap, ds_now * min(5.0, max(0.2, fac)))
                    err_prev = max(err_rel, 1e-16)
                    steps += 1
                    break
                ds_now *= max(0.2, 0.9 * (tol / err_rel) ** 0.5)

        if targets and state.s >= targets[0] - 1e-12:
            targets.pop(0)
            traj.samples.append(state)
            if on_sample is not None and on_sample(state):
                break
        if to_extinction:
            m = float(np.min(state.values))
            traj.extinction_trace.append((state.s, m))
            if m < threshold:
                traj.extinction_time = _extinction_extrapolate(traj.extinction_trace)
                break

    if not to_extinction and not targets and (sample_s is None or not sample_s):
        if traj.samples[-1] is not state:
            traj.samples.append(state)
    traj.diagnostics.update(state.diagnostics)
    return traj
