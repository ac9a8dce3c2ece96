"""Pacing ODE, explicit sub/super-solution envelopes and interface distance.

The envelopes trap a solution of the offset problem z_t = a z_xx + f(y + x/L, z)
between translated frozen waves, with the translation driven by the pacing
ODE X' = c(y + X/L).  A second family of envelopes bounds the rescaled
problem by translated pulsating fronts; its offsets are fitted at t = 0 and
then checked forward in time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline

from .homowave import WaveFamily, dpsi_dy
from .medium import PeriodicMedium
from .pdesolver import Field, Grid1D, SnapshotRecorder, default_config, evolve_offset, evolve_rescaled

K1_SMALL = 1e-12


class EnvelopeError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# pacing ODE


@dataclass
class PacedTrajectory:
    y: float
    L: float
    times: np.ndarray
    X: np.ndarray
    dX: np.ndarray
    T_L: float

    def __post_init__(self):
        self._spline = CubicHermiteSpline(self.times, self.X, self.dX)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < self.times[0] - 1e-12) or np.any(t > self.times[-1] + 1e-12):
            raise EnvelopeError("time outside the integrated range")
        return self._spline(t)

    def first_crossing(self, level: float) -> float:
        """First t with X(t) = level (X is increasing)."""
        i = int(np.searchsorted(self.X, level))
        if i == 0:
            return float(self.times[0])
        if i >= len(self.X):
            raise EnvelopeError("trajectory never reaches the level")
        lo, hi = self.times[i - 1], self.times[i]
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if self._spline(mid) < level:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


def inverse_mean(cfun: Callable) -> float:
    """int_0^1 1/c by adaptive quadrature."""
    return quad(lambda s: 1.0 / cfun(s), 0.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=200)[0]


def solve_X(cfun: Callable, y: float, L: float, t_end: float, dt: Optional[float] = None,
            c_star: Optional[float] = None) -> PacedTrajectory:
    """Classical RK4 for X' = c(y + X/L), X(0) = 0."""
    probe = np.asarray(cfun(np.linspace(0.0, 1.0, 65)), dtype=float)
    if np.any(probe <= 0):
        raise EnvelopeError("pacing needs a positive speed function")
    cmax = float(probe.max())
    limit = 0.01 * L / cmax
    dt = limit if dt is None else float(dt)
    if dt > limit * (1 + 1e-12):
        raise EnvelopeError(f"dt must not exceed 0.01 L / max c = {limit:g}")
    n = int(np.ceil(t_end / dt - 1e-12))
    dt = t_end / n
    rhs = lambda X: float(cfun(y + X / L))
    X = np.empty(n + 1)
    X[0] = 0.0
    for k in range(n):
        x0 = X[k]
        k1 = rhs(x0)
        k2 = rhs(x0 + 0.5 * dt * k1)
        k3 = rhs(x0 + 0.5 * dt * k2)
        k4 = rhs(x0 + dt * k3)
        X[k + 1] = x0 + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
    times = dt * np.arange(n + 1)
    dX = np.array([rhs(v) for v in X])
    if np.any(np.diff(X) <= 0):
        raise EnvelopeError("pacing trajectory is not increasing")
    if c_star is None:
        c_star = 1.0 / inverse_mean(cfun)
    return PacedTrajectory(float(y), float(L), times, X, dX, L / c_star)


# ---------------------------------------------------------------------------
# envelope constants


@dataclass
class EnvelopeParams:
    eps: float
    gamma1: float
    delta1: float
    M1: float
    beta1: float
    K1: float
    K2: float
    C1: float
    eps0: float

    @property
    def L1eps(self) -> float:
        return 2.0 * self.C1 / (self.gamma1 * self.eps)

    @property
    def C2(self) -> float:
        if self.K1 < K1_SMALL:
            return float("inf")
        return self.C1 * self.beta1 / (self.gamma1 * self.K1) + self.M1 * self.beta1 / (self.K2 + self.gamma1)

    def C3(self, L: float) -> float:
        return (self.eps - self.C1 / (L * self.gamma1)) / (self.gamma1 + self.K1 / (L * self.beta1))

    def with_eps(self, eps: float) -> "EnvelopeParams":
        from dataclasses import replace

        if eps > min(self.delta1 / 2, self.eps0) + 1e-15:
            raise EnvelopeError("eps exceeds the admissible amplitude")
        return replace(self, eps=float(eps))

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in ("eps", "gamma1", "delta1", "M1", "beta1", "K1", "K2", "C1", "eps0")}
        d["L1eps"] = self.L1eps
        return d


def _band_sup(medium: PeriodicMedium, width: float, nx: int = 64, nu: int = 64) -> float:
    x = np.linspace(0.0, 1.0, nx, endpoint=False)[:, None]
    u = np.linspace(0.0, width, nu)[None, :]
    return float(max(np.max(medium.f_u(x, u)), np.max(medium.f_u(x, 1.0 - u))))


def estimate_constants(medium: PeriodicMedium, waves: WaveFamily, eps: float, n_dy: Optional[int] = None,
                       dy: float = 1e-3) -> EnvelopeParams:
    """Numerical values of the constants entering the explicit envelopes.

    delta1 is the widest band (up to delta0', or 1/2) on which f_u stays
    negative near both stable states; gamma1 is 0.9 times its margin there.
    """
    cap = medium.delta0p if medium.delta0p is not None else 0.5
    widths = np.linspace(cap / 50, cap, 50)
    sups = np.array([_band_sup(medium, w) for w in widths])
    ok = sups < 0
    if not ok[0]:
        raise EnvelopeError("f_u is not negative near the stable states")
    delta1 = float(widths[ok][-1]) if ok.all() else float(widths[np.argmin(ok) - 1])
    gamma1 = 0.9 * (-_band_sup(medium, delta1))

    xi = waves.xi_grid
    prof = waves.profiles
    right = np.all(prof <= delta1 / 2, axis=0)
    left = np.all(prof >= 1 - delta1 / 2, axis=0)
    xr = xi[np.argmax(right)] if right.any() else None
    xl = xi[len(xi) - 1 - np.argmax(left[::-1])] if left.any() else None
    if xr is None or xl is None:
        raise EnvelopeError("profile grid too short for M1")
    M1 = float(max(xr, -xl))
    core = np.abs(xi) <= M1
    beta1 = 0.9 * float(np.min(-waves._derivs[:, core]))
    # beta1 already covers |xi| <= M1, so only eps <= delta1/2 and eps <= delta0 are needed
    eps0 = min(0.5 * delta1, medium.delta0)
    if eps > eps0 + 1e-15:
        raise EnvelopeError(f"eps={eps} exceeds the admissible amplitude {eps0:.4g}")

    x = np.linspace(0.0, 1.0, 128, endpoint=False)[:, None]
    u = np.linspace(0.0, 1.0, 201)[None, :]
    K1 = float(np.max(np.abs(medium.f_x(x, u))))
    K2 = float(np.max(np.abs(medium.f_u(x, u))))
    if K1 < K1_SMALL:
        K1 = 0.0
        dpsi = 0.0
    else:
        ys = waves.y_nodes if n_dy is None else np.arange(n_dy) / n_dy
        dpsi = max(dpsi_dy(medium, y, dy) for y in ys)
    C1 = float(np.max(np.abs(waves.speeds))) * dpsi
    return EnvelopeParams(float(eps), float(gamma1), delta1, M1, beta1, K1, K2, C1, float(eps0))


def q_eta(params: EnvelopeParams, L: float, t, check: bool = True):
    """Closed-form q and eta; K1 = 0 uses the analytic limit."""
    p = params
    if check and L < p.L1eps:
        raise EnvelopeError(f"L={L} is below the admissibility threshold {p.L1eps:.4g}")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise EnvelopeError("t must be nonnegative")
    base = p.C1 / (L * p.gamma1)
    q = base + (p.eps - base) * np.exp(-p.gamma1 * t)
    k = p.K1 / (L * p.beta1)
    C3 = p.C3(L)
    kt = k * t
    # C2 (e^{kt} - 1) written so that K1 -> 0 is regular
    ratio = np.where(kt == 0.0, 1.0, np.expm1(kt) / np.where(kt == 0.0, 1.0, kt))
    c2_term = p.C1 * t / (p.gamma1 * L) * ratio + p.M1 * p.beta1 / (p.K2 + p.gamma1) * np.expm1(kt)
    eta = -(p.gamma1 + p.K2) / p.beta1 * (c2_term + C3 * (np.exp(kt) - np.exp(-p.gamma1 * t)))
    return (q[()] if q.ndim == 0 else q), (eta[()] if eta.ndim == 0 else eta)


def q_eta_limit(params: EnvelopeParams, t):
    """L -> infinity limits of q and eta at fixed t."""
    p = params
    t = np.asarray(t, dtype=float)
    q = p.eps * np.exp(-p.gamma1 * t)
    eta = -p.eps * (p.gamma1 + p.K2) / (p.gamma1 * p.beta1) * (1.0 - np.exp(-p.gamma1 * t))
    return q, eta


def eta_lower_band(params: EnvelopeParams, L: float, k: int, tau: float, c_star: float) -> float:
    """Lower bound for eta on t <= k T_L + tau (needs K1 > 0)."""
    p = params
    A1 = (p.gamma1 + p.K2) * p.C2 / p.beta1
    A2 = (p.gamma1 + p.K2) * (p.C2 + p.C3(L)) / p.beta1
    expo = p.K1 * k / (c_star * p.beta1) + p.K1 * tau * p.gamma1 * p.eps0 / (2 * p.C1 * p.beta1)
    return A1 - A2 * np.exp(expo)


# ---------------------------------------------------------------------------
# envelopes around the offset problem


def envelope_values(params: EnvelopeParams, waves: WaveFamily, traj: PacedTrajectory, t: float, x):
    """(v_minus, v_plus) at time t on positions x."""
    q, eta = q_eta(params, traj.L, t)
    X = float(traj(t))
    yy = traj.y + X / traj.L
    x = np.asarray(x, dtype=float)
    v_plus = waves.psi(x - X + eta, yy) + q
    v_minus = waves.psi(x - X - eta, yy) - q
    return v_minus, v_plus


@dataclass
class OffsetRun:
    y: float
    L: float
    x: np.ndarray
    times: np.ndarray
    values: np.ndarray


def run_offset(medium: PeriodicMedium, y: float, L: float, init, t_end: float, h: float = 0.05,
               pad: float = 40.0, travel: Optional[float] = None, snapshot_every: float = 0.5,
               dt: Optional[float] = None) -> OffsetRun:
    """Evolve the offset problem from ``init(x)`` and keep snapshots.

    Crossing-time studies should pass a small ``dt``: the splitting bias in
    the speed accumulates linearly over a period of length L.
    """
    travel = 2.0 * L if travel is None else travel
    grid = Grid1D.from_spacing(-pad, travel + pad, h)
    cfg = default_config(medium, h)
    from dataclasses import replace

    if dt is not None:
        cfg = replace(cfg, dt=min(float(dt), cfg.dt))
    cfg = replace(cfg, snapshot_stride=max(1, int(round(snapshot_every / cfg.dt))))
    u0 = np.clip(np.asarray(init(grid.x), dtype=float), 0.0, 1.0)
    rec = SnapshotRecorder()
    evolve_offset(medium, y, L, Field(grid, 0.0, u0), t_end, cfg, rec)
    return OffsetRun(float(y), float(L), grid.x, np.array(rec.times), rec.array())


def check_containment(params: EnvelopeParams, waves: WaveFamily, traj: PacedTrajectory, run: OffsetRun) -> dict:
    """Max of (max(v-,0) - v) and (v - min(v+,1)) over snapshots; negative means contained."""
    low = up = -np.inf
    for t, v in zip(run.times, run.values):
        vm, vp = envelope_values(params, waves, traj, t, run.x)
        low = max(low, float(np.max(np.maximum(vm, 0.0) - v)))
        up = max(up, float(np.max(v - np.minimum(vp, 1.0))))
    return {"eps": params.eps, "L": run.L, "max_violation_lower": low, "max_violation_upper": up,
            "max_violation": max(low, up)}


def crossing_time_tilde(run: OffsetRun, L: float, level: float = 0.5) -> float:
    """First time the solution at x = L reaches ``level`` (interpolated)."""
    i = int(np.argmin(np.abs(run.x - L)))
    if abs(run.x[i] - L) > 1e-9 * max(1.0, L):
        raise EnvelopeError("x = L is not a grid node")
    col = run.values[:, i]
    hit = np.nonzero(col >= level)[0]
    if hit.size == 0:
        raise EnvelopeError("no crossing within the run")
    k = int(hit[0])
    if k == 0:
        return float(run.times[0])
    t0, t1, v0, v1 = run.times[k - 1], run.times[k], col[k - 1], col[k]
    return float(t0 + (level - v0) / (v1 - v0) * (t1 - t0))


def envelope_report(params: EnvelopeParams, L: float, violation: dict, T_tilde: float, T_L: float) -> str:
    return json.dumps({"eps": params.eps, "L": L, "max_violation_lower": violation["max_violation_lower"],
                       "max_violation_upper": violation["max_violation_upper"], "T_tilde": T_tilde, "T_L": T_L})


# ---------------------------------------------------------------------------
# interface distance


def interface_distance(cfun: Callable, x: float, gamma0_set: Sequence[float] = (0.0,)) -> float:
    """rho(x, Gamma0) = inf over z in Gamma0 of int_z^x 1/c."""
    vals = []
    for z in np.atleast_1d(gamma0_set):
        val = _periodic_inverse_integral(cfun, float(z), float(x))
        vals.append(val)
    return float(min(vals))


def _periodic_inverse_integral(cfun: Callable, a: float, b: float) -> float:
    """int_a^b 1/c using periodicity for whole periods."""
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    whole = np.floor(b - a)
    rest = quad(lambda s: 1.0 / cfun(s), a + whole, b, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
    total = whole * inverse_mean(cfun) + rest if whole else rest
    return sign * total


# ---------------------------------------------------------------------------
# envelopes for the rescaled problem


@dataclass
class FifeMcLeodParams:
    eps0: float
    C_plus: float
    C_minus: float
    K0: float
    beta: float
    gamma0: float


def fife_mcleod_eps0(medium: PeriodicMedium) -> float:
    """Largest eps0 <= delta0/2 with f_u <= -gamma0/2 on the 2 eps0 bands."""
    target = -0.5 * medium.gamma0
    cands = np.linspace(medium.delta0 / 2, medium.delta0 / 200, 100)
    for e in cands:
        if _band_sup(medium, 2 * e) <= target:
            return float(e)
    raise EnvelopeError("no admissible eps0")


def ramp_initial(medium: PeriodicMedium, A: float = 0.05) -> Callable:
    """g: 1 on (-inf,-A], b(0) at 0, 0 on [A, inf), linear in between."""
    b0 = float(np.asarray(medium.b(0.0)))

    def g(x):
        x = np.asarray(x, dtype=float)
        left = b0 + (1 - b0) * np.clip(-x / A, 0, 1)
        right = b0 * (1 - np.clip(x / A, 0, 1))
        return np.where(x <= 0, left, right)

    return g


def _phi_rescaled(front, L: float, x, shift: np.ndarray | float):
    """phi_L(L x + shift, x) with phi clamped to its lattice range."""
    xi = L * np.asarray(x) + shift
    xi = np.clip(xi, front.xi_grid[0], front.xi_grid[-1])
    return front(xi, np.asarray(x))


def fit_fife_mcleod(medium: PeriodicMedium, front, g: Callable, x: np.ndarray, L: float,
                    eps0: Optional[float] = None, c_max: float = 10.0) -> FifeMcLeodParams:
    """Smallest C+ and C- >= 0 with the t = 0 ordering on the grid x."""
    eps0 = fife_mcleod_eps0(medium) if eps0 is None else eps0
    gx = g(x)

    def upper_ok(C):
        return np.all(_phi_rescaled(front, L, x, -L * C) + eps0 >= gx - 1e-14)

    def lower_ok(C):
        return np.all(_phi_rescaled(front, L, x, L * C) - eps0 <= gx + 1e-14)

    def smallest(ok):
        if ok(0.0):
            return 0.0
        hi = 1.0 / L
        while not ok(hi):
            hi *= 2
            if hi > c_max:
                raise EnvelopeError("initial ordering impossible")
        lo = 0.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            lo, hi = (lo, mid) if ok(mid) else (mid, hi)
        return hi

    band = (front.phi >= eps0) & (front.phi <= 1 - eps0)
    dphi = -np.gradient(front.phi, front.xi_grid, axis=1)
    beta = float(np.min(dphi[band]))
    xs = np.linspace(0.0, 1.0, 64, endpoint=False)[:, None]
    us = np.linspace(0.0, 1.0, 201)[None, :]
    K2 = float(np.max(np.abs(medium.f_u(xs, us))))
    K0 = (medium.gamma0 + 2 * K2) / (beta * medium.gamma0)
    return FifeMcLeodParams(float(eps0), smallest(upper_ok), smallest(lower_ok), float(K0), beta, medium.gamma0)


@dataclass
class RescaledRun:
    L: float
    x: np.ndarray
    times: np.ndarray
    values: np.ndarray


def run_rescaled(medium: PeriodicMedium, L: float, g: Callable, t_end: float, x_min: float, x_max: float,
                 h: float = 0.05, snapshot_every: float = 0.02) -> RescaledRun:
    """Rescaled problem on a grid whose spacing matches h in original units."""
    hr = h / L
    grid = Grid1D.from_spacing(x_min, x_max, hr)
    cfg = default_config(medium, h)
    from dataclasses import replace

    cfg = replace(cfg, dt=cfg.dt / L)
    cfg = replace(cfg, snapshot_stride=max(1, int(round(snapshot_every / cfg.dt))))
    rec = SnapshotRecorder()
    evolve_rescaled(medium, L, Field(grid, 0.0, np.clip(g(grid.x), 0, 1)), t_end, cfg, rec)
    return RescaledRun(float(L), grid.x, np.array(rec.times), rec.array())


def check_fife_mcleod(front, params: FifeMcLeodParams, run: RescaledRun, c_L: Optional[float] = None) -> dict:
    """Max violation of both translated-front inequalities over the snapshots."""
    c = front.c_L if c_L is None else c_L
    L = run.L
    p = params
    low = up = -np.inf
    for t, v in zip(run.times, run.values):
        decay = p.eps0 * np.exp(-p.gamma0 * L * t / 2)
        lower = _phi_rescaled(front, L, run.x, L * (-c * t + p.C_minus) + p.K0 * p.eps0) - decay
        upper = _phi_rescaled(front, L, run.x, L * (-c * t - p.C_plus) - p.K0 * p.eps0) + decay
        low = max(low, float(np.max(lower - v)))
        up = max(up, float(np.max(v - upper)))
    return {"max_violation_lower": low, "max_violation_upper": up, "max_violation": max(low, up)}


def interface_dichotomy(cfun: Callable, run: RescaledRun, margin: float = 0.2, hi: float = 0.9,
                        lo: float = 0.1, t_min: float = 0.0) -> dict:
    """Check v > hi where rho(x,{0}) < t - margin and v < lo where rho > t + margin."""
    rho = np.array([interface_distance(cfun, xv) for xv in _coarse(run.x)])
    rho_full = np.interp(run.x, _coarse(run.x), rho)
    worst_hi = worst_lo = None
    n_in = n_out = 0
    for t, v in zip(run.times, run.values):
        if t <= t_min:
            continue
        inside = rho_full < t - margin
        outside = rho_full > t + margin
        if inside.any():
            m = float(v[inside].min())
            worst_hi = m if worst_hi is None else min(worst_hi, m)
            n_in += int(inside.sum())
        if outside.any():
            m = float(v[outside].max())
            worst_lo = m if worst_lo is None else max(worst_lo, m)
            n_out += int(outside.sum())
    ok = (worst_hi is None or worst_hi > hi) and (worst_lo is None or worst_lo < lo)
    return {"min_inside": worst_hi, "max_outside": worst_lo, "n_inside": n_in, "n_outside": n_out, "passed": ok}


def _coarse(x: np.ndarray, n: int = 401) -> np.ndarray:
    return np.linspace(x[0], x[-1], n)
