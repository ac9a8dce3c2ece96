"""Frozen-coefficient traveling waves and the harmonic-mean speed.

For each frozen position ``y`` the homogeneous equation
``u_t = a(y) u_xx + f(y, u)`` has a unique decreasing front ``psi(., y)``
with speed ``c(y)``.  Waves are found by shooting from the unstable
manifold of the state 1 and bisecting on the speed.
"""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.interpolate import CubicHermiteSpline, CubicSpline
from scipy.optimize import brentq

from .medium import PeriodicMedium

log = logging.getLogger(__name__)

EDGE = 1e-9  # psi is resolved numerically on [EDGE, 1 - EDGE]
MAX_ITERATIONS = 200
TURN_FRACTION = 1e-3
MATCH = 0.5  # level where forward and backward orbits are matched
STUCK_LEVEL = 1e-6  # an orbit ending above this without an event sits at an interior rest point


class WaveError(RuntimeError):
    """Shooting failed to produce a monotone front."""


@dataclass
class TravelingWave:
    y: float
    c: float
    a: float
    xi_grid: np.ndarray
    psi: np.ndarray
    dpsi: np.ndarray
    residual_norm: float
    rate_left: float
    rate_right: float
    bracket_width: float = 0.0

    def __call__(self, xi):
        return wave_values(self, xi)[0]

    def derivative(self, xi):
        return wave_values(self, xi)[1]

    def steepness(self, delta: float = 0.1) -> float:
        """Largest dpsi on {delta <= psi <= 1 - delta} (a negative number)."""
        band = (self.psi >= delta) & (self.psi <= 1.0 - delta)
        return float(self.dpsi[band].max())

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["xi", "psi", "dpsi"])
            for row in zip(self.xi_grid, self.psi, self.dpsi):
                w.writerow([repr(float(v)) for v in row])


def wave_values(wave: TravelingWave, xi):
    """psi and dpsi at arbitrary xi; exponential tails beyond the grid."""
    xi = np.asarray(xi, dtype=float)
    g = wave.xi_grid
    spline = CubicHermiteSpline(g, wave.psi, wave.dpsi, extrapolate=False)
    psi = spline(np.clip(xi, g[0], g[-1]))
    dpsi = spline.derivative()(np.clip(xi, g[0], g[-1]))
    right = xi > g[-1]
    if np.any(right):
        decay = np.exp(-wave.rate_right * (xi[right] - g[-1]))
        psi[right] = wave.psi[-1] * decay
        dpsi[right] = -wave.rate_right * wave.psi[-1] * decay
    left = xi < g[0]
    if np.any(left):
        decay = np.exp(wave.rate_left * (xi[left] - g[0]))
        psi[left] = 1.0 - (1.0 - wave.psi[0]) * decay
        dpsi[left] = -wave.rate_left * (1.0 - wave.psi[0]) * decay
    return psi, dpsi


# ---------------------------------------------------------------------------
# speed bracket


def frozen_speed_bracket(medium: PeriodicMedium, y: float, n_s0: int = 64) -> tuple:
    """A-priori bracket ``(0, c_max]`` for the frozen speed at ``y``.

    Two upper bounds are combined.  Integrating the wave equation against
    psi' over [xi0, inf), where psi(xi0) = s0, gives
    (a/2) psi'(xi0)^2 >= -int_0^s0 f whenever c > 0.  Since c = -f / psi' at
    the inflection point, where |psi'| is largest,
    ``max|f| / sqrt(2 a(y)^-1 |int_0^s0 f|)`` bounds c, with s0 chosen among
    ``n_s0`` candidates to make the (negative) partial mass largest in size.
    Comparison with the linear problem u_t = a u_xx + K u, K = sup f(u)/u,
    gives ``2 sqrt(a K)``.
    """
    u = np.linspace(0.0, 1.0, 2001)
    fy = medium.f(np.full_like(u, y), u)
    mass = np.concatenate([[0.0], np.cumsum(0.5 * (fy[1:] + fy[:-1]) * np.diff(u))])
    if mass[-1] <= 0.0:
        raise WaveError(f"mean reaction is not positive at y={y}")
    s0 = np.linspace(0.0, 1.0, n_s0 + 2)[1:-1]
    deficit = -float(np.interp(s0, u, mass).min())
    if deficit <= 0.0:
        raise WaveError(f"no s0 with negative partial mass at y={y}")
    ay = float(medium.a(np.array(y)))
    energy = float(np.abs(fy).max()) / np.sqrt(2.0 * deficit / ay)
    growth = float(np.max(fy[1:] / u[1:]))
    linear = 2.0 * np.sqrt(ay * growth)
    return 0.0, min(energy, linear)


# ---------------------------------------------------------------------------
# shooting


def _rates(a: float, c: float, slope0: float, slope1: float):
    """Exponential rates of 1 - psi at -inf and psi at +inf."""
    left = (-c + np.sqrt(c * c - 4.0 * a * slope1)) / (2.0 * a)
    right = (c + np.sqrt(c * c - 4.0 * a * slope0)) / (2.0 * a)
    return left, right


def _scalar_kernel(medium: PeriodicMedium, y: float) -> Callable:
    """f(y, .) on [0, 1] as a plain float function (the shooting hot path)."""
    if medium.kind == "cubic":
        b = float(medium.b(np.array(y)))

        def kernel(u):
            return u * (1.0 - u) * (u - b)
    elif medium.kind == "a4":
        p = medium.params
        base_b, dp = p["base_b"], p["delta0p"]
        s = p["amp"] * float(np.sin(2.0 * np.pi * y))
        width = 1.0 - 2.0 * dp

        def kernel(u):
            v = u * (1.0 - u) * (u - base_b)
            t = (u - dp) / width
            if 0.0 < t < 1.0:
                t = 2.0 * t if t <= 0.5 else 2.0 - 2.0 * t
                v += s * t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
            return v
    else:
        yy = np.array(y)

        def kernel(u):
            return float(medium.f(yy, np.array(u)))
    return kernel


class _Shooter:
    """Shooting from 1 - psi ~ e^{lam xi} for a psi'' + c psi' + f(y, psi) = 0.

    With ``flipped`` the reaction is -f(y, 1 - u), which exchanges the roles
    of the two stable states.
    """

    def __init__(self, medium: PeriodicMedium, y: float, flipped: bool = False):
        self.y = float(y)
        self.a = float(medium.a(np.array(y)))
        yy = np.array(self.y)
        s0 = float(medium.f_u(yy, np.array(0.0)))
        s1 = float(medium.f_u(yy, np.array(1.0)))
        base = _scalar_kernel(medium, self.y)
        if flipped:
            self.slope0, self.slope1 = s1, s0
            kernel = lambda u: -base(1.0 - u)  # noqa: E731
        else:
            self.slope0, self.slope1 = s0, s1
            kernel = base
        slope0, slope1 = self.slope0, self.slope1

        def react(u):
            if u < 0.0:
                return slope0 * u
            if u > 1.0:
                return slope1 * (u - 1.0)
            return kernel(u)

        self.react = react
        # far below the decay rate sqrt(-f_u(0)/a) of the wave tail at +infinity
        self.kappa = TURN_FRACTION * np.sqrt(max(-self.slope0, 0.0) / self.a)

    def start(self, c):
        lam, _ = _rates(self.a, c, self.slope0, self.slope1)
        return np.array([1.0 - EDGE, -lam * EDGE]), lam

    def run(self, c, dense=False, stop_at=None):
        a, react, kappa = self.a, self.react, self.kappa

        def rhs(_, s):
            return (s[1], -(c * s[1] + react(s[0])) / a)

        def turned(_, s):  # dpsi reaches -kappa psi: turning or parking, c is too large
            return s[1] + kappa * s[0]
        turned.terminal = True
        turned.direction = 1

        def crossed(_, s):  # psi goes below zero: c is too small
            return s[0]
        crossed.terminal = True
        crossed.direction = -1

        events = [turned, crossed]
        if stop_at is not None:
            def low(_, s):
                return s[0] - stop_at
            low.terminal = True
            low.direction = -1
            events.append(low)

        s0, lam = self.start(c)
        span = 60.0 / max(lam, 1e-3) + 400.0
        return solve_ivp(rhs, (0.0, span), s0, method="DOP853", rtol=1e-11, atol=1e-14,
                         events=events, dense_output=dense)

    def miss(self, c) -> float:
        """Signed miss of the heteroclinic: positive iff c is too large.

        psi at the turning point for fast orbits, psi' at the zero crossing
        for slow ones; both tend to 0 at the wave speed.
        """
        sol = self.run(c)
        if len(sol.t_events[0]):
            return float(max(sol.y_events[0][0][0], 0.0)) + 1e-300
        if len(sol.t_events[1]):
            return float(min(sol.y_events[1][0][1], 0.0)) - 1e-300
        # neither event: parked at an interior rest point (too fast), else judge by tail sign
        psi_end, dpsi_end = sol.y[0, -1], sol.y[1, -1]
        if psi_end > STUCK_LEVEL or dpsi_end >= 0:
            return float(abs(psi_end)) + 1e-300
        return float(dpsi_end)

    def too_fast(self, c) -> bool:
        return self.miss(c) > 0.0

    def matching_gap(self, c) -> float:
        """Smooth surrogate of :meth:`miss` near the root: slope mismatch at psi = MATCH.

        Compares the orbit leaving 1 with the stable manifold of 0 traced
        backwards. Either leg failing to reach the level defers to :meth:`miss`.
        """
        sol = self.run(c, stop_at=MATCH)
        if not len(sol.t_events[2]):
            return self.miss(c)
        a, react = self.a, self.react
        _, r = _rates(a, c, self.slope0, self.slope1)

        def rhs(_, s):  # reversed variable: s[1] = -psi'
            return (s[1], (c * s[1] - react(s[0])) / a)

        def reached(_, s):
            return s[0] - MATCH
        reached.terminal = True
        reached.direction = 1

        def turned(_, s):
            return s[1]
        turned.terminal = True
        turned.direction = -1

        back = solve_ivp(rhs, (0.0, 60.0 / max(r, 1e-3) + 400.0), [EDGE, r * EDGE], method="DOP853",
                         rtol=1e-11, atol=1e-14, events=[reached, turned])
        if not len(back.t_events[0]):
            return self.miss(c)
        return float(sol.y_events[2][0][1] + back.y_events[0][0][1])


def solve_frozen_wave(medium: PeriodicMedium, y: float, tol: float = 1e-10, bracket: Optional[tuple] = None,
                      half_width: float = 40.0, dxi: float = 0.02, residual_tol: float = 1e-3) -> TravelingWave:
    """Traveling front ``(psi(., y), c(y))`` normalized by ``psi(0) = 1/2``.

    Negative speeds are obtained from the flipped reaction -f(y, 1 - u),
    whose wave has speed -c > 0, through psi(xi) = 1 - psi_flip(-xi).
    """
    if bracket is None:
        flip = bool(medium.mean_reaction(y)[0] < 0.0)
    else:
        flip = bracket[1] <= 0.0
        if flip:
            bracket = (-bracket[1], -bracket[0])
    shooter = _Shooter(medium, y, flipped=flip)
    if bracket is None:
        bracket = frozen_speed_bracket(_flipped(medium) if flip else medium, y)
    lo, hi = bracket
    # widen until the miss changes sign
    for _ in range(40):
        m_lo, m_hi = shooter.miss(lo), shooter.miss(hi)
        if m_lo < 0.0 < m_hi:
            break
        width = hi - lo
        if m_lo > 0.0:
            lo -= width
        if m_hi < 0.0:
            hi += width
    else:
        raise WaveError(f"could not bracket the frozen speed at y={y}")
    try:
        guess = brentq(shooter.matching_gap, lo, hi, xtol=0.1 * tol, maxiter=MAX_ITERATIONS)
    except (RuntimeError, ValueError):
        guess = 0.5 * (lo + hi)
    # certify with the exact sign test on a small bracket around the guess
    delta = 0.5 * tol
    while delta < hi - lo:
        a_lo, a_hi = max(lo, guess - delta), min(hi, guess + delta)
        if shooter.miss(a_lo) < 0.0 < shooter.miss(a_hi):
            lo, hi = a_lo, a_hi
            break
        delta *= 8.0
    n = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if shooter.miss(mid) > 0.0 else (mid, hi)
        n += 1
        if n > MAX_ITERATIONS:
            raise WaveError(f"speed iteration did not converge at y={y}")
    c = 0.5 * (lo + hi)
    wave = _build_profile(shooter, c, tol, half_width, dxi, residual_tol)
    return _mirror(wave) if flip else wave


def _flipped(medium: PeriodicMedium) -> PeriodicMedium:
    """Medium with reaction -f(x, 1 - u): the roles of 0 and 1 are exchanged."""
    from dataclasses import replace

    if medium.kind == "cubic":
        from .medium import FourierSeries, make_cubic_medium

        b = medium.params["b"]
        return make_cubic_medium(medium.params["a"],
                                 FourierSeries(1.0 - b.mean, -np.asarray(b.cos), -np.asarray(b.sin)))
    return replace(medium, f=lambda x, u: -medium.f(x, 1.0 - u), b=lambda x: 1.0 - medium.b(x),
                   dfdu=lambda x, u: medium.f_u(x, 1.0 - u), dfdx=None, kind="custom", params={})


def _mirror(w: TravelingWave) -> TravelingWave:
    """Map the flipped wave back: psi(xi) = 1 - psi_flip(-xi), c = -c_flip."""
    return TravelingWave(y=w.y, c=-w.c, a=w.a, xi_grid=-w.xi_grid[::-1], psi=1.0 - w.psi[::-1],
                         dpsi=w.dpsi[::-1].copy(), residual_norm=w.residual_norm, rate_left=w.rate_right,
                         rate_right=w.rate_left, bracket_width=w.bracket_width)


def frozen_speed_bracket_reversed(medium: PeriodicMedium, y: float) -> tuple:
    """Bracket for the speed magnitude when the mean reaction is negative at ``y``."""
    return frozen_speed_bracket(_flipped(medium), y)


def _build_profile(shooter: _Shooter, c, width, half_width, dxi, residual_tol) -> TravelingWave:
    cut = max(1e-7, 10.0 * EDGE)
    sol = shooter.run(c, dense=True, stop_at=cut)
    t_end = sol.t[-1]
    ts = np.linspace(0.0, t_end, 20001)
    traj = sol.sol(ts)
    psi_t = traj[0]
    if np.any(np.diff(psi_t) >= 0):
        raise WaveError(f"accepted profile at y={shooter.y} is not monotone")
    half = np.nonzero(psi_t <= 0.5)[0][0]
    # refine psi = 1/2 by interpolation between bracketing samples
    t_half = np.interp(0.5, psi_t[half - 1:half + 1][::-1], ts[half - 1:half + 1][::-1])

    rate_left, rate_right = _rates(shooter.a, c, shooter.slope0, shooter.slope1)
    half_width = max(half_width, 16.0 / min(rate_left, rate_right))
    grid = np.arange(-half_width, half_width + 0.5 * dxi, dxi)
    s = grid + t_half  # shooting coordinate
    psi = np.empty_like(grid)
    dpsi = np.empty_like(grid)
    mid = (s >= 0.0) & (s <= t_end)
    psi[mid], dpsi[mid] = sol.sol(s[mid])
    left = s < 0.0
    psi[left] = 1.0 - EDGE * np.exp(rate_left * s[left])
    dpsi[left] = -rate_left * EDGE * np.exp(rate_left * s[left])
    right = s > t_end
    end_psi = sol.y[0, -1]
    psi[right] = end_psi * np.exp(-rate_right * (s[right] - t_end))
    dpsi[right] = -rate_right * psi[right]

    fy = shooter.react
    react = np.array([fy(v) for v in psi[1:-1]])
    d2 = (psi[2:] - 2.0 * psi[1:-1] + psi[:-2]) / dxi**2
    d1 = (psi[2:] - psi[:-2]) / (2.0 * dxi)
    residual = float(np.max(np.abs(shooter.a * d2 + c * d1 + react)))
    if residual > residual_tol:
        raise WaveError(f"profile residual {residual:.3g} exceeds {residual_tol} at y={shooter.y}")
    if np.any(dpsi[1:-1] >= 0):
        raise WaveError(f"accepted profile at y={shooter.y} is not monotone")
    return TravelingWave(y=shooter.y, c=float(c), a=shooter.a, xi_grid=grid, psi=psi, dpsi=dpsi,
                         residual_norm=residual, rate_left=float(rate_left), rate_right=float(rate_right),
                         bracket_width=float(width))


# ---------------------------------------------------------------------------
# families and the limit speed


@dataclass
class WaveFamily:
    """Frozen waves at uniform nodes ``y_k = k / n`` on a common xi grid."""

    waves: list
    y_nodes: np.ndarray = field(init=False)
    speeds: np.ndarray = field(init=False)
    profiles: np.ndarray = field(init=False)

    def __post_init__(self):
        grids = [w.xi_grid for w in self.waves]
        if any(len(g) != len(grids[0]) or not np.allclose(g, grids[0]) for g in grids):
            raise ValueError("waves in a family must share the xi grid")
        self.y_nodes = np.array([w.y for w in self.waves])
        self.speeds = np.array([w.c for w in self.waves])
        self.profiles = np.vstack([w.psi for w in self.waves])
        self._derivs = np.vstack([w.dpsi for w in self.waves])
        n = len(self.waves)
        ext = np.append(self.y_nodes, self.y_nodes[0] + 1.0)
        if n >= 3:
            self._c = CubicSpline(ext, np.append(self.speeds, self.speeds[0]), bc_type="periodic")
            self._p = CubicSpline(ext, np.vstack([self.profiles, self.profiles[:1]]), bc_type="periodic", axis=0)
            self._d = CubicSpline(ext, np.vstack([self._derivs, self._derivs[:1]]), bc_type="periodic", axis=0)
        else:
            const = self.speeds[0]
            self._c = lambda y: np.full_like(np.asarray(y, dtype=float), const)
            self._p = lambda y: np.broadcast_to(self.profiles[0], np.shape(y) + self.profiles[0].shape).copy()
            self._d = lambda y: np.broadcast_to(self._derivs[0], np.shape(y) + self._derivs[0].shape).copy()

    @property
    def xi_grid(self) -> np.ndarray:
        return self.waves[0].xi_grid

    def c(self, y):
        return self._c(np.mod(y, 1.0))

    def profile_at(self, y):
        """psi(., y) on the common grid (periodic spline in y)."""
        return self._p(np.mod(y, 1.0))

    def psi(self, xi, y: float):
        """psi(xi, y) for array xi at a single y, with tails beyond the grid."""
        row = self.profile_at(float(y))
        drow = self._d(np.mod(float(y), 1.0))
        w = self.waves[0]
        tmp = TravelingWave(y=float(y), c=float(self.c(y)), a=w.a, xi_grid=self.xi_grid, psi=row, dpsi=drow,
                            residual_norm=0.0, rate_left=min(v.rate_left for v in self.waves),
                            rate_right=min(v.rate_right for v in self.waves))
        return wave_values(tmp, xi)[0]

    def sup_dpsi_dy(self) -> float:
        return float(np.abs(self._p.derivative()(np.linspace(0, 1, 4 * len(self.waves), endpoint=False))).max()) \
            if len(self.waves) >= 3 else 0.0


def wave_family(medium: PeriodicMedium, n_y: int = 16, tol: float = 1e-10, jobs: int = 1, **kw) -> WaveFamily:
    ys = np.arange(n_y) / n_y
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(jobs) as pool:
            waves = list(pool.map(_solve_one, [(medium, y, tol, kw) for y in ys]))
    else:
        waves = [solve_frozen_wave(medium, y, tol=tol, **kw) for y in ys]
    return WaveFamily(waves)


def _solve_one(args):
    medium, y, tol, kw = args
    return solve_frozen_wave(medium, y, tol=tol, **kw)


@dataclass
class LimitSpeedResult:
    c_star: float
    quad_error_estimate: float
    n_samples: int
    nodes: np.ndarray = None
    speeds: np.ndarray = None

    def to_json(self) -> str:
        return json.dumps({"c_star": self.c_star, "nodes": self.n_samples,
                           "error_estimate": self.quad_error_estimate})


def harmonic_mean(speeds: Sequence[float]) -> tuple:
    """Periodic-trapezoid harmonic mean of speeds at uniform nodes.

    Returns ``(c_star, error_estimate)``; the estimate compares against the
    rule on every other node (Richardson-style difference).
    """
    s = np.asarray(speeds, dtype=float)
    inv = 1.0 / s
    full = inv.mean()
    c_star = 1.0 / full
    if len(s) % 2 == 0 and len(s) >= 4:
        coarse = 1.0 / inv[::2].mean()
        err = abs(c_star - coarse)
    else:
        err = float("nan")
    return float(c_star), float(err)


def harmonic_mean_of(cfun: Callable, n_y: int = 64) -> LimitSpeedResult:
    ys = np.arange(n_y) / n_y
    speeds = np.asarray(cfun(ys), dtype=float)
    c_star, err = harmonic_mean(speeds)
    return LimitSpeedResult(c_star, err, n_y, ys, speeds)


def limit_speed(medium: PeriodicMedium, n_y: int = 32, tol: float = 1e-10, jobs: int = 1) -> LimitSpeedResult:
    """Harmonic mean of the frozen speeds over one period."""
    ys = np.arange(n_y) / n_y
    try:
        speeds = wave_family(medium, n_y=n_y, tol=tol, jobs=jobs).speeds
    except WaveError as exc:
        raise WaveError(f"limit speed: {exc}") from exc
    c_star, err = harmonic_mean(speeds)
    return LimitSpeedResult(c_star, err, n_y, ys, speeds)


def interface_integral(cfun: Callable, y0: float, y1: float) -> float:
    """int_{y0}^{y1} ds / c(s) by adaptive quadrature."""
    val, _ = quad(lambda s: 1.0 / float(cfun(s)), y0, y1, epsabs=1e-13, epsrel=1e-12, limit=200)
    return val


# ---------------------------------------------------------------------------
# appendix estimates


@dataclass
class DecayBounds:
    mu1: float
    mu2: float
    mu1_tilde: float
    empirical_right_slope: float
    empirical_left_slope: float
    right_intercept: float
    left_intercept: float


def decay_rates(c: float, a: float, gamma0: float) -> tuple:
    """(mu1, mu2, mu1_tilde) from the comparison-function inequalities."""
    root = np.sqrt(c * c + 4.0 * gamma0 * a)
    mu1 = (c + root) / (2.0 * a)
    mu_tilde = (-c + root) / (2.0 * a)
    return float(mu1), float(mu_tilde), float(mu_tilde)


def decay_bounds(medium: PeriodicMedium, wave: TravelingWave, gamma0: Optional[float] = None,
                 delta0: Optional[float] = None, min_points: int = 20) -> DecayBounds:
    """Analytic decay rates and least-squares tail slopes of a wave."""
    g0 = medium.gamma0 if gamma0 is None else gamma0
    d0 = medium.delta0 if delta0 is None else delta0
    mu1, mu2, mu_t = decay_rates(wave.c, wave.a, g0)
    xi, psi = wave.xi_grid, wave.psi
    right = (psi < d0) & (xi > 0) & (psi > 1e-300)
    left = (psi > 1.0 - d0) & (xi < 0) & (1.0 - psi > 1e-300)
    if right.sum() < min_points or left.sum() < min_points:
        raise WaveError("tail window shorter than the minimum fit length")
    rs, ri = np.polyfit(xi[right], np.log(psi[right]), 1)
    ls, li = np.polyfit(xi[left], np.log(1.0 - psi[left]), 1)
    return DecayBounds(mu1, mu2, mu_t, float(rs), float(ls), float(np.exp(ri)), float(np.exp(li)))


def adjoint_kernel(wave: TravelingWave) -> np.ndarray:
    """exp(c xi / a) dpsi on the wave grid."""
    return np.exp(wave.c * wave.xi_grid / wave.a) * wave.dpsi


def dpsi_dy(medium: PeriodicMedium, y: float, dy: float = 1e-3, tol: float = 1e-11) -> float:
    """Sup norm of the centered difference (psi(., y+dy) - psi(., y-dy)) / 2dy."""
    plus = solve_frozen_wave(medium, y + dy, tol=tol)
    minus = solve_frozen_wave(medium, y - dy, tol=tol)
    return float(np.max(np.abs(plus.psi - minus.psi)) / (2.0 * dy))


def speed_lipschitz(family: WaveFamily) -> float:
    """Finite-difference Lipschitz estimate of y -> c(y) over the family nodes."""
    c = np.append(family.speeds, family.speeds[0])
    h = 1.0 / len(family.speeds)
    return float(np.max(np.abs(np.diff(c))) / h)
