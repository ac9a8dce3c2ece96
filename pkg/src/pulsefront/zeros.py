"""Sign-change counting, stationary comparators and zero-number audits.

For the monotone split scheme the number of sign changes of u(t) - w cannot
grow when w is a fixed point of the same step map (same grid, dt and clamps):
the implicit diffusion solve has a sign-regular inverse and the reaction
update multiplies differences by 1 + dt f_u > 0.  Comparators are therefore
computed by marching the scheme itself to steady state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .medium import PeriodicMedium
from .pdesolver import Field, Grid1D, SolverConfig, default_config, evolve, implicit_diffusion


class ZerosError(RuntimeError):
    pass


@dataclass(frozen=True)
class SignWord:
    signs: Tuple[int, ...]

    def __post_init__(self):
        if any(s not in (1, -1) for s in self.signs):
            raise ZerosError("signs must be +1 or -1")
        if any(a == b for a, b in zip(self.signs, self.signs[1:])):
            raise ZerosError("adjacent signs must differ")

    @property
    def z(self) -> int:
        return len(self.signs) - 1

    def __str__(self) -> str:
        return "".join("+" if s > 0 else "-" for s in self.signs)

    @classmethod
    def parse(cls, text: str) -> "SignWord":
        return cls(tuple(1 if ch == "+" else -1 for ch in text))


def sign_word(values, band: float = 0.0) -> SignWord:
    """Run-length compressed signs of the samples with |v| > band."""
    if band < 0:
        raise ZerosError("band must be nonnegative")
    v = np.asarray(values, dtype=float).ravel()
    s = np.sign(v[np.abs(v) > band]).astype(int)
    if s.size == 0:
        return SignWord(())
    keep = np.concatenate([[True], s[1:] != s[:-1]])
    return SignWord(tuple(int(x) for x in s[keep]))


def is_subword(b: SignWord, a: SignWord) -> bool:
    """True iff b embeds order-preservingly in a."""
    it = iter(a.signs)
    return all(any(x == y for y in it) for x in b.signs)


# ---------------------------------------------------------------------------
# stationary solutions


@dataclass
class StationarySolution:
    """Fixed point ``w`` of the split step map and its diffused state ``v``.

    ``v`` solves the discrete boundary value problem exactly; ``w`` is what
    the time stepper sees after each step and is the comparator for sign
    counting.  The two differ by dt f(v) in the interior.
    """

    L: float
    delta: float
    x_grid: np.ndarray
    w: np.ndarray
    v: np.ndarray
    mu: float
    residual_norm: float
    monotone_iterates: bool
    config: SolverConfig

    def decay_violation(self) -> float:
        """max of max(w, v) - delta exp(-mu x) over the grid (<= 0 when the bound holds)."""
        bound = self.delta * np.exp(-self.mu * self.x_grid)
        return float(max(np.max(self.w - bound), np.max(self.v - bound)))


def certified_rate(medium: PeriodicMedium, L: float, x: np.ndarray, gamma0: Optional[float] = None) -> float:
    """Largest mu with a(x/L) mu^2 - a'(x/L) mu / L - gamma0 <= 0 at every x."""
    g0 = medium.gamma0 if gamma0 is None else gamma0
    a = np.broadcast_to(np.asarray(medium.a(x / L), dtype=float), x.shape)
    da = np.broadcast_to(np.asarray(medium.a_prime(x / L), dtype=float), x.shape) / L
    roots = (da + np.sqrt(da * da + 4.0 * a * g0)) / (2.0 * a)
    return float(np.min(roots))


def stationary_residual(medium: PeriodicMedium, L: float, x: np.ndarray, w: np.ndarray) -> float:
    """Interior sup of |(a_L w')' + f_L(x, w)| by the conservative stencil."""
    h = x[1] - x[0]
    mid = 0.5 * (x[1:] + x[:-1])
    A = np.broadcast_to(np.asarray(medium.a(mid / L), dtype=float), mid.shape)
    flux = A * np.diff(w) / h
    div = np.diff(flux) / h
    return float(np.max(np.abs(div + medium.reaction_on(x[1:-1] / L)(w[1:-1]))))


def solve_stationary(medium: PeriodicMedium, L: float, delta: float, half_length: float, h: float = 0.05,
                     config: Optional[SolverConfig] = None, tol: float = 1e-15, max_time: float = 5000.0,
                     gamma0: Optional[float] = None) -> StationarySolution:
    """Decaying solution on [0, n] with w(0) = delta, w(n) = 0.

    The scheme is marched from the super-solution w = delta, so iterates
    decrease monotonically to the fixed point of the step map.  The far field
    is tiny, hence the absolute stopping rate ``tol`` is near roundoff.
    """
    if delta > medium.delta0 + 1e-12:
        raise ZerosError(f"delta={delta} exceeds delta0={medium.delta0}")
    grid = Grid1D.from_spacing(0.0, half_length, h)
    cfg = default_config(medium, h) if config is None else config
    cfg = replace(cfg, left_value=float(delta), right_value=0.0, snapshot_stride=1)
    u = np.full(grid.n, float(delta))
    u[-1] = 0.0
    state = Field(grid, 0.0, u)
    prev = {"u": u.copy()}
    monotone = {"ok": True}

    def check(st: Field):
        if np.any(st.u > prev["u"] + 1e-13):
            monotone["ok"] = False
        prev["u"] = st.u.copy()

    chunk = 50 * cfg.dt
    while True:
        before = state.u.copy()
        state = evolve(medium, L, state, state.t + chunk, cfg, check)
        change = float(np.max(np.abs(state.u - before))) / chunk
        if not monotone["ok"]:
            raise ZerosError("iterates are not monotone")
        if change <= tol:
            break
        if state.t > max_time:
            raise ZerosError("stationary iteration stalled")
    x = grid.x
    mu = certified_rate(medium, L, x, gamma0)
    v = implicit_diffusion(medium, L, grid, state.u, cfg.dt)
    v[0], v[-1] = delta, 0.0  # identity rows; drop pivoting roundoff
    res = stationary_residual(medium, L, x, v)
    return StationarySolution(float(L), float(delta), x, state.u.copy(), v, mu, res, monotone["ok"], cfg)


def classify_stationary(w, band: float = 1e-8) -> str:
    """Map (SGN[w - 1], SGN[w]) to the five admissible types."""
    w = np.asarray(w, dtype=float)
    top = sign_word(w - 1.0, band)
    bot = sign_word(w, band)
    below_one = str(top) == "-"
    if top.z == 1 and bot.z == 1:
        return "a"
    if below_one and str(bot) == "+":
        return "b"
    if below_one and str(bot) == "-+":
        return "c"
    if below_one and str(bot) == "+-":
        return "d"
    if below_one and str(bot) == "-+-":
        return "e"
    raise ZerosError(f"unclassifiable pattern: SGN[w-1]={top}, SGN[w]={bot}")


# ---------------------------------------------------------------------------
# audits


@dataclass
class ZeroReport:
    times: List[float]
    words: List[SignWord]
    z_nonincreasing: bool
    subword_chain: bool

    @property
    def terminal(self) -> SignWord:
        return self.words[-1]

    def to_json(self) -> str:
        return json.dumps([{"t": t, "z": w.z, "word": str(w)} for t, w in zip(self.times, self.words)])


def zero_monotonicity_report(times: Sequence[float], values: Sequence[np.ndarray], w, band: float) -> ZeroReport:
    """z and SGN of u(t) - w at each checkpoint, with the monotonicity checks."""
    w = w.w if isinstance(w, StationarySolution) else np.asarray(w, dtype=float)
    words = [sign_word(np.asarray(u) - w, band) for u in values]
    zs = [s.z for s in words]
    nonincr = all(b <= a for a, b in zip(zs, zs[1:]))
    chain = all(is_subword(words[j], words[i]) for i in range(len(words)) for j in range(i + 1, len(words)))
    return ZeroReport(list(map(float, times)), words, nonincr, chain)


def probe_initial_data(grid: Grid1D) -> np.ndarray:
    """Step data with an isolated plateau: four sign runs against small comparators."""
    x = grid.x
    return np.where(x < 1.0, 1.0, 0.0) + np.where((x > 4.0) & (x < 6.0), 0.3, 0.0)


def checkpoint_run(medium: PeriodicMedium, L: float, u0: np.ndarray, grid: Grid1D, config: SolverConfig,
                   t_end: float, n_checkpoints: int = 20):
    """Evolve and keep ``n_checkpoints`` equally spaced states (t = 0 included)."""
    times = np.linspace(0.0, t_end, n_checkpoints)
    state = Field(grid, 0.0, np.array(u0, dtype=float))
    out = [state.u.copy()]
    for t in times[1:]:
        state = evolve(medium, L, state, t, config)
        out.append(state.u.copy())
    return times, out


def calibrate_band(medium: PeriodicMedium, L: float, delta: float, half_length: float, h: float = 0.05,
                   factor: float = 10.0) -> float:
    """factor times the grid-halving difference of the stationary solution."""
    coarse = solve_stationary(medium, L, delta, half_length, h)
    fine = solve_stationary(medium, L, delta, half_length, h / 2)
    err = float(np.max(np.abs(coarse.w - fine.w[::2])))
    return factor * err
