"""Monotone finite-difference evolution of periodic bistable reaction-diffusion.

Each step applies implicit diffusion in conservative flux form (a tridiagonal
M-matrix solve) followed by an explicit reaction update.  With
``dt * Lip <= 0.9`` both substeps are order preserving, so the discrete
scheme inherits the comparison and maximum principles.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional

import numpy as np
from scipy.linalg import lapack

from .medium import PeriodicMedium

LIP_CAP = 0.9


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class Grid1D:
    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if self.n < 3:
            raise SolverError("grid needs at least 3 points")
        if not self.x_max > self.x_min:
            raise SolverError("x_max must exceed x_min")

    @classmethod
    def from_spacing(cls, x_min: float, x_max: float, h: float) -> "Grid1D":
        """Grid with spacing exactly h; x_max is moved up to the next node."""
        n = int(np.ceil((x_max - x_min) / h - 1e-9)) + 1
        return cls(float(x_min), float(x_min + (n - 1) * h), n)

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.h * np.arange(self.n)

    def index_of(self, x: float) -> int:
        return int(round((x - self.x_min) / self.h))


@dataclass
class Field:
    grid: Grid1D
    t: float
    u: np.ndarray

    def copy(self) -> "Field":
        return Field(self.grid, self.t, self.u.copy())


@dataclass
class SolverConfig:
    dt: float
    left_value: float = 1.0
    right_value: float = 0.0
    snapshot_stride: int = 1
    reaction_lipschitz: Optional[float] = None

    def with_lipschitz(self, lip: float) -> "SolverConfig":
        return replace(self, reaction_lipschitz=float(lip))


def default_config(medium: PeriodicMedium, h: float, scale: float = 1.0, **kw) -> SolverConfig:
    """Config with dt = h/2 (capped by the Lipschitz bound).

    The splitting error in the front speed is first order in dt (about
    0.1 dt relative for the cubic), so dt tracks h.

    ``scale`` multiplies the reaction (L for the rescaled form).
    """
    lip = medium.lipschitz()
    dt = min(0.5 * h, LIP_CAP / (scale * lip))
    return SolverConfig(dt=dt, reaction_lipschitz=lip, **kw)


# ---------------------------------------------------------------------------
# diffusion operator


def diffusion_bands(coef_half: np.ndarray, h: float):
    """Sub, main and super diagonals of the conservative operator (A u_x)_x.

    ``coef_half[i]`` is A at x_{i+1/2}.  Boundary rows are zero.
    """
    n = coef_half.size + 1
    lower = np.zeros(n - 1)
    upper = np.zeros(n - 1)
    main = np.zeros(n)
    inv = 1.0 / (h * h)
    upper[1:] = coef_half[1:] * inv
    lower[:-1] = coef_half[:-1] * inv
    main[1:-1] = -(coef_half[1:] + coef_half[:-1]) * inv
    return lower, main, upper


def diffusion_matrix(coef_half: np.ndarray, h: float) -> np.ndarray:
    """Dense form of :func:`diffusion_bands` (for inspection and tests)."""
    lower, main, upper = diffusion_bands(coef_half, h)
    return np.diag(main) + np.diag(lower, -1) + np.diag(upper, 1)


class _ImplicitDiffusion:
    """Factorization of ``I - dt D`` with identity boundary rows."""

    def __init__(self, coef_half: np.ndarray, h: float, dt: float):
        lower, main, upper = diffusion_bands(coef_half, h)
        dl, d, du, du2, ipiv, info = lapack.dgttrf(-dt * lower, 1.0 - dt * main, -dt * upper)
        if info != 0:
            raise SolverError(f"tridiagonal factorization failed (info={info})")
        self._lu = (dl, d, du, du2, ipiv)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        out, info = lapack.dgttrs(*self._lu, rhs)
        if info != 0:
            raise SolverError(f"tridiagonal solve failed (info={info})")
        return out


def implicit_diffusion(medium: PeriodicMedium, L: float, grid: Grid1D, u: np.ndarray, dt: float) -> np.ndarray:
    """One solve of (I - dt D) v = u for the original-scale operator (boundary rows kept)."""
    x = grid.x
    mid = 0.5 * (x[1:] + x[:-1])
    coef = np.broadcast_to(np.asarray(medium.a(mid / L), dtype=float), mid.shape)
    return _ImplicitDiffusion(coef, grid.h, dt).solve(np.array(u, dtype=float))


# ---------------------------------------------------------------------------
# generic driver


def _march(field_in: Field, t_end: float, config: SolverConfig, coef_half: np.ndarray,
           reaction: Callable, scale: float, lip: float, on_snapshot: Optional[Callable]) -> Field:
    if t_end < field_in.t:
        raise SolverError("t_end precedes the current time")
    dt = config.dt
    if dt <= 0:
        raise SolverError("dt must be positive")
    if dt * scale * lip > LIP_CAP + 1e-12:
        raise SolverError(f"dt={dt:g} violates the cap {LIP_CAP}/({scale:g}*{lip:g})")
    grid = field_in.grid
    state = Field(grid, float(field_in.t), np.array(field_in.u, dtype=float))
    state.u[0], state.u[-1] = config.left_value, config.right_value
    stride = max(int(config.snapshot_stride), 1)
    span = t_end - state.t
    n_steps = int(np.ceil(span / dt - 1e-9)) if span > 0 else 0
    last = span - (n_steps - 1) * dt if n_steps else 0.0

    solver = _ImplicitDiffusion(coef_half, grid.h, dt)
    t0 = state.t
    if on_snapshot is not None:
        on_snapshot(state)
    for k in range(1, n_steps + 1):
        step = dt
        if k == n_steps and abs(last - dt) > 1e-14:
            step = last
            solver = _ImplicitDiffusion(coef_half, grid.h, step)
        u = state.u
        u[0], u[-1] = config.left_value, config.right_value
        u = solver.solve(u)
        u += (step * scale) * reaction(u)
        u[0], u[-1] = config.left_value, config.right_value
        if not np.isfinite(u).all():
            raise SolverError(f"non-finite values at step {k}")
        state.u = u
        state.t = t_end if k == n_steps else t0 + k * dt
        if on_snapshot is not None and (k % stride == 0 or k == n_steps):
            on_snapshot(state)
    return state


def _lip(medium: PeriodicMedium, config: SolverConfig) -> float:
    return config.reaction_lipschitz if config.reaction_lipschitz is not None else medium.lipschitz()


def evolve(medium: PeriodicMedium, L: float, field: Field, t_end: float, config: SolverConfig,
           on_snapshot: Optional[Callable] = None) -> Field:
    """Original scale: u_t = (a(x/L) u_x)_x + f(x/L, u).

    ``on_snapshot(state)`` receives the live state; copy ``state.u`` to keep it.
    """
    x = field.grid.x
    mid = 0.5 * (x[1:] + x[:-1])
    coef = np.broadcast_to(np.asarray(medium.a(mid / L), dtype=float), mid.shape)
    return _march(field, t_end, config, coef, medium.reaction_on(x / L), 1.0, _lip(medium, config), on_snapshot)


def evolve_rescaled(medium: PeriodicMedium, L: float, field: Field, t_end: float, config: SolverConfig,
                    on_snapshot: Optional[Callable] = None) -> Field:
    """Rescaled form: v_t = (a(x) v_x)_x / L + L f(x, v)."""
    x = field.grid.x
    mid = 0.5 * (x[1:] + x[:-1])
    coef = np.broadcast_to(np.asarray(medium.a(mid), dtype=float), mid.shape) / L
    return _march(field, t_end, config, coef, medium.reaction_on(x), float(L), _lip(medium, config), on_snapshot)


def evolve_offset(medium: PeriodicMedium, y: float, L: float, field: Field, t_end: float,
                  config: SolverConfig, on_snapshot: Optional[Callable] = None) -> Field:
    """Offset form: z_t = a z_xx + f(y + x/L, z); needs constant a."""
    if not medium.a_is_constant or medium.delta0p is None:
        raise SolverError("offset form needs constant diffusivity and an x-independent reaction near 0 and 1")
    x = field.grid.x
    a = float(np.asarray(medium.a(0.0)))
    coef = np.full(x.size - 1, a)
    return _march(field, t_end, config, coef, medium.reaction_on(y + x / L), 1.0, _lip(medium, config), on_snapshot)


# ---------------------------------------------------------------------------
# helpers


def front_like(grid: Grid1D, x0: float, width: float = 1.0, reverse: bool = False) -> Field:
    """Logistic step from 1 (left) to 0 (right) centred at x0."""
    s = (grid.x - x0) / width
    u = 0.5 * (1.0 - np.tanh(0.5 * s))
    if reverse:
        u = 1.0 - u
    return Field(grid, 0.0, u)


def boundary_ok(state: Field, config: SolverConfig, tol: float = 1e-8) -> bool:
    """True if the cells next to each clamp stay within tol of the clamp value."""
    return (abs(state.u[1] - config.left_value) <= tol) and (abs(state.u[-2] - config.right_value) <= tol)


@dataclass
class SnapshotRecorder:
    """Observer that keeps copies of (t, u), optionally restricted to an index window."""

    window: Optional[slice] = None
    times: List[float] = field(default_factory=list)
    values: List[np.ndarray] = field(default_factory=list)

    def __call__(self, state: Field) -> None:
        u = state.u if self.window is None else state.u[self.window]
        self.times.append(float(state.t))
        self.values.append(np.array(u, copy=True))

    def array(self) -> np.ndarray:
        return np.vstack(self.values) if self.values else np.empty((0, 0))


def write_snapshots_csv(path, x: np.ndarray, times, values) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["t", "x", "u"])
        for t, u in zip(times, values):
            for xi, ui in zip(x, u):
                out.writerow([f"{t:.10g}", f"{xi:.10g}", f"{ui:.12g}"])
