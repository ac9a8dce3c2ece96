"""Spatially periodic bistable media (a, f, b).

A medium bundles a 1-periodic diffusivity ``a(x)``, a reaction ``f(x, u)``
that is 1-periodic in ``x`` and bistable in ``u``, and the interior zero
``b(x)``.  Built-in media carry analytic derivatives; table media fall back
to centered differences.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import RectBivariateSpline
from scipy.optimize import brentq

FD_STEP = 1e-6
A2_SCAN_MAX = 0.25


class MediumError(ValueError):
    """Raised when a medium cannot be built or violates bistability."""


class FourierSeries:
    """Real trigonometric polynomial of period 1.

    ``value(x) = mean + sum_k cos[k] cos(2 pi (k+1) x) + sin[k] sin(2 pi (k+1) x)``
    """

    def __init__(self, mean: float, cos=(), sin=()):
        self.mean = float(mean)
        n = max(len(cos), len(sin))
        self.cos = np.zeros(n)
        self.sin = np.zeros(n)
        self.cos[: len(cos)] = cos
        self.sin[: len(sin)] = sin

    @classmethod
    def coerce(cls, obj) -> "FourierSeries | Callable":
        if isinstance(obj, FourierSeries):
            return obj
        if isinstance(obj, (int, float, np.floating)):
            return cls(float(obj))
        if callable(obj):
            return obj
        raise TypeError(f"cannot interpret {obj!r} as a periodic function")

    @property
    def is_constant(self) -> bool:
        return not (np.any(self.cos) or np.any(self.sin))

    def _modes(self, x):
        x = np.asarray(x, dtype=float)
        k = np.arange(1, len(self.cos) + 1)
        return x, 2.0 * np.pi * np.multiply.outer(x, k), 2.0 * np.pi * k

    def __call__(self, x):
        if self.is_constant:
            return np.full_like(np.asarray(x, dtype=float), self.mean)
        x, ph, _ = self._modes(x)
        return self.mean + np.cos(ph) @ self.cos + np.sin(ph) @ self.sin

    def derivative(self, x):
        if self.is_constant:
            return np.zeros_like(np.asarray(x, dtype=float))
        x, ph, w = self._modes(x)
        return np.sin(ph) @ (-w * self.cos) + np.cos(ph) @ (w * self.sin)

    def to_dict(self) -> dict:
        return {"mean": self.mean, "cos": self.cos.tolist(), "sin": self.sin.tolist()}

    def __eq__(self, other):
        if not isinstance(other, FourierSeries):
            return NotImplemented
        n = max(len(self.cos), len(other.cos))
        pad = lambda v: np.pad(v, (0, n - len(v)))
        return (
            self.mean == other.mean
            and np.array_equal(pad(self.cos), pad(other.cos))
            and np.array_equal(pad(self.sin), pad(other.sin))
        )

    def __repr__(self):
        return f"FourierSeries({self.mean!r}, cos={self.cos.tolist()}, sin={self.sin.tolist()})"


def _smoothstep(t):
    return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)


def _smoothstep_prime(t):
    return 30.0 * t * t * (1.0 - t) ** 2


def bump(u, delta0p: float):
    """C^1 bump with max 1 at u = 1/2, zero outside [delta0p, 1 - delta0p]."""
    u = np.asarray(u, dtype=float)
    s = (u - delta0p) / (1.0 - 2.0 * delta0p)
    t = np.clip(np.where(s <= 0.5, 2.0 * s, 2.0 - 2.0 * s), 0.0, 1.0)
    return _smoothstep(t)


def bump_prime(u, delta0p: float):
    u = np.asarray(u, dtype=float)
    width = 1.0 - 2.0 * delta0p
    s = (u - delta0p) / width
    inside = (s > 0.0) & (s < 1.0)
    left = s <= 0.5
    t = np.clip(np.where(left, 2.0 * s, 2.0 - 2.0 * s), 0.0, 1.0)
    slope = np.where(left, 2.0, -2.0) / width
    return np.where(inside, _smoothstep_prime(t) * slope, 0.0)


@dataclass(frozen=True, eq=False)
class PeriodicMedium:
    """Immutable description of a bistable periodic medium."""

    a: Callable
    f: Callable
    b: Callable
    gamma0: float
    delta0: float
    delta0p: Optional[float] = None
    a_is_constant: bool = False
    kind: str = "custom"
    params: dict = field(default_factory=dict)
    dfdu: Optional[Callable] = None
    dfdx: Optional[Callable] = None
    da: Optional[Callable] = None

    def a_prime(self, x):
        if self.da is not None:
            return self.da(x)
        x = np.asarray(x, dtype=float)
        return (self.a(x + FD_STEP) - self.a(x - FD_STEP)) / (2 * FD_STEP)

    def f_u(self, x, u):
        if self.dfdu is not None:
            return self.dfdu(x, u)
        return (self.f(x, u + FD_STEP) - self.f(x, u - FD_STEP)) / (2 * FD_STEP)

    def f_x(self, x, u):
        if self.dfdx is not None:
            return self.dfdx(x, u)
        return (self.f(x + FD_STEP, u) - self.f(x - FD_STEP, u)) / (2 * FD_STEP)

    def mean_reaction(self, x, n_quad: int = 32):
        """x -> int_0^1 f(x, u) du by Gauss-Legendre quadrature."""
        nodes, weights = leggauss(n_quad)
        u = 0.5 * (nodes + 1.0)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        vals = self.f(x[:, None], u[None, :])
        return 0.5 * vals @ weights

    def reaction_on(self, x) -> Callable:
        """Return ``u -> extended f(x, u)`` with x-dependent pieces cached.

        Outside [0, 1] the reaction is continued linearly with the slopes at
        the stable states.
        """
        x = np.asarray(x, dtype=float)
        slope0 = self.f_u(x, np.zeros_like(x))
        slope1 = self.f_u(x, np.ones_like(x))
        kernel = self._kernel_on(x)

        def reaction(u):
            v = kernel(np.clip(u, 0.0, 1.0))
            return np.where(u < 0.0, slope0 * u, np.where(u > 1.0, slope1 * (u - 1.0), v))

        return reaction

    def _kernel_on(self, x) -> Callable:
        if self.kind == "cubic":
            bx = self.b(x)
            return lambda u: u * (1.0 - u) * (u - bx)
        if self.kind == "a4":
            base_b = self.params["base_b"]
            s = self.params["amp"] * np.sin(2.0 * np.pi * x)
            dp = self.params["delta0p"]
            return lambda u: u * (1.0 - u) * (u - base_b) + s * bump(u, dp)
        return lambda u: self.f(x, u)

    def lipschitz(self, nx: int = 64, nu: int = 201) -> float:
        """Grid sup of |df/du| over one period and u in [0, 1]."""
        x = np.linspace(0.0, 1.0, nx, endpoint=False)
        u = np.linspace(0.0, 1.0, nu)
        return float(np.max(np.abs(self.f_u(x[:, None], u[None, :]))))

    def __reduce__(self):
        # closures do not pickle; rebuild from the lossless config instead
        return (medium_from_config, (self.to_config(),))

    def to_config(self) -> dict:
        """Key-value description; lossless for built-in kinds."""
        if self.kind not in ("cubic", "a4", "custom-table"):
            raise MediumError(f"medium kind {self.kind!r} is not serializable")
        out = {"kind": self.kind}
        for key, val in self.params.items():
            if isinstance(val, FourierSeries):
                out[key] = val.mean
                if len(val.cos):
                    out[f"{key}_cos"] = val.cos.tolist()
                if len(val.sin):
                    out[f"{key}_sin"] = val.sin.tolist()
            elif isinstance(val, np.ndarray):
                out[key] = val.tolist()
            else:
                out[key] = val
        out["delta0"] = self.delta0
        return out


def extended_f(medium: PeriodicMedium, x, u):
    """Reaction continued linearly outside [0, 1] with the slopes at 0 and 1."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    x, u = np.broadcast_arrays(x, u)
    inner = medium.f(x, np.clip(u, 0.0, 1.0))
    low = medium.f_u(x, np.zeros_like(u)) * u
    high = medium.f_u(x, np.ones_like(u)) * (u - 1.0)
    out = np.where(u < 0.0, low, np.where(u > 1.0, high, inner))
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# stability margins


def _margin_profile(medium: PeriodicMedium, x, deltas):
    """Infimum of -f/u on (0, d] and f/(1-u) on [1-d, 1) for each d."""
    u = np.linspace(0.0, A2_SCAN_MAX, 257)[1:]
    low = -medium.f(x[:, None], u[None, :]) / u[None, :]
    high = medium.f(x[:, None], 1.0 - u[None, :]) / u[None, :]
    ratio = np.minimum(low, high).min(axis=0)
    running = np.minimum.accumulate(ratio)
    return np.interp(deltas, u, running), running[0]


def estimate_margins(medium: PeriodicMedium, nx: int = 64, delta0: Optional[float] = None):
    """Return the stability margins ``(gamma0, delta0)`` from a grid scan.

    With ``delta0`` given, gamma0 is 0.9 times the scanned infimum on that
    band.  Otherwise delta0 is the widest band (up to 0.25) on which the
    infimum stays above half the linear rate at the stable states.
    """
    x = np.linspace(0.0, 1.0, nx, endpoint=False)
    deltas = np.linspace(0.005, A2_SCAN_MAX, 50)
    profile, rate0 = _margin_profile(medium, x, deltas)
    if rate0 <= 0:
        return 0.0, 0.0
    if delta0 is None:
        ok = profile >= 0.5 * rate0
        delta0 = float(deltas[ok][-1]) if ok.any() else float(deltas[0])
        inf = float(profile[ok][-1]) if ok.any() else float(profile[0])
    else:
        inf = float(_margin_profile(medium, x, np.array([delta0]))[0][0])
    return 0.9 * inf, float(delta0)


# ---------------------------------------------------------------------------
# builders


def _roots_of_b(f, x, lo=1e-9, hi=1 - 1e-9):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty_like(x)
    for i, xi in enumerate(x.ravel()):
        # interior zero: first sign change of f(xi, .) on a fine scan
        u = np.linspace(lo, hi, 401)
        v = f(np.full_like(u, xi), u)
        idx = np.nonzero((v[:-1] < 0) & (v[1:] >= 0))[0]
        if len(idx) == 0:
            out.ravel()[i] = np.nan
            continue
        j = idx[0]
        out.ravel()[i] = brentq(lambda s: float(f(np.array(xi), np.array(s))), u[j], u[j + 1], xtol=1e-14)
    return out


def make_cubic_medium(a_fn=1.0, b_fn=0.25, delta0: Optional[float] = None) -> PeriodicMedium:
    """Cubic medium ``f(x, u) = u (1 - u) (u - b(x))``."""
    a = FourierSeries.coerce(a_fn)
    b = FourierSeries.coerce(b_fn)
    xs = np.linspace(0.0, 1.0, 257)
    bv = b(xs)
    if np.any(bv <= 0.0) or np.any(bv >= 1.0):
        raise MediumError("b must take values in (0, 1)")
    av = a(xs)
    if np.any(av <= 0.0):
        raise MediumError("a must be positive")

    def f(x, u):
        return u * (1.0 - u) * (u - b(x))

    def dfdu(x, u):
        bx = b(x)
        return -3.0 * u * u + 2.0 * (1.0 + bx) * u - bx

    def dfdx(x, u):
        db = b.derivative(x) if isinstance(b, FourierSeries) else (b(x + FD_STEP) - b(x - FD_STEP)) / (2 * FD_STEP)
        return -u * (1.0 - u) * db

    a_const = bool(a.is_constant) if isinstance(a, FourierSeries) else bool(np.ptp(av) == 0.0)
    da = a.derivative if isinstance(a, FourierSeries) else None
    medium = PeriodicMedium(
        a=a, f=f, b=b, gamma0=0.0, delta0=0.0, a_is_constant=a_const,
        kind="cubic" if isinstance(a, FourierSeries) and isinstance(b, FourierSeries) else "custom",
        params={"a": a, "b": b}, dfdu=dfdu, dfdx=dfdx, da=da,
    )
    g0, d0 = estimate_margins(medium, delta0=delta0)
    return _with_margins(medium, g0, d0)


def make_a4_medium(base_b: float = 0.25, amp: float = 0.02, delta0p: float = 0.1,
                   a: float = 1.0, delta0: Optional[float] = None) -> PeriodicMedium:
    """Cubic plus ``amp sin(2 pi x) w(u)`` with w a bump supported on [delta0p, 1 - delta0p]."""
    if not 0.0 < delta0p < 0.5:
        raise MediumError("delta0p must lie in (0, 1/2)")
    if not 0.0 < base_b < 1.0:
        raise MediumError("base_b must lie in (0, 1)")
    a_series = FourierSeries(float(a))

    def f(x, u):
        return u * (1.0 - u) * (u - base_b) + amp * np.sin(2.0 * np.pi * x) * bump(u, delta0p)

    def dfdu(x, u):
        cubic = -3.0 * u * u + 2.0 * (1.0 + base_b) * u - base_b
        return cubic + amp * np.sin(2.0 * np.pi * x) * bump_prime(u, delta0p)

    def dfdx(x, u):
        return amp * 2.0 * np.pi * np.cos(2.0 * np.pi * x) * bump(u, delta0p)

    if amp == 0.0:
        b = FourierSeries(base_b)
    else:
        table_x = np.linspace(0.0, 1.0, 513)
        table_b = _roots_of_b(f, table_x)
        if np.any(np.isnan(table_b)):
            raise MediumError(f"amp={amp} destroys the bistable structure")

        def b(x):
            return np.interp(np.mod(x, 1.0), table_x, table_b)

    medium = PeriodicMedium(
        a=a_series, f=f, b=b, gamma0=0.0, delta0=0.0, delta0p=float(delta0p), a_is_constant=True,
        kind="a4", params={"base_b": float(base_b), "amp": float(amp), "delta0p": float(delta0p), "a": float(a)},
        dfdu=dfdu, dfdx=dfdx, da=a_series.derivative,
    )
    g0, d0 = estimate_margins(medium, delta0=delta0)
    medium = _with_margins(medium, g0, d0)
    if not validate(medium, 64, 64).zeros_ok:
        raise MediumError(f"amp={amp} makes f(x, .) non-bistable on the sampled grid")
    return medium


def make_table_medium(a_fn, f_table, delta0: Optional[float] = None) -> PeriodicMedium:
    """Medium from a table ``f_table[i, j] = f(i / nx, j / (nu - 1))``.

    The table is interpolated by a bicubic spline, padded periodically in x.
    The first and last columns must vanish (stable states 0 and 1).
    """
    table = np.asarray(f_table, dtype=float)
    nx, nu = table.shape
    if nx < 4 or nu < 4:
        raise MediumError("f table needs at least 4x4 entries")
    a = FourierSeries.coerce(a_fn)
    xs = np.arange(-3, nx + 3) / nx
    padded = table[np.arange(-3, nx + 3) % nx]
    us = np.linspace(0.0, 1.0, nu)
    spline = RectBivariateSpline(xs, us, padded, kx=3, ky=3)

    def f(x, u):
        x, u = np.broadcast_arrays(np.mod(np.asarray(x, dtype=float), 1.0), np.asarray(u, dtype=float))
        return spline.ev(x, u)

    def dfdu(x, u):
        x, u = np.broadcast_arrays(np.mod(np.asarray(x, dtype=float), 1.0), np.asarray(u, dtype=float))
        return spline.ev(x, u, dy=1)

    def dfdx(x, u):
        x, u = np.broadcast_arrays(np.mod(np.asarray(x, dtype=float), 1.0), np.asarray(u, dtype=float))
        return spline.ev(x, u, dx=1)

    table_x = np.linspace(0.0, 1.0, 257)
    table_b = _roots_of_b(f, table_x)
    if np.any(np.isnan(table_b)):
        raise MediumError("tabulated f has no interior zero at some x")

    def b(x):
        return np.interp(np.mod(x, 1.0), table_x, table_b)

    a_const = isinstance(a, FourierSeries) and a.is_constant
    medium = PeriodicMedium(
        a=a, f=f, b=b, gamma0=0.0, delta0=0.0, a_is_constant=a_const, kind="custom-table",
        params={"a": a, "f_table": table}, dfdu=dfdu, dfdx=dfdx,
        da=a.derivative if isinstance(a, FourierSeries) else None,
    )
    g0, d0 = estimate_margins(medium, delta0=delta0)
    return _with_margins(medium, g0, d0)


def _with_margins(medium: PeriodicMedium, gamma0: float, delta0: float) -> PeriodicMedium:
    from dataclasses import replace

    return replace(medium, gamma0=float(gamma0), delta0=float(delta0))


def medium_from_config(section: dict) -> PeriodicMedium:
    """Inverse of :meth:`PeriodicMedium.to_config`."""
    kind = section.get("kind", "cubic")

    def series(key):
        return FourierSeries(float(section[key]), _as_list(section.get(f"{key}_cos", [])),
                             _as_list(section.get(f"{key}_sin", [])))

    delta0 = section.get("delta0")
    delta0 = None if delta0 in (None, "") else float(delta0)
    if kind == "cubic":
        return make_cubic_medium(series("a"), series("b"), delta0=delta0)
    if kind == "a4":
        return make_a4_medium(float(section["base_b"]), float(section["amp"]), float(section["delta0p"]),
                              a=float(section.get("a", 1.0)), delta0=delta0)
    if kind == "custom-table":
        table = section["f_table"]
        if isinstance(table, str):
            table = [[float(v) for v in row.split(",")] for row in table.strip().split(";")]
        return make_table_medium(series("a"), table, delta0=delta0)
    raise MediumError(f"unknown medium kind {kind!r}")


def _as_list(value):
    if isinstance(value, str):
        return [float(v) for v in value.replace(",", " ").split()]
    return [float(v) for v in value]


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    zeros_ok: bool
    margins_ok: bool
    positive_mean: bool
    flat_near_states: bool
    constant_diffusion: bool
    estimated_gamma0: float
    estimated_delta0: float
    mean_reaction_range: tuple

    @property
    def bistable(self) -> bool:
        """Zeros, signs and stability margins hold; the mean may have either sign."""
        return self.zeros_ok and self.margins_ok


def validate(medium: PeriodicMedium, nx: int = 128, nu: int = 128, delta0: Optional[float] = None) -> ValidationReport:
    """Check the structural hypotheses by sampling ``nx`` positions and ``nu`` states."""
    x = np.linspace(0.0, 1.0, nx, endpoint=False)
    u = np.linspace(0.0, 1.0, nu + 2)[1:-1]
    X, U = np.meshgrid(x, u, indexing="ij")
    bx = medium.b(x)
    fv = medium.f(X, U)

    ends = np.abs(medium.f(x, np.zeros_like(x))).max() + np.abs(medium.f(x, np.ones_like(x))).max()
    at_b = np.abs(medium.f(x, bx)).max() if np.all(np.isfinite(bx)) else np.inf
    scale = max(float(np.abs(fv).max()), 1e-300)
    below = U < bx[:, None] - 1e-9
    above = U > bx[:, None] + 1e-9
    zeros_ok = (
        ends <= 1e-12
        and at_b <= 1e-9 * max(1.0, scale)
        and bool(np.all((bx > 0) & (bx < 1)))
        and bool(np.all(fv[below] < 0))
        and bool(np.all(fv[above] > 0))
    )

    gamma0, d0 = estimate_margins(medium, nx=nx, delta0=delta0)
    margins_ok = gamma0 > 0 and 0.0 < d0 < 0.5

    means = medium.mean_reaction(x)
    slope_b = medium.f_u(x, bx)
    positive_mean = bool(np.all(means > 0) and np.all(slope_b > 0))

    flat = False
    if medium.delta0p is not None and medium.a_is_constant:
        dp = medium.delta0p
        us = np.concatenate([np.linspace(0.0, dp, nu // 2), np.linspace(1.0 - dp, 1.0, nu // 2)])
        vals = medium.f(x[:, None], us[None, :])
        flat = bool(np.all(vals == vals[0]))

    return ValidationReport(
        zeros_ok=bool(zeros_ok), margins_ok=bool(margins_ok), positive_mean=positive_mean,
        flat_near_states=flat, constant_diffusion=bool(medium.a_is_constant),
        estimated_gamma0=float(gamma0), estimated_delta0=float(d0),
        mean_reaction_range=(float(means.min()), float(means.max())),
    )


def sinusoidal_b(mean: float = 0.25, amp: float = 0.1) -> FourierSeries:
    """``b(y) = mean + amp sin(2 pi y)``."""
    return FourierSeries(mean, sin=[amp])


def cubic_speed(a, b):
    """Closed-form frozen speed ``sqrt(2a) (1/2 - b)`` of the cubic."""
    return np.sqrt(2.0 * np.asarray(a, dtype=float)) * (0.5 - np.asarray(b, dtype=float))


def closed_form_speed_function(medium: PeriodicMedium) -> Optional[Callable]:
    """Exact y -> c(y) for cubic media, else None."""
    if medium.kind != "cubic":
        return None
    return lambda y: cubic_speed(medium.a(y), medium.b(y))


__all__ = [
    "FourierSeries", "PeriodicMedium", "ValidationReport", "MediumError", "bump", "bump_prime",
    "extended_f", "validate", "estimate_margins", "make_cubic_medium", "make_a4_medium",
    "make_table_medium", "medium_from_config", "sinusoidal_b", "cubic_speed",
    "closed_form_speed_function",
]
