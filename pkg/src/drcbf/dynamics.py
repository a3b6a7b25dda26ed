"""Control-affine disturbed dynamics, ZOH integration and measurement models.

The closed loop simulated everywhere in this package is

    x_dot = f(x) + g(x) u_k + p(x) d,      u_k held over [t_k, t_k + T),

with the controller acting on an estimate ``x_hat = x + e``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

Field = Callable[[np.ndarray], np.ndarray]
IntervalField = Callable[..., tuple]


class DimensionError(ValueError):
    """Raised when an array does not match the dimension a system declares."""


def _as_vec(x, n: int, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.shape != (n,):
        raise DimensionError(f"{name} must have shape ({n},), got {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class BoxSet:
    """Axis-aligned box ``lo <= x <= hi``."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lo, dtype=float).reshape(-1)
        hi = np.array(self.hi, dtype=float).reshape(-1)
        if lo.shape != hi.shape:
            raise DimensionError("lo and hi must have the same length")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise ValueError("box bounds must not be NaN")
        if np.any(lo > hi):
            raise ValueError(f"box has lo > hi: {lo} > {hi}")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, x) -> "BoxSet":
        return cls(x, x)

    @classmethod
    def symmetric(cls, radius) -> "BoxSet":
        r = np.asarray(radius, dtype=float)
        return cls(-r, r)

    @property
    def dim(self) -> int:
        return self.lo.size

    @property
    def width(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def contains_box(self, other: "BoxSet", tol: float = 0.0) -> bool:
        return bool(np.all(other.lo >= self.lo - tol) and np.all(other.hi <= self.hi + tol))

    def corners(self) -> np.ndarray:
        grids = np.meshgrid(*[(a, b) for a, b in zip(self.lo, self.hi)], indexing="ij")
        return np.stack([g.reshape(-1) for g in grids], axis=-1)

    def max_corner_norm(self) -> float:
        """Largest Euclidean norm over the box corners (= sup of ||x|| on the box)."""
        m = np.maximum(np.abs(self.lo), np.abs(self.hi))
        return float(np.sqrt(np.sum(m * m)))

    def clip(self, x) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lo, self.hi)

    def sample(self, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
        shape = (self.dim,) if size is None else (size, self.dim)
        return self.lo + (self.hi - self.lo) * rng.random(shape)

    def __repr__(self) -> str:
        return f"BoxSet(lo={self.lo.tolist()}, hi={self.hi.tolist()})"


@dataclass(frozen=True, eq=False)
class UncertaintyModel:
    """Disturbance and measurement-error bounds.

    ``gamma`` and ``epsilon`` default to the Euclidean norm of the farthest box
    corner, the smallest scalars bounding every point of the boxes.
    """

    dist_box: BoxSet
    meas_box: BoxSet
    gamma: Optional[float] = None
    epsilon: Optional[float] = None

    def __post_init__(self):
        for name, box in (("dist_box", self.dist_box), ("meas_box", self.meas_box)):
            if not box.contains(np.zeros(box.dim)):
                raise ValueError(f"{name} must contain 0")
        g_min = self.dist_box.max_corner_norm()
        e_min = self.meas_box.max_corner_norm()
        gamma = g_min if self.gamma is None else float(self.gamma)
        eps = e_min if self.epsilon is None else float(self.epsilon)
        if gamma < g_min * (1 - 1e-12):
            raise ValueError(f"gamma={gamma} is below the disturbance box bound {g_min}")
        if eps < e_min * (1 - 1e-12):
            raise ValueError(f"epsilon={eps} is below the measurement box bound {e_min}")
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "epsilon", eps)

    @classmethod
    def zero(cls, state_dim: int, dist_dim: int) -> "UncertaintyModel":
        return cls(BoxSet.point(np.zeros(dist_dim)), BoxSet.point(np.zeros(state_dim)))


@dataclass(frozen=True, eq=False)
class ControlAffineSystem:
    """``x_dot = f(x) + g(x) u + p(x) d``.

    ``f``, ``g`` and ``p`` accept a single state of shape ``(n,)`` or a batch
    ``(..., n)``. ``interval_field`` is optional; when present it maps
    ``(x_lo, x_hi, u_lo, u_hi, d_lo, d_hi)`` to bounds on the vector field
    and enables the generic interval reachability path.
    """

    name: str
    f: Field
    g: Field
    p: Field
    state_dim: int
    input_dim: int
    dist_dim: int
    interval_field: Optional[IntervalField] = None
    state_names: Sequence[str] = field(default=())

    def field(self, x, u, d) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        d = np.asarray(d, dtype=float)
        return self.f(x) + np.einsum("...ij,...j->...i", self.g(x), u) + np.einsum(
            "...ij,...j->...i", self.p(x), d
        )


# -- built-in systems -------------------------------------------------------


def _unicycle_f(x):
    x = np.asarray(x, dtype=float)
    v, th = x[..., 3], x[..., 2]
    z = np.zeros_like(v)
    return np.stack([v * np.cos(th), v * np.sin(th), z, z], axis=-1)


_UNI_G = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
_UNI_P = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0], [0.0, 0.0]])


def _unicycle_g(x):
    x = np.asarray(x, dtype=float)
    return np.broadcast_to(_UNI_G, x.shape[:-1] + _UNI_G.shape)


def _unicycle_p(x):
    x = np.asarray(x, dtype=float)
    return np.broadcast_to(_UNI_P, x.shape[:-1] + _UNI_P.shape)


def _unicycle_interval_field(xlo, xhi, ulo, uhi, dlo, dhi):
    from .interval import Interval, cos_range, sin_range

    th = Interval(xlo[2], xhi[2])
    v = Interval(xlo[3], xhi[3])
    c = Interval(*cos_range(th.lo, th.hi))
    s = Interval(*sin_range(th.lo, th.hi))
    fx = v * c + Interval(dlo[0], dhi[0])
    fy = v * s + Interval(dlo[1], dhi[1])
    lo = np.array([fx.lo, fy.lo, ulo[0], ulo[1]])
    hi = np.array([fx.hi, fy.hi, uhi[0], uhi[1]])
    return lo, hi


def unicycle() -> ControlAffineSystem:
    """Kinematic unicycle with state (x, y, heading, speed), inputs
    (turn rate, acceleration) and a planar velocity disturbance."""
    return ControlAffineSystem(
        name="unicycle",
        f=_unicycle_f,
        g=_unicycle_g,
        p=_unicycle_p,
        state_dim=4,
        input_dim=2,
        dist_dim=2,
        interval_field=_unicycle_interval_field,
        state_names=("x", "y", "theta", "v"),
    )


def _si_f(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def _si_eye(x):
    x = np.asarray(x, dtype=float)
    return np.broadcast_to(np.eye(2), x.shape[:-1] + (2, 2))


def _si_interval_field(xlo, xhi, ulo, uhi, dlo, dhi):
    return np.asarray(ulo) + np.asarray(dlo), np.asarray(uhi) + np.asarray(dhi)


def single_integrator() -> ControlAffineSystem:
    """Planar single integrator ``x_dot = u + d``; relative degree 1, matched."""
    return ControlAffineSystem(
        name="single_integrator",
        f=_si_f,
        g=_si_eye,
        p=_si_eye,
        state_dim=2,
        input_dim=2,
        dist_dim=2,
        interval_field=_si_interval_field,
        state_names=("x", "y"),
    )


SYSTEMS = {"unicycle": unicycle, "single_integrator": single_integrator}


# -- operations ---------------------------------------------------------------


def eval_dynamics(sys: ControlAffineSystem, x, u, d) -> np.ndarray:
    """Return ``f(x) + g(x) u + p(x) d`` for a single state."""
    x = _as_vec(x, sys.state_dim, "x")
    u = _as_vec(u, sys.input_dim, "u")
    d = _as_vec(d, sys.dist_dim, "d")
    return sys.f(x) + sys.g(x) @ u + sys.p(x) @ d


def rk4_zoh_step(sys: ControlAffineSystem, x, u_k, d_signal, T: float, substeps: int = 1) -> np.ndarray:
    """Integrate one sampling period with the input held constant.

    Args:
        sys: the system.
        x: state at the start of the period.
        u_k: input applied over the whole period.
        d_signal: either one disturbance vector (held over the period) or a
            sequence with one vector per sub-interval.
        T: period length, > 0.
        substeps: number of equal RK4 sub-intervals.

    Returns:
        The state at the end of the period.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    x = _as_vec(x, sys.state_dim, "x")
    u = _as_vec(u_k, sys.input_dim, "u_k")
    d_arr = np.asarray(d_signal, dtype=float)
    if d_arr.ndim == 1:
        d_arr = np.broadcast_to(_as_vec(d_arr, sys.dist_dim, "d"), (substeps, sys.dist_dim))
    elif d_arr.shape != (substeps, sys.dist_dim):
        raise DimensionError(f"d_signal must have shape ({substeps}, {sys.dist_dim}), got {d_arr.shape}")

    h = T / substeps
    for i in range(substeps):
        d = d_arr[i]

        def rhs(z):
            return sys.f(z) + sys.g(z) @ u + sys.p(z) @ d

        k1 = rhs(x)
        k2 = rhs(x + 0.5 * h * k1)
        k3 = rhs(x + 0.5 * h * k2)
        k4 = rhs(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return x


def rk4_batch(sys: ControlAffineSystem, x, u, d, h: float) -> np.ndarray:
    """One RK4 step of length ``h`` for a batch of states ``(N, n)`` with
    per-sample held inputs ``(N, q)`` and disturbances ``(N, v)``."""

    def rhs(z):
        return sys.field(z, u, d)

    k1 = rhs(x)
    k2 = rhs(x + 0.5 * h * k1)
    k3 = rhs(x + 0.5 * h * k2)
    k4 = rhs(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def apply_measurement(x, e) -> np.ndarray:
    """State estimate ``x + e``."""
    x = np.asarray(x, dtype=float)
    e = np.asarray(e, dtype=float)
    if x.shape != e.shape:
        raise DimensionError(f"measurement error shape {e.shape} does not match state {x.shape}")
    return x + e


def sample_measurement_error(rng: np.random.Generator, meas_box: BoxSet) -> np.ndarray:
    return meas_box.sample(rng)


def sample_disturbance(rng: np.random.Generator, dist_box: BoxSet, draws: int = 1) -> np.ndarray:
    """``draws`` piecewise-constant disturbance values for one period, shape ``(draws, v)``."""
    return dist_box.sample(rng, draws)


def wrap_angle(a: float) -> float:
    """Wrap to the half-open interval (-pi, pi]."""
    w = math.fmod(a + math.pi, 2.0 * math.pi)
    if w <= 0.0:
        w += 2.0 * math.pi
    return w - math.pi
