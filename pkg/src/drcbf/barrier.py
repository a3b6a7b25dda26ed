"""High-order barrier chains and their closed-form Lie derivatives.

A chain starts from ``psi_0 = h`` and builds ``psi_i = d/dt psi_{i-1} +
alpha_i(psi_{i-1})``.  The top member ``psi_m`` is affine in the input and is
split into a disturbance-free part ``f_v(x, u) = psi_m(x, u, 0)`` and the
disturbance effect ``f_d(x, d) = psi_m(x, u, d) - psi_m(x, u, 0)``.

Two chains are provided:

* :class:`UnicycleObstacleChain` -- distance-squared barrier for the
  unicycle; input relative degree 2, disturbance relative degree 1
  (mismatched).
* :class:`IntegratorObstacleChain` -- the same barrier on a planar single
  integrator; relative degree 1 with matched disturbance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .interval import Interval, cos_range, sin_range


@dataclass(frozen=True)
class ClassK:
    """Extended class-K function ``s -> p * sign(s) * |s|**q``.

    ``form="linear"`` is the special case ``q = 1``.
    """

    form: str = "linear"
    p: float = 1.0
    q: float = 1.0

    def __post_init__(self):
        if self.form not in ("linear", "power"):
            raise ValueError(f"unknown class-K form {self.form!r}")
        if self.p <= 0:
            raise ValueError("class-K gain p must be positive")
        if self.q < 1:
            raise ValueError("class-K exponent q must be >= 1")
        if self.form == "linear" and self.q != 1.0:
            raise ValueError("linear class-K functions have q = 1")

    @property
    def is_linear(self) -> bool:
        return self.q == 1.0

    def __call__(self, s):
        if self.is_linear:
            return self.p * s
        return self.p * np.sign(s) * np.abs(s) ** self.q

    def deriv(self, s):
        if self.is_linear:
            return self.p + 0.0 * s
        return self.p * self.q * np.abs(s) ** (self.q - 1.0)

    def interval(self, s: Interval) -> Interval:
        if self.is_linear:
            return self.p * s
        return Interval(float(self(s.lo)), float(self(s.hi)))

    def deriv_interval(self, s: Interval) -> Interval:
        if self.is_linear:
            return Interval(self.p, self.p)
        a = s.abs()
        return Interval(float(self.deriv(a.lo)), float(self.deriv(a.hi)))


@dataclass(frozen=True)
class ObstacleSpec:
    """Disk obstacle centred at ``(x_o, y_o)`` to be kept at distance ``D``."""

    x_o: float
    y_o: float
    D: float

    def __post_init__(self):
        if not self.D > 0:
            raise ValueError("safe distance D must be positive")


@dataclass(frozen=True)
class LieBundle:
    """Lie derivatives of the disturbance-free ``psi_{m-1}`` at one state.

    ``dist_linear`` and ``dist_quad`` describe the disturbance effect on the
    top constraint, ``f_d(x, d) = dist_linear @ d + d @ dist_quad @ d`` when
    the outer class-K function is linear.  For mismatched chains the extras
    ``Lf_Lph``, ``Lg_Lph``, ``Lp_Lph`` hold the derivatives of the
    disturbance term already present in ``psi_{m-1}``; ``dist_direct`` is that
    term's coefficient.
    """

    psi_prev: float
    Lf_psi: float
    Lg_psi: np.ndarray
    Lp_psi: np.ndarray
    alpha_psi: float
    dist_linear: np.ndarray
    dist_quad: np.ndarray
    dist_direct: Optional[np.ndarray] = None
    Lf_Lph: Optional[np.ndarray] = None
    Lg_Lph: Optional[np.ndarray] = None
    Lp_Lph: Optional[np.ndarray] = None


class BarrierChain:
    """Common interface; concrete chains supply closed forms."""

    m: int
    drd: int
    obstacle: ObstacleSpec
    alphas: tuple

    @property
    def mismatched(self) -> bool:
        return self.drd < self.m

    @property
    def outer(self) -> ClassK:
        return self.alphas[-1]

    def h(self, x) -> float:
        ob = self.obstacle
        dx = x[0] - ob.x_o
        dy = x[1] - ob.y_o
        return dx * dx + dy * dy - ob.D * ob.D

    def vanilla(self, x) -> tuple[np.ndarray, float]:
        """Coefficients ``(a, b)`` of the nominal constraint ``a @ u + b >= 0``."""
        lb = self.lie(x)
        return lb.Lg_psi, lb.Lf_psi + lb.alpha_psi

    # interval forms used by the reachability margin
    def fv0_range(self, lo, hi) -> Interval:
        raise NotImplementedError

    def lg_ranges(self, lo, hi) -> list[Interval]:
        raise NotImplementedError

    def fd_range(self, lo, hi, dlo, dhi) -> Interval:
        raise NotImplementedError


class UnicycleObstacleChain(BarrierChain):
    """``h = (x - x_o)^2 + (y - y_o)^2 - D^2`` on the unicycle, m = 2, DRD = 1."""

    m = 2
    drd = 1
    system_name = "unicycle"

    def __init__(self, obstacle: ObstacleSpec, alphas: Sequence[ClassK] = (ClassK(), ClassK())):
        if len(alphas) != 2:
            raise ValueError("the unicycle chain needs two class-K functions")
        self.obstacle = obstacle
        self.alphas = tuple(alphas)

    def _base(self, x):
        ob = self.obstacle
        dx = x[0] - ob.x_o
        dy = x[1] - ob.y_o
        c = math.cos(x[2])
        s = math.sin(x[2])
        v = x[3]
        h = dx * dx + dy * dy - ob.D * ob.D
        Lfh = 2.0 * v * (c * dx + s * dy)
        return dx, dy, c, s, v, h, Lfh

    def psi(self, x, d=None, u=None) -> list[float]:
        d = np.zeros(2) if d is None else np.asarray(d, dtype=float)
        u = np.zeros(2) if u is None else np.asarray(u, dtype=float)
        a1, a2 = self.alphas
        dx, dy, c, s, v, h, Lfh = self._base(x)
        Lph_d = 2.0 * dx * d[0] + 2.0 * dy * d[1]
        psi1 = Lfh + Lph_d + float(a1(h))
        Lf2h = 2.0 * v * v
        LgLfh_u = 2.0 * v * (c * dy - s * dx) * u[0] + 2.0 * (c * dx + s * dy) * u[1]
        LpLfh_d = 2.0 * v * c * d[0] + 2.0 * v * s * d[1]
        Lf_Lph_d = 2.0 * v * (c * d[0] + s * d[1])
        Lp_Lph_dd = 2.0 * (d[0] * d[0] + d[1] * d[1])
        psi1_dot = Lf2h + LgLfh_u + LpLfh_d + Lf_Lph_d + Lp_Lph_dd + float(a1.deriv(h)) * (Lfh + Lph_d)
        psi2 = psi1_dot + float(a2(psi1))
        return [h, psi1, psi2]

    def fv(self, x, u) -> float:
        return self.psi(x, None, u)[2]

    def fd(self, x, d) -> float:
        return self.psi(x, d, None)[2] - self.psi(x, None, None)[2]

    def lie(self, x) -> LieBundle:
        a1, a2 = self.alphas
        dx, dy, c, s, v, h, Lfh = self._base(x)
        da1 = float(a1.deriv(h))
        psi_prev = Lfh + float(a1(h))
        Lph = np.array([2.0 * dx, 2.0 * dy])
        LgLfh = np.array([2.0 * v * (c * dy - s * dx), 2.0 * (c * dx + s * dy)])
        LpLfh = np.array([2.0 * v * c, 2.0 * v * s])
        Lf_Lph = np.array([2.0 * v * c, 2.0 * v * s])
        Lp_psi = LpLfh + da1 * Lph
        return LieBundle(
            psi_prev=psi_prev,
            Lf_psi=2.0 * v * v + da1 * Lfh,
            Lg_psi=LgLfh,
            Lp_psi=Lp_psi,
            alpha_psi=float(a2(psi_prev)),
            dist_linear=Lp_psi + Lf_Lph + float(a2.deriv(psi_prev)) * Lph,
            dist_quad=2.0 * np.eye(2),
            dist_direct=Lph,
            Lf_Lph=Lf_Lph,
            Lg_Lph=np.zeros((2, 2)),
            Lp_Lph=2.0 * np.eye(2),
        )

    # -- interval extensions ------------------------------------------------

    def _ibase(self, lo, hi):
        ob = self.obstacle
        DX = Interval(lo[0] - ob.x_o, hi[0] - ob.x_o)
        DY = Interval(lo[1] - ob.y_o, hi[1] - ob.y_o)
        C = Interval(*cos_range(lo[2], hi[2]))
        S = Interval(*sin_range(lo[2], hi[2]))
        V = Interval(lo[3], hi[3])
        H = DX.sqr() + DY.sqr() - ob.D * ob.D
        Lfh = 2.0 * (V * (C * DX + S * DY))
        return DX, DY, C, S, V, H, Lfh

    def fv0_range(self, lo, hi) -> Interval:
        a1, a2 = self.alphas
        DX, DY, C, S, V, H, Lfh = self._ibase(lo, hi)
        if a1.is_linear and a2.is_linear:
            return 2.0 * V.sqr() + (a1.p + a2.p) * Lfh + (a1.p * a2.p) * H
        return 2.0 * V.sqr() + a1.deriv_interval(H) * Lfh + a2.interval(Lfh + a1.interval(H))

    def lg_ranges(self, lo, hi) -> list[Interval]:
        DX, DY, C, S, V, H, Lfh = self._ibase(lo, hi)
        return [2.0 * (V * (C * DY - S * DX)), 2.0 * (C * DX + S * DY)]

    def fd_range(self, lo, hi, dlo, dhi) -> Interval:
        a1, a2 = self.alphas
        DX, DY, C, S, V, H, Lfh = self._ibase(lo, hi)
        D1 = Interval(dlo[0], dhi[0])
        D2 = Interval(dlo[1], dhi[1])
        quad = 2.0 * (D1.sqr() + D2.sqr())
        A1d = a1.deriv_interval(H)
        if a2.is_linear:
            k1 = 4.0 * (V * C) + (A1d + a2.p) * (2.0 * DX)
            k2 = 4.0 * (V * S) + (A1d + a2.p) * (2.0 * DY)
            return k1 * D1 + k2 * D2 + quad
        k1 = 4.0 * (V * C) + A1d * (2.0 * DX)
        k2 = 4.0 * (V * S) + A1d * (2.0 * DY)
        psi0 = Lfh + a1.interval(H)
        shift = (2.0 * DX) * D1 + (2.0 * DY) * D2
        return k1 * D1 + k2 * D2 + quad + a2.interval(psi0 + shift) - a2.interval(psi0)


class IntegratorObstacleChain(BarrierChain):
    """Distance-squared barrier on the planar single integrator, m = DRD = 1."""

    m = 1
    drd = 1
    system_name = "single_integrator"

    def __init__(self, obstacle: ObstacleSpec, alphas: Sequence[ClassK] = (ClassK(),)):
        if len(alphas) != 1:
            raise ValueError("the integrator chain needs one class-K function")
        self.obstacle = obstacle
        self.alphas = tuple(alphas)

    def psi(self, x, d=None, u=None) -> list[float]:
        d = np.zeros(2) if d is None else np.asarray(d, dtype=float)
        u = np.zeros(2) if u is None else np.asarray(u, dtype=float)
        ob = self.obstacle
        dx, dy = x[0] - ob.x_o, x[1] - ob.y_o
        h = dx * dx + dy * dy - ob.D * ob.D
        psi1 = 2.0 * dx * (u[0] + d[0]) + 2.0 * dy * (u[1] + d[1]) + float(self.alphas[0](h))
        return [h, psi1]

    def fv(self, x, u) -> float:
        return self.psi(x, None, u)[1]

    def fd(self, x, d) -> float:
        return self.psi(x, d, None)[1] - self.psi(x, None, None)[1]

    def lie(self, x) -> LieBundle:
        ob = self.obstacle
        dx, dy = x[0] - ob.x_o, x[1] - ob.y_o
        h = dx * dx + dy * dy - ob.D * ob.D
        grad = np.array([2.0 * dx, 2.0 * dy])
        return LieBundle(
            psi_prev=h,
            Lf_psi=0.0,
            Lg_psi=grad,
            Lp_psi=grad.copy(),
            alpha_psi=float(self.alphas[0](h)),
            dist_linear=grad.copy(),
            dist_quad=np.zeros((2, 2)),
        )

    def _ibase(self, lo, hi):
        ob = self.obstacle
        DX = Interval(lo[0] - ob.x_o, hi[0] - ob.x_o)
        DY = Interval(lo[1] - ob.y_o, hi[1] - ob.y_o)
        return DX, DY

    def fv0_range(self, lo, hi) -> Interval:
        DX, DY = self._ibase(lo, hi)
        return self.alphas[0].interval(DX.sqr() + DY.sqr() - self.obstacle.D ** 2)

    def lg_ranges(self, lo, hi) -> list[Interval]:
        DX, DY = self._ibase(lo, hi)
        return [2.0 * DX, 2.0 * DY]

    def fd_range(self, lo, hi, dlo, dhi) -> Interval:
        DX, DY = self._ibase(lo, hi)
        return (2.0 * DX) * Interval(dlo[0], dhi[0]) + (2.0 * DY) * Interval(dlo[1], dhi[1])


# -- functional surface ---------------------------------------------------------


def eval_h(spec: ObstacleSpec, x) -> float:
    """``(x - x_o)^2 + (y - y_o)^2 - D^2``; nonnegative outside the disk."""
    dx = x[0] - spec.x_o
    dy = x[1] - spec.y_o
    return dx * dx + dy * dy - spec.D * spec.D


def eval_psi(chain: BarrierChain, x, d=None, u=None) -> list[float]:
    """Chain values ``[psi_0, ..., psi_m]``; ``d`` and ``u`` default to zero."""
    return chain.psi(np.asarray(x, dtype=float), d, u)


def eval_fv(chain: BarrierChain, x, u) -> float:
    return chain.fv(np.asarray(x, dtype=float), np.asarray(u, dtype=float))


def eval_fd(chain: BarrierChain, x, d) -> float:
    return chain.fd(np.asarray(x, dtype=float), np.asarray(d, dtype=float))


def lie_derivatives(chain: BarrierChain, x) -> LieBundle:
    return chain.lie(np.asarray(x, dtype=float))


def make_chain(system_name: str, obstacle: ObstacleSpec, alphas: Optional[Sequence[ClassK]] = None) -> BarrierChain:
    if system_name == "unicycle":
        return UnicycleObstacleChain(obstacle, alphas or (ClassK(), ClassK()))
    if system_name == "single_integrator":
        return IntegratorObstacleChain(obstacle, alphas or (ClassK(),))
    raise ValueError(f"no barrier chain for system {system_name!r}")
