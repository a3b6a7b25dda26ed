"""Robust barrier constraints and the exact minimally-invasive filter.

Every constraint kind reduces to one affine inequality ``a . u + b >= 0``
over a box of inputs, so the filter QP

    min 0.5 ||u - u_perf||^2   s.t.  a . u + b >= 0,  lo <= u <= hi

is solved exactly by enumerating KKT active sets.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .barrier import BarrierChain
from .dynamics import BoxSet
from .margins import (MarginSpec, disturbance_margin, lipschitz_margin_ct, lipschitz_margin_sd,
                      reach_margin_bound)

CONSTRAINT_KINDS = ("vanilla", "ct_robust", "sd_robust", "reach_robust")
KIND_ALIASES = {"vanilla": "vanilla", "ct": "ct_robust", "sd": "sd_robust", "reach": "reach_robust"}
MODES = ("inactive", "active", "clamped_infeasible")

_FREE, _LO, _HI = 0, 1, 2


@dataclass(frozen=True, eq=False)
class AffineConstraint:
    """``a . u + b >= 0``."""

    a: np.ndarray
    b: float

    def __post_init__(self):
        a = np.array(self.a, dtype=float).reshape(-1)
        a.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", float(self.b))
        if not (np.all(np.isfinite(a)) and math.isfinite(self.b)):
            raise ValueError("constraint coefficients must be finite")

    def value(self, u) -> float:
        return float(self.a @ np.asarray(u, dtype=float) + self.b)


@dataclass(frozen=True, eq=False)
class FilterResult:
    u_safe: np.ndarray
    slack: float
    feasible: bool
    mode: str
    n_candidates: int = 0


def _kind(kind: str) -> str:
    k = KIND_ALIASES.get(kind, kind)
    if k not in CONSTRAINT_KINDS:
        raise ValueError(f"unknown constraint kind {kind!r}")
    return k


def build_constraint(kind: str, chain: BarrierChain, spec: MarginSpec, x_hat,
                     tube: Optional[BoxSet] = None) -> AffineConstraint:
    """Barrier constraint of the given kind at the estimate ``x_hat``.

    Args:
        kind: ``vanilla``, ``ct_robust``, ``sd_robust`` or ``reach_robust``
            (short names ``ct``, ``sd``, ``reach`` are accepted).
        chain: barrier chain for the system.
        spec: margin constants, sampling period and uncertainty; the input
            box supplies ``u_max`` and the inputs the reach margin ranges over.
        x_hat: state estimate.
        tube: reach tube over the coming period, required for ``reach_robust``.

    Returns:
        The affine constraint. Robust kinds share the vanilla ``a`` and lower ``b``.
    """
    kind = _kind(kind)
    x_hat = np.asarray(x_hat, dtype=float)
    a, b = chain.vanilla(x_hat)
    if kind == "vanilla":
        return AffineConstraint(a, b)
    unc = spec.uncertainty
    if kind == "reach_robust":
        if tube is None:
            raise ValueError("reach_robust needs a reach tube")
        if spec.input_box is None:
            raise ValueError("reach_robust needs MarginSpec.input_box")
        return AffineConstraint(a, b + reach_margin_bound(chain, tube, x_hat, spec.input_box, unc.dist_box))
    dist = disturbance_margin(chain, x_hat, unc.gamma)
    if kind == "ct_robust":
        return AffineConstraint(a, b - (lipschitz_margin_ct(spec, spec.u_max) + dist))
    return AffineConstraint(a, b - (lipschitz_margin_sd(spec, spec.u_max) + dist))


def _active_sets(q: int):
    # ordered by number of active faces, then lexicographically
    sets = list(itertools.product((_FREE, _LO, _HI), repeat=q))
    sets.sort(key=lambda s: (sum(1 for c in s if c != _FREE), s))
    return sets


def solve_safety_filter(u_perf, c: AffineConstraint, box: BoxSet) -> FilterResult:
    """Exact minimizer of ``0.5 ||u - u_perf||^2`` over the box and ``c``.

    The box projection of ``u_perf`` is returned when it satisfies ``c``.
    Otherwise the constraint is taken active and every assignment of the
    coordinates to {free, lower face, upper face} is tried; the best
    feasible candidate wins (ties: fewer active faces, then lexicographic).
    When no candidate is feasible the box vertex maximizing the slack is
    returned with ``mode="clamped_infeasible"``.
    """
    u_perf = np.asarray(u_perf, dtype=float)
    a, b = c.a, c.b
    lo, hi = box.lo, box.hi
    q = len(u_perf)
    if a.shape != (q,) or box.dim != q:
        raise ValueError("dimension mismatch between u_perf, constraint and box")
    if not np.all(hi > lo):
        raise ValueError("input box must be non-degenerate")

    proj = np.clip(u_perf, lo, hi)
    slack = float(a @ proj + b)
    if slack >= 0.0:
        return FilterResult(proj, slack, True, "inactive", 1)

    # rescale so a @ a cannot underflow for tiny coefficients
    mag = max(float(np.max(np.abs(a))), abs(b))
    a, b = a / mag, b / mag
    scale = abs(b) + float(np.abs(a) @ np.maximum(np.abs(lo), np.abs(hi))) + 1.0
    tol = 1e-12 * scale
    best = None
    best_obj = math.inf
    n = 1
    for s in _active_sets(q):
        free = np.array([ci == _FREE for ci in s])
        u = np.where(np.array(s) == _LO, lo, hi).astype(float)
        if free.any():
            af = a[free]
            nrm = float(af @ af)
            if nrm == 0.0:
                continue
            lam = (-b - float(a[~free] @ u[~free]) - float(af @ u_perf[free])) / nrm
            u[free] = u_perf[free] + lam * af
        n += 1
        if np.any(u < lo - tol) or np.any(u > hi + tol):
            continue
        u = np.clip(u, lo, hi)
        if a @ u + b < -tol:
            continue
        obj = 0.5 * float((u - u_perf) @ (u - u_perf))
        if best is None or obj < best_obj - 1e-15 * max(1.0, best_obj):
            best, best_obj = u, obj
    if best is not None:
        return FilterResult(best, c.value(best), True, "active", n)

    u = np.where(a > 0, hi, np.where(a < 0, lo, proj))
    return FilterResult(u, c.value(u), False, "clamped_infeasible", n)


def _grid_axes(box: BoxSet, resolution: float):
    axes = []
    for lo, hi in zip(box.lo, box.hi):
        n = max(1, int(round((hi - lo) / resolution)))
        axes.append((lo, (hi - lo) / n, n))
    return axes


def _grid_oracle_dense(u_perf, c: AffineConstraint, box: BoxSet, resolution: float) -> np.ndarray:
    axes = _grid_axes(box, resolution)
    grids = np.meshgrid(*[lo + h * np.arange(n + 1) for lo, h, n in axes], indexing="ij")
    pts = np.stack([g.reshape(-1) for g in grids], axis=1)
    slack = pts @ c.a + c.b
    feas = slack >= 0.0
    if not feas.any():
        return pts[int(np.argmax(slack))]
    obj = 0.5 * np.sum((pts - u_perf) ** 2, axis=1)
    obj[~feas] = np.inf
    return pts[int(np.argmin(obj))]


def grid_oracle(u_perf, c: AffineConstraint, box: BoxSet, resolution: float) -> np.ndarray:
    """Brute-force minimizer over a grid of spacing ``resolution`` (test oracle).

    For two inputs the second coordinate is solved per column of the first:
    the feasible grid indices form an interval, and the convex objective is
    minimized by the feasible index closest to ``u_perf``.  This is
    equivalent to exhaustive search and keeps fine grids cheap.  Other input
    dimensions use plain enumeration.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    u_perf = np.asarray(u_perf, dtype=float)
    if len(u_perf) != 2:
        return _grid_oracle_dense(u_perf, c, box, resolution)
    (lo1, h1, n1), (lo2, h2, n2) = _grid_axes(box, resolution)
    a1, a2 = c.a
    b = c.b
    u1 = lo1 + h1 * np.arange(n1 + 1)

    def feasible(u1v, j):
        return a1 * u1v + a2 * (lo2 + h2 * j) + b >= 0.0

    if a2 == 0.0:
        ok = a1 * u1 + b >= 0.0
        jlo = np.where(ok, 0, n2 + 1)
        jhi = np.full(u1.shape, n2)
    else:
        thresh = (-b - a1 * u1) / a2
        edge = (thresh - lo2) / h2
        if a2 > 0:
            j = np.ceil(edge).astype(np.int64)
            j = np.clip(j, 0, n2 + 1)
            # snap the edge onto the float feasibility predicate
            j = np.where((j <= n2) & ~feasible(u1, j), j + 1, j)
            j = np.where((j > 0) & feasible(u1, j - 1), j - 1, j)
            jlo, jhi = j, np.full(u1.shape, n2)
        else:
            j = np.floor(edge).astype(np.int64)
            j = np.clip(j, -1, n2)
            j = np.where((j >= 0) & ~feasible(u1, j), j - 1, j)
            j = np.where((j < n2) & feasible(u1, j + 1), j + 1, j)
            jlo, jhi = np.zeros(u1.shape, dtype=np.int64), j
    ok = jlo <= jhi
    if not ok.any():
        return _grid_infeasible(c, u1, lo2, h2, n2)
    target = np.rint((u_perf[1] - lo2) / h2)
    j = np.clip(target, jlo, jhi).astype(np.int64)
    u2 = lo2 + h2 * j
    obj = 0.5 * ((u1 - u_perf[0]) ** 2 + (u2 - u_perf[1]) ** 2)
    obj[~ok] = np.inf
    i = int(np.argmin(obj))
    return np.array([u1[i], u2[i]])


def _grid_infeasible(c, u1, lo2, h2, n2):
    a1, a2 = c.a
    u2 = lo2 + h2 * (n2 if a2 > 0 else 0)
    slack = a1 * u1 + a2 * u2 + c.b
    i = int(np.argmax(slack))
    return np.array([u1[i], u2])
