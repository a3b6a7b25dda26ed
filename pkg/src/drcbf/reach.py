"""Interval over-approximation of reachable sets and tubes.

Each sub-step of length ``delta`` first finds an a-priori enclosure ``B`` of
the flow, i.e. a box with ``X + [0, delta] * F(B) <= B`` for the interval
field ``F``.  Every trajectory starting in ``X`` then stays in ``B`` over the
sub-step, and the end state lies in ``X + delta * F(B)``.  The tube is the
hull of the enclosures, so it covers the whole period, not only its
endpoint.
"""
from __future__ import annotations

from typing import Sequence, Union

import numpy as np

from ._backend import kernels
from .dynamics import BoxSet, ControlAffineSystem

ReachBox = BoxSet

_MAX_ENCLOSURE_ITERS = 60


def hull(boxes: Sequence[BoxSet]) -> BoxSet:
    """Smallest box containing every box in ``boxes``."""
    boxes = list(boxes)
    if not boxes:
        raise ValueError("hull of an empty list")
    dim = boxes[0].dim
    if any(b.dim != dim for b in boxes):
        raise ValueError("boxes must share a dimension")
    lo = np.min([b.lo for b in boxes], axis=0)
    hi = np.max([b.hi for b in boxes], axis=0)
    return BoxSet(lo, hi)


def _input_bounds(u_k: Union[BoxSet, Sequence[float], np.ndarray]):
    if isinstance(u_k, BoxSet):
        return u_k.lo, u_k.hi
    u = np.asarray(u_k, dtype=float)
    return u, u


def _initial_box(x_hat, meas_box: BoxSet):
    # true state x = x_hat - e with e in meas_box
    x_hat = np.asarray(x_hat, dtype=float)
    return x_hat - meas_box.hi, x_hat - meas_box.lo


def a_priori_enclosure(sys: ControlAffineSystem, lo, hi, ulo, uhi, dlo, dhi, delta: float):
    """Box ``B`` and field bounds ``F(B)`` with ``[lo, hi] + [0, delta] F(B)`` inside ``B``."""
    if sys.interval_field is None:
        raise ValueError(f"system {sys.name!r} has no interval field")
    flo, fhi = sys.interval_field(lo, hi, ulo, uhi, dlo, dhi)
    blo = lo + np.minimum(0.0, delta * flo)
    bhi = hi + np.maximum(0.0, delta * fhi)
    for it in range(_MAX_ENCLOSURE_ITERS):
        flo, fhi = sys.interval_field(blo, bhi, ulo, uhi, dlo, dhi)
        nlo = lo + np.minimum(0.0, delta * flo)
        nhi = hi + np.maximum(0.0, delta * fhi)
        if np.all(nlo >= blo) and np.all(nhi <= bhi):
            return blo, bhi, flo, fhi
        if it < 3:
            blo, bhi = nlo, nhi
        else:
            pad = 0.1 * (np.maximum(bhi, nhi) - np.minimum(blo, nlo)) + 1e-12
            blo = np.minimum(blo, nlo) - pad
            bhi = np.maximum(bhi, nhi) + pad
    raise RuntimeError("a-priori enclosure did not converge; use more sub-steps")


def _propagate_generic(sys, lo, hi, ulo, uhi, dlo, dhi, t, n_sub):
    tlo, thi = lo.copy(), hi.copy()
    delta = t / n_sub
    for _ in range(n_sub):
        blo, bhi, flo, fhi = a_priori_enclosure(sys, lo, hi, ulo, uhi, dlo, dhi, delta)
        tlo = np.minimum(tlo, blo)
        thi = np.maximum(thi, bhi)
        lo = lo + delta * flo
        hi = hi + delta * fhi
    return lo, hi, tlo, thi


def propagate(sys, x_hat, meas_box, u_k, dist_box, t: float, n_sub: int, use_kernel: bool = True):
    """End box at ``t`` and tube over ``[0, t]`` as ``(end, tube)`` boxes."""
    if t < 0:
        raise ValueError("reach time must be nonnegative")
    if n_sub < 1:
        raise ValueError("n_sub must be >= 1")
    lo, hi = _initial_box(x_hat, meas_box)
    if t == 0:
        start = BoxSet(lo, hi)
        return start, start
    ulo, uhi = _input_bounds(u_k)
    if use_kernel and sys.name == "unicycle":
        elo, ehi, tlo, thi = kernels.unicycle_tube(
            tuple(map(float, x_hat)),
            tuple(meas_box.lo), tuple(meas_box.hi),
            tuple(map(float, ulo)), tuple(map(float, uhi)),
            tuple(dist_box.lo), tuple(dist_box.hi),
            float(t), int(n_sub),
        )
        return BoxSet(elo, ehi), BoxSet(tlo, thi)
    elo, ehi, tlo, thi = _propagate_generic(sys, lo, hi, ulo, uhi, dist_box.lo, dist_box.hi, float(t), int(n_sub))
    return BoxSet(elo, ehi), BoxSet(tlo, thi)


def reach_step(sys: ControlAffineSystem, x_hat, meas_box: BoxSet, u_k, dist_box: BoxSet,
               t: float, substeps: int = 10, use_kernel: bool = True) -> BoxSet:
    """Box containing ``x(t)`` for every initial state in ``x_hat - meas_box``,
    every disturbance signal in ``dist_box`` and the held input ``u_k``
    (a vector, or a box to cover every admissible input)."""
    return propagate(sys, x_hat, meas_box, u_k, dist_box, t, substeps, use_kernel)[0]


def reach_tube(sys: ControlAffineSystem, x_hat, meas_box: BoxSet, u_k, dist_box: BoxSet,
               T: float, n_sub: int = 10, mode: str = "tube", use_kernel: bool = True) -> BoxSet:
    """Box containing every state reached over ``[0, T]``.

    ``mode="endpoint"`` returns only the set at ``T``, which is what a
    fixed-time reachability tool reports.
    """
    end, tube = propagate(sys, x_hat, meas_box, u_k, dist_box, T, n_sub, use_kernel)
    if mode == "tube":
        return tube
    if mode == "endpoint":
        return end
    raise ValueError(f"unknown reach mode {mode!r}")
