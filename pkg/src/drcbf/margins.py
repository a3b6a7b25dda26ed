"""Robustness margins subtracted from the nominal barrier constraint.

* Lipschitz margins for continuous time and for sampled data, built from
  sampled Lipschitz constants of the chain's Lie derivatives;
* the worst-case state deviation over one sampling period;
* the disturbance margin;
* the reachability margin: an interval lower bound of
  ``f_v(y, u) - f_v(x_hat, u) + f_d(y, d)`` over a reach tube.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from ._backend import kernels
from .barrier import BarrierChain, UnicycleObstacleChain
from .dynamics import BoxSet, ControlAffineSystem, UncertaintyModel

MARGIN_METHODS = ("lipschitz_ct", "lipschitz_sd", "reach")


@dataclass(frozen=True)
class LipschitzEstimates:
    """Sampled constants on a domain; see :func:`estimate_constants`."""

    l_Lf: float
    l_Lg: float
    l_alpha: float
    l_Lp: float
    Delta: float
    p_norm_sup: float
    Lp_h_sup: float
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("l_Lf", "l_Lg", "l_alpha", "l_Lp", "Delta", "p_norm_sup", "Lp_h_sup"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "LipschitzEstimates":
        return cls(**data)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "LipschitzEstimates":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True, eq=False)
class MarginSpec:
    estimates: Optional[LipschitzEstimates]
    T: float
    uncertainty: UncertaintyModel
    method: str = "reach"
    input_box: Optional[BoxSet] = None

    def __post_init__(self):
        if self.T < 0:
            raise ValueError("sampling period must be nonnegative")
        if self.method not in MARGIN_METHODS:
            raise ValueError(f"unknown margin method {self.method!r}")

    @property
    def u_max(self) -> float:
        if self.input_box is None:
            raise ValueError("MarginSpec has no input box")
        return self.input_box.max_corner_norm()


def _estimates(spec: MarginSpec) -> LipschitzEstimates:
    if spec.estimates is None:
        raise ValueError("Lipschitz margins need MarginSpec.estimates")
    return spec.estimates


def state_deviation_bound(spec: MarginSpec) -> float:
    """Bound on ``||x(t) - x_hat_k||`` over one period: ``eps + T (Delta + sup||p|| gamma)``."""
    est = _estimates(spec)
    unc = spec.uncertainty
    return unc.epsilon + spec.T * (est.Delta + est.p_norm_sup * unc.gamma)


def lipschitz_margin_ct(spec: MarginSpec, u_norm: float) -> float:
    if u_norm < 0:
        raise ValueError("u_norm must be nonnegative")
    est = _estimates(spec)
    eps = spec.uncertainty.epsilon
    return eps * (est.l_Lf + est.l_alpha) + eps * est.l_Lg * u_norm


def lipschitz_margin_sd(spec: MarginSpec, u_norm: float) -> float:
    if u_norm < 0:
        raise ValueError("u_norm must be nonnegative")
    est = _estimates(spec)
    return (est.l_Lf + est.l_Lg * u_norm + est.l_alpha) * state_deviation_bound(spec)


def disturbance_margin(chain: BarrierChain, x, gamma: float) -> float:
    """Worst-case loss ``-inf_{||d|| <= gamma} f_d(x, d)`` bounded via norms.

    For a matched chain this is ``||L_p psi_{m-1}(x)|| gamma``.  A mismatched
    chain also carries the derivatives of the disturbance term inside
    ``psi_{m-1}``; they enter through ``dist_linear`` and ``dist_quad``.
    """
    if gamma == 0:
        return 0.0
    lb = chain.lie(np.asarray(x, dtype=float))
    q = 0.5 * (lb.dist_quad + lb.dist_quad.T)
    quad = max(0.0, -float(np.linalg.eigvalsh(q)[0])) * gamma * gamma
    outer = chain.outer
    if chain.mismatched and not outer.is_linear:
        r = float(np.linalg.norm(lb.dist_direct)) * gamma
        lin = float(np.linalg.norm(lb.Lp_psi + lb.Lf_Lph)) * gamma
        curv = float(outer.deriv(abs(lb.psi_prev) + r)) * r
        return lin + quad + curv
    return float(np.linalg.norm(lb.dist_linear)) * gamma + quad


# -- constant estimation --------------------------------------------------------


def lipschitz_estimate(fn: Callable[[np.ndarray], np.ndarray], domain: BoxSet, samples: int,
                       rng: np.random.Generator, local_radius: float = 0.5) -> float:
    """Largest difference quotient ``||fn(a) - fn(b)|| / ||a - b||`` over
    ``samples`` random pairs.

    Half the pairs are independent uniform draws.  The other half pair a
    uniform point with a neighbour drawn uniformly from the Euclidean ball of
    radius ``local_radius`` (clipped to the domain), which probes the local
    slope in every direction with equal weight.
    """
    if samples < 2:
        raise ValueError("need at least 2 samples")
    if not np.any(domain.width > 0):
        raise ValueError("degenerate domain")
    n_far = samples // 2
    n_loc = samples - n_far
    dim = domain.dim
    a = domain.sample(rng, samples)
    b = np.empty_like(a)
    b[:n_far] = domain.sample(rng, n_far)
    step = rng.standard_normal((n_loc, dim))
    step /= np.linalg.norm(step, axis=1, keepdims=True)
    step *= local_radius * rng.uniform(0.0, 1.0, (n_loc, 1)) ** (1.0 / dim)
    b[n_far:] = domain.clip(a[n_far:] + step)
    best = 0.0
    for xa, xb in zip(a, b):
        dist = float(np.linalg.norm(xa - xb))
        if dist == 0.0:
            continue
        diff = np.atleast_1d(np.asarray(fn(xa), dtype=float) - np.asarray(fn(xb), dtype=float))
        best = max(best, float(np.linalg.norm(diff)) / dist)
    return best


def estimate_constants(sys: ControlAffineSystem, chain: BarrierChain, domain: BoxSet, input_box: BoxSet,
                       samples: int = 4000, safety_factor: float = 1.2, seed: int = 0) -> LipschitzEstimates:
    """Sampled Lipschitz constants of the chain's Lie derivatives on ``domain``.

    Lipschitz constants are ``safety_factor`` times the largest sampled
    difference quotient; ``Delta``, ``sup ||p||`` and ``sup ||L_p h||`` are
    plain maxima over the samples (``Delta`` over all input-box corners).
    """
    if samples < 2:
        raise ValueError("need at least 2 samples")
    if safety_factor < 1:
        raise ValueError("safety_factor must be >= 1")
    if domain.dim != sys.state_dim or not np.any(domain.width > 0):
        raise ValueError("domain must be a non-degenerate box over the state space")
    rng = np.random.default_rng(seed)

    def lie(x):
        return chain.lie(x)

    l_Lf = lipschitz_estimate(lambda x: lie(x).Lf_psi, domain, samples, rng)
    l_Lg = lipschitz_estimate(lambda x: lie(x).Lg_psi, domain, samples, rng)
    l_alpha = lipschitz_estimate(lambda x: lie(x).alpha_psi, domain, samples, rng)
    l_Lp = lipschitz_estimate(lambda x: lie(x).Lp_psi, domain, samples, rng)

    xs = domain.sample(rng, samples)
    corners = input_box.corners()
    drift = sys.f(xs)
    gu = np.einsum("nij,kj->nki", np.asarray(sys.g(xs)), corners)
    Delta = float(np.max(np.linalg.norm(drift[:, None, :] + gu, axis=-1)))
    p_norm_sup = float(max(np.linalg.norm(P, 2) for P in np.asarray(sys.p(xs))))
    Lp_h_sup = float(max(np.linalg.norm(chain_lp_h(chain, x)) for x in xs))

    sf = safety_factor
    return LipschitzEstimates(
        l_Lf=sf * l_Lf,
        l_Lg=sf * l_Lg,
        l_alpha=sf * l_alpha,
        l_Lp=sf * l_Lp,
        Delta=Delta,
        p_norm_sup=p_norm_sup,
        Lp_h_sup=Lp_h_sup,
        meta={
            "system": sys.name,
            "samples": samples,
            "safety_factor": safety_factor,
            "seed": seed,
            "domain_lo": domain.lo.tolist(),
            "domain_hi": domain.hi.tolist(),
        },
    )


def chain_lp_h(chain: BarrierChain, x) -> np.ndarray:
    """``L_p h`` for the distance barrier; both built-in systems disturb the position."""
    ob = chain.obstacle
    return np.array([2.0 * (x[0] - ob.x_o), 2.0 * (x[1] - ob.y_o)])


# -- reachability margin ------------------------------------------------------------


def _kernel_applicable(chain: BarrierChain) -> bool:
    return isinstance(chain, UnicycleObstacleChain) and all(a.is_linear for a in chain.alphas)


def reach_margin_bound(chain: BarrierChain, tube: BoxSet, x_hat, input_box: BoxSet, dist_box: BoxSet,
                       use_kernel: bool = True) -> float:
    """Interval lower bound of the worst-case margin (a value <= 0 whenever
    ``x_hat`` lies in the tube and the disturbance box contains 0).

    The constraint offset becomes ``b_vanilla + reach_margin_bound(...)``.
    """
    x_hat = np.asarray(x_hat, dtype=float)
    if use_kernel and _kernel_applicable(chain):
        ob = chain.obstacle
        return kernels.unicycle_margin(
            tuple(tube.lo), tuple(tube.hi), tuple(x_hat),
            tuple(input_box.lo), tuple(input_box.hi),
            tuple(dist_box.lo), tuple(dist_box.hi),
            ob.x_o, ob.y_o, ob.D, chain.alphas[0].p, chain.alphas[1].p,
        )
    total = chain.fv0_range(tube.lo, tube.hi).lo - chain.fv0_range(x_hat, x_hat).lo
    g_box = chain.lg_ranges(tube.lo, tube.hi)
    g_pt = chain.lg_ranges(x_hat, x_hat)
    from .interval import Interval

    for gb, gp, ulo, uhi in zip(g_box, g_pt, input_box.lo, input_box.hi):
        total += ((gb - gp.lo) * Interval(ulo, uhi)).lo
    total += chain.fd_range(tube.lo, tube.hi, dist_box.lo, dist_box.hi).lo
    return total


def margin_grid_min(chain: BarrierChain, tube: BoxSet, x_hat, input_box: BoxSet, dist_box: BoxSet,
                    state_points: int = 5, dist_points: int = 5) -> float:
    """Brute-force minimum of the margin over a grid (test oracle).

    The margin is affine in ``u`` so inputs are enumerated at the box corners.
    """
    x_hat = np.asarray(x_hat, dtype=float)
    axes = [np.linspace(a, b, state_points) if b > a else np.array([a]) for a, b in zip(tube.lo, tube.hi)]
    daxes = [np.linspace(a, b, dist_points) if b > a else np.array([a]) for a, b in zip(dist_box.lo, dist_box.hi)]
    corners = input_box.corners()
    fv_hat = [chain.fv(x_hat, u) for u in corners]
    best = np.inf
    for y in itertools.product(*axes):
        y = np.array(y)
        fd_min = min(chain.fd(y, np.array(d)) for d in itertools.product(*daxes))
        diff = min(chain.fv(y, u) - fh for u, fh in zip(corners, fv_hat))
        best = min(best, diff + fd_min)
    return float(best)
