"""Scenario configuration, closed-loop episodes, Monte Carlo studies and output writers."""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from ._backend import kernels
from .barrier import BarrierChain, ClassK, ObstacleSpec, make_chain
from .dynamics import SYSTEMS, BoxSet, ControlAffineSystem, UncertaintyModel, rk4_zoh_step, wrap_angle
from .filter import AffineConstraint, build_constraint, solve_safety_filter
from .margins import LipschitzEstimates, MarginSpec, estimate_constants, reach_margin_bound
from .reach import propagate

FILTER_KINDS = ("none", "vanilla", "ct", "sd", "reach")
CONTROLLER_KINDS = ("goal_p",)
DATA_DIR = Path(__file__).resolve().parent / "data"
DEFAULT_CONFIG = DATA_DIR / "paper.toml"

CSV_COLUMNS = (
    "t", "x", "y", "theta", "v", "xhat", "yhat", "u1", "u2", "h", "psi1", "slack", "mode",
    "box_xlo", "box_xhi", "box_ylo", "box_yhi", "box_thetalo", "box_thetahi", "box_vlo", "box_vhi",
    "uperf1", "uperf2", "a1", "a2", "b", "min_h_step",
)


class ConfigError(ValueError):
    """Malformed or inconsistent scenario configuration."""


@dataclass(frozen=True)
class ControllerGains:
    k_theta: float = 2.0
    k_v: float = 1.0
    v_max: float = 2.0
    k_d: float = 0.5


@dataclass(frozen=True, eq=False)
class Scenario:
    """Everything needed to run one closed-loop episode."""

    system: str
    obstacle: ObstacleSpec
    start: np.ndarray
    goal: np.ndarray
    input_box: BoxSet
    uncertainty: UncertaintyModel
    T: float = 0.1
    horizon: float = 25.0
    controller: str = "goal_p"
    gains: ControllerGains = ControllerGains()
    filter: str = "reach"
    seed: int = 0
    alphas: tuple = (ClassK(), ClassK())
    estimates: Optional[LipschitzEstimates] = None
    reach_substeps: int = 10
    reach_mode: str = "tube"
    dist_draws: int = 1
    integrator_substeps: int = 1
    check_points: int = 10
    sweep_step: float = 0.01
    sweep_times: tuple = tuple(round(0.01 * i, 2) for i in range(1, 11))

    def __post_init__(self):
        object.__setattr__(self, "start", np.asarray(self.start, dtype=float))
        object.__setattr__(self, "goal", np.asarray(self.goal, dtype=float))
        object.__setattr__(self, "alphas", tuple(self.alphas))
        if self.system not in SYSTEMS:
            raise ConfigError(f"unknown system {self.system!r}")
        if self.filter not in FILTER_KINDS:
            raise ConfigError(f"unknown filter {self.filter!r}; choose from {FILTER_KINDS}")
        if self.controller not in CONTROLLER_KINDS:
            raise ConfigError(f"unknown controller {self.controller!r}")
        if self.T <= 0 or self.horizon <= 0:
            raise ConfigError("T and horizon must be positive")
        n = self.horizon / self.T
        if abs(n - round(n)) > 1e-9 * max(1.0, n):
            raise ConfigError("horizon must be a multiple of T")
        sys = self.make_system()
        if self.start.shape != (sys.state_dim,) or self.input_box.dim != sys.input_dim:
            raise ConfigError("start/input box dimensions do not match the system")
        if self.uncertainty.meas_box.dim != sys.state_dim or self.uncertainty.dist_box.dim != sys.dist_dim:
            raise ConfigError("uncertainty box dimensions do not match the system")
        if self.goal.shape != (2,):
            raise ConfigError("goal must be an (x, y) pair")
        if self.make_chain().h(self.start) <= 0:
            raise ConfigError("start state must lie strictly outside the obstacle")
        for name in ("reach_substeps", "dist_draws", "integrator_substeps", "check_points"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.check_points % self.dist_draws:
            raise ConfigError("check_points must be a multiple of dist_draws")
        if self.reach_mode not in ("tube", "endpoint"):
            raise ConfigError(f"unknown reach mode {self.reach_mode!r}")
        if self.filter in ("ct", "sd") and self.estimates is None:
            raise ConfigError(f"filter {self.filter!r} needs Lipschitz estimates")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.T))

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)

    def make_system(self) -> ControlAffineSystem:
        return SYSTEMS[self.system]()

    def make_chain(self) -> BarrierChain:
        return make_chain(self.system, self.obstacle, self.alphas)

    def margin_spec(self) -> MarginSpec:
        method = {"ct": "lipschitz_ct", "sd": "lipschitz_sd"}.get(self.filter, "reach")
        return MarginSpec(self.estimates, self.T, self.uncertainty, method, self.input_box)


# -- configuration ------------------------------------------------------------------

_SCHEMA = {
    "scenario": {"system", "start", "goal", "T", "horizon", "filter", "seed"},
    "obstacle": {"center", "D"},
    "inputs": {"lo", "hi"},
    "uncertainty": {"dist_lo", "dist_hi", "meas_lo", "meas_hi", "gamma", "epsilon", "dist_draws"},
    "barrier": {"form", "p", "q"},
    "controller": {"kind", "k_theta", "k_v", "v_max", "k_d"},
    "reach": {"n_sub", "mode", "sweep_step", "sweep_times"},
    "constants": {"file", "domain_lo", "domain_hi", "samples", "safety_factor", "seed"},
    "simulation": {"integrator_substeps", "check_points"},
}


def _check_schema(cfg: dict) -> None:
    for section, body in cfg.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        if not isinstance(body, dict):
            raise ConfigError(f"[{section}] must be a table")
        extra = set(body) - _SCHEMA[section]
        if extra:
            raise ConfigError(f"unknown keys in [{section}]: {sorted(extra)}")


def _constants_domain(cfg: dict, sys: ControlAffineSystem) -> BoxSet:
    c = cfg.get("constants", {})
    if "domain_lo" in c and "domain_hi" in c:
        return BoxSet(c["domain_lo"], c["domain_hi"])
    if sys.name == "unicycle":
        return BoxSet([0.0, 0.0, -math.pi, -0.5], [50.0, 50.0, math.pi, 2.5])
    return BoxSet([0.0, 0.0], [50.0, 50.0])


def constants_from_config(cfg: dict, scenario_sys: str, chain: BarrierChain, input_box: BoxSet,
                          base_dir: Path) -> LipschitzEstimates:
    """Load the constants sidecar, or estimate the constants when it is absent."""
    c = cfg.get("constants", {})
    fname = c.get("file")
    if fname:
        path = Path(fname)
        if not path.is_absolute():
            path = base_dir / path
        if not path.exists() and (DATA_DIR / fname).exists():
            path = DATA_DIR / fname
        if path.exists():
            return LipschitzEstimates.load(path)
    sys = SYSTEMS[scenario_sys]()
    return estimate_constants(
        sys, chain, _constants_domain(cfg, sys), input_box,
        samples=int(c.get("samples", 4000)),
        safety_factor=float(c.get("safety_factor", 1.2)),
        seed=int(c.get("seed", 0)),
    )


def scenario_from_dict(cfg: dict, base_dir: Path = DATA_DIR) -> Scenario:
    """Build a :class:`Scenario` from a parsed config table."""
    _check_schema(cfg)
    try:
        sc = cfg.get("scenario", {})
        ob = cfg.get("obstacle", {})
        inp = cfg.get("inputs", {})
        unc = cfg.get("uncertainty", {})
        bar = cfg.get("barrier", {})
        ctl = cfg.get("controller", {})
        rch = cfg.get("reach", {})
        sim = cfg.get("simulation", {})
        system = sc.get("system", "unicycle")
        obstacle = ObstacleSpec(float(ob["center"][0]), float(ob["center"][1]), float(ob["D"]))
        input_box = BoxSet(inp["lo"], inp["hi"])
        uncertainty = UncertaintyModel(
            BoxSet(unc["dist_lo"], unc["dist_hi"]),
            BoxSet(unc["meas_lo"], unc["meas_hi"]),
            unc.get("gamma"),
            unc.get("epsilon"),
        )
        ps = bar.get("p", [1.0, 1.0] if system == "unicycle" else [1.0])
        qs = bar.get("q", [1.0] * len(ps))
        form = bar.get("form", "linear")
        alphas = tuple(ClassK(form, float(p), float(q)) for p, q in zip(ps, qs))
        gains = ControllerGains(**{k: float(v) for k, v in ctl.items() if k != "kind"})
        chain = make_chain(system, obstacle, alphas)
        filt = sc.get("filter", "reach")
        estimates = None
        if "constants" in cfg or filt in ("ct", "sd"):
            estimates = constants_from_config(cfg, system, chain, input_box, base_dir)
        kwargs = dict(
            system=system,
            obstacle=obstacle,
            start=sc["start"],
            goal=sc["goal"],
            input_box=input_box,
            uncertainty=uncertainty,
            T=float(sc.get("T", 0.1)),
            horizon=float(sc.get("horizon", 25.0)),
            controller=ctl.get("kind", "goal_p"),
            gains=gains,
            filter=filt,
            seed=int(sc.get("seed", 0)),
            alphas=alphas,
            estimates=estimates,
            reach_substeps=int(rch.get("n_sub", 10)),
            reach_mode=rch.get("mode", "tube"),
            dist_draws=int(unc.get("dist_draws", 1)),
            integrator_substeps=int(sim.get("integrator_substeps", 1)),
            check_points=int(sim.get("check_points", 10)),
            sweep_step=float(rch.get("sweep_step", 0.01)),
        )
        if "sweep_times" in rch:
            kwargs["sweep_times"] = tuple(float(t) for t in rch["sweep_times"])
        return Scenario(**kwargs)
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"invalid config: {exc!r}") from exc


def load_config(path=None) -> Scenario:
    """Parse a TOML scenario file (the bundled scenario when ``path`` is None)."""
    path = Path(path) if path is not None else DEFAULT_CONFIG
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return scenario_from_dict(cfg, path.parent)


# -- controller --------------------------------------------------------------------


def perf_controller(estimate, goal, input_box: BoxSet, gains: ControllerGains = ControllerGains()) -> np.ndarray:
    """Goal-seeking proportional law: steer toward the goal, track a speed
    reference that slows down near it; clipped to the input box."""
    est = np.asarray(estimate, dtype=float)
    dx = goal[0] - est[0]
    dy = goal[1] - est[1]
    if len(est) == 2:
        # single integrator: velocity command toward the goal
        return input_box.clip(np.array([dx, dy]) * gains.k_d)
    dist = math.hypot(dx, dy)
    heading_err = wrap_angle(math.atan2(dy, dx) - est[2]) if dist > 0 else 0.0
    v_ref = min(gains.v_max, gains.k_d * dist)
    u = np.array([gains.k_theta * heading_err, gains.k_v * (v_ref - est[3])])
    return input_box.clip(u)


# -- episodes ----------------------------------------------------------------------


@dataclass(eq=False)
class Trajectory:
    """Per-step records of one episode; row ``k`` is time ``k T``.

    The final row is the terminal state: its inputs, constraint and
    reach-box fields are NaN and its mode is ``terminal``.
    """

    seed: int
    filter: str
    t: np.ndarray
    x: np.ndarray
    xhat: np.ndarray
    u_perf: np.ndarray
    u: np.ndarray
    h: np.ndarray
    psi1: np.ndarray
    slack: np.ndarray
    mode: List[str]
    box_lo: np.ndarray
    box_hi: np.ndarray
    a: np.ndarray
    b: np.ndarray
    min_h_step: np.ndarray
    tube_violations: int = 0
    dense_points: int = 0

    @property
    def n_records(self) -> int:
        return len(self.t)

    @property
    def min_h(self) -> float:
        return float(min(np.nanmin(self.min_h_step), np.min(self.h)))

    def mode_counts(self) -> dict:
        counts = {}
        for m in self.mode:
            counts[m] = counts.get(m, 0) + 1
        return counts

    @property
    def infeasible_steps(self) -> int:
        return sum(1 for m in self.mode if m == "clamped_infeasible")

    def distance_to(self, goal) -> np.ndarray:
        return np.hypot(self.x[:, 0] - goal[0], self.x[:, 1] - goal[1])


def _dense_states(sys: ControlAffineSystem, x, u, d_pieces, T: float, points: int) -> np.ndarray:
    # states at t_k + j T / points, j = 1..points
    per_piece = points // len(d_pieces)
    h = T / points
    out = np.empty((points, len(x)))
    cur = x
    for j in range(points):
        d = d_pieces[j // per_piece]
        if sys.name == "unicycle":
            cur = np.array(kernels.unicycle_rk4(tuple(cur), tuple(u), tuple(d), h, 1))
        else:
            cur = rk4_zoh_step(sys, cur, u, d, h, 1)
        out[j] = cur
    return out


def _advance(sys: ControlAffineSystem, x, u, d_pieces, T: float, substeps: int) -> np.ndarray:
    piece = T / len(d_pieces)
    for d in d_pieces:
        if sys.name == "unicycle":
            x = np.array(kernels.unicycle_rk4(tuple(x), tuple(u), tuple(d), piece, substeps))
        else:
            x = rk4_zoh_step(sys, x, u, d, piece, substeps)
    return x


def run_episode(scenario: Scenario, seed: Optional[int] = None) -> Trajectory:
    """Simulate the sampled-data closed loop for ``scenario.horizon`` seconds.

    Each period: draw a measurement error and form the estimate, compute the
    performance input, build the reach tube from the estimate over every
    admissible input, build the barrier constraint of the configured kind,
    filter the input, draw the disturbance and integrate the true state.
    A dense check of ``check_points`` states per period records the minimum
    barrier value and whether the motion stayed inside the logged tube.
    """
    seed = scenario.seed if seed is None else int(seed)
    rng = np.random.default_rng(seed)
    sys = scenario.make_system()
    chain = scenario.make_chain()
    spec = scenario.margin_spec()
    unc = scenario.uncertainty
    ibox = scenario.input_box
    N = scenario.n_steps
    n, q = sys.state_dim, sys.input_dim
    nan = float("nan")

    t = np.arange(N + 1) * scenario.T
    X = np.empty((N + 1, n))
    XH = np.full((N + 1, n), nan)
    UP = np.full((N + 1, q), nan)
    U = np.full((N + 1, q), nan)
    H = np.empty(N + 1)
    PSI = np.empty(N + 1)
    SL = np.full(N + 1, nan)
    A = np.full((N + 1, q), nan)
    B = np.full(N + 1, nan)
    BLO = np.full((N + 1, n), nan)
    BHI = np.full((N + 1, n), nan)
    MINH = np.full(N + 1, nan)
    modes: List[str] = []
    violations = 0
    dense_total = 0

    x = scenario.start.copy()
    for k in range(N + 1):
        X[k] = x
        H[k] = chain.h(x)
        PSI[k] = chain.psi(x)[1]
        xh = x + unc.meas_box.sample(rng)
        XH[k] = xh
        if k == N:
            modes.append("terminal")
            break
        u_perf = perf_controller(xh, scenario.goal, ibox, scenario.gains)
        end, tube = propagate(sys, xh, unc.meas_box, ibox, unc.dist_box, scenario.T, scenario.reach_substeps)
        box = tube if scenario.reach_mode == "tube" else end
        if scenario.filter == "none":
            a, b = chain.vanilla(xh)
            c = AffineConstraint(a, b)
            u = u_perf
            slack = c.value(u)
            mode = "inactive" if slack >= 0 else "unfiltered"
        else:
            kind = "vanilla" if scenario.filter == "vanilla" else scenario.filter + "_robust"
            c = build_constraint(kind, chain, spec, xh, box if kind == "reach_robust" else None)
            res = solve_safety_filter(u_perf, c, ibox)
            u, slack, mode = res.u_safe, res.slack, res.mode
        d_pieces = unc.dist_box.sample(rng, scenario.dist_draws)
        dense = _dense_states(sys, x, u, d_pieces, scenario.T, scenario.check_points)
        x_next = _advance(sys, x, u, d_pieces, scenario.T, scenario.integrator_substeps)
        tol = 1e-9 * (1.0 + np.abs(tube.hi) + np.abs(tube.lo))
        pts = np.vstack([dense, x_next])
        outside = np.any((pts < tube.lo - tol) | (pts > tube.hi + tol), axis=1)
        violations += int(np.count_nonzero(outside))
        dense_total += len(pts)

        UP[k], U[k], SL[k], A[k], B[k] = u_perf, u, slack, c.a, c.b
        BLO[k], BHI[k] = box.lo, box.hi
        MINH[k] = min(H[k], min(chain.h(z) for z in dense))
        modes.append(mode)
        x = x_next
    MINH[N] = H[N]

    return Trajectory(seed, scenario.filter, t, X, XH, UP, U, H, PSI, SL, modes, BLO, BHI, A, B, MINH,
                      violations, dense_total)


# -- Monte Carlo -------------------------------------------------------------------


def episode_seeds(seed: int, n_runs: int) -> np.ndarray:
    """Independent per-episode seeds derived from one master seed."""
    return np.random.SeedSequence(seed).generate_state(n_runs, dtype=np.uint32).astype(np.int64)


@dataclass(frozen=True)
class EpisodeSummary:
    seed: int
    min_h: float
    start_dist: float
    final_dist: float
    infeasible_steps: int
    tube_violations: int
    dense_points: int
    mode_counts: dict = field(default_factory=dict)


def summarize(traj: Trajectory, goal) -> EpisodeSummary:
    dist = traj.distance_to(goal)
    return EpisodeSummary(traj.seed, traj.min_h, float(dist[0]), float(dist[-1]), traj.infeasible_steps,
                          traj.tube_violations, traj.dense_points, traj.mode_counts())


def _run_summary(args) -> EpisodeSummary:
    scenario, seed = args
    return summarize(run_episode(scenario, seed), scenario.goal)


@dataclass(frozen=True, eq=False)
class SummaryStats:
    filter: str
    episodes: tuple

    @property
    def min_h(self) -> np.ndarray:
        return np.array([e.min_h for e in self.episodes])

    @property
    def collisions(self) -> int:
        return int(np.count_nonzero(self.min_h < 0))

    @property
    def infeasible_steps(self) -> int:
        return sum(e.infeasible_steps for e in self.episodes)

    @property
    def tube_violations(self) -> int:
        return sum(e.tube_violations for e in self.episodes)

    def to_dict(self) -> dict:
        mh = self.min_h
        return {
            "filter": self.filter,
            "runs": len(self.episodes),
            "min": float(mh.min()),
            "max": float(mh.max()),
            "mean": float(mh.mean()),
            "collisions": self.collisions,
            "infeasible_steps": self.infeasible_steps,
            "tube_violations": self.tube_violations,
            "dense_points": sum(e.dense_points for e in self.episodes),
            "closer_to_goal": sum(1 for e in self.episodes if e.final_dist < e.start_dist),
        }


def monte_carlo(scenario: Scenario, n_runs: int, workers: int = 1) -> SummaryStats:
    """Run ``n_runs`` independent episodes and aggregate per-episode minima of ``h``."""
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    jobs = [(scenario, int(s)) for s in episode_seeds(scenario.seed, n_runs)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            episodes = list(pool.map(_run_summary, jobs, chunksize=max(1, n_runs // (4 * workers))))
    else:
        episodes = [_run_summary(j) for j in jobs]
    return SummaryStats(scenario.filter, tuple(episodes))


def margin_sweep(scenario: Scenario, t_list: Optional[Sequence[float]] = None) -> List[tuple]:
    """Reach margin at the start state for each horizon in ``t_list``.

    All tubes use the same sub-step length ``scenario.sweep_step``, so a
    longer horizon extends the shorter one and the margins are nested.
    """
    t_list = list(scenario.sweep_times if t_list is None else t_list)
    if not t_list or any(t <= 0 for t in t_list) or any(b < a for a, b in zip(t_list, t_list[1:])):
        raise ValueError("t_list must be positive and ascending")
    sys = scenario.make_system()
    chain = scenario.make_chain()
    unc = scenario.uncertainty
    x0 = scenario.start
    rows = []
    for t in t_list:
        n_sub = max(1, int(math.ceil(t / scenario.sweep_step - 1e-9)))
        end, tube = propagate(sys, x0, unc.meas_box, scenario.input_box, unc.dist_box, t, n_sub)
        box = tube if scenario.reach_mode == "tube" else end
        rows.append((float(t), reach_margin_bound(chain, box, x0, scenario.input_box, unc.dist_box)))
    return rows


# -- writers -----------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    return format(float(v), ".9g")


def trajectory_rows(traj: Trajectory) -> Iterable[list]:
    for k in range(traj.n_records):
        x = traj.x[k]
        xh = traj.xhat[k]
        box = []
        for lo, hi in zip(traj.box_lo[k], traj.box_hi[k]):
            box += [lo, hi]
        row = [traj.t[k], *x, xh[0], xh[1], *traj.u[k], traj.h[k], traj.psi1[k], traj.slack[k], traj.mode[k],
               *box, *traj.u_perf[k], *traj.a[k], traj.b[k], traj.min_h_step[k]]
        yield [_fmt(v) for v in row]


def trajectory_csv(traj: Trajectory) -> str:
    if traj.x.shape[1] != 4:
        raise ValueError("the trajectory CSV layout is defined for 4-state systems")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    w.writerows(trajectory_rows(traj))
    return buf.getvalue()


def write_trajectory_csv(traj: Trajectory, path) -> None:
    Path(path).write_text(trajectory_csv(traj))


def write_table_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    Path(path).write_text(buf.getvalue())


def write_json(path, data: dict) -> None:
    Path(path).write_text(json.dumps(data, indent=2) + "\n")


def episode_summary_dict(traj: Trajectory, scenario: Scenario) -> dict:
    dist = traj.distance_to(scenario.goal)
    return {
        "seed": traj.seed,
        "filter": traj.filter,
        "steps": traj.n_records - 1,
        "min_h": traj.min_h,
        "final_h": float(traj.h[-1]),
        "start_distance_to_goal": float(dist[0]),
        "final_distance_to_goal": float(dist[-1]),
        "mode_counts": dict(sorted(traj.mode_counts().items())),
        "infeasible_steps": traj.infeasible_steps,
        "tube_violations": traj.tube_violations,
    }
