"""Doubly robust high-order control barrier functions for sampled-data systems."""
from ._backend import BACKEND
from .barrier import (BarrierChain, ClassK, IntegratorObstacleChain, LieBundle, ObstacleSpec,
                      UnicycleObstacleChain, eval_fd, eval_fv, eval_h, eval_psi, lie_derivatives, make_chain)
from .dynamics import (BoxSet, ControlAffineSystem, DimensionError, UncertaintyModel, apply_measurement,
                       eval_dynamics, rk4_zoh_step, single_integrator, unicycle)
from .filter import AffineConstraint, FilterResult, build_constraint, grid_oracle, solve_safety_filter
from .harness import (ConfigError, Scenario, SummaryStats, Trajectory, load_config, margin_sweep, monte_carlo,
                      perf_controller, run_episode)
from .margins import (LipschitzEstimates, MarginSpec, disturbance_margin, estimate_constants,
                      lipschitz_margin_ct, lipschitz_margin_sd, reach_margin_bound, state_deviation_bound)
from .reach import ReachBox, hull, reach_step, reach_tube

__version__ = "0.1.0"
