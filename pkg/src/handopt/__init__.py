"""Design and policy co-optimization for planar multi-finger hands.

Subpackages: design (genome + genetic operators), objects/hand/env (simulator),
policy/training (gradient-free policy search), evolution (elite-pool search
with interpolation transfer), evaluation (disturbance-AUC metric), config/cli
(run plumbing).
"""

from .design import (
    DESIGN_V3,
    DESIGN_V5,
    DESIGN_V6,
    DESIGN_V7,
    DesignBounds,
    DesignParams,
    clamp,
    crossover,
    default_bounds,
    interp_path,
    interp_step,
    mutate,
    normalized_distance,
)
from .env import EpisodeConfig, PhysicsConfig, SimState, Simulator, episode_config
from .evaluation import EvalReport, auc_metric, evaluate_design, success_rate, trapezoid_auc
from .evolution import (
    EvolutionConfig,
    Pool,
    PoolEntry,
    SimTrainer,
    co_optimize,
    init_pool,
    nearest_source,
    propose_candidate,
    transfer_policy,
)
from .hand import HandModel, build_hand
from .objects import ObjectSpec, all_instances, make_object, parse_instance, signed_distance
from .policy import PolicyParams, act, fresh_policy, zero_policy
from .training import (
    EsConfig,
    TrainReport,
    estimate_return,
    evolve_params,
    rollout,
    train,
)

__version__ = "0.1.0"
