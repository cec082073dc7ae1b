"""Dual Q-learning UAV navigation: shortest-path planning fused with
cellular-coverage keeping over a deterministic 3D grid world."""

__version__ = "0.1.0"

from .agents import (
    EpisodeLog,
    RewardParams,
    TerminalCause,
    reward_adaptive,
    reward_strategic,
    train_adaptive,
    train_strategic,
)
from .arbiter import FlightOutcome, FlightResult, decide, execute_flight, greedy_trajectory
from .config import ConfigError, TrainConfig, load_config, seed_stream, stream_rng
from .gridworld import (
    ACTIONS,
    Action,
    Cell,
    GridSpec,
    GridWorld,
    StepEvent,
    StepOutcome,
    apply_action,
    build,
    cell_center_m,
    default_step_cap,
    distance_m,
    manhattan_m,
    random_free_cell,
)
from .harness import (
    ArtifactError,
    EvalReport,
    FlightRecord,
    build_world,
    cmd_coverage,
    cmd_evaluate,
    cmd_train,
    compute_metrics,
    run_flights,
)
from .qcore import (
    CheckpointError,
    EpsilonSchedule,
    Hyper,
    QTable,
    StateKey,
    q_update,
    select_action,
)
from .qcore import load as load_qtable
from .qcore import save as save_qtable
from .radio import (
    CoverageMap,
    HataValidityWarning,
    LinkBudget,
    cell_snr_db,
    coverage_map,
    coverage_ok,
    mobile_correction_alpha,
    path_loss_db,
    snr_db,
)
