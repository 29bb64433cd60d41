"""Hybrid queuing model toolkit for highway bottlenecks shared by CAV platoons and non-CAVs."""

from hqmkit.core import (
    DischargeRecord,
    HqmParams,
    HqmState,
    Trajectory,
    counts,
    discharge,
    new_state,
    simulate,
    step,
)
from hqmkit.errors import (
    ConfigError,
    CsvFormatError,
    DomainError,
    HqmError,
    InfeasibleError,
    ParameterError,
    StructureError,
)
from hqmkit.estimator import (
    NOMINAL_THETA,
    Mode,
    Theta,
    TrainConfig,
    TrainingHistory,
    cost_avg,
    cost_discounted,
    one_step_cost,
    online_prediction,
    perturb,
    run_online_training,
    train_step,
)
from hqmkit.experiments import (
    PRESETS,
    MetricsReport,
    RunConfig,
    load_config,
    load_counts_csv,
    percentage_error,
    run_experiment,
    write_counts_csv,
)
from hqmkit.oracle import (
    ScenarioSpec,
    edbm_simulate,
    gen_demand,
    nominal_traverse_time,
    synthetic_hqm_oracle,
)
from hqmkit.regulator import (
    HeadwayPolicy,
    SweepResult,
    apply_headway,
    average_delay,
    optimal_headway,
    sweep_headway,
)
from hqmkit.series import DelayRecord, DemandSeries, Inflow, ObservationSeries

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "CsvFormatError",
    "DelayRecord",
    "DemandSeries",
    "DischargeRecord",
    "DomainError",
    "HeadwayPolicy",
    "HqmError",
    "HqmParams",
    "HqmState",
    "InfeasibleError",
    "Inflow",
    "MetricsReport",
    "Mode",
    "NOMINAL_THETA",
    "ObservationSeries",
    "PRESETS",
    "ParameterError",
    "RunConfig",
    "ScenarioSpec",
    "StructureError",
    "SweepResult",
    "Theta",
    "TrainConfig",
    "TrainingHistory",
    "Trajectory",
    "apply_headway",
    "average_delay",
    "cost_avg",
    "cost_discounted",
    "counts",
    "discharge",
    "edbm_simulate",
    "gen_demand",
    "load_config",
    "load_counts_csv",
    "new_state",
    "nominal_traverse_time",
    "one_step_cost",
    "online_prediction",
    "optimal_headway",
    "percentage_error",
    "perturb",
    "run_experiment",
    "run_online_training",
    "simulate",
    "step",
    "sweep_headway",
    "synthetic_hqm_oracle",
    "train_step",
    "write_counts_csv",
]
