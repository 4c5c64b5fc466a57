"""Futures calculus interpreter with per-thread frequency scaling and energy simulation."""

from .calculus import (
    Add,
    ArithRedex,
    ClaimSite,
    Closure,
    Configuration,
    ConfigurationError,
    CreateRedex,
    Expression,
    FutureCreate,
    FutureId,
    FutureRef,
    IntLit,
    NoRedex,
    decompose,
    eval_sequential,
    initial_configuration,
    plug,
    validate_configuration,
)
from .energy import (
    ClaimRecord,
    CostModel,
    Segment,
    SimulationReport,
    ThreadTimeline,
    compute_metrics,
    simulate,
    step_duration,
    step_energy,
)
from .engine import (
    AddEvent,
    ClaimEvent,
    CreateEvent,
    DivergenceError,
    ExplorationLimitError,
    NotEnabledError,
    NewestFirst,
    RoundRobin,
    RunResult,
    SeededRandom,
    enabled_threads,
    explore_all,
    gen_random_program,
    run,
    step,
)
from .parser import ParseError, parse, unparse
from .scaling import (
    DEFAULT_INIT_INDEX,
    DEFAULT_LADDER,
    FrequencyLadder,
    FrequencyLevel,
    ScaleOp,
    ScalingStrategy,
    make_strategy,
    register_strategy,
    strategy_both,
    strategy_child_only,
    strategy_none,
    strategy_parent_only,
)

__version__ = "0.1.0"

__all__ = [
    "Add",
    "AddEvent",
    "ArithRedex",
    "ClaimEvent",
    "ClaimRecord",
    "ClaimSite",
    "Closure",
    "Configuration",
    "ConfigurationError",
    "CostModel",
    "CreateEvent",
    "CreateRedex",
    "DEFAULT_INIT_INDEX",
    "DEFAULT_LADDER",
    "DivergenceError",
    "ExplorationLimitError",
    "Expression",
    "FrequencyLadder",
    "FrequencyLevel",
    "FutureCreate",
    "FutureId",
    "FutureRef",
    "IntLit",
    "NoRedex",
    "NotEnabledError",
    "NewestFirst",
    "ParseError",
    "RoundRobin",
    "RunResult",
    "ScaleOp",
    "ScalingStrategy",
    "SeededRandom",
    "Segment",
    "SimulationReport",
    "ThreadTimeline",
    "compute_metrics",
    "decompose",
    "enabled_threads",
    "eval_sequential",
    "explore_all",
    "gen_random_program",
    "initial_configuration",
    "make_strategy",
    "parse",
    "plug",
    "register_strategy",
    "run",
    "simulate",
    "step",
    "step_duration",
    "step_energy",
    "strategy_both",
    "strategy_child_only",
    "strategy_none",
    "strategy_parent_only",
    "unparse",
    "validate_configuration",
]
