"""Repeated-exploration occupancy grid fusion with round-count planning."""
from .errors import (
    DimensionError,
    DomainError,
    EmptyInput,
    GridFuseError,
    IncompleteObservation,
    InfeasibleRounds,
    ParameterError,
    ParseError,
    UnsupportedPattern,
)
from .fuse import MeanMap, fuse_max_likelihood, fuse_threshold, mean_map, ml_count_threshold
from .grid import (
    CellClass,
    FusedMap,
    GroundTruthMap,
    ObservationMap,
    accuracy_report,
    classify_cells,
    parse_map,
    serialize_map,
    to_pgm,
)
from .plan import (
    ConfidenceParams,
    PlanResult,
    achievable_confidence,
    choose_threshold,
    exact_confidence,
    make_plan,
    required_rounds,
    std_normal_cdf,
    std_normal_quantile,
    tail_bounds,
    threshold_interval,
)
from .sensor import (
    ErrorDistribution,
    Neighborhood,
    PatternKnowledge,
    QMode,
    SensorModel,
    false_positive_prob,
    make_uniform_de,
    q_floor,
)
from .sim import ScenarioConfig, TrialStats, generate_ground_truth, run_monte_carlo, simulate_observation

__version__ = "0.1.0"
