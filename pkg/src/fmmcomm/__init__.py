"""Communication cost modeling and validation for distributed fast multipole
methods on torus-connected machines."""

from .errors import (
    MachineConfigError,
    MeasurementParseError,
    NoOverlapError,
    SizeLimitError,
    TopologyMismatchError,
    UnsupportedConfigError,
    WrongPhaseError,
)
from .machines import PRESETS, MachineParams, load_machine
from .model import (
    ALL_VARIANTS,
    Aggregation,
    ModelVariant,
    PredictionReport,
    PredictionRow,
    job_layout,
    level_time,
    message_time,
    predict,
)
from .phases import (
    CommStatsRow,
    PartnerClass,
    Phase,
    PhasePlan,
    brute_force_halo,
    comm_stats,
    global_m2l_plan,
    global_m2m_plan,
    local_m2l_plan,
    local_p2p_plan,
    plan_for,
)
from .topology import (
    HopAnnotatedPlan,
    PatternMatrix,
    RankMapping,
    TorusTopology,
    annotate_hops,
    global_partner_stride,
    hop_distance,
    map_rank_to_node,
    pattern_matrix,
)
from .tree import (
    Level,
    TreeConfig,
    Zone,
    cells_at_level,
    global_depth,
    local_depth,
    process_grid,
)
from .validation import (
    ComparisonReport,
    ComparisonRow,
    LevelStats,
    LoadBalanceReport,
    MeasurementRecord,
    MeasurementSet,
    compare,
    level_statistics,
    load_balance_report,
    parse_measurements,
    write_measurements,
)

__version__ = "0.1.0"
