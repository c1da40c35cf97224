"""Representative inter-barrier regions of parallel traces, and whole-program
reconstruction from them."""

__version__ = "0.1.0"

from .clustering import ClusteringResult, bic_score, kmeans, select_k
from .errors import (
    AllFiltered,
    BarrierPointError,
    DimensionMismatch,
    EmptySelection,
    EmptyTrace,
    KTooLarge,
    MissingRegionMeasurement,
    RegionCountMismatch,
    ThreadIdOutOfRange,
    TraceSyntaxError,
)
from .measurements import Metric, aggregate, cov_report, overhead_report, parse_counters
from .reconstruction import cross_validate, error_report, estimate_totals, speedup_report, table_report
from .reuse import COLD, LruState, bucket_of, oracle_distance
from .selection import (
    BarrierPointSet,
    DiscoveryParams,
    choose_representatives,
    filter_significant,
    generate_sets,
    set_summary,
)
from .signatures import assemble_signature, build_bbv, build_ldv, build_signatures, make_projection, project
from .synthgen import WorkloadSpec, default_phases, generate, make_drift_scenario
from .trace import parse_trace, region_instruction_weight
