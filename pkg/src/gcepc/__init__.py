"""Coded distributed matrix multiplication with gradient-coded groups (GC-EPC)."""

from .analysis import (
    ThresholdReport,
    baseline_thresholds,
    comparison_row,
    decodable,
    encoding_weight,
    gc_epc_tau,
    occupancy_threshold_oracle,
    recovery_threshold,
    split_scheme_threshold,
    vandermonde_condition,
)
from .decode import (
    DecodeReport,
    ExponentMap,
    assemble,
    decode,
    group_combine,
    interference_term,
    interpolate_and_extract,
    useful_block,
    useful_exponents,
)
from .errors import (
    ConfigurationError,
    ConstructionError,
    GcepcError,
    InfeasibleError,
    InfeasibleRunError,
    InsufficientResultsError,
    MatrixMarketError,
    OracleSizeError,
    ParameterError,
    PartitionError,
    ShapeError,
    SpanViolationError,
    UndefinedMetricError,
)
from .gradcode import (
    CombineVector,
    GcMatrix,
    GcReport,
    combine_vector,
    construct_gc_matrix,
    verify_gc_matrix,
)
from .matrix import (
    BlockGrid,
    BlockMatrix,
    assemble_grid,
    frobenius_norm,
    linear_combination,
    multiply,
    partition_grid,
    random_sparse,
    read_matrix_market,
    transpose_multiply,
    write_matrix_market,
)
from .scheme import (
    SchemeParams,
    WorkerAssignment,
    WorkerResult,
    compute_all_workers,
    derive_params,
    encode_A,
    encode_B,
    equidistant_points,
    split_inputs,
    worker_assignments,
    worker_compute,
)
from .sim import (
    Deterministic,
    ShiftedExponential,
    SimConfig,
    SimResult,
    normalized_error,
    run_experiment,
    sample_completion,
    speed_sweep,
    stability_sweep,
)

__version__ = "0.1.0"
