"""weakchaos: intermittent interval maps, run-length prefix coding of their
symbolic orbits, and estimation of information-growth scaling laws."""

from . import _kernels
from .coding import (
    CodedStream,
    RunString,
    decode,
    decode_many,
    encode,
    encode_many,
    information_length,
    nat_code_length,
    prefix_decode_nat,
    prefix_encode_nat,
    read_stream,
    run_length,
    trunc_k,
    verify_bounds,
    write_stream,
)
from .errors import (
    ConvergenceError,
    DegenerateFitError,
    DomainError,
    InconclusiveTailError,
    InsufficientTailError,
    MalformedStreamError,
    ParseError,
    PassageBudgetError,
    UnsupportedRegimeError,
    WeakChaosError,
)
from .estimators import (
    ChaosIndexEstimate,
    EntropyEstimate,
    PredictionReport,
    ScalingTable,
    TailFit,
    birkhoff_induced_entropy,
    compare_with_prediction,
    fit_power,
    local_index_estimate,
    passage_tail_exponent,
    passage_tail_fit,
    run_ensemble,
    truncated_complexity,
)
from .maps import (
    LevelSetTable,
    MapSpec,
    PrecisionPolicy,
    apply_map,
    first_passage_time,
    induced_apply,
    induced_log_derivative,
    level_sets,
    mp_apply,
    mp_branch_point,
    parse_map_spec,
    pl_apply,
)
from .renewal import (
    ChainEnsemble,
    EpsilonSequence,
    RegimePrediction,
    classify,
    induced_entropy_pl,
    invariant_measure,
    mean_recurrence_time,
    sample_chain,
    sample_chain_ensemble,
    transition_distribution,
)
from .symbolic import (
    Partition,
    SymbolString,
    count_passages,
    default_partition,
    symbolize,
)

__version__ = "0.1.0"

KERNEL_IMPLEMENTATION = _kernels.IMPLEMENTATION
