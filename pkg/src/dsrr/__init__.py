"""Dual-sparse regularized randomized reduction for linear classification.

Reduce features with a seeded random operator, solve the reduced
l1-regularized dual with coordinate ascent, recover a full-dimension
model, and check the recovery against its error guarantees.
"""

from .data import (
    DatasetCard,
    LabeledDataset,
    SparseVector,
    normalize_l2,
    parse_svmlight,
    partition,
    partition_indices,
    serialize_svmlight,
    synth_sparse_dual,
)
from .distsim import (
    DistConfig,
    DistRound,
    DistRunTrace,
    MethodTiming,
    disdca_run,
    dsrr_warmstart,
    timing_breakdown,
)
from .model import DualLinearClassifier, ReducedDualClassifier
from .sketch import (
    BaseReducer,
    ExplicitMatrix,
    GaussianProjection,
    HadamardPHD,
    HashingHD,
    IdentityEmbedding,
    JLDiagnostic,
    RademacherProjection,
    ReducedDataset,
    SamplingP,
    SparseDiscreteProjection,
    apply_dataset,
    fwht,
    jl_distortion,
    make_operator,
)
from .solve import (
    HINGE,
    SQUARED_HINGE,
    Loss,
    SolveResult,
    SolverConfig,
    coordinate_step,
    dual_objective,
    loss_by_name,
    naive_recover,
    predict_error,
    primal_objective,
    recover_primal,
    solve_original,
    solve_reduced_sparse,
)
from .sweep import SweepConfig, SweepRow, run_sweep
from .theory import (
    NonsmoothCondition,
    RestrictedSpectrumReport,
    TheoremReport,
    check_nonsmooth_condition,
    cone_and_bounds,
    cone_ratio,
    delta_vector,
    max_singular_value,
    near_sparsity_xi,
    primal_error_bound,
    restricted_spectrum_bruteforce,
    support_set,
    tau_min,
)
from .verify import SUITES, SuiteResult, run_suite

__version__ = "0.1.0"

__all__ = [
    "BaseReducer",
    "DatasetCard",
    "DistConfig",
    "DistRound",
    "DistRunTrace",
    "DualLinearClassifier",
    "ExplicitMatrix",
    "GaussianProjection",
    "HINGE",
    "HadamardPHD",
    "HashingHD",
    "IdentityEmbedding",
    "JLDiagnostic",
    "LabeledDataset",
    "Loss",
    "MethodTiming",
    "NonsmoothCondition",
    "RademacherProjection",
    "ReducedDataset",
    "ReducedDualClassifier",
    "RestrictedSpectrumReport",
    "SQUARED_HINGE",
    "SUITES",
    "SamplingP",
    "SolveResult",
    "SolverConfig",
    "SparseDiscreteProjection",
    "SparseVector",
    "SuiteResult",
    "SweepConfig",
    "SweepRow",
    "TheoremReport",
    "apply_dataset",
    "check_nonsmooth_condition",
    "cone_and_bounds",
    "cone_ratio",
    "coordinate_step",
    "delta_vector",
    "disdca_run",
    "dsrr_warmstart",
    "dual_objective",
    "fwht",
    "jl_distortion",
    "loss_by_name",
    "make_operator",
    "max_singular_value",
    "naive_recover",
    "near_sparsity_xi",
    "normalize_l2",
    "parse_svmlight",
    "partition",
    "partition_indices",
    "predict_error",
    "primal_error_bound",
    "primal_objective",
    "recover_primal",
    "restricted_spectrum_bruteforce",
    "run_suite",
    "run_sweep",
    "serialize_svmlight",
    "solve_original",
    "solve_reduced_sparse",
    "support_set",
    "synth_sparse_dual",
    "tau_min",
    "timing_breakdown",
]
