"""Xi operators of dissipative matrices, trace indices and spectral shift functions."""

from .errors import *  # noqa: F401,F403
from .matcore import (
    DEFAULT_TOL,
    Interval,
    OrthoProjection,
    SpectralDecomposition,
    Tolerances,
    eig_hermitian,
    func_calc_hermitian,
    kernel_dim,
    psd_part,
    rank_eps,
    spectral_projection,
)
from .oplog import DissipativeMatrix, QuadratureConfig, log_dissipative, xi_operator
from .pairindex import gtr, index_pair, trindex
from .problem import ProblemFile, parse_problem, serialize_problem
from .report import Check, VerificationReport
from .spectralflow import (
    CrossingProfile,
    FlowInstance,
    arctan_log_identity,
    arctan_trace,
    arctan_trend,
    birman_krein,
    cauchy_average,
    commutator_diagnostic,
    crossing_count_formula,
    crossing_profile,
    gtr_cauchy_average,
    log_trace_formula,
    signature_special_case,
    trindex_xi_pair,
    verify_ttr8,
)
from .ssf import (
    PerturbationPair,
    StepFunction,
    factor_sign,
    gap_formulas,
    generalized_bs,
    generalized_ssf_pair,
    phi_boundary,
    poisson_check,
    ssf_averaged_rep,
    ssf_exact,
    ssf_table,
    ssf_trindex_rep,
)

__version__ = "0.1.0"
