"""ercomp: exact component-size laws for sparse random graphs, the
size-biased expectation identities that characterize them, and seeded Monte
Carlo reproductions of their limit behavior."""

from .analytic import (
    SupercriticalConstants,
    borel_gf,
    borel_pmf,
    lambert_w0,
    phi,
    second_moment_leading,
    sigma,
    supercritical_constants,
    susceptibility_expansion,
    theta,
)
from .exact import (
    ComponentDist,
    GnpParams,
    RecoveredDist,
    VerifyResult,
    component_dist,
    connectivity_prob,
    f_factor,
    g_factor,
    lambda_star,
    moment,
    recover_dist,
    suggested_bits,
    verify_change_of_measure,
    verify_identity,
)
from .mc import (
    ComponentSample,
    EmpiricalSummary,
    GnpTask,
    GofResult,
    RigidTask,
    RngSpec,
    SbmSample,
    SbmTask,
    chi_square_gof,
    ks_statistic,
    rigid_sample,
    run_replicas,
    sample_components,
    sample_sbm,
    union_find_component_sizes,
    write_raw_csv,
)
from .precision import (
    ConditioningError,
    DomainError,
    PrecisionCtx,
    ResourceCapError,
)
from .report import ExperimentReport
from .sbm import (
    SbmDist,
    SbmParams,
    SbmShift,
    kspace,
    sbm_enumerate_dist,
    sbm_g_factor,
    sbm_recover_dist,
    sbm_verify_change_of_measure,
    sbm_verify_identity,
    shift_space_nonpositive,
)

__version__ = "0.1.0"

__all__ = [
    "ComponentDist",
    "ComponentSample",
    "ConditioningError",
    "DomainError",
    "EmpiricalSummary",
    "ExperimentReport",
    "GnpParams",
    "GnpTask",
    "GofResult",
    "PrecisionCtx",
    "RecoveredDist",
    "ResourceCapError",
    "RigidTask",
    "RngSpec",
    "SbmDist",
    "SbmParams",
    "SbmSample",
    "SbmShift",
    "SbmTask",
    "SupercriticalConstants",
    "VerifyResult",
    "borel_gf",
    "borel_pmf",
    "chi_square_gof",
    "component_dist",
    "connectivity_prob",
    "f_factor",
    "g_factor",
    "ks_statistic",
    "kspace",
    "lambda_star",
    "lambert_w0",
    "moment",
    "phi",
    "recover_dist",
    "rigid_sample",
    "run_replicas",
    "sample_components",
    "sample_sbm",
    "sbm_enumerate_dist",
    "sbm_g_factor",
    "sbm_recover_dist",
    "sbm_verify_change_of_measure",
    "sbm_verify_identity",
    "second_moment_leading",
    "shift_space_nonpositive",
    "sigma",
    "suggested_bits",
    "supercritical_constants",
    "susceptibility_expansion",
    "theta",
    "union_find_component_sizes",
    "write_raw_csv",
    "verify_change_of_measure",
    "verify_identity",
]
