from .delay import (
    PolicyKind,
    cdf_delay,
    cdf_delay_rr,
    cdf_delay_rs,
    delay_outage,
    mean_delay,
    mean_delay_rr,
    mean_delay_rs,
    rate_threshold,
    rs_rr_gap,
    tail_gap,
    tau_a,
)
from .meta import (
    FixedPointParams,
    MetaDistGrid,
    SolverError,
    activity_moment,
    interference_transform,
    series_inverse_moment,
    solve_meta_distribution,
    u_grid,
)
from .special import complex_binomial, complex_binomials, db_to_linear, hyp2f1_kernel, z_kernel, z_kernels

__all__ = [
    "FixedPointParams",
    "MetaDistGrid",
    "PolicyKind",
    "SolverError",
    "activity_moment",
    "cdf_delay",
    "cdf_delay_rr",
    "cdf_delay_rs",
    "complex_binomial",
    "complex_binomials",
    "db_to_linear",
    "delay_outage",
    "hyp2f1_kernel",
    "interference_transform",
    "mean_delay",
    "mean_delay_rr",
    "mean_delay_rs",
    "rate_threshold",
    "rs_rr_gap",
    "series_inverse_moment",
    "solve_meta_distribution",
    "tail_gap",
    "tau_a",
    "u_grid",
    "z_kernel",
    "z_kernels",
]
