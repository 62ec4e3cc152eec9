"""Numerical checks for infinite summability matrices.

Regularity and boundedness tests for infinite matrices, power matrices built
from them, radius-of-summability estimation, and a small expression language
for entering matrices, series and sequences as text.
"""

from .numerics import (
    DEFAULT_POLICY,
    LimitEstimate,
    LimitStatus,
    PowerSeries,
    Sequence,
    TruncationPolicy,
    abs_row_sum,
    estimate_limit,
    estimate_limsup_root,
    series_radius,
)
from .matrices import (
    InfiniteMatrix,
    ParamMatrix,
    Status,
    Verdict,
    apply_operator_form,
    check_bounded,
    check_regular,
    identity_matrix,
    operator_norm_estimate,
    shifted_matrix,
    transform,
    zero_matrix,
)
from .power import Kind, PowerMatrixSpec, build
from .catalog import get_matrix, get_series, list_catalog, prop6_transform

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_POLICY", "InfiniteMatrix", "Kind", "LimitEstimate", "LimitStatus", "ParamMatrix",
    "PowerMatrixSpec", "PowerSeries", "Sequence", "Status", "TruncationPolicy", "Verdict",
    "abs_row_sum", "apply_operator_form", "build", "check_bounded", "check_regular",
    "estimate_limit", "estimate_limsup_root", "get_matrix", "get_series", "identity_matrix",
    "list_catalog", "operator_norm_estimate", "prop6_transform", "series_radius",
    "shifted_matrix", "transform", "zero_matrix", "__version__",
]
