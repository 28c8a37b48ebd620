from .metrics import mae, mse
from .model_selection import (
    CvReport,
    FoldPlan,
    ModelSpec,
    SearchResult,
    default_grids,
    grid_search,
    kfold,
    nested_cv,
    nonnested_cv,
    select_for_outer_fold,
)
from .preprocessing import ScaledRegressor, Scaler
