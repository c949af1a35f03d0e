"""
样本统计量服务
"""
from services.observables.service import (
    COLLISION_DISTANCE,
    FieldValue,
    LoopValues,
    count_interval,
    displacement,
    f_kernel,
    linear_stat,
    log_char,
    log_char_batch,
    log_field_derivative,
    loop_observables,
    loop_residual_rank1,
    loop_residual_rankn,
    rescaled_points,
    stieltjes_emp,
)

__all__ = [
    "COLLISION_DISTANCE",
    "FieldValue",
    "LoopValues",
    "count_interval",
    "displacement",
    "f_kernel",
    "linear_stat",
    "log_char",
    "log_char_batch",
    "log_field_derivative",
    "loop_observables",
    "loop_residual_rank1",
    "loop_residual_rankn",
    "rescaled_points",
    "stieltjes_emp",
]
