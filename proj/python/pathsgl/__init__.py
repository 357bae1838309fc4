from ._core import (
    PathSglError,
    __version__,
    bh_qvalues,
    canberra,
    compare_ranks,
    fit,
    lambda_max,
    rank,
    simulate,
    tune_weights,
)

__all__ = [
    "PathSglError",
    "__version__",
    "bh_qvalues",
    "canberra",
    "compare_ranks",
    "fit",
    "lambda_max",
    "rank",
    "simulate",
    "tune_weights",
]
