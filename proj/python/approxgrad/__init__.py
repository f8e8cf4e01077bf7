"""Approximate-multiplier modelling, gradient LUTs and retraining."""

from approxgrad._core import (
    ErrorReport,
    GradLut1D,
    GradLut2D,
    Multiplier,
    QuantParams,
    app_gemm,
    app_gemm_backward,
    build_exact,
    build_grad1d,
    build_grad2d,
    build_truncated,
    compare_estimators_synthetic,
    default_hws,
    dequantize_output,
    error_metrics,
    fq_linear,
    load_multiplier,
    make_synthetic,
    max_hws,
    observe,
    quantize,
    save_multiplier,
    smooth_row,
    ste_grad,
    train_synthetic,
)

__all__ = [
    "ErrorReport",
    "GradLut1D",
    "GradLut2D",
    "Multiplier",
    "QuantParams",
    "app_gemm",
    "app_gemm_backward",
    "build_exact",
    "build_grad1d",
    "build_grad2d",
    "build_truncated",
    "compare_estimators_synthetic",
    "default_hws",
    "dequantize_output",
    "error_metrics",
    "fq_linear",
    "load_multiplier",
    "make_synthetic",
    "max_hws",
    "observe",
    "quantize",
    "save_multiplier",
    "smooth_row",
    "ste_grad",
    "train_synthetic",
]

__version__ = "1.0.0"
