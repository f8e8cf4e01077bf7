#pragma once

#include <string>
#include <utility>

#include "approxgrad/gradlut.hpp"
#include "approxgrad/multiplier.hpp"
#include "approxgrad/quant.hpp"
#include "approxgrad/tensor.hpp"

namespace approxgrad {

/// Integer GEMM whose scalar multiplies are multiplier-table lookups:
/// Y_ij = sum_k AM(W_ik, X_kj), accumulated in 64-bit integers.
/// Operands must lie inside the multiplier's operand range.
TensorI app_gemm(const TensorI& w, const TensorI& x, const Multiplier& m);

/// Backward pass of app_gemm through gradient-LUT lookups:
///   dLdW_ik = sum_j dLdY_ij * gw(W_ik, X_kj)   (j ascending)
///   dLdX_kj = sum_i dLdY_ij * gx(W_ik, X_kj)   (i ascending)
/// gx estimates dAM/dX, gw estimates dAM/dW.
std::pair<TensorR, TensorR> app_gemm_backward(const TensorR& dldy, const TensorI& w,
                                              const TensorI& x, const GradEstimator& gx,
                                              const GradEstimator& gw);

/// Everything the backward pass needs from a fake-quantized forward call:
/// the integer operands actually multiplied, their quantization parameters,
/// and the straight-through masks of the real-valued inputs.
struct ForwardContext {
    TensorI wq;
    TensorI xq;
    QuantParams pw;
    QuantParams px;
    TensorR mask_w;
    TensorR mask_x;
};

/// STE / LUT-1D / LUT-2D estimator pair for one multiplier, precomputed
/// once and shared across GEMM calls.
struct EstimatorPair {
    GradEstimator wrt_x;
    GradEstimator wrt_w;
};

enum class EstimatorKind { ste, lut1d, lut2d };

EstimatorKind parse_estimator_kind(const std::string& s);
const char* estimator_kind_name(EstimatorKind k);

/// hws only affects lut2d; pass 0 to use default_hws(m.bits).
EstimatorPair make_estimators(const Multiplier& m, EstimatorKind kind, int hws = 0);

/// Fake-quantized linear primitive: quantize both operands with the given
/// parameters, run app_gemm, and dequantize per element with the summed
/// affine correction
///   y_ij = s_w*s_x*(Y_ij - Z_x*sum_k W_ik - Z_w*sum_k X_kj + K*Z_w*Z_x).
std::pair<TensorR, ForwardContext> fq_linear_forward(const TensorR& w, const TensorR& x,
                                                     const Multiplier& m, const QuantParams& pw,
                                                     const QuantParams& px);

/// Observer-driven variant: params come from batch-local min/max statistics
/// of w and x.
std::pair<TensorR, ForwardContext> fq_linear_forward(const TensorR& w, const TensorR& x,
                                                     const Multiplier& m, int bits,
                                                     QuantMode mode);

/// Chain rule through dequantization, the estimator lookups, and the
/// quantizer masks:
///   dLdw_ik = mask_w_ik * s_w*s_x * (sum_j dLdy_ij*gw(W_ik,X_kj) - Z_x*sum_j dLdy_ij)
///   dLdx_kj = mask_x_kj * s_w*s_x * (sum_i dLdy_ij*gx(W_ik,X_kj) - Z_w*sum_i dLdy_ij)
/// paper_eq7 drops the zero-point cross terms, matching the printed chain
/// rule that routes the gradient only through Y.
std::pair<TensorR, TensorR> fq_linear_backward(const ForwardContext& ctx, const TensorR& dldy,
                                               const EstimatorPair& est, bool paper_eq7 = false);

}  // namespace approxgrad
