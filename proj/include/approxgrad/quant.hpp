#pragma once

#include <cstdint>

#include "approxgrad/tensor.hpp"

namespace approxgrad {

/// asymmetric: unsigned integer range [0, 2^B-1] with a data-dependent zero
/// point. symmetric: signed range [-2^{B-1}, 2^{B-1}-1] with zero point 0.
enum class QuantMode { asymmetric, symmetric };

/// Per-tensor affine quantization parameters.
struct QuantParams {
    double scale = 1.0;
    int zero_point = 0;
    int bits = 8;
    QuantMode mode = QuantMode::asymmetric;

    int lo() const { return mode == QuantMode::symmetric ? -(1 << (bits - 1)) : 0; }
    int hi() const {
        return mode == QuantMode::symmetric ? (1 << (bits - 1)) - 1 : (1 << bits) - 1;
    }

    bool operator==(const QuantParams&) const = default;
};

/// Min/max observer. asymmetric: s = (max-min)/(2^B-1), Z = -round(min/s),
/// with the observed range first widened to contain 0 so Z stays inside
/// [0, 2^B-1]; symmetric: s = max(|min|,|max|)/(2^{B-1}-1), Z = 0. Rounding
/// is half away from zero. An all-equal tensor falls back to s = 1, Z = 0.
QuantParams observe(const TensorR& values, int bits, QuantMode mode);

/// Element-wise clamp(round(v/s) + Z, lo, hi), round half away from zero.
TensorI quantize(const TensorR& values, const QuantParams& p);
std::int64_t quantize_value(double v, const QuantParams& p);

/// Straight-through derivative of the quantizer: 1/s where round(v/s) + Z
/// falls strictly inside (lo, hi), else 0. Values mapping exactly onto a
/// clamp bound count as saturated.
TensorR quant_grad_mask(const TensorR& values, const QuantParams& p);

/// Affine dequantization of a single product:
/// y = s_w*s_x*(Y - Z_x*W - Z_w*X + Z_w*Z_x).
double dequantize_output(std::int64_t y, std::int64_t w, std::int64_t x, const QuantParams& pw,
                         const QuantParams& px);

/// s*(q - Z): real value represented by one quantized level.
double dequantize_value(std::int64_t q, const QuantParams& p);

}  // namespace approxgrad
