#include "approxgrad/quant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace approxgrad {

QuantParams observe(const TensorR& values, int bits, QuantMode mode) {
    if (bits < 2 || bits > 8)
        throw std::invalid_argument("quant bits must be in [2, 8], got " + std::to_string(bits));
    if (values.data.empty()) throw std::invalid_argument("observe: empty tensor");

    double mn = values.data[0], mx = values.data[0];
    for (double v : values.data) {
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    }

    QuantParams p;
    p.bits = bits;
    p.mode = mode;
    if (mn == mx) return p;  // degenerate fallback: s = 1, Z = 0

    if (mode == QuantMode::symmetric) {
        p.scale = std::max(std::abs(mn), std::abs(mx)) / ((1 << (bits - 1)) - 1);
        p.zero_point = 0;
    } else {
        // the representable range must contain 0 so the zero point lands
        // inside [0, 2^B-1]
        mn = std::min(mn, 0.0);
        mx = std::max(mx, 0.0);
        p.scale = (mx - mn) / ((1 << bits) - 1);
        p.zero_point = static_cast<int>(-std::llround(mn / p.scale));
    }
    return p;
}

std::int64_t quantize_value(double v, const QuantParams& p) {
    const double q = std::round(v / p.scale) + p.zero_point;
    if (!(q > p.lo())) return p.lo();  // also catches NaN
    if (q >= p.hi()) return p.hi();
    return static_cast<std::int64_t>(q);
}

TensorI quantize(const TensorR& values, const QuantParams& p) {
    TensorI out(values.rows, values.cols);
    for (std::size_t i = 0; i < values.data.size(); ++i)
        out.data[i] = quantize_value(values.data[i], p);
    return out;
}

TensorR quant_grad_mask(const TensorR& values, const QuantParams& p) {
    TensorR out(values.rows, values.cols);
    for (std::size_t i = 0; i < values.data.size(); ++i) {
        const double q = std::round(values.data[i] / p.scale) + p.zero_point;
        out.data[i] = (q > p.lo() && q < p.hi()) ? 1.0 / p.scale : 0.0;
    }
    return out;
}

double dequantize_output(std::int64_t y, std::int64_t w, std::int64_t x, const QuantParams& pw,
                         const QuantParams& px) {
    return pw.scale * px.scale *
           static_cast<double>(y - px.zero_point * w - pw.zero_point * x +
                               std::int64_t{pw.zero_point} * px.zero_point);
}

double dequantize_value(std::int64_t q, const QuantParams& p) {
    return p.scale * static_cast<double>(q - p.zero_point);
}

}  // namespace approxgrad
