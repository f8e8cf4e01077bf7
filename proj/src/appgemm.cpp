#include "approxgrad/appgemm.hpp"

#include <stdexcept>

namespace approxgrad {

namespace {

void check_shapes(int wr, int wc, int xr, int xc) {
    if (wc != xr)
        throw std::invalid_argument("gemm dimension mismatch: " + std::to_string(wr) + "x" +
                                    std::to_string(wc) + " * " + std::to_string(xr) + "x" +
                                    std::to_string(xc));
}

void check_operands(const TensorI& t, const Multiplier& m, const char* which) {
    for (std::int64_t v : t.data)
        if (v < m.lo() || v > m.hi())
            throw std::out_of_range(std::string(which) + " operand " + std::to_string(v) +
                                    " outside range of " + m.name);
}

}  // namespace

TensorI app_gemm(const TensorI& w, const TensorI& x, const Multiplier& m) {
    check_shapes(w.rows, w.cols, x.rows, x.cols);
    check_operands(w, m, "weight");
    check_operands(x, m, "activation");
    const int M = w.rows, K = w.cols, N = x.cols;
    TensorI y(M, N);
    for (int i = 0; i < M; ++i) {
        for (int j = 0; j < N; ++j) {
            std::int64_t acc = 0;
            for (int k = 0; k < K; ++k)
                acc += m.at(static_cast<int>(w.at(i, k)), static_cast<int>(x.at(k, j)));
            y.at(i, j) = acc;
        }
    }
    return y;
}

std::pair<TensorR, TensorR> app_gemm_backward(const TensorR& dldy, const TensorI& w,
                                              const TensorI& x, const GradEstimator& gx,
                                              const GradEstimator& gw) {
    check_shapes(w.rows, w.cols, x.rows, x.cols);
    const int M = w.rows, K = w.cols, N = x.cols;
    if (dldy.rows != M || dldy.cols != N)
        throw std::invalid_argument("dLdY shape mismatch: got " + std::to_string(dldy.rows) + "x" +
                                    std::to_string(dldy.cols) + ", expected " + std::to_string(M) +
                                    "x" + std::to_string(N));

    TensorR dldw(M, K);
    for (int i = 0; i < M; ++i) {
        for (int k = 0; k < K; ++k) {
            double acc = 0.0;
            for (int j = 0; j < N; ++j)
                acc += dldy.at(i, j) * lookup(gw, static_cast<int>(w.at(i, k)),
                                              static_cast<int>(x.at(k, j)));
            dldw.at(i, k) = acc;
        }
    }
    TensorR dldx(K, N);
    for (int k = 0; k < K; ++k) {
        for (int j = 0; j < N; ++j) {
            double acc = 0.0;
            for (int i = 0; i < M; ++i)
                acc += dldy.at(i, j) * lookup(gx, static_cast<int>(w.at(i, k)),
                                              static_cast<int>(x.at(k, j)));
            dldx.at(k, j) = acc;
        }
    }
    return {std::move(dldw), std::move(dldx)};
}

EstimatorKind parse_estimator_kind(const std::string& s) {
    if (s == "ste") return EstimatorKind::ste;
    if (s == "lut1d") return EstimatorKind::lut1d;
    if (s == "lut2d") return EstimatorKind::lut2d;
    throw std::invalid_argument("unknown estimator '" + s + "', expected ste|lut1d|lut2d");
}

const char* estimator_kind_name(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::ste: return "ste";
        case EstimatorKind::lut1d: return "lut1d";
        case EstimatorKind::lut2d: return "lut2d";
    }
    return "?";
}

EstimatorPair make_estimators(const Multiplier& m, EstimatorKind kind, int hws) {
    if (hws == 0) hws = default_hws(m.bits);
    switch (kind) {
        case EstimatorKind::ste:
            return {SteGrad{m.bits, m.is_signed, GradDir::wrt_x},
                    SteGrad{m.bits, m.is_signed, GradDir::wrt_w}};
        case EstimatorKind::lut1d:
            return {build_grad1d(m, GradDir::wrt_x), build_grad1d(m, GradDir::wrt_w)};
        case EstimatorKind::lut2d:
            return {build_grad2d(m, GradDir::wrt_x, hws), build_grad2d(m, GradDir::wrt_w, hws)};
    }
    throw std::logic_error("unreachable estimator kind");
}

std::pair<TensorR, ForwardContext> fq_linear_forward(const TensorR& w, const TensorR& x,
                                                     const Multiplier& m, const QuantParams& pw,
                                                     const QuantParams& px) {
    check_shapes(w.rows, w.cols, x.rows, x.cols);
    if (pw.bits != m.bits || px.bits != m.bits)
        throw std::invalid_argument("quant bit-width does not match " + std::to_string(m.bits) +
                                    "-bit multiplier " + m.name);
    ForwardContext ctx;
    ctx.pw = pw;
    ctx.px = px;
    ctx.wq = quantize(w, pw);
    ctx.xq = quantize(x, px);
    ctx.mask_w = quant_grad_mask(w, pw);
    ctx.mask_x = quant_grad_mask(x, px);

    const TensorI y_int = app_gemm(ctx.wq, ctx.xq, m);
    const int M = w.rows, K = w.cols, N = x.cols;

    std::vector<std::int64_t> w_row_sum(M, 0), x_col_sum(N, 0);
    for (int i = 0; i < M; ++i)
        for (int k = 0; k < K; ++k) w_row_sum[i] += ctx.wq.at(i, k);
    for (int k = 0; k < K; ++k)
        for (int j = 0; j < N; ++j) x_col_sum[j] += ctx.xq.at(k, j);

    const double ss = pw.scale * px.scale;
    const std::int64_t zz = std::int64_t{pw.zero_point} * px.zero_point * K;
    TensorR y(M, N);
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < N; ++j)
            y.at(i, j) = ss * static_cast<double>(y_int.at(i, j) - px.zero_point * w_row_sum[i] -
                                                  pw.zero_point * x_col_sum[j] + zz);
    return {std::move(y), std::move(ctx)};
}

std::pair<TensorR, ForwardContext> fq_linear_forward(const TensorR& w, const TensorR& x,
                                                     const Multiplier& m, int bits,
                                                     QuantMode mode) {
    return fq_linear_forward(w, x, m, observe(w, bits, mode), observe(x, bits, mode));
}

std::pair<TensorR, TensorR> fq_linear_backward(const ForwardContext& ctx, const TensorR& dldy,
                                               const EstimatorPair& est, bool paper_eq7) {
    const int M = ctx.wq.rows, K = ctx.wq.cols, N = ctx.xq.cols;
    if (dldy.rows != M || dldy.cols != N)
        throw std::invalid_argument("dLdy shape mismatch against forward context");

    auto [gw_sum, gx_sum] = app_gemm_backward(dldy, ctx.wq, ctx.xq, est.wrt_x, est.wrt_w);

    std::vector<double> row_sum(M, 0.0), col_sum(N, 0.0);
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < N; ++j) row_sum[i] += dldy.at(i, j);
    for (int j = 0; j < N; ++j)
        for (int i = 0; i < M; ++i) col_sum[j] += dldy.at(i, j);

    const double ss = ctx.pw.scale * ctx.px.scale;
    const double zx = paper_eq7 ? 0.0 : static_cast<double>(ctx.px.zero_point);
    const double zw = paper_eq7 ? 0.0 : static_cast<double>(ctx.pw.zero_point);

    TensorR dldw(M, K), dldx(K, N);
    for (int i = 0; i < M; ++i)
        for (int k = 0; k < K; ++k)
            dldw.at(i, k) = ctx.mask_w.at(i, k) * ss * (gw_sum.at(i, k) - zx * row_sum[i]);
    for (int k = 0; k < K; ++k)
        for (int j = 0; j < N; ++j)
            dldx.at(k, j) = ctx.mask_x.at(k, j) * ss * (gx_sum.at(k, j) - zw * col_sum[j]);
    return {std::move(dldw), std::move(dldx)};
}

}  // namespace approxgrad
