#include "approxgrad/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <thread>

namespace approxgrad {

void TrainConfig::check() const {
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (batch < 1) throw std::invalid_argument("batch size must be >= 1");
    if (hws < 0) throw std::invalid_argument("hws must be >= 1 (or 0 for the default)");
    for (const LrSegment& s : schedule) {
        if (s.rate < 0.0) throw std::invalid_argument("learning rates must be non-negative");
        if (s.first_epoch < 1 || s.last_epoch < s.first_epoch)
            throw std::invalid_argument("bad learning-rate segment");
    }
    for (int e = 1; e <= epochs && !schedule.empty(); ++e) {
        bool covered = false;
        for (const LrSegment& s : schedule)
            if (e >= s.first_epoch && e <= s.last_epoch) covered = true;
        if (!covered)
            throw std::invalid_argument("learning-rate schedule does not cover epoch " +
                                        std::to_string(e));
    }
}

double TrainConfig::rate_for_epoch(int epoch) const {
    if (!schedule.empty()) {
        for (const LrSegment& s : schedule)
            if (epoch >= s.first_epoch && epoch <= s.last_epoch) return s.rate;
        throw std::logic_error("uncovered epoch " + std::to_string(epoch));
    }
    // default: thirds at 1e-3 / 5e-4 / 2.5e-4
    const int third = (epochs + 2) / 3;
    if (epoch <= third) return 1e-3;
    if (epoch <= 2 * third) return 5e-4;
    return 2.5e-4;
}

void adam_update(double& w, double& m, double& v, long long t, double grad, double lr,
                 const AdamConfig& cfg) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad * grad;
    const double m_hat = m / (1.0 - std::pow(cfg.beta1, static_cast<double>(t)));
    const double v_hat = v / (1.0 - std::pow(cfg.beta2, static_cast<double>(t)));
    w -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
}

int thread_budget() {
    if (const char* env = std::getenv("APPROXGRAD_THREADS")) {
        const int n = std::atoi(env);
        return n >= 1 ? n : 1;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw >= 1 ? static_cast<int>(hw) : 1;
}

namespace {

// samples-as-rows -> features-as-columns for the GEMM orientation
TensorR columns_of(const TensorR& rows, int first_row, int count) {
    TensorR out(rows.cols, count);
    for (int i = 0; i < count; ++i)
        for (int f = 0; f < rows.cols; ++f) out.at(f, i) = rows.at(first_row + i, f);
    return out;
}

void add_bias(TensorR& z, const std::vector<double>& b) {
    if (b.empty()) return;
    for (int i = 0; i < z.rows; ++i)
        for (int j = 0; j < z.cols; ++j) z.at(i, j) += b[i];
}

TensorR relu(const TensorR& z) {
    TensorR a = z;
    for (auto& v : a.data) v = v > 0.0 ? v : 0.0;
    return a;
}

void apply_relu_mask(TensorR& grad, const TensorR& z) {
    for (std::size_t i = 0; i < grad.data.size(); ++i)
        if (z.data[i] <= 0.0) grad.data[i] = 0.0;
}

struct BatchLoss {
    double loss = 0.0;
    int correct = 0;
    TensorR dlogits;
};

// softmax cross-entropy over columns, max-subtracted; gradient is already
// divided by the batch size
BatchLoss softmax_ce(const TensorR& logits, const int* labels) {
    const int classes = logits.rows, batch = logits.cols;
    BatchLoss out;
    out.dlogits = TensorR(classes, batch);
    for (int j = 0; j < batch; ++j) {
        double mx = logits.at(0, j);
        int arg = 0;
        for (int c = 1; c < classes; ++c)
            if (logits.at(c, j) > mx) {
                mx = logits.at(c, j);
                arg = c;
            }
        double denom = 0.0;
        for (int c = 0; c < classes; ++c) denom += std::exp(logits.at(c, j) - mx);
        const double log_denom = std::log(denom);
        out.loss += (log_denom - (logits.at(labels[j], j) - mx)) / batch;
        out.correct += arg == labels[j];
        for (int c = 0; c < classes; ++c) {
            const double p = std::exp(logits.at(c, j) - mx) / denom;
            out.dlogits.at(c, j) = (p - (c == labels[j] ? 1.0 : 0.0)) / batch;
        }
    }
    return out;
}

struct LayerGrads {
    std::vector<TensorR> dw;
    std::vector<std::vector<double>> db;
};

struct AdamState {
    std::vector<TensorR> mw, vw;
    std::vector<std::vector<double>> mb, vb;
    long long t = 0;
};

void optimizer_step(Mlp& model, const LayerGrads& g, const TrainConfig& cfg, double lr,
                    AdamState& adam) {
    if (cfg.optimizer == OptimizerKind::sgd) {
        for (int l = 0; l < model.spec.layers(); ++l) {
            for (std::size_t i = 0; i < model.weights[l].data.size(); ++i)
                model.weights[l].data[i] -= lr * g.dw[l].data[i];
            for (std::size_t i = 0; i < model.biases[l].size(); ++i)
                model.biases[l][i] -= lr * g.db[l][i];
        }
        return;
    }
    ++adam.t;
    for (int l = 0; l < model.spec.layers(); ++l) {
        for (std::size_t i = 0; i < model.weights[l].data.size(); ++i)
            adam_update(model.weights[l].data[i], adam.mw[l].data[i], adam.vw[l].data[i], adam.t,
                        g.dw[l].data[i], lr, cfg.adam);
        for (std::size_t i = 0; i < model.biases[l].size(); ++i)
            adam_update(model.biases[l][i], adam.mb[l][i], adam.vb[l][i], adam.t, g.db[l][i], lr,
                        cfg.adam);
    }
}

struct LayerSim {
    const Multiplier* mult = nullptr;
    const EstimatorPair* est = nullptr;
};

// per-layer multiplier/estimator resolution (exact-layer overrides)
struct SimBundle {
    Multiplier exact;
    EstimatorPair est_app;
    EstimatorPair est_exact;
    std::vector<LayerSim> layers;
};

SimBundle make_sim(const ModelSpec& spec, const Multiplier& mult, EstimatorKind kind, int hws) {
    SimBundle sim;
    sim.est_app = make_estimators(mult, kind, hws);
    bool any_exact = false;
    for (int l = 0; l < spec.layers(); ++l) any_exact |= spec.layer_exact(l);
    if (any_exact) {
        sim.exact = build_exact(mult.bits, mult.is_signed);
        sim.est_exact = make_estimators(sim.exact, kind, hws);
    }
    sim.layers.resize(spec.layers());
    for (int l = 0; l < spec.layers(); ++l) {
        if (spec.layer_exact(l))
            sim.layers[l] = {&sim.exact, &sim.est_exact};
        else
            sim.layers[l] = {&mult, &sim.est_app};
    }
    return sim;
}

TensorR forward_inference(const Mlp& model, const SimBundle& sim, const TensorR& x_cols) {
    const ModelSpec& spec = model.spec;
    TensorR a = x_cols;
    for (int l = 0; l < spec.layers(); ++l) {
        auto [z, ctx] = fq_linear_forward(model.weights[l], a, *sim.layers[l].mult,
                                          spec.quant_bits, spec.quant_mode);
        add_bias(z, model.biases[l]);
        a = (l + 1 < spec.layers() && spec.relu) ? relu(z) : std::move(z);
    }
    return a;
}

double accuracy_of(const TensorR& logits, const int* labels) {
    int correct = 0;
    for (int j = 0; j < logits.cols; ++j) {
        int arg = 0;
        for (int c = 1; c < logits.rows; ++c)
            if (logits.at(c, j) > logits.at(arg, j)) arg = c;
        correct += arg == labels[j];
    }
    return static_cast<double>(correct) / logits.cols;
}

}  // namespace

double evaluate(const Mlp& model, const Multiplier& mult, const TensorR& samples,
                const std::vector<int>& labels) {
    model.spec.check();
    if (labels.empty() || samples.rows != static_cast<int>(labels.size()))
        throw std::invalid_argument("evaluate: sample/label count mismatch");
    if (samples.cols != model.spec.layer_sizes.front())
        throw std::invalid_argument("evaluate: feature dim " + std::to_string(samples.cols) +
                                    " does not match model input " +
                                    std::to_string(model.spec.layer_sizes.front()));
    if (model.spec.quant_bits != mult.bits)
        throw std::invalid_argument("incompatible multiplier bit-width " +
                                    std::to_string(mult.bits) + " for " +
                                    std::to_string(model.spec.quant_bits) + "-bit model");
    const SimBundle sim = make_sim(model.spec, mult, EstimatorKind::ste, 0);
    const TensorR logits = forward_inference(model, sim, columns_of(samples, 0, samples.rows));
    return accuracy_of(logits, labels.data());
}

double evaluate_split(const Mlp& model, const Multiplier& mult, const Dataset& data) {
    if (data.n_eval() == 0) return std::nan("");
    return evaluate(model, mult, data.eval_x, data.eval_y);
}

std::pair<Mlp, TrainReport> train(const ModelSpec& spec, const Dataset& data,
                                  const Multiplier& mult, const TrainConfig& cfg) {
    spec.check();
    cfg.check();
    validate(mult);
    if (spec.quant_bits != mult.bits)
        throw std::invalid_argument("incompatible multiplier bit-width " +
                                    std::to_string(mult.bits) + " for " +
                                    std::to_string(spec.quant_bits) + "-bit model");
    if (data.dim != spec.layer_sizes.front())
        throw std::invalid_argument("dataset dim does not match model input size");
    if (data.classes != spec.layer_sizes.back())
        throw std::invalid_argument("dataset classes do not match model output size");
    if (data.n_train() < 1) throw std::invalid_argument("empty training split");
    if (cfg.hws > max_hws(mult.bits))
        throw std::invalid_argument("hws exceeds " + std::to_string(max_hws(mult.bits)) +
                                    " for " + std::to_string(mult.bits) + "-bit");

    // gradient tables depend only on the multiplier: built once, reused
    const SimBundle sim = make_sim(spec, mult, cfg.estimator, cfg.hws);
    Mlp model = init_mlp(spec, cfg.seed);

    TrainReport report;
    report.initial_acc = evaluate_split(model, mult, data);

    const int n = data.n_train();
    const int layers = spec.layers();
    AdamState adam;
    adam.t = 0;
    for (int l = 0; l < layers; ++l) {
        adam.mw.emplace_back(model.weights[l].rows, model.weights[l].cols);
        adam.vw.emplace_back(model.weights[l].rows, model.weights[l].cols);
        adam.mb.emplace_back(model.biases[l].size(), 0.0);
        adam.vb.emplace_back(model.biases[l].size(), 0.0);
    }

    const auto wall0 = std::chrono::steady_clock::now();
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const double lr = cfg.rate_for_epoch(epoch);
        double loss_sum = 0.0;
        int correct = 0;

        for (int start = 0; start < n; start += cfg.batch) {
            const int bs = std::min(cfg.batch, n - start);
            const TensorR x0 = columns_of(data.train_x, start, bs);
            const int* labels = data.train_y.data() + start;

            std::vector<ForwardContext> ctxs(layers);
            std::vector<TensorR> zs(layers);
            TensorR a = x0;
            for (int l = 0; l < layers; ++l) {
                auto [z, ctx] = fq_linear_forward(model.weights[l], a, *sim.layers[l].mult,
                                                  spec.quant_bits, spec.quant_mode);
                add_bias(z, model.biases[l]);
                ctxs[l] = std::move(ctx);
                zs[l] = std::move(z);
                a = (l + 1 < layers && spec.relu) ? relu(zs[l]) : zs[l];
            }

            BatchLoss bl = softmax_ce(zs[layers - 1], labels);
            if (!std::isfinite(bl.loss))
                throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch) +
                                       ", sample offset " + std::to_string(start));
            loss_sum += bl.loss * bs;
            correct += bl.correct;

            LayerGrads grads;
            grads.dw.resize(layers);
            grads.db.resize(layers);
            TensorR grad = std::move(bl.dlogits);
            for (int l = layers - 1; l >= 0; --l) {
                if (l + 1 < layers && spec.relu) apply_relu_mask(grad, zs[l]);
                if (!model.biases[l].empty()) {
                    grads.db[l].assign(model.biases[l].size(), 0.0);
                    for (int i = 0; i < grad.rows; ++i)
                        for (int j = 0; j < grad.cols; ++j) grads.db[l][i] += grad.at(i, j);
                } else {
                    grads.db[l].clear();
                }
                auto [dw, dx] =
                    fq_linear_backward(ctxs[l], grad, *sim.layers[l].est, cfg.paper_eq7);
                grads.dw[l] = std::move(dw);
                grad = std::move(dx);
            }
            optimizer_step(model, grads, cfg, lr, adam);

            for (int l = 0; l < layers; ++l) {
                model.last_pw[l] = ctxs[l].pw;
                model.last_px[l] = ctxs[l].px;
            }
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.lr = lr;
        stats.train_loss = loss_sum / n;
        stats.train_acc = static_cast<double>(correct) / n;
        stats.eval_acc = evaluate_split(model, mult, data);
        stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.trace.push_back(stats);
    }
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    report.final_acc = report.trace.back().eval_acc;
    return {std::move(model), std::move(report)};
}

ComparisonReport compare_estimators(const ModelSpec& spec, const Dataset& data,
                                    const Multiplier& mult, const TrainConfig& base) {
    const EstimatorKind kinds[3] = {EstimatorKind::ste, EstimatorKind::lut1d,
                                    EstimatorKind::lut2d};
    ComparisonReport out;
    out.runs.resize(3);
    std::exception_ptr errors[3] = {};

    const auto run_one = [&](int i) {
        try {
            TrainConfig cfg = base;
            cfg.estimator = kinds[i];
            auto [model, report] = train(spec, data, mult, cfg);
            out.runs[i] = {kinds[i], std::move(report)};
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };

    const int concurrency = std::min(3, thread_budget());
    if (concurrency <= 1) {
        for (int i = 0; i < 3; ++i) run_one(i);
    } else {
        std::atomic<int> next{0};
        const auto worker = [&] {
            for (int i = next.fetch_add(1); i < 3; i = next.fetch_add(1)) run_one(i);
        };
        std::vector<std::thread> pool;
        for (int i = 0; i < concurrency; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    out.delta_lut1d = out.runs[1].report.final_acc - out.runs[0].report.final_acc;
    out.delta_lut2d = out.runs[2].report.final_acc - out.runs[0].report.final_acc;
    return out;
}

namespace {

void print_g17(std::ofstream& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
}

}  // namespace

void write_report_csv(const TrainReport& report, const std::filesystem::path& path,
                      bool include_timing) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "epoch,lr,train_loss,train_acc,eval_acc";
    if (include_timing) out << ",seconds";
    out << "\n";
    for (const EpochStats& e : report.trace) {
        out << e.epoch << ",";
        print_g17(out, e.lr);
        out << ",";
        print_g17(out, e.train_loss);
        out << ",";
        print_g17(out, e.train_acc);
        out << ",";
        print_g17(out, e.eval_acc);
        if (include_timing) {
            out << ",";
            print_g17(out, e.seconds);
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_comparison_csv(const ComparisonReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "estimator,initial_acc,final_acc,impr_than_ste\n";
    for (const ComparisonRun& run : report.runs) {
        out << estimator_kind_name(run.kind) << ",";
        print_g17(out, run.report.initial_acc);
        out << ",";
        print_g17(out, run.report.final_acc);
        out << ",";
        double delta = 0.0;
        if (run.kind == EstimatorKind::lut1d) delta = report.delta_lut1d;
        if (run.kind == EstimatorKind::lut2d) delta = report.delta_lut2d;
        print_g17(out, delta);
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace approxgrad
