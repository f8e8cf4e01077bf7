#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "approxgrad/trainer.hpp"

using namespace approxgrad;
namespace fs = std::filesystem;

namespace {

ModelSpec small_spec(int bits, int dim = 8, int classes = 2) {
    ModelSpec spec;
    spec.layer_sizes = {dim, 16, classes};
    spec.quant_bits = bits;
    return spec;
}

TrainConfig quick_cfg(EstimatorKind kind, int epochs, std::uint64_t seed = 5) {
    TrainConfig cfg;
    cfg.estimator = kind;
    cfg.epochs = epochs;
    cfg.batch = 32;
    cfg.seed = seed;
    return cfg;
}

bool same_trace(const TrainReport& a, const TrainReport& b) {
    if (a.trace.size() != b.trace.size()) return false;
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        if (a.trace[i].train_loss != b.trace[i].train_loss) return false;
        if (a.trace[i].train_acc != b.trace[i].train_acc) return false;
        if (a.trace[i].eval_acc != b.trace[i].eval_acc) return false;
    }
    return a.initial_acc == b.initial_acc && a.final_acc == b.final_acc;
}

}  // namespace

TEST_CASE("adam matches a hand-computed two-step example") {
    const AdamConfig cfg;  // beta1=0.9 beta2=0.999 eps=1e-8
    double w = 1.0, m = 0.0, v = 0.0;
    const double lr = 0.1;

    adam_update(w, m, v, 1, 2.0, lr, cfg);
    CHECK(m == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(v == doctest::Approx(0.004).epsilon(1e-15));
    // m_hat = 0.2/0.1 = 2, v_hat = 0.004/0.001 = 4, step = 0.1*2/(2+1e-8)
    const double w1 = 1.0 - 0.1 * 2.0 / (2.0 + 1e-8);
    CHECK(w == doctest::Approx(w1).epsilon(1e-15));

    adam_update(w, m, v, 2, -1.0, lr, cfg);
    const double m2 = 0.9 * 0.2 + 0.1 * -1.0;          // 0.08
    const double v2 = 0.999 * 0.004 + 0.001 * 1.0;     // 0.004996
    const double m_hat = m2 / (1.0 - 0.81);            // 0.08 / 0.19
    const double v_hat = v2 / (1.0 - 0.998001);        // 0.004996 / 0.001999
    const double w2 = w1 - 0.1 * m_hat / (std::sqrt(v_hat) + 1e-8);
    CHECK(m == doctest::Approx(m2).epsilon(1e-15));
    CHECK(v == doctest::Approx(v2).epsilon(1e-15));
    CHECK(w == doctest::Approx(w2).epsilon(1e-13));
}

TEST_CASE("training with the exact multiplier learns separable data") {
    const Dataset data = make_synthetic(3, 256, 128, 2, 8);
    const Multiplier m = build_exact(7, false);

    // reference oracle: plain real-valued logistic-style trainer on the same
    // data reaches high accuracy, so the task itself is learnable
    {
        std::vector<double> w(data.dim, 0.0);
        double b = 0.0;
        for (int epoch = 0; epoch < 50; ++epoch) {
            for (int i = 0; i < data.n_train(); ++i) {
                double z = b;
                for (int f = 0; f < data.dim; ++f) z += w[f] * data.train_x.at(i, f);
                const double p = 1.0 / (1.0 + std::exp(-z));
                const double g = p - data.train_y[i];
                for (int f = 0; f < data.dim; ++f) w[f] -= 0.1 * g * data.train_x.at(i, f);
                b -= 0.1 * g;
            }
        }
        int correct = 0;
        for (int i = 0; i < data.n_eval(); ++i) {
            double z = b;
            for (int f = 0; f < data.dim; ++f) z += w[f] * data.eval_x.at(i, f);
            correct += (z > 0 ? 1 : 0) == data.eval_y[i];
        }
        REQUIRE(static_cast<double>(correct) / data.n_eval() > 0.9);
    }

    const auto [model, report] = train(small_spec(7), data, m, quick_cfg(EstimatorKind::ste, 10));
    CHECK(report.final_acc > 0.9);
    CHECK(report.trace.size() == 10);
    CHECK(report.trace.front().train_loss > report.trace.back().train_loss);

    // evaluate() immediately after train reproduces the reported accuracy
    CHECK(evaluate(model, m, data.eval_x, data.eval_y) == report.final_acc);
}

TEST_CASE("zero learning rate leaves parameters untouched") {
    const Dataset data = make_synthetic(9, 64, 32, 2, 8);
    const Multiplier m = build_exact(7, false);
    TrainConfig cfg = quick_cfg(EstimatorKind::ste, 3);
    cfg.schedule = {{1, 3, 0.0}};
    cfg.optimizer = OptimizerKind::sgd;

    const Mlp reference = init_mlp(small_spec(7), cfg.seed);
    const auto [model, report] = train(small_spec(7), data, m, cfg);
    for (int l = 0; l < reference.spec.layers(); ++l)
        CHECK(model.weights[l].data == reference.weights[l].data);
    CHECK(report.final_acc == report.initial_acc);
}

TEST_CASE("training is deterministic for a fixed seed") {
    const Dataset data = make_synthetic(21, 96, 48, 2, 8);
    const Multiplier m = build_truncated(7, 6);
    const TrainConfig cfg = quick_cfg(EstimatorKind::lut1d, 4, 77);
    const auto [model_a, rep_a] = train(small_spec(7), data, m, cfg);
    const auto [model_b, rep_b] = train(small_spec(7), data, m, cfg);
    CHECK(same_trace(rep_a, rep_b));
    for (int l = 0; l < model_a.spec.layers(); ++l) {
        CHECK(model_a.weights[l].data == model_b.weights[l].data);
        CHECK(model_a.biases[l] == model_b.biases[l]);
    }
}

TEST_CASE("exact multiplier gives bit-identical trajectories across estimators") {
    const Dataset data = make_synthetic(33, 96, 48, 2, 8);
    const Multiplier m = build_exact(7, false);
    const ComparisonReport cmp =
        compare_estimators(small_spec(7), data, m, quick_cfg(EstimatorKind::ste, 4));
    REQUIRE(cmp.runs.size() == 3);
    CHECK(same_trace(cmp.runs[0].report, cmp.runs[1].report));
    CHECK(same_trace(cmp.runs[0].report, cmp.runs[2].report));
    CHECK(cmp.delta_lut1d == 0.0);
    CHECK(cmp.delta_lut2d == 0.0);
}

TEST_CASE("loss decreases for every estimator on the exact multiplier") {
    const Dataset data = make_synthetic(17, 128, 64, 2, 8);
    const Multiplier m = build_exact(7, false);
    for (EstimatorKind kind : {EstimatorKind::ste, EstimatorKind::lut1d, EstimatorKind::lut2d}) {
        const auto [model, report] = train(small_spec(7), data, m, quick_cfg(kind, 6));
        CHECK(report.trace.front().train_loss > report.trace.back().train_loss);
    }
}

TEST_CASE("an untrained model on balanced two-class data sits near chance") {
    const Dataset data = make_synthetic(5, 64, 200, 2, 8);
    const Mlp model = init_mlp(small_spec(7), 123);
    const double acc = evaluate(model, build_exact(7, false), data.eval_x, data.eval_y);
    CHECK(acc > 0.3);
    CHECK(acc < 0.75);

    // evaluating with a different multiplier still runs
    CHECK_NOTHROW(evaluate(model, build_truncated(7, 6), data.eval_x, data.eval_y));
}

TEST_CASE("config and shape validation errors") {
    const Dataset data = make_synthetic(2, 32, 16, 2, 8);
    const Multiplier m8 = build_exact(8, false);
    CHECK_THROWS_WITH_AS(train(small_spec(7), data, m8, quick_cfg(EstimatorKind::ste, 1)),
                         doctest::Contains("bit-width"), std::invalid_argument);

    TrainConfig bad = quick_cfg(EstimatorKind::ste, 5);
    bad.schedule = {{1, 3, 1e-3}};  // epochs 4..5 uncovered
    CHECK_THROWS_AS(train(small_spec(7), data, build_exact(7, false), bad),
                    std::invalid_argument);

    TrainConfig neg = quick_cfg(EstimatorKind::ste, 1);
    neg.epochs = 0;
    CHECK_THROWS_AS(train(small_spec(7), data, build_exact(7, false), neg),
                    std::invalid_argument);

    ModelSpec wrong_dim = small_spec(7, 9);
    CHECK_THROWS_AS(train(wrong_dim, data, build_exact(7, false), quick_cfg(EstimatorKind::ste, 1)),
                    std::invalid_argument);
}

TEST_CASE("runaway learning rate aborts with a divergence diagnostic") {
    const Dataset data = make_synthetic(6, 64, 32, 2, 8);
    TrainConfig cfg = quick_cfg(EstimatorKind::ste, 8);
    cfg.optimizer = OptimizerKind::sgd;
    cfg.schedule = {{1, 8, 1e160}};
    CHECK_THROWS_AS(train(small_spec(7), data, build_exact(7, false), cfg), TrainingDiverged);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
    const Dataset data = make_synthetic(13, 64, 32, 2, 8);
    const Multiplier m = build_truncated(7, 6);
    const auto [model, report] = train(small_spec(7), data, m, quick_cfg(EstimatorKind::lut2d, 2));

    const fs::path p = fs::temp_directory_path() / "approxgrad_test_model.ckpt";
    save_checkpoint(model, p);
    const Mlp back = load_checkpoint(p);
    CHECK(back.spec.layer_sizes == model.spec.layer_sizes);
    CHECK(back.spec.quant_bits == model.spec.quant_bits);
    for (int l = 0; l < model.spec.layers(); ++l) {
        CHECK(back.weights[l].data == model.weights[l].data);
        CHECK(back.biases[l] == model.biases[l]);
        CHECK(back.last_pw[l] == model.last_pw[l]);
        CHECK(back.last_px[l] == model.last_px[l]);
    }
    // the reloaded model evaluates identically
    CHECK(evaluate(back, m, data.eval_x, data.eval_y) == report.final_acc);
    fs::remove(p);
}

TEST_CASE("per-layer exact override keeps a layer on the exact multiplier") {
    const Dataset data = make_synthetic(25, 64, 32, 2, 8);
    ModelSpec spec = small_spec(7);
    spec.exact_layer = {0, 1};  // classifier layer stays exact
    const Multiplier m = build_truncated(7, 6);
    const auto [model, report] = train(spec, data, m, quick_cfg(EstimatorKind::lut1d, 2));
    CHECK(report.trace.size() == 2);

    spec.exact_layer = {1};  // wrong arity
    CHECK_THROWS_AS(train(spec, data, m, quick_cfg(EstimatorKind::lut1d, 1)),
                    std::invalid_argument);
}

TEST_CASE("APPROXGRAD_THREADS caps the thread budget") {
    setenv("APPROXGRAD_THREADS", "1", 1);
    CHECK(thread_budget() == 1);
    setenv("APPROXGRAD_THREADS", "2", 1);
    CHECK(thread_budget() == 2);
    unsetenv("APPROXGRAD_THREADS");
    CHECK(thread_budget() >= 1);

    // the sequential path produces the same comparison as the threaded one
    const Dataset data = make_synthetic(8, 48, 24, 2, 8);
    const Multiplier m = build_truncated(7, 6);
    setenv("APPROXGRAD_THREADS", "1", 1);
    const ComparisonReport seq =
        compare_estimators(small_spec(7), data, m, quick_cfg(EstimatorKind::ste, 2));
    unsetenv("APPROXGRAD_THREADS");
    const ComparisonReport par =
        compare_estimators(small_spec(7), data, m, quick_cfg(EstimatorKind::ste, 2));
    for (int i = 0; i < 3; ++i) {
        CHECK(seq.runs[i].report.final_acc == par.runs[i].report.final_acc);
        CHECK(same_trace(seq.runs[i].report, par.runs[i].report));
    }
}

TEST_CASE("report csv has one row per epoch") {
    const Dataset data = make_synthetic(1, 32, 16, 2, 8);
    const auto [model, report] =
        train(small_spec(7), data, build_exact(7, false), quick_cfg(EstimatorKind::ste, 3));
    const fs::path p = fs::temp_directory_path() / "approxgrad_test_report.csv";
    write_report_csv(report, p);
    std::ifstream in(p);
    std::string line;
    int rows = 0;
    std::getline(in, line);
    CHECK(line == "epoch,lr,train_loss,train_acc,eval_acc");
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 3);
    fs::remove(p);
}
