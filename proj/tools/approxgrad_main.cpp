#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "approxgrad/appgemm.hpp"
#include "approxgrad/dataset.hpp"
#include "approxgrad/gradlut.hpp"
#include "approxgrad/model.hpp"
#include "approxgrad/multiplier.hpp"
#include "approxgrad/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace approxgrad;

namespace {

std::string pct(double frac, int decimals) { return format_percent(frac, decimals); }

json metrics_json(const Multiplier& m, const ErrorReport& r) {
    return json{{"name", m.name},   {"bits", m.bits}, {"signed", m.is_signed},
                {"er", r.er},       {"nmed", r.nmed}, {"maxed", r.maxed}};
}

// ---- mult ----------------------------------------------------------------

struct MultGenArgs {
    std::string kind;
    int bits = 8;
    int k = 0;
    bool is_signed = false;
    std::string out;
};

int cmd_mult_gen(const MultGenArgs& a) {
    Multiplier m;
    if (a.kind == "exact") {
        m = build_exact(a.bits, a.is_signed);
    } else if (a.kind == "rm") {
        if (a.k <= 0) throw CLI::ValidationError("--k is required for --kind rm");
        if (a.is_signed)
            throw CLI::ValidationError("rm-k truncation is unsigned-only; drop --signed");
        m = build_truncated(a.bits, a.k);
    } else {
        throw CLI::ValidationError("--kind must be exact or rm");
    }
    const fs::path out = a.out.empty() ? fs::path(m.name + ".amlut") : fs::path(a.out);
    save_multiplier(m, out);
    std::cout << "wrote " << out.string() << " (" << m.name << ", " << m.table.size()
              << " entries)\n";
    return 0;
}

int cmd_mult_metrics(const std::string& in) {
    const Multiplier m = load_multiplier(in);
    const ErrorReport r = error_metrics(m);
    std::cout << "ER=" << pct(r.er, 1) << "% NMED=" << pct(r.nmed, 2) << "% MaxED=" << r.maxed
              << "\n";
    std::cout << metrics_json(m, r).dump() << "\n";
    return 0;
}

int cmd_mult_info(const std::string& in) {
    const Multiplier m = load_multiplier(in);
    std::int64_t mn = m.table[0], mx = m.table[0];
    for (std::int32_t v : m.table) {
        mn = std::min<std::int64_t>(mn, v);
        mx = std::max<std::int64_t>(mx, v);
    }
    std::cout << m.name << ": " << m.bits << "-bit " << (m.is_signed ? "signed" : "unsigned")
              << ", " << m.table.size() << " entries, outputs in [" << mn << ", " << mx << "]\n";
    std::cout << json{{"name", m.name},
                      {"bits", m.bits},
                      {"signed", m.is_signed},
                      {"entries", m.table.size()},
                      {"min", mn},
                      {"max", mx}}
                     .dump()
              << "\n";
    return 0;
}

// ---- grad ----------------------------------------------------------------

struct GradBuildArgs {
    std::string in, out, kind = "2d", dir = "x";
    int hws = 0;
};

int cmd_grad_build(const GradBuildArgs& a) {
    const Multiplier m = load_multiplier(a.in);
    const GradDir dir = a.dir == "w" ? GradDir::wrt_w : GradDir::wrt_x;
    const fs::path out =
        a.out.empty() ? fs::path(m.name + "_" + a.kind + a.dir + ".gradlut") : fs::path(a.out);

    double mn = 0, mx = 0, mean = 0;
    std::size_t n = 0;
    const auto stats = [&](const std::vector<double>& v) {
        mn = mx = v[0];
        for (double x : v) {
            mn = std::min(mn, x);
            mx = std::max(mx, x);
            mean += x;
        }
        n = v.size();
        mean /= static_cast<double>(n);
    };

    if (a.kind == "1d") {
        const GradLut1D g = build_grad1d(m, dir);
        save_gradlut(g, out);
        stats(g.values);
    } else if (a.kind == "2d") {
        const int hws = a.hws == 0 ? default_hws(m.bits) : a.hws;
        const GradLut2D g = build_grad2d(m, dir, hws);
        save_gradlut(g, out);
        stats(g.values);
    } else {
        throw CLI::ValidationError("--kind must be 1d or 2d");
    }
    std::cout << "wrote " << out.string() << " (" << n << " entries, min=" << mn
              << " mean=" << mean << " max=" << mx << ")\n";
    return 0;
}

int cmd_grad_show(const std::string& in, std::optional<int> w, std::optional<int> x) {
    const auto lut = load_gradlut(in);
    if (std::holds_alternative<GradLut1D>(lut)) {
        const GradLut1D& g = std::get<GradLut1D>(lut);
        const bool wrt_x = g.dir == GradDir::wrt_x;
        const std::optional<int> key = wrt_x ? w : x;
        if (!key)
            throw CLI::ValidationError(std::string("1d LUT with dir=") + (wrt_x ? "x" : "w") +
                                       " needs --" + (wrt_x ? "w" : "x"));
        const double v = wrt_x ? g.at(*key, g.lo()) : g.at(g.lo(), *key);
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", v);
        std::cout << "Grad1D_" << (wrt_x ? "X[W=" : "W[X=") << *key << "] = " << buf << "\n";
        std::cout << json{{"kind", "1d"}, {"index", *key}, {"value", v}}.dump() << "\n";
        return 0;
    }
    const GradLut2D& g = std::get<GradLut2D>(lut);
    if (!w || !x) throw CLI::ValidationError("2d LUT needs both --w and --x");
    const double v = g.at(*w, *x);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    std::cout << "Grad2D_" << (g.dir == GradDir::wrt_x ? "X" : "W") << "[W=" << *w << ", X=" << *x
              << "] = " << buf << "\n";
    std::cout << json{{"kind", "2d"}, {"w", *w}, {"x", *x}, {"value", v}}.dump() << "\n";
    return 0;
}

// ---- train / compare -----------------------------------------------------

struct DatasetSpec {
    std::string kind = "synthetic";
    std::uint64_t seed = 20240;
    int n_train = 512, n_eval = 256, classes = 2, dim = 16;
    double separation = 3.5, noise = 1.0;
    std::string path, label_column = "label";
    double eval_fraction = 0.2;
};

struct RunArgs {
    std::string mult_path;
    std::string config_path;
    std::string out_dir;
    std::string estimator = "lut1d";
    std::string optimizer = "adam";
    TrainConfig cfg;
    DatasetSpec data;
    std::vector<int> model_layers;  // empty = [dim, 32, 32, classes]
    bool model_relu = true;
    bool model_bias = true;
    int model_bits = 0;  // 0 = multiplier bits
    std::string model_mode = "asymmetric";
    std::vector<std::uint8_t> exact_layers;
    bool bench = false;
};

void apply_config_file(RunArgs& a) {
    if (a.config_path.empty()) return;
    std::ifstream in(a.config_path);
    if (!in) throw std::runtime_error("cannot open config " + a.config_path);
    json doc;
    in >> doc;

    if (doc.contains("estimator")) a.estimator = doc["estimator"].get<std::string>();
    if (doc.contains("epochs")) a.cfg.epochs = doc["epochs"].get<int>();
    if (doc.contains("batch")) a.cfg.batch = doc["batch"].get<int>();
    if (doc.contains("seed")) a.cfg.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("hws")) a.cfg.hws = doc["hws"].get<int>();
    if (doc.contains("paper_eq7")) a.cfg.paper_eq7 = doc["paper_eq7"].get<bool>();
    if (doc.contains("optimizer")) a.optimizer = doc["optimizer"].get<std::string>();
    if (doc.contains("adam")) {
        const json& ad = doc["adam"];
        if (ad.contains("beta1")) a.cfg.adam.beta1 = ad["beta1"].get<double>();
        if (ad.contains("beta2")) a.cfg.adam.beta2 = ad["beta2"].get<double>();
        if (ad.contains("eps")) a.cfg.adam.eps = ad["eps"].get<double>();
    }
    if (doc.contains("schedule")) {
        a.cfg.schedule.clear();
        for (const json& seg : doc["schedule"])
            a.cfg.schedule.push_back({seg.at("first").get<int>(), seg.at("last").get<int>(),
                                      seg.at("rate").get<double>()});
    }
    if (doc.contains("model")) {
        const json& md = doc["model"];
        if (md.contains("layers")) a.model_layers = md["layers"].get<std::vector<int>>();
        if (md.contains("relu")) a.model_relu = md["relu"].get<bool>();
        if (md.contains("bias")) a.model_bias = md["bias"].get<bool>();
        if (md.contains("bits")) a.model_bits = md["bits"].get<int>();
        if (md.contains("mode")) a.model_mode = md["mode"].get<std::string>();
        if (md.contains("exact")) a.exact_layers = md["exact"].get<std::vector<std::uint8_t>>();
    }
    if (doc.contains("dataset")) {
        const json& ds = doc["dataset"];
        if (ds.contains("kind")) a.data.kind = ds["kind"].get<std::string>();
        if (ds.contains("seed")) a.data.seed = ds["seed"].get<std::uint64_t>();
        if (ds.contains("n_train")) a.data.n_train = ds["n_train"].get<int>();
        if (ds.contains("n_eval")) a.data.n_eval = ds["n_eval"].get<int>();
        if (ds.contains("classes")) a.data.classes = ds["classes"].get<int>();
        if (ds.contains("dim")) a.data.dim = ds["dim"].get<int>();
        if (ds.contains("separation")) a.data.separation = ds["separation"].get<double>();
        if (ds.contains("noise")) a.data.noise = ds["noise"].get<double>();
        if (ds.contains("path")) a.data.path = ds["path"].get<std::string>();
        if (ds.contains("label_column")) a.data.label_column = ds["label_column"].get<std::string>();
        if (ds.contains("eval_fraction")) a.data.eval_fraction = ds["eval_fraction"].get<double>();
    }
}

Dataset build_dataset(const DatasetSpec& d) {
    if (d.kind == "synthetic")
        return make_synthetic(d.seed, d.n_train, d.n_eval, d.classes, d.dim, d.separation,
                              d.noise);
    if (d.kind == "csv") return load_csv_dataset(d.path, d.label_column, d.eval_fraction);
    throw std::runtime_error("unknown dataset kind '" + d.kind + "'");
}

ModelSpec build_model_spec(const RunArgs& a, const Dataset& data, const Multiplier& m) {
    ModelSpec spec;
    spec.layer_sizes =
        a.model_layers.empty() ? std::vector<int>{data.dim, 32, 32, data.classes} : a.model_layers;
    spec.relu = a.model_relu;
    spec.bias = a.model_bias;
    spec.quant_bits = a.model_bits == 0 ? m.bits : a.model_bits;
    spec.quant_mode = a.model_mode == "symmetric" ? QuantMode::symmetric : QuantMode::asymmetric;
    spec.exact_layer = a.exact_layers;
    return spec;
}

json dataset_echo(const DatasetSpec& d) {
    if (d.kind == "csv")
        return json{{"kind", "csv"},
                    {"path", d.path},
                    {"label_column", d.label_column},
                    {"eval_fraction", d.eval_fraction}};
    return json{{"kind", "synthetic"}, {"seed", d.seed},         {"n_train", d.n_train},
                {"n_eval", d.n_eval},  {"classes", d.classes},   {"dim", d.dim},
                {"separation", d.separation}, {"noise", d.noise}};
}

json config_echo(const RunArgs& a, const ModelSpec& spec, const Multiplier& m,
                 const std::string& estimator) {
    json sched = json::array();
    if (a.cfg.schedule.empty()) {
        const int third = (a.cfg.epochs + 2) / 3;
        sched.push_back({{"first", 1}, {"last", third}, {"rate", 1e-3}});
        if (2 * third > third)
            sched.push_back({{"first", third + 1}, {"last", 2 * third}, {"rate", 5e-4}});
        if (a.cfg.epochs > 2 * third)
            sched.push_back({{"first", 2 * third + 1}, {"last", a.cfg.epochs}, {"rate", 2.5e-4}});
    } else {
        for (const LrSegment& s : a.cfg.schedule)
            sched.push_back({{"first", s.first_epoch}, {"last", s.last_epoch}, {"rate", s.rate}});
    }
    return json{
        {"multiplier", m.name},
        {"multiplier_file", a.mult_path},
        {"estimator", estimator},
        {"hws", a.cfg.hws == 0 ? default_hws(m.bits) : a.cfg.hws},
        {"epochs", a.cfg.epochs},
        {"batch", a.cfg.batch},
        {"seed", a.cfg.seed},
        {"optimizer", a.optimizer},
        {"adam", {{"beta1", a.cfg.adam.beta1}, {"beta2", a.cfg.adam.beta2}, {"eps", a.cfg.adam.eps}}},
        {"schedule", sched},
        {"paper_eq7", a.cfg.paper_eq7},
        {"model",
         {{"layers", spec.layer_sizes},
          {"relu", spec.relu},
          {"bias", spec.bias},
          {"bits", spec.quant_bits},
          {"mode", spec.quant_mode == QuantMode::symmetric ? "symmetric" : "asymmetric"}}},
        {"dataset", dataset_echo(a.data)},
    };
}

json report_json(const TrainReport& r) {
    json epochs = json::array();
    for (const EpochStats& e : r.trace)
        epochs.push_back({{"epoch", e.epoch},
                          {"lr", e.lr},
                          {"train_loss", e.train_loss},
                          {"train_acc", e.train_acc},
                          {"eval_acc", e.eval_acc}});
    return json{{"initial_acc", r.initial_acc}, {"final_acc", r.final_acc}, {"epochs", epochs}};
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

int cmd_train(RunArgs& a) {
    apply_config_file(a);
    a.cfg.estimator = parse_estimator_kind(a.estimator);
    a.cfg.optimizer = a.optimizer == "sgd" ? OptimizerKind::sgd : OptimizerKind::adam;
    const Multiplier m = load_multiplier(a.mult_path);
    const Dataset data = build_dataset(a.data);
    const ModelSpec spec = build_model_spec(a, data, m);

    const auto [model, report] = train(spec, data, m, a.cfg);

    fs::create_directories(a.out_dir);
    const fs::path dir(a.out_dir);
    save_checkpoint(model, dir / "checkpoint.ckpt");
    write_report_csv(report, dir / "report.csv", a.bench);

    json summary{{"config", config_echo(a, spec, m, a.estimator)}, {"result", report_json(report)}};
    if (a.bench) {
        json per_epoch = json::array();
        for (const EpochStats& e : report.trace) per_epoch.push_back(e.seconds);
        summary["timing"] = {{"wall_seconds", report.wall_seconds},
                             {"epoch_seconds", per_epoch}};
    }
    write_text(dir / "summary.json", summary.dump(2) + "\n");

    for (const EpochStats& e : report.trace)
        std::cout << "epoch " << e.epoch << " lr " << e.lr << " loss " << e.train_loss
                  << " train_acc " << e.train_acc << " eval_acc " << e.eval_acc << "\n";
    std::cout << "initial_acc " << report.initial_acc << " final_acc " << report.final_acc << "\n";
    if (a.bench)
        std::cout << "wall_seconds " << report.wall_seconds << " ("
                  << report.wall_seconds / a.cfg.epochs << " per epoch)\n";
    std::cout << "wrote " << (dir / "summary.json").string() << "\n";
    return 0;
}

int cmd_compare(RunArgs& a) {
    apply_config_file(a);
    a.cfg.optimizer = a.optimizer == "sgd" ? OptimizerKind::sgd : OptimizerKind::adam;
    const Multiplier m = load_multiplier(a.mult_path);
    const Dataset data = build_dataset(a.data);
    const ModelSpec spec = build_model_spec(a, data, m);

    const ComparisonReport cmp = compare_estimators(spec, data, m, a.cfg);

    fs::create_directories(a.out_dir);
    const fs::path dir(a.out_dir);
    write_comparison_csv(cmp, dir / "comparison.csv");
    for (const ComparisonRun& run : cmp.runs) {
        const fs::path sub = dir / estimator_kind_name(run.kind);
        fs::create_directories(sub);
        write_report_csv(run.report, sub / "report.csv", a.bench);
    }

    json runs = json::array();
    for (const ComparisonRun& run : cmp.runs) {
        json r{{"estimator", estimator_kind_name(run.kind)},
               {"initial_acc", run.report.initial_acc},
               {"final_acc", run.report.final_acc}};
        if (a.bench) r["wall_seconds"] = run.report.wall_seconds;
        runs.push_back(r);
    }
    json summary{{"config", config_echo(a, spec, m, "all")},
                 {"runs", runs},
                 {"impr_than_ste", {{"lut1d", cmp.delta_lut1d}, {"lut2d", cmp.delta_lut2d}}}};
    if (a.bench) {
        const double ste_s = cmp.runs[0].report.wall_seconds;
        summary["timing_ratio_vs_ste"] = {
            {"lut1d", ste_s > 0 ? cmp.runs[1].report.wall_seconds / ste_s : 0.0},
            {"lut2d", ste_s > 0 ? cmp.runs[2].report.wall_seconds / ste_s : 0.0}};
    }
    write_text(dir / "comparison.json", summary.dump(2) + "\n");

    for (const ComparisonRun& run : cmp.runs)
        std::cout << estimator_kind_name(run.kind) << ": initial " << run.report.initial_acc
                  << " final " << run.report.final_acc << "\n";
    std::cout << "impr_than_ste lut1d " << cmp.delta_lut1d << " lut2d " << cmp.delta_lut2d << "\n";
    std::cout << "wrote " << (dir / "comparison.json").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"approximate-multiplier toolkit: tables, gradients, retraining"};
    app.require_subcommand(1);

    // mult
    CLI::App* mult = app.add_subcommand("mult", "generate and inspect multiplier tables");
    mult->require_subcommand(1);
    MultGenArgs gen_args;
    CLI::App* mult_gen = mult->add_subcommand("gen", "generate a multiplier table");
    mult_gen->add_option("--kind", gen_args.kind, "exact|rm")->required();
    mult_gen->add_option("--bits", gen_args.bits, "bit width in [2,8]")->required();
    mult_gen->add_option("--k", gen_args.k, "truncated partial-product columns (rm)");
    mult_gen->add_flag("--signed", gen_args.is_signed, "signed operands (exact only)");
    mult_gen->add_option("--out", gen_args.out, "output .amlut path (default <name>.amlut)");

    std::string mult_in;
    CLI::App* mult_metrics = mult->add_subcommand("metrics", "exhaustive ER/NMED/MaxED");
    mult_metrics->add_option("--in", mult_in, "input .amlut")->required();
    CLI::App* mult_info = mult->add_subcommand("info", "table summary");
    mult_info->add_option("--in", mult_in, "input .amlut")->required();

    // grad
    CLI::App* grad = app.add_subcommand("grad", "build and query gradient LUTs");
    grad->require_subcommand(1);
    GradBuildArgs gb;
    CLI::App* grad_build = grad->add_subcommand("build", "build a gradient LUT");
    grad_build->add_option("--in", gb.in, "input .amlut")->required();
    grad_build->add_option("--kind", gb.kind, "2d|1d");
    grad_build->add_option("--dir", gb.dir, "x|w");
    grad_build->add_option("--hws", gb.hws, "half window size")->check(CLI::Range(1, 127));
    grad_build->add_option("--out", gb.out, "output .gradlut path");

    std::string grad_in;
    std::optional<int> show_w, show_x;
    CLI::App* grad_show = grad->add_subcommand("show", "print one LUT entry");
    grad_show->add_option("--in", grad_in, "input .gradlut")->required();
    grad_show->add_option("--w", show_w, "W operand");
    grad_show->add_option("--x", show_x, "X operand");

    // train / compare
    RunArgs run;
    const auto add_run_options = [&](CLI::App* c, bool with_estimator) {
        c->add_option("--mult", run.mult_path, "multiplier .amlut")->required();
        if (with_estimator) c->add_option("--estimator", run.estimator, "ste|lut1d|lut2d");
        c->add_option("--config", run.config_path, "JSON config file (overrides flags)");
        c->add_option("--out", run.out_dir, "output directory")->required();
        c->add_option("--epochs", run.cfg.epochs, "training epochs");
        c->add_option("--batch", run.cfg.batch, "batch size");
        c->add_option("--seed", run.cfg.seed, "PRNG seed");
        c->add_option("--hws", run.cfg.hws, "half window size for lut2d (0 = default)");
        c->add_option("--optimizer", run.optimizer, "adam|sgd");
        c->add_flag("--paper-eq7", run.cfg.paper_eq7,
                    "drop the zero-point terms in the backward pass");
        c->add_flag("--bench", run.bench, "record wall-time in reports");
    };
    CLI::App* train_cmd = app.add_subcommand("train", "retrain a model with one estimator");
    add_run_options(train_cmd, true);
    CLI::App* compare_cmd =
        app.add_subcommand("compare", "train with ste, lut1d and lut2d side by side");
    add_run_options(compare_cmd, false);

    try {
        app.parse(argc, argv);
        if (mult_gen->parsed()) return cmd_mult_gen(gen_args);
        if (mult_metrics->parsed()) return cmd_mult_metrics(mult_in);
        if (mult_info->parsed()) return cmd_mult_info(mult_in);
        if (grad_build->parsed()) return cmd_grad_build(gb);
        if (grad_show->parsed()) return cmd_grad_show(grad_in, show_w, show_x);
        if (train_cmd->parsed()) return cmd_train(run);
        if (compare_cmd->parsed()) return cmd_compare(run);
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const TrainingDiverged& e) {
        std::cerr << "training diverged: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
