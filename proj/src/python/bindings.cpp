#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "approxgrad/appgemm.hpp"
#include "approxgrad/dataset.hpp"
#include "approxgrad/gradlut.hpp"
#include "approxgrad/model.hpp"
#include "approxgrad/multiplier.hpp"
#include "approxgrad/trainer.hpp"

namespace py = pybind11;
using namespace approxgrad;

namespace {

template <typename T>
Tensor<T> tensor_from_array(const py::array_t<T, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw std::invalid_argument("expected a 2-d array");
    Tensor<T> t(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
    std::copy(a.data(), a.data() + t.size(), t.data.begin());
    return t;
}

template <typename T>
py::array_t<T> array_from_tensor(const Tensor<T>& t) {
    py::array_t<T> a({t.rows, t.cols});
    std::copy(t.data.begin(), t.data.end(), a.mutable_data());
    return a;
}

using ArrayR = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ArrayI = py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>;

QuantMode parse_quant_mode(const std::string& s) {
    if (s == "asymmetric") return QuantMode::asymmetric;
    if (s == "symmetric") return QuantMode::symmetric;
    throw std::invalid_argument("quant mode must be asymmetric or symmetric");
}

GradDir parse_dir(const std::string& s) {
    if (s == "x") return GradDir::wrt_x;
    if (s == "w") return GradDir::wrt_w;
    throw std::invalid_argument("direction must be 'x' or 'w'");
}

TrainConfig make_train_config(const std::string& estimator, int epochs, int batch,
                              std::uint64_t seed, int hws, const std::string& optimizer,
                              bool paper_eq7) {
    TrainConfig cfg;
    cfg.estimator = parse_estimator_kind(estimator);
    cfg.epochs = epochs;
    cfg.batch = batch;
    cfg.seed = seed;
    cfg.hws = hws;
    cfg.optimizer = optimizer == "sgd" ? OptimizerKind::sgd : OptimizerKind::adam;
    cfg.paper_eq7 = paper_eq7;
    return cfg;
}

py::dict report_dict(const TrainReport& r) {
    py::list loss, train_acc, eval_acc;
    for (const EpochStats& e : r.trace) {
        loss.append(e.train_loss);
        train_acc.append(e.train_acc);
        eval_acc.append(e.eval_acc);
    }
    py::dict d;
    d["initial_acc"] = r.initial_acc;
    d["final_acc"] = r.final_acc;
    d["train_loss"] = loss;
    d["train_acc"] = train_acc;
    d["eval_acc"] = eval_acc;
    d["wall_seconds"] = r.wall_seconds;
    return d;
}

ModelSpec spec_for(const Dataset& data, const Multiplier& m, const std::vector<int>& hidden) {
    ModelSpec spec;
    spec.layer_sizes.push_back(data.dim);
    for (int h : hidden) spec.layer_sizes.push_back(h);
    spec.layer_sizes.push_back(data.classes);
    spec.quant_bits = m.bits;
    return spec;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "approximate-multiplier modelling, gradient LUTs and retraining";

    py::class_<Multiplier>(m, "Multiplier")
        .def_readonly("bits", &Multiplier::bits)
        .def_readonly("is_signed", &Multiplier::is_signed)
        .def_readonly("name", &Multiplier::name)
        .def_readonly("table", &Multiplier::table)
        .def_property_readonly("lo", &Multiplier::lo)
        .def_property_readonly("hi", &Multiplier::hi)
        .def("eval", &Multiplier::eval, py::arg("w"), py::arg("x"))
        .def("__repr__",
             [](const Multiplier& mu) { return "<Multiplier " + mu.name + ">"; });

    py::class_<ErrorReport>(m, "ErrorReport")
        .def_readonly("er", &ErrorReport::er)
        .def_readonly("nmed", &ErrorReport::nmed)
        .def_readonly("maxed", &ErrorReport::maxed)
        .def("__repr__", [](const ErrorReport& r) {
            return "<ErrorReport er=" + std::to_string(r.er) + " nmed=" + std::to_string(r.nmed) +
                   " maxed=" + std::to_string(r.maxed) + ">";
        });

    m.def("build_exact", &build_exact, py::arg("bits"), py::arg("is_signed") = false);
    m.def("build_truncated", &build_truncated, py::arg("bits"), py::arg("k"));
    m.def("load_multiplier", &load_multiplier, py::arg("path"));
    m.def("save_multiplier", &save_multiplier, py::arg("multiplier"), py::arg("path"));
    m.def("error_metrics", &error_metrics, py::arg("multiplier"));

    py::class_<GradLut1D>(m, "GradLut1D")
        .def_readonly("bits", &GradLut1D::bits)
        .def_readonly("values", &GradLut1D::values)
        .def("at", &GradLut1D::at, py::arg("w"), py::arg("x"));
    py::class_<GradLut2D>(m, "GradLut2D")
        .def_readonly("bits", &GradLut2D::bits)
        .def_readonly("hws", &GradLut2D::hws)
        .def_readonly("values", &GradLut2D::values)
        .def("at", &GradLut2D::at, py::arg("w"), py::arg("x"));

    m.def(
        "build_grad1d",
        [](const Multiplier& mult, const std::string& dir) {
            return build_grad1d(mult, parse_dir(dir));
        },
        py::arg("multiplier"), py::arg("dir") = "x");
    m.def(
        "build_grad2d",
        [](const Multiplier& mult, const std::string& dir, int hws) {
            return build_grad2d(mult, parse_dir(dir), hws == 0 ? default_hws(mult.bits) : hws);
        },
        py::arg("multiplier"), py::arg("dir") = "x", py::arg("hws") = 0);
    m.def(
        "smooth_row",
        [](const Multiplier& mult, int fixed, int hws, const std::string& dir) {
            return smooth_row(mult, fixed, hws, parse_dir(dir));
        },
        py::arg("multiplier"), py::arg("fixed_operand"), py::arg("hws"), py::arg("dir") = "x");
    m.def(
        "ste_grad",
        [](const std::string& dir, int w, int x) { return ste_grad(parse_dir(dir), w, x); },
        py::arg("dir"), py::arg("w"), py::arg("x"));
    m.def("default_hws", &default_hws, py::arg("bits"));
    m.def("max_hws", &max_hws, py::arg("bits"));

    m.def(
        "app_gemm",
        [](const ArrayI& w, const ArrayI& x, const Multiplier& mult) {
            return array_from_tensor(app_gemm(tensor_from_array(w), tensor_from_array(x), mult));
        },
        py::arg("w"), py::arg("x"), py::arg("multiplier"));
    m.def(
        "app_gemm_backward",
        [](const ArrayR& dldy, const ArrayI& w, const ArrayI& x, const Multiplier& mult,
           const std::string& estimator, int hws) {
            const EstimatorPair est =
                make_estimators(mult, parse_estimator_kind(estimator), hws);
            auto [dw, dx] = app_gemm_backward(tensor_from_array(dldy), tensor_from_array(w),
                                              tensor_from_array(x), est.wrt_x, est.wrt_w);
            return py::make_tuple(array_from_tensor(dw), array_from_tensor(dx));
        },
        py::arg("dldy"), py::arg("w"), py::arg("x"), py::arg("multiplier"),
        py::arg("estimator") = "lut1d", py::arg("hws") = 0);

    py::class_<QuantParams>(m, "QuantParams")
        .def_readonly("scale", &QuantParams::scale)
        .def_readonly("zero_point", &QuantParams::zero_point)
        .def_readonly("bits", &QuantParams::bits);
    m.def(
        "observe",
        [](const ArrayR& values, int bits, const std::string& mode) {
            return observe(tensor_from_array(values), bits, parse_quant_mode(mode));
        },
        py::arg("values"), py::arg("bits"), py::arg("mode") = "asymmetric");
    m.def(
        "quantize",
        [](const ArrayR& values, const QuantParams& p) {
            return array_from_tensor(quantize(tensor_from_array(values), p));
        },
        py::arg("values"), py::arg("params"));
    m.def("dequantize_output", &dequantize_output, py::arg("y"), py::arg("w"), py::arg("x"),
          py::arg("pw"), py::arg("px"));

    m.def(
        "fq_linear",
        [](const ArrayR& w, const ArrayR& x, const Multiplier& mult, int bits,
           const std::string& mode) {
            auto [y, ctx] =
                fq_linear_forward(tensor_from_array(w), tensor_from_array(x), mult, bits,
                                  parse_quant_mode(mode));
            return array_from_tensor(y);
        },
        py::arg("w"), py::arg("x"), py::arg("multiplier"), py::arg("bits"),
        py::arg("mode") = "asymmetric",
        "Fake-quantized linear forward pass; returns the dequantized output.");

    m.def(
        "make_synthetic",
        [](std::uint64_t seed, int n_train, int n_eval, int classes, int dim, double separation,
           double noise) {
            const Dataset d = make_synthetic(seed, n_train, n_eval, classes, dim, separation,
                                             noise);
            return py::make_tuple(array_from_tensor(d.train_x), d.train_y,
                                  array_from_tensor(d.eval_x), d.eval_y);
        },
        py::arg("seed"), py::arg("n_train"), py::arg("n_eval"), py::arg("classes") = 2,
        py::arg("dim") = 16, py::arg("separation") = 3.5, py::arg("noise") = 1.0);

    m.def(
        "train_synthetic",
        [](const Multiplier& mult, const std::string& estimator, int epochs, int batch,
           std::uint64_t seed, int hws, const std::string& optimizer, bool paper_eq7,
           std::uint64_t data_seed, int n_train, int n_eval, int classes, int dim,
           double separation, const std::vector<int>& hidden) {
            const Dataset data =
                make_synthetic(data_seed, n_train, n_eval, classes, dim, separation, 1.0);
            const TrainConfig cfg =
                make_train_config(estimator, epochs, batch, seed, hws, optimizer, paper_eq7);
            auto [model, report] = train(spec_for(data, mult, hidden), data, mult, cfg);
            return report_dict(report);
        },
        py::arg("multiplier"), py::arg("estimator") = "lut1d", py::arg("epochs") = 30,
        py::arg("batch") = 64, py::arg("seed") = 1, py::arg("hws") = 0,
        py::arg("optimizer") = "adam", py::arg("paper_eq7") = false, py::arg("data_seed") = 20240,
        py::arg("n_train") = 512, py::arg("n_eval") = 256, py::arg("classes") = 2,
        py::arg("dim") = 16, py::arg("separation") = 3.5,
        py::arg("hidden") = std::vector<int>{32, 32},
        "Retrain an MLP on the deterministic synthetic task; returns the report.");

    m.def(
        "compare_estimators_synthetic",
        [](const Multiplier& mult, int epochs, int batch, std::uint64_t seed, int hws,
           std::uint64_t data_seed, int n_train, int n_eval, int classes, int dim,
           double separation, const std::vector<int>& hidden) {
            const Dataset data =
                make_synthetic(data_seed, n_train, n_eval, classes, dim, separation, 1.0);
            const TrainConfig cfg =
                make_train_config("ste", epochs, batch, seed, hws, "adam", false);
            const ComparisonReport cmp =
                compare_estimators(spec_for(data, mult, hidden), data, mult, cfg);
            py::dict out;
            for (const ComparisonRun& run : cmp.runs)
                out[estimator_kind_name(run.kind)] = report_dict(run.report);
            out["impr_than_ste"] =
                py::dict(py::arg("lut1d") = cmp.delta_lut1d, py::arg("lut2d") = cmp.delta_lut2d);
            return out;
        },
        py::arg("multiplier"), py::arg("epochs") = 30, py::arg("batch") = 64, py::arg("seed") = 1,
        py::arg("hws") = 0, py::arg("data_seed") = 20240, py::arg("n_train") = 512,
        py::arg("n_eval") = 256, py::arg("classes") = 2, py::arg("dim") = 16,
        py::arg("separation") = 3.5, py::arg("hidden") = std::vector<int>{32, 32});
}
