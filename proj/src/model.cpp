#include "approxgrad/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "approxgrad/rng.hpp"

namespace approxgrad {

void ModelSpec::check() const {
    if (layer_sizes.size() < 2)
        throw std::invalid_argument("model needs at least input and output sizes");
    for (int s : layer_sizes)
        if (s < 1) throw std::invalid_argument("layer sizes must be positive");
    if (quant_bits < 2 || quant_bits > 8)
        throw std::invalid_argument("quant bits must be in [2, 8]");
    if (!exact_layer.empty() && exact_layer.size() != static_cast<std::size_t>(layers()))
        throw std::invalid_argument("exact_layer must have one flag per layer");
}

Mlp init_mlp(const ModelSpec& spec, std::uint64_t seed) {
    spec.check();
    Mlp m;
    m.spec = spec;
    CounterRng rng(seed, /*stream=*/0x1217);
    for (int l = 0; l < spec.layers(); ++l) {
        const int fan_in = spec.layer_sizes[l], fan_out = spec.layer_sizes[l + 1];
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        TensorR w(fan_out, fan_in);
        for (auto& v : w.data) v = rng.uniform(-limit, limit);
        m.weights.push_back(std::move(w));
        m.biases.emplace_back(spec.bias ? fan_out : 0, 0.0);
        m.last_pw.emplace_back();
        m.last_px.emplace_back();
    }
    return m;
}

namespace {

const char* mode_name(QuantMode m) {
    return m == QuantMode::asymmetric ? "asymmetric" : "symmetric";
}

QuantMode parse_mode(const std::string& s) {
    if (s == "asymmetric") return QuantMode::asymmetric;
    if (s == "symmetric") return QuantMode::symmetric;
    throw std::runtime_error("unknown quant mode '" + s + "'");
}

void write_params(std::ofstream& out, const char* tag, const QuantParams& p) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", p.scale);
    out << tag << " scale=" << buf << " zp=" << p.zero_point << " bits=" << p.bits
        << " mode=" << mode_name(p.mode) << "\n";
}

QuantParams read_params(std::istream& in, const std::string& tag, const std::string& path) {
    std::string got_tag, scale_tok, zp_tok, bits_tok, mode_tok;
    if (!(in >> got_tag >> scale_tok >> zp_tok >> bits_tok >> mode_tok) || got_tag != tag)
        throw std::runtime_error(path + ": expected quant params '" + tag + "'");
    QuantParams p;
    p.scale = std::stod(scale_tok.substr(scale_tok.find('=') + 1));
    p.zero_point = std::stoi(zp_tok.substr(zp_tok.find('=') + 1));
    p.bits = std::stoi(bits_tok.substr(bits_tok.find('=') + 1));
    p.mode = parse_mode(mode_tok.substr(mode_tok.find('=') + 1));
    return p;
}

}  // namespace

void save_checkpoint(const Mlp& model, const std::filesystem::path& path) {
    model.spec.check();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    const ModelSpec& s = model.spec;
    out << "approxgrad-ckpt v1\n";
    out << "layers=" << s.layers() << " relu=" << (s.relu ? 1 : 0) << " bias=" << (s.bias ? 1 : 0)
        << " bits=" << s.quant_bits << " mode=" << mode_name(s.quant_mode) << "\n";
    out << "sizes";
    for (int v : s.layer_sizes) out << " " << v;
    out << "\nexact";
    for (int l = 0; l < s.layers(); ++l) out << " " << (s.layer_exact(l) ? 1 : 0);
    out << "\n";

    char buf[40];
    for (int l = 0; l < s.layers(); ++l) {
        const TensorR& w = model.weights[l];
        out << "layer " << l << "\n";
        out << "W " << w.rows << " " << w.cols << "\n";
        for (int i = 0; i < w.rows; ++i) {
            for (int j = 0; j < w.cols; ++j) {
                std::snprintf(buf, sizeof buf, "%.17g", w.at(i, j));
                out << buf << (j + 1 == w.cols ? '\n' : ' ');
            }
        }
        out << "b " << model.biases[l].size() << "\n";
        for (std::size_t i = 0; i < model.biases[l].size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", model.biases[l][i]);
            out << buf << (i + 1 == model.biases[l].size() ? '\n' : ' ');
        }
        if (model.biases[l].empty()) out << "\n";
        write_params(out, "qw", model.last_pw[l]);
        write_params(out, "qx", model.last_px[l]);
    }
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

Mlp load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string magic, version;
    in >> magic >> version;
    if (magic != "approxgrad-ckpt" || version != "v1")
        throw std::runtime_error(path.string() + ": malformed header");

    const auto field = [&](const char* name) -> std::string {
        std::string tok;
        if (!(in >> tok) || tok.rfind(name, 0) != 0)
            throw std::runtime_error(path.string() + ": expected field '" + std::string(name) +
                                     "', got '" + tok + "'");
        return tok.substr(tok.find('=') + 1);
    };

    Mlp m;
    const int layers = std::stoi(field("layers="));
    m.spec.relu = field("relu=") == "1";
    m.spec.bias = field("bias=") == "1";
    m.spec.quant_bits = std::stoi(field("bits="));
    m.spec.quant_mode = parse_mode(field("mode="));

    std::string tok;
    in >> tok;  // "sizes"
    m.spec.layer_sizes.resize(layers + 1);
    for (int& v : m.spec.layer_sizes) in >> v;
    in >> tok;  // "exact"
    m.spec.exact_layer.resize(layers);
    for (auto& v : m.spec.exact_layer) {
        int f = 0;
        in >> f;
        v = static_cast<std::uint8_t>(f);
    }
    m.spec.check();

    for (int l = 0; l < layers; ++l) {
        int idx = 0, rows = 0, cols = 0;
        if (!(in >> tok >> idx) || tok != "layer" || idx != l)
            throw std::runtime_error(path.string() + ": bad layer block " + std::to_string(l));
        if (!(in >> tok >> rows >> cols) || tok != "W")
            throw std::runtime_error(path.string() + ": bad weight header, layer " +
                                     std::to_string(l));
        TensorR w(rows, cols);
        for (auto& v : w.data)
            if (!(in >> v)) throw std::runtime_error(path.string() + ": truncated weights");
        m.weights.push_back(std::move(w));

        std::size_t blen = 0;
        if (!(in >> tok >> blen) || tok != "b")
            throw std::runtime_error(path.string() + ": bad bias header, layer " +
                                     std::to_string(l));
        std::vector<double> b(blen);
        for (auto& v : b)
            if (!(in >> v)) throw std::runtime_error(path.string() + ": truncated biases");
        m.biases.push_back(std::move(b));

        m.last_pw.push_back(read_params(in, "qw", path.string()));
        m.last_px.push_back(read_params(in, "qx", path.string()));
    }
    return m;
}

}  // namespace approxgrad
