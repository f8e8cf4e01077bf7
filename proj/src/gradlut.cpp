#include "approxgrad/gradlut.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

namespace approxgrad {

namespace {

void check_hws(const Multiplier& m, int hws) {
    if (hws < 1 || hws > max_hws(m.bits))
        throw std::invalid_argument("hws must be in [1, " + std::to_string(max_hws(m.bits)) +
                                    "] for " + std::to_string(m.bits) + "-bit, got " +
                                    std::to_string(hws));
}

// AM with the (fixed, varied) operand roles set by the direction.
std::int32_t am(const Multiplier& m, GradDir dir, int fixed, int varied) {
    return dir == GradDir::wrt_x ? m.at(fixed, varied) : m.at(varied, fixed);
}

// Average change of AM per unit of the varied operand at a fixed
// co-operand: (max - min) / (2^B - 1). Shared by the 1D builder and the
// 2D boundary rule so the reduction case is bit-identical.
double range_rate(const Multiplier& m, GradDir dir, int fixed) {
    std::int64_t mn = am(m, dir, fixed, m.lo());
    std::int64_t mx = mn;
    for (int v = m.lo() + 1; v <= m.hi(); ++v) {
        const std::int64_t y = am(m, dir, fixed, v);
        mn = std::min(mn, y);
        mx = std::max(mx, y);
    }
    return static_cast<double>(mx - mn) / static_cast<double>(m.side() - 1);
}

void require_format(const std::string& path, bool ok, const std::string& what) {
    if (!ok) throw std::runtime_error(path + ": " + what);
}

}  // namespace

double ste_grad(GradDir dir, int w, int x) {
    return dir == GradDir::wrt_x ? static_cast<double>(w) : static_cast<double>(x);
}

std::vector<double> smooth_row(const Multiplier& m, int fixed_operand, int hws, GradDir dir) {
    check_hws(m, hws);
    if (!m.in_range(fixed_operand))
        throw std::out_of_range("fixed operand " + std::to_string(fixed_operand) +
                                " outside range of " + m.name);
    const int lo = m.lo() + hws, hi = m.hi() - hws;
    std::vector<double> s;
    s.reserve(hi - lo + 1);
    for (int v = lo; v <= hi; ++v) {
        std::int64_t acc = 0;
        for (int d = -hws; d <= hws; ++d) acc += am(m, dir, fixed_operand, v + d);
        s.push_back(static_cast<double>(acc) / (2 * hws + 1));
    }
    return s;
}

GradLut2D build_grad2d(const Multiplier& m, GradDir dir, int hws) {
    check_hws(m, hws);
    validate(m);
    GradLut2D g;
    g.bits = m.bits;
    g.is_signed = m.is_signed;
    g.dir = dir;
    g.hws = hws;
    g.values.resize(m.table.size());
    const int side = m.side();
    const int inner_lo = m.lo() + hws, inner_hi = m.hi() - hws;
    for (int fixed = m.lo(); fixed <= m.hi(); ++fixed) {
        const std::vector<double> s = smooth_row(m, fixed, hws, dir);
        const double edge = range_rate(m, dir, fixed);
        for (int v = m.lo(); v <= m.hi(); ++v) {
            double val = edge;
            if (v > inner_lo && v < inner_hi)
                val = (s[v + 1 - inner_lo] - s[v - 1 - inner_lo]) / 2.0;
            const std::size_t w_idx = m.idx(dir == GradDir::wrt_x ? fixed : v);
            const std::size_t x_idx = m.idx(dir == GradDir::wrt_x ? v : fixed);
            g.values[w_idx * side + x_idx] = val;
        }
    }
    return g;
}

GradLut1D build_grad1d(const Multiplier& m, GradDir dir) {
    validate(m);
    GradLut1D g;
    g.bits = m.bits;
    g.is_signed = m.is_signed;
    g.dir = dir;
    g.values.resize(m.side());
    for (int fixed = m.lo(); fixed <= m.hi(); ++fixed)
        g.values[m.idx(fixed)] = range_rate(m, dir, fixed);
    return g;
}

double lookup(const GradEstimator& g, int w, int x) {
    const auto check = [&](int bits, bool is_signed) {
        const int lo = is_signed ? -(1 << (bits - 1)) : 0;
        const int hi = is_signed ? (1 << (bits - 1)) - 1 : (1 << bits) - 1;
        if (w < lo || w > hi || x < lo || x > hi)
            throw std::out_of_range("gradient lookup operand (" + std::to_string(w) + ", " +
                                    std::to_string(x) + ") outside [" + std::to_string(lo) +
                                    ", " + std::to_string(hi) + "]");
    };
    return std::visit(
        [&](const auto& est) -> double {
            check(est.bits, est.is_signed);
            using T = std::decay_t<decltype(est)>;
            if constexpr (std::is_same_v<T, SteGrad>)
                return ste_grad(est.dir, w, x);
            else
                return est.at(w, x);
        },
        g);
}

namespace {

void write_values(std::ofstream& out, const std::vector<double>& values, int per_line) {
    char buf[40];
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", values[i]);
        out << buf << ((i + 1) % per_line == 0 ? '\n' : ' ');
    }
}

void write_header(std::ofstream& out, int bits, bool is_signed, const char* kind, GradDir dir,
                  const std::string& hws) {
    out << "gradlut v1\n";
    out << "bits=" << bits << " signed=" << (is_signed ? 1 : 0) << " kind=" << kind
        << " dir=" << (dir == GradDir::wrt_x ? 'x' : 'w') << " hws=" << hws << "\n";
}

}  // namespace

void save_gradlut(const GradLut2D& g, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_header(out, g.bits, g.is_signed, "2d", g.dir, std::to_string(g.hws));
    write_values(out, g.values, g.side());
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

void save_gradlut(const GradLut1D& g, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_header(out, g.bits, g.is_signed, "1d", g.dir, "--");
    write_values(out, g.values, 1 << g.bits);
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::variant<GradLut1D, GradLut2D> load_gradlut(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string magic, version;
    in >> magic >> version;
    require_format(path.string(), magic == "gradlut" && version == "v1",
                        "malformed header, expected 'gradlut v1'");

    int bits = 0;
    bool is_signed = false;
    std::string kind, hws_tok;
    GradDir dir = GradDir::wrt_x;
    for (int field = 0; field < 5; ++field) {
        std::string tok;
        require_format(path.string(), static_cast<bool>(in >> tok), "truncated header");
        if (tok.rfind("bits=", 0) == 0)
            bits = std::stoi(tok.substr(5));
        else if (tok.rfind("signed=", 0) == 0)
            is_signed = tok.substr(7) == "1";
        else if (tok.rfind("kind=", 0) == 0)
            kind = tok.substr(5);
        else if (tok.rfind("dir=", 0) == 0)
            dir = tok.substr(4) == "w" ? GradDir::wrt_w : GradDir::wrt_x;
        else if (tok.rfind("hws=", 0) == 0)
            hws_tok = tok.substr(4);
        else
            throw std::runtime_error(path.string() + ": unexpected header token '" + tok + "'");
    }
    require_format(path.string(), bits >= 2 && bits <= 8, "bits out of range");
    require_format(path.string(), kind == "1d" || kind == "2d", "kind must be 1d or 2d");

    const std::size_t expect =
        kind == "2d" ? (std::size_t{1} << (2 * bits)) : (std::size_t{1} << bits);
    std::vector<double> values;
    values.reserve(expect);
    double v = 0;
    while (in >> v) values.push_back(v);
    require_format(path.string(), in.eof(), "real parse failure");
    require_format(path.string(), values.size() == expect,
                        "entry count mismatch, expected " + std::to_string(expect) +
                            ", got " + std::to_string(values.size()));

    if (kind == "1d") {
        GradLut1D g;
        g.bits = bits;
        g.is_signed = is_signed;
        g.dir = dir;
        g.values = std::move(values);
        return g;
    }
    GradLut2D g;
    g.bits = bits;
    g.is_signed = is_signed;
    g.dir = dir;
    g.hws = std::stoi(hws_tok);
    g.values = std::move(values);
    return g;
}

}  // namespace approxgrad
