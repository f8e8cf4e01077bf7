#include "approxgrad/multiplier.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace approxgrad {

namespace {

void check_bits(int bits) {
    if (bits < 2 || bits > 8)
        throw std::invalid_argument("multiplier bits must be in [2, 8], got " + std::to_string(bits));
}

std::int64_t entry_bound(int bits, bool is_signed) {
    const std::int64_t side = std::int64_t{1} << bits;
    return is_signed ? (std::int64_t{1} << (2 * bits - 2)) : (side - 1) * (side - 1);
}

}  // namespace

std::int32_t Multiplier::eval(int w, int x) const {
    if (!in_range(w) || !in_range(x))
        throw std::out_of_range("operand (" + std::to_string(w) + ", " + std::to_string(x) +
                                ") outside range [" + std::to_string(lo()) + ", " +
                                std::to_string(hi()) + "] of " + name);
    return at(w, x);
}

void validate(const Multiplier& m) {
    check_bits(m.bits);
    const std::size_t expect = std::size_t{1} << (2 * m.bits);
    if (m.table.size() != expect)
        throw std::invalid_argument("entry count mismatch: expected " + std::to_string(expect) +
                                    " table entries, got " + std::to_string(m.table.size()));
    const std::int64_t bound = entry_bound(m.bits, m.is_signed);
    for (std::int32_t y : m.table) {
        if (std::abs(std::int64_t{y}) > bound)
            throw std::invalid_argument("table entry " + std::to_string(y) +
                                        " exceeds |Y| <= " + std::to_string(bound) + " for " +
                                        std::to_string(m.bits) + "-bit " +
                                        (m.is_signed ? "signed" : "unsigned") + " multiplier");
    }
}

Multiplier build_exact(int bits, bool is_signed) {
    check_bits(bits);
    Multiplier m;
    m.bits = bits;
    m.is_signed = is_signed;
    m.name = "mul" + std::to_string(bits) + (is_signed ? "s" : "u") + "_acc";
    const int side = m.side();
    m.table.resize(static_cast<std::size_t>(side) * side);
    for (int w = m.lo(); w <= m.hi(); ++w)
        for (int x = m.lo(); x <= m.hi(); ++x)
            m.table[static_cast<std::size_t>(m.idx(w)) * side + m.idx(x)] =
                static_cast<std::int32_t>(w * x);
    return m;
}

Multiplier build_truncated(int bits, int k) {
    check_bits(bits);
    if (k < 1 || k > 2 * bits - 2)
        throw std::invalid_argument("rm-k column count must be in [1, " +
                                    std::to_string(2 * bits - 2) + "], got " + std::to_string(k));
    Multiplier m;
    m.bits = bits;
    m.is_signed = false;
    m.name = "mul" + std::to_string(bits) + "u_rm" + std::to_string(k);
    const int side = m.side();
    m.table.resize(static_cast<std::size_t>(side) * side);
    for (int w = 0; w < side; ++w) {
        for (int x = 0; x < side; ++x) {
            std::int32_t dropped = 0;
            for (int i = 0; i < bits && i <= k - 1; ++i)
                for (int j = 0; j < bits && i + j <= k - 1; ++j)
                    if (((w >> i) & 1) && ((x >> j) & 1)) dropped += 1 << (i + j);
            m.table[static_cast<std::size_t>(w) * side + x] = w * x - dropped;
        }
    }
    return m;
}

ErrorReport error_metrics(const Multiplier& m) {
    validate(m);
    std::int64_t mismatches = 0, sum_abs = 0, max_abs = 0;
    for (int w = m.lo(); w <= m.hi(); ++w) {
        for (int x = m.lo(); x <= m.hi(); ++x) {
            const std::int64_t diff = std::int64_t{m.at(w, x)} - std::int64_t{w} * x;
            const std::int64_t a = std::abs(diff);
            mismatches += diff != 0;
            sum_abs += a;
            max_abs = std::max(max_abs, a);
        }
    }
    const double pairs = static_cast<double>(std::int64_t{1} << (2 * m.bits));
    ErrorReport r;
    r.er = static_cast<double>(mismatches) / pairs;
    r.nmed = static_cast<double>(sum_abs) / pairs / (pairs - 1.0);
    r.maxed = max_abs;
    return r;
}

std::string format_percent(double frac, int decimals) {
    long long p = 1;
    for (int i = 0; i < decimals; ++i) p *= 10;
    const long long n = std::llround(frac * 100.0 * static_cast<double>(p));
    char buf[48];
    if (decimals == 0)
        std::snprintf(buf, sizeof buf, "%lld", n);
    else
        std::snprintf(buf, sizeof buf, "%lld.%0*lld", n / p, decimals, std::llabs(n % p));
    return buf;
}

Multiplier load_multiplier(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    std::string magic, version;
    in >> magic >> version;
    if (magic != "amlut" || version != "v1")
        throw std::runtime_error(path.string() + ": malformed header, expected 'amlut v1'");

    Multiplier m;
    std::string tok;
    while (in >> tok) {
        if (tok.rfind("bits=", 0) == 0) {
            m.bits = std::stoi(tok.substr(5));
        } else if (tok.rfind("signed=", 0) == 0) {
            m.is_signed = tok.substr(7) == "1";
        } else if (tok.rfind("name=", 0) == 0) {
            m.name = tok.substr(5);
            break;
        } else {
            throw std::runtime_error(path.string() + ": unexpected header token '" + tok + "'");
        }
    }
    check_bits(m.bits);

    const std::size_t expect = std::size_t{1} << (2 * m.bits);
    m.table.reserve(expect);
    long long v = 0;
    while (in >> v) {
        if (m.table.size() == expect)
            throw std::runtime_error(path.string() + ": entry count mismatch, more than " +
                                     std::to_string(expect) + " entries");
        m.table.push_back(static_cast<std::int32_t>(v));
    }
    if (!in.eof()) {
        std::string bad;
        in.clear();
        in >> bad;
        throw std::runtime_error(path.string() + ": integer parse failure at '" + bad + "'");
    }
    if (m.table.size() != expect)
        throw std::runtime_error(path.string() + ": entry count mismatch, expected " +
                                 std::to_string(expect) + " entries, got " +
                                 std::to_string(m.table.size()));
    validate(m);
    return m;
}

void save_multiplier(const Multiplier& m, const std::filesystem::path& path) {
    validate(m);
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << "amlut v1\n";
    out << "bits=" << m.bits << " signed=" << (m.is_signed ? 1 : 0) << " name=" << m.name << "\n";
    const int side = m.side();
    for (int row = 0; row < side; ++row) {
        for (int col = 0; col < side; ++col) {
            out << m.table[static_cast<std::size_t>(row) * side + col];
            out << (col + 1 == side ? '\n' : ' ');
        }
    }
    if (!out)
        throw std::runtime_error("write failed for " + path.string());
}

}  // namespace approxgrad
