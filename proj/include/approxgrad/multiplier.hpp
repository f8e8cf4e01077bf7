#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace approxgrad {

/// Behavioral model of a B-bit integer multiplier: the full product table
/// AM(W, X) for every operand pair, stored row-major with W as the major
/// index. Approximate designs differ from the exact multiplier only in the
/// table contents, so everything downstream (metrics, gradient LUTs, GEMM)
/// works off the same representation.
struct Multiplier {
    int bits = 0;
    bool is_signed = false;
    std::string name;
    std::vector<std::int32_t> table;  // 2^{2B} entries, W-major

    int side() const { return 1 << bits; }
    int lo() const { return is_signed ? -(1 << (bits - 1)) : 0; }
    int hi() const { return is_signed ? (1 << (bits - 1)) - 1 : (1 << bits) - 1; }

    bool in_range(int v) const { return v >= lo() && v <= hi(); }

    /// Table offset of an in-range operand value.
    int idx(int v) const { return is_signed ? v + (1 << (bits - 1)) : v; }

    /// AM(w, x). Throws std::out_of_range if an operand is outside the
    /// operand range for (bits, signedness).
    std::int32_t eval(int w, int x) const;

    /// Unchecked lookup, operands must be in range.
    std::int32_t at(int w, int x) const {
        return table[static_cast<std::size_t>(idx(w)) * side() + idx(x)];
    }
};

/// Exhaustive error metrics over all 2^{2B} operand pairs under the uniform
/// input distribution, measured against the exact product.
struct ErrorReport {
    double er = 0.0;        // fraction of pairs with AM(W,X) != W*X
    double nmed = 0.0;      // mean |AM - WX| / (2^{2B} - 1)
    std::int64_t maxed = 0; // max |AM - WX|
};

/// Exact multiplier, name "mul{B}{u|s}_acc". bits must be in [2, 8].
Multiplier build_exact(int bits, bool is_signed);

/// Truncated-array multiplier that removes the rightmost k columns of
/// partial products (every pp_ij with i + j <= k - 1): unsigned only,
/// 1 <= k <= 2*bits - 2. Name "mul{B}u_rm{k}".
Multiplier build_truncated(int bits, int k);

/// Validates bits/signedness/table-length/entry-bound invariants.
/// Throws std::invalid_argument with a description of the first violation.
void validate(const Multiplier& m);

ErrorReport error_metrics(const Multiplier& m);

/// Fraction as a percent string with the given decimal count, ties rounded
/// away from zero (81.25 -> "81.3").
std::string format_percent(double frac, int decimals);

/// .amlut text format:
///   line 1: "amlut v1"
///   line 2: "bits=<B> signed=<0|1> name=<label>"
///   then 2^{2B} whitespace-separated decimal integers, W-major, with W
///   (signed: -2^{B-1}..2^{B-1}-1) from the lowest value upward.
/// Parsing accepts any whitespace layout; writing emits 2^B entries per line.
Multiplier load_multiplier(const std::filesystem::path& path);
void save_multiplier(const Multiplier& m, const std::filesystem::path& path);

}  // namespace approxgrad
