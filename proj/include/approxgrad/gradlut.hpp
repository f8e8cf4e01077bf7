#pragma once

#include <filesystem>
#include <variant>
#include <vector>

#include "approxgrad/multiplier.hpp"

namespace approxgrad {

/// Which operand the stored gradient differentiates by.
enum class GradDir { wrt_x, wrt_w };

/// 2^{2B}-entry gradient table, indexed like Multiplier::table. Interior
/// entries come from the central difference of the smoothed multiplier
/// function; the closed boundary bands carry the average change per unit
/// of the varied operand.
struct GradLut2D {
    int bits = 0;
    bool is_signed = false;
    GradDir dir = GradDir::wrt_x;
    int hws = 1;
    std::vector<double> values;

    int side() const { return 1 << bits; }
    int lo() const { return is_signed ? -(1 << (bits - 1)) : 0; }
    int hi() const { return is_signed ? (1 << (bits - 1)) - 1 : (1 << bits) - 1; }
    int idx(int v) const { return is_signed ? v + (1 << (bits - 1)) : v; }
    double at(int w, int x) const {
        return values[static_cast<std::size_t>(idx(w)) * side() + idx(x)];
    }
};

/// 2^B-entry gradient table indexed by the co-operand (W for wrt_x, X for
/// wrt_w): the average changing rate of AM over the varied operand.
struct GradLut1D {
    int bits = 0;
    bool is_signed = false;
    GradDir dir = GradDir::wrt_x;
    std::vector<double> values;

    int lo() const { return is_signed ? -(1 << (bits - 1)) : 0; }
    int hi() const { return is_signed ? (1 << (bits - 1)) - 1 : (1 << bits) - 1; }
    int idx(int v) const { return is_signed ? v + (1 << (bits - 1)) : v; }
    double at(int w, int x) const {
        return values[static_cast<std::size_t>(idx(dir == GradDir::wrt_x ? w : x))];
    }
};

/// Straight-through estimator: the exact multiplier's gradient, i.e. the
/// co-operand value.
struct SteGrad {
    int bits = 0;
    bool is_signed = false;
    GradDir dir = GradDir::wrt_x;
};

double ste_grad(GradDir dir, int w, int x);

/// Smoothed multiplier row: the (2*hws+1)-point moving average of
/// AM(w_fixed, X) over X in [lo+hws, hi-hws] (operand roles swap for
/// dir == wrt_w). Requires 1 <= hws <= 2^{B-1}-1.
std::vector<double> smooth_row(const Multiplier& m, int fixed_operand, int hws,
                               GradDir dir = GradDir::wrt_x);

GradLut2D build_grad2d(const Multiplier& m, GradDir dir, int hws);
GradLut1D build_grad1d(const Multiplier& m, GradDir dir);

/// Largest admissible half window size; build_grad2d with this value
/// reduces entry-wise to build_grad1d.
inline int max_hws(int bits) { return (1 << (bits - 1)) - 1; }

/// Paper-calibrated default: 32 for 8-bit, 16 for 7-bit, extrapolated as
/// 2^{B-3} below that (floored at 1).
inline int default_hws(int bits) { return bits >= 3 ? 1 << (bits - 3) : 1; }

/// Uniform gradient accessor used by the GEMM backward pass.
using GradEstimator = std::variant<SteGrad, GradLut1D, GradLut2D>;

/// Estimator's gradient at an operand pair. Throws std::out_of_range on an
/// out-of-range operand.
double lookup(const GradEstimator& g, int w, int x);

/// .gradlut text format:
///   line 1: "gradlut v1"
///   line 2: "bits=<B> signed=<0|1> kind=<2d|1d> dir=<x|w> hws=<n|-->"
///   then 2^{2B} (2d) or 2^B (1d) reals, row-major, 17 significant digits.
void save_gradlut(const GradLut2D& g, const std::filesystem::path& path);
void save_gradlut(const GradLut1D& g, const std::filesystem::path& path);
std::variant<GradLut1D, GradLut2D> load_gradlut(const std::filesystem::path& path);

}  // namespace approxgrad
