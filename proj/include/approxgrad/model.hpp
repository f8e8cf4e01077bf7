#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "approxgrad/quant.hpp"
#include "approxgrad/tensor.hpp"

namespace approxgrad {

/// Dense MLP description. layer_sizes runs input -> hiddens -> classes;
/// hidden_activation applies between layers. exact_layer marks layers that
/// keep the exact multiplier during approximate training (empty = none).
struct ModelSpec {
    std::vector<int> layer_sizes;  // >= 2 entries, last = class count
    bool relu = true;              // hidden activation: relu or none
    bool bias = true;
    int quant_bits = 7;
    QuantMode quant_mode = QuantMode::asymmetric;
    std::vector<std::uint8_t> exact_layer;

    int layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
    bool layer_exact(int l) const {
        return l < static_cast<int>(exact_layer.size()) && exact_layer[l] != 0;
    }
    void check() const;
};

/// Model parameters plus the most recent quantization parameters seen per
/// layer (captured so checkpoints document the operating point).
struct Mlp {
    ModelSpec spec;
    std::vector<TensorR> weights;              // layer l: out x in
    std::vector<std::vector<double>> biases;   // empty vectors when bias=false
    std::vector<QuantParams> last_pw, last_px;
};

/// Xavier-uniform init, deterministic in (spec, seed).
Mlp init_mlp(const ModelSpec& spec, std::uint64_t seed);

/// Versioned text checkpoint; doubles use 17 significant digits so
/// save/load round-trips bit-exactly.
void save_checkpoint(const Mlp& model, const std::filesystem::path& path);
Mlp load_checkpoint(const std::filesystem::path& path);

}  // namespace approxgrad
