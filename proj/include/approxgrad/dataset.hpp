#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "approxgrad/tensor.hpp"

namespace approxgrad {

/// Classification data, one sample per row. The eval split may be empty
/// (single-file CSV imports with a tiny row count).
struct Dataset {
    TensorR train_x;  // n_train x dim
    std::vector<int> train_y;
    TensorR eval_x;  // n_eval x dim (rows = 0 allowed)
    std::vector<int> eval_y;
    int classes = 0;
    int dim = 0;

    int n_train() const { return train_x.rows; }
    int n_eval() const { return eval_y.empty() ? 0 : eval_x.rows; }
};

/// Deterministic Gaussian-cluster data: class c is centred at
/// separation * (+/-)e_{c mod dim}, samples interleave classes round-robin,
/// and all draws come from one CounterRng stream keyed by the seed.
Dataset make_synthetic(std::uint64_t seed, int n_train, int n_eval, int classes, int dim,
                       double separation = 3.5, double noise = 1.0);

/// Numeric CSV with a header row. Labels must be non-negative integers.
/// The last round(n * eval_fraction) rows become the eval split; features
/// are standardized per column with train-split mean/stddev.
Dataset load_csv_dataset(const std::filesystem::path& path, const std::string& label_column,
                         double eval_fraction = 0.2);

/// Writes train rows then eval rows with header f0..f{dim-1},<label_column>.
void save_csv(const Dataset& data, const std::filesystem::path& path,
              const std::string& label_column = "label");

}  // namespace approxgrad
