#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace approxgrad {

/// Dense row-major matrix. Rows/cols must be positive.
template <typename T>
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<T> data;

    Tensor() = default;
    Tensor(int r, int c, T fill = T{}) : rows(r), cols(c) {
        if (r <= 0 || c <= 0)
            throw std::invalid_argument("tensor dims must be positive, got " + std::to_string(r) +
                                        "x" + std::to_string(c));
        data.assign(static_cast<std::size_t>(r) * c, fill);
    }
    Tensor(int r, int c, std::vector<T> d) : rows(r), cols(c), data(std::move(d)) {
        if (r <= 0 || c <= 0 || data.size() != static_cast<std::size_t>(r) * c)
            throw std::invalid_argument("tensor data length does not match dims");
    }

    T& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    const T& at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
    std::size_t size() const { return data.size(); }

    bool operator==(const Tensor&) const = default;
};

using TensorR = Tensor<double>;
using TensorI = Tensor<std::int64_t>;

}  // namespace approxgrad
