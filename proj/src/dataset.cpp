#include "approxgrad/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "approxgrad/rng.hpp"

namespace approxgrad {

Dataset make_synthetic(std::uint64_t seed, int n_train, int n_eval, int classes, int dim,
                       double separation, double noise) {
    if (classes < 2) throw std::invalid_argument("synthetic data needs >= 2 classes");
    if (dim < 2) throw std::invalid_argument("synthetic data needs dim >= 2");
    if (n_train < 1 || n_eval < 1)
        throw std::invalid_argument("synthetic split sizes must be positive");

    Dataset d;
    d.classes = classes;
    d.dim = dim;
    d.train_x = TensorR(n_train, dim);
    d.eval_x = TensorR(n_eval, dim);
    d.train_y.resize(n_train);
    d.eval_y.resize(n_eval);

    CounterRng rng(seed, /*stream=*/0xDA7A);
    const auto fill = [&](TensorR& x, std::vector<int>& y) {
        for (int i = 0; i < x.rows; ++i) {
            const int c = i % classes;
            const int axis = c % dim;
            const double sign = (c / dim) % 2 == 0 ? 1.0 : -1.0;
            for (int f = 0; f < dim; ++f) {
                const double centre = f == axis ? sign * separation : 0.0;
                x.at(i, f) = centre + noise * rng.normal();
            }
            y[i] = c;
        }
    };
    fill(d.train_x, d.train_y);
    fill(d.eval_x, d.eval_y);
    return d;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        // trim surrounding blanks
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

double parse_cell(const std::string& s, int row, const std::string& col) {
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || s.empty())
        throw std::runtime_error("non-numeric cell '" + s + "' in column " + col + ", data row " +
                                 std::to_string(row + 1));
    return v;
}

}  // namespace

Dataset load_csv_dataset(const std::filesystem::path& path, const std::string& label_column,
                         double eval_fraction) {
    if (eval_fraction < 0.0 || eval_fraction >= 1.0)
        throw std::invalid_argument("eval fraction must be in [0, 1)");
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
    const std::vector<std::string> header = split_csv_line(line);
    int label_idx = -1;
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == label_column) label_idx = static_cast<int>(i);
    if (label_idx < 0)
        throw std::runtime_error(path.string() + ": label column '" + label_column +
                                 "' not found in header");

    const int dim = static_cast<int>(header.size()) - 1;
    if (dim < 1) throw std::runtime_error(path.string() + ": no feature columns");

    std::vector<double> features;
    std::vector<int> labels;
    int row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw std::runtime_error(path.string() + ": data row " + std::to_string(row + 1) +
                                     " has " + std::to_string(cells.size()) + " cells, header has " +
                                     std::to_string(header.size()));
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const double v = parse_cell(cells[i], row, header[i]);
            if (static_cast<int>(i) == label_idx) {
                if (v < 0 || v != std::floor(v))
                    throw std::runtime_error(path.string() + ": label '" + cells[i] +
                                             "' is not a non-negative integer, data row " +
                                             std::to_string(row + 1));
                labels.push_back(static_cast<int>(v));
            } else {
                features.push_back(v);
            }
        }
        ++row;
    }
    if (row == 0) throw std::runtime_error(path.string() + ": no data rows");

    const int n = row;
    int n_eval = static_cast<int>(std::llround(n * eval_fraction));
    if (n_eval >= n) n_eval = n - 1;
    const int n_train = n - n_eval;

    Dataset d;
    d.dim = dim;
    int max_label = 0;
    for (int l : labels) max_label = std::max(max_label, l);
    d.classes = max_label + 1;
    if (d.classes < 2) d.classes = 2;

    d.train_x = TensorR(n_train, dim);
    d.train_y.assign(labels.begin(), labels.begin() + n_train);
    for (int i = 0; i < n_train; ++i)
        for (int f = 0; f < dim; ++f) d.train_x.at(i, f) = features[std::size_t(i) * dim + f];
    if (n_eval > 0) {
        d.eval_x = TensorR(n_eval, dim);
        d.eval_y.assign(labels.begin() + n_train, labels.end());
        for (int i = 0; i < n_eval; ++i)
            for (int f = 0; f < dim; ++f)
                d.eval_x.at(i, f) = features[std::size_t(i + n_train) * dim + f];
    }

    // standardize with train-split statistics
    for (int f = 0; f < dim; ++f) {
        double mean = 0.0;
        for (int i = 0; i < n_train; ++i) mean += d.train_x.at(i, f);
        mean /= n_train;
        double var = 0.0;
        for (int i = 0; i < n_train; ++i) {
            const double c = d.train_x.at(i, f) - mean;
            var += c * c;
        }
        var /= n_train;
        const double inv_std = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
        for (int i = 0; i < n_train; ++i)
            d.train_x.at(i, f) = (d.train_x.at(i, f) - mean) * inv_std;
        for (int i = 0; i < n_eval; ++i) d.eval_x.at(i, f) = (d.eval_x.at(i, f) - mean) * inv_std;
    }
    return d;
}

void save_csv(const Dataset& data, const std::filesystem::path& path,
              const std::string& label_column) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (int f = 0; f < data.dim; ++f) out << "f" << f << ",";
    out << label_column << "\n";
    char buf[40];
    const auto dump = [&](const TensorR& x, const std::vector<int>& y) {
        for (int i = 0; i < static_cast<int>(y.size()); ++i) {
            for (int f = 0; f < data.dim; ++f) {
                std::snprintf(buf, sizeof buf, "%.17g", x.at(i, f));
                out << buf << ",";
            }
            out << y[i] << "\n";
        }
    };
    dump(data.train_x, data.train_y);
    if (data.n_eval() > 0) dump(data.eval_x, data.eval_y);
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace approxgrad
