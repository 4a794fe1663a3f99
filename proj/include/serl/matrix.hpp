#pragma once

#include <cstddef>
#include <vector>

namespace serl {

// Plain row-major value matrix used outside the autodiff tape.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> v;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), v(r * c, fill) {}
    Matrix(std::size_t r, std::size_t c, std::vector<double> values)
        : rows(r), cols(c), v(std::move(values)) {}

    double& at(std::size_t i, std::size_t j) { return v[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return v[i * cols + j]; }
    const double* row(std::size_t i) const { return v.data() + i * cols; }
    double* row(std::size_t i) { return v.data() + i * cols; }
    std::size_t numel() const { return rows * cols; }

    Matrix take_rows(const std::vector<std::size_t>& idx) const {
        Matrix out(idx.size(), cols);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            for (std::size_t j = 0; j < cols; ++j) out.at(i, j) = at(idx[i], j);
        }
        return out;
    }
};

// Batch of probability rows, each row on the simplex.
using ProbMatrix = Matrix;

// Frozen classifier weight rows used as class anchors (one row per class).
using AnchorSet = Matrix;

}  // namespace serl
