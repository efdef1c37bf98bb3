#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qadsb/errors.hpp"

namespace qadsb {

// Row-major real matrix. Used for batched activations, weights and gradients.
struct Tensor2 {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Tensor2() = default;
    Tensor2(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

    bool same_shape(const Tensor2& o) const { return rows == o.rows && cols == o.cols; }

    bool operator==(const Tensor2& o) const {
        return rows == o.rows && cols == o.cols && data == o.data;
    }
};

inline void require_shape(const Tensor2& t, std::size_t rows, std::size_t cols,
                          const char* what) {
    if (t.rows != rows || t.cols != cols) {
        throw ShapeError(std::string(what) + ": expected [" + std::to_string(rows) + ", " +
                         std::to_string(cols) + "], got [" + std::to_string(t.rows) + ", " +
                         std::to_string(t.cols) + "]");
    }
}

} // namespace qadsb
