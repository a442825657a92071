#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cyberdial::nn {

// Row-major matrix of 64-bit reals. Vectors are 1 x n; batches stack rows.
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int r, int c, double fill = 0.0) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}
    Tensor(int r, int c, std::vector<double> values);

    std::size_t size() const { return data.size(); }
    double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
    std::span<double> row(int r) { return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)}; }
    std::span<const double> row(int r) const
    {
        return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
    }
    bool same_shape(const Tensor& other) const { return rows == other.rows && cols == other.cols; }
    void zero();

    bool operator==(const Tensor&) const = default;
};

}  // namespace cyberdial::nn
