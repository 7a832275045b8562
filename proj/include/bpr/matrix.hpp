#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bpr/error.hpp"

namespace bpr {

/// Nonzero entries of one row, indices ascending.
struct SparseRow {
    std::vector<std::size_t> index;
    std::vector<double> value;

    void clear() {
        index.clear();
        value.clear();
    }
    std::size_t size() const noexcept { return index.size(); }
    void push(std::size_t j, double v) {
        index.push_back(j);
        value.push_back(v);
    }
};

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) throw ShapeError("matrix data size does not match rows*cols");
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    /// Copy of the listed rows, in the listed order.
    Matrix select_rows(std::span<const std::size_t> indices) const;
    /// Copy of the listed columns, in the listed order.
    Matrix select_cols(std::span<const std::size_t> indices) const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

}  // namespace bpr
