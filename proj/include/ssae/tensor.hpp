#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ssae {

using Vector = std::vector<double>;

// Read-only row-major view; rows are `cols` apart.
struct ConstMatrixView {
    std::span<const double> data;
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::span<const double> row(std::size_t i) const { return data.subspan(i * cols, cols); }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    std::span<double> flat() { return data_; }
    std::span<const double> flat() const { return data_; }

    ConstMatrixView view() const { return {data_, rows_, cols_}; }
    operator ConstMatrixView() const { return view(); }

    // Rows [first, first + count) as a view.
    ConstMatrixView rows_view(std::size_t first, std::size_t count) const {
        return {std::span<const double>(data_).subspan(first * cols_, count * cols_), count, cols_};
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

}  // namespace ssae
