#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "phaseforge/numerics/complex_vector.hpp"

namespace phaseforge {

// Row-major dense complex matrix.
class DenseComplexMatrix {
 public:
  DenseComplexMatrix() = default;
  DenseComplexMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  DenseComplexMatrix(std::size_t rows, std::size_t cols, std::vector<Complex> entries)
      : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows_ * cols_) {
      throw DimensionError("DenseComplexMatrix: expected " + std::to_string(rows_ * cols_) +
                           " entries, got " + std::to_string(data_.size()));
    }
  }

  static DenseComplexMatrix identity(std::size_t n) {
    DenseComplexMatrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
    return out;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  Complex& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const Complex& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  const std::vector<Complex>& entries() const noexcept { return data_; }

  ComplexVector row(std::size_t r) const {
    return ComplexVector(std::vector<Complex>(data_.begin() + static_cast<std::ptrdiff_t>(r * cols_),
                                              data_.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols_)));
  }

  ComplexVector column(std::size_t c) const {
    ComplexVector out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
  }

  // y = A v
  ComplexVector apply(const ComplexVector& v) const {
    detail::require_equal_length(v.size(), cols_, "DenseComplexMatrix::apply");
    ComplexVector out(rows_);
    const Complex* a = data_.data();
    for (std::size_t r = 0; r < rows_; ++r, a += cols_) {
      Complex acc{0.0, 0.0};
      for (std::size_t c = 0; c < cols_; ++c) acc += a[c] * v[c];
      out[r] = acc;
    }
    return out;
  }

  // x = A^* w
  ComplexVector apply_adjoint(const ComplexVector& w) const {
    detail::require_equal_length(w.size(), rows_, "DenseComplexMatrix::apply_adjoint");
    ComplexVector out(cols_);
    const Complex* a = data_.data();
    for (std::size_t r = 0; r < rows_; ++r, a += cols_) {
      const Complex wr = w[r];
      for (std::size_t c = 0; c < cols_; ++c) out[c] += std::conj(a[c]) * wr;
    }
    return out;
  }

  friend bool operator==(const DenseComplexMatrix&, const DenseComplexMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Complex> data_;
};

}  // namespace phaseforge
