#pragma once

#include <cstddef>
#include <functional>
#include <utility>

#include "phaseforge/numerics/complex_vector.hpp"
#include "phaseforge/numerics/dense_matrix.hpp"

namespace phaseforge {

// Abstract linear map C^input_dim -> C^output_dim known only through its
// action and the action of its adjoint.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;

  virtual std::size_t input_dim() const = 0;
  virtual std::size_t output_dim() const = 0;

  virtual ComplexVector apply(const ComplexVector& v) const = 0;
  virtual ComplexVector apply_adjoint(const ComplexVector& w) const = 0;
};

// Non-owning view of a dense matrix as an operator.
class MatrixOperator final : public LinearOperator {
 public:
  explicit MatrixOperator(const DenseComplexMatrix& matrix) : matrix_(&matrix) {}

  std::size_t input_dim() const override { return matrix_->cols(); }
  std::size_t output_dim() const override { return matrix_->rows(); }
  ComplexVector apply(const ComplexVector& v) const override { return matrix_->apply(v); }
  ComplexVector apply_adjoint(const ComplexVector& w) const override { return matrix_->apply_adjoint(w); }

 private:
  const DenseComplexMatrix* matrix_;
};

// Square self-adjoint operator defined by a single callable.
class HermitianOperator final : public LinearOperator {
 public:
  using Action = std::function<ComplexVector(const ComplexVector&)>;

  HermitianOperator(std::size_t dim, Action action) : dim_(dim), action_(std::move(action)) {}

  std::size_t input_dim() const override { return dim_; }
  std::size_t output_dim() const override { return dim_; }
  ComplexVector apply(const ComplexVector& v) const override {
    detail::require_equal_length(v.size(), dim_, "HermitianOperator::apply");
    return action_(v);
  }
  ComplexVector apply_adjoint(const ComplexVector& w) const override { return apply(w); }

 private:
  std::size_t dim_;
  Action action_;
};

/// Relative adjoint defect |<Au, v> - <u, A^*v>| / (||u|| ||v||) for one probe pair.
inline double adjoint_defect(const LinearOperator& op, const ComplexVector& u, const ComplexVector& v) {
  const Complex lhs = dot(op.apply(u), v);
  const Complex rhs = dot(u, op.apply_adjoint(v));
  const double scale = norm(u) * norm(v);
  return scale == 0.0 ? 0.0 : std::abs(lhs - rhs) / scale;
}

}  // namespace phaseforge
