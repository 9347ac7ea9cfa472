#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

#include "phaseforge/numerics/complex_vector.hpp"
#include "phaseforge/numerics/dense_matrix.hpp"

namespace phaseforge {

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double last_residual)
      : std::runtime_error(what), last_residual_(last_residual) {}

  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

struct PinvOptions {
  double tol = 1e-12;
  // 0 selects the default budget of 4 * cols(A).
  std::size_t max_iter = 0;
};

/// Least-squares solution argmin_z ||A z - y|| (= A^+ y for full column rank A),
/// by conjugate gradients on A^*A z = A^*y without forming A^*A.
///
/// Stops once ||A^*(y - A z)|| <= tol * ||A^*y||. A warm start only changes the
/// iteration count, never the minimizer. Throws ConvergenceError when the
/// budget runs out; a breakdown (zero curvature) is reported the same way,
/// which is how a rank-deficient A shows up.
inline ComplexVector pinv_apply(const DenseComplexMatrix& a, const ComplexVector& y, const PinvOptions& opts = {},
                                const std::optional<ComplexVector>& warm_start = std::nullopt) {
  detail::require_equal_length(y.size(), a.rows(), "pinv_apply");
  const std::size_t n = a.cols();
  const std::size_t max_iter = opts.max_iter == 0 ? 4 * n : opts.max_iter;

  const ComplexVector rhs = a.apply_adjoint(y);
  const double target = opts.tol * norm(rhs);
  if (norm(rhs) == 0.0) return ComplexVector(n);

  ComplexVector z(n);
  ComplexVector r = rhs;
  if (warm_start) {
    detail::require_equal_length(warm_start->size(), n, "pinv_apply warm start");
    z = *warm_start;
    r = a.apply_adjoint(y - a.apply(z));
  }

  ComplexVector p = r;
  double rs = squared_norm(r);
  for (std::size_t k = 0; k < max_iter; ++k) {
    if (std::sqrt(rs) <= target) return z;
    const ComplexVector q = a.apply(p);
    const double curvature = squared_norm(q);
    if (curvature == 0.0) {
      throw ConvergenceError("pinv_apply: conjugate gradient breakdown (rank-deficient matrix?)", std::sqrt(rs));
    }
    const Complex alpha{rs / curvature, 0.0};
    const ComplexVector aq = a.apply_adjoint(q);
    for (std::size_t i = 0; i < n; ++i) {
      z[i] += alpha * p[i];
      r[i] -= alpha * aq[i];
    }
    const double rs_next = squared_norm(r);
    const Complex beta{rs_next / rs, 0.0};
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    rs = rs_next;
  }
  if (std::sqrt(rs) <= target) return z;
  throw ConvergenceError("pinv_apply: no convergence within " + std::to_string(max_iter) +
                             " iterations (relative residual " + std::to_string(std::sqrt(rs) / norm(rhs)) + ")",
                         std::sqrt(rs));
}

inline ComplexVector pinv_apply(const DenseComplexMatrix& a, const ComplexVector& y, double tol, std::size_t max_iter) {
  return pinv_apply(a, y, PinvOptions{tol, max_iter});
}

/// Orthogonal projection of y onto Range(A), i.e. A A^+ y.
inline ComplexVector project_onto_range(const DenseComplexMatrix& a, const ComplexVector& y, const PinvOptions& opts = {}) {
  return a.apply(pinv_apply(a, y, opts));
}

}  // namespace phaseforge
