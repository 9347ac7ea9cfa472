#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "phaseforge/numerics/complex_vector.hpp"
#include "phaseforge/numerics/linear_operator.hpp"
#include "phaseforge/rng.hpp"

namespace phaseforge {

struct PowerIterationResult {
  ComplexVector vector;  // unit norm
  double eigenvalue = 0.0;
  // Rayleigh quotient of the start vector and of every subsequent iterate.
  std::vector<double> rayleigh_trace;
};

/// ceil(10 (log n + log(1/eta))) iterations.
inline std::size_t default_power_iterations(std::size_t n, double eta = 1e-3) {
  const double count = 10.0 * (std::log(static_cast<double>(std::max<std::size_t>(n, 1))) + std::log(1.0 / eta));
  return static_cast<std::size_t>(std::ceil(count));
}

/// Fixed-budget power iteration for a Hermitian positive semidefinite operator,
/// started from a seeded complex Gaussian vector.
inline PowerIterationResult power_iteration_traced(const LinearOperator& op, std::size_t iters, RngSeed seed) {
  if (op.input_dim() != op.output_dim()) throw DimensionError("power_iteration: operator is not square");
  const std::size_t n = op.input_dim();
  if (n == 0) throw DimensionError("power_iteration: empty operator");

  Engine engine = make_engine(seed);
  ComplexVector v = sample_complex_gaussian(n, engine);
  while (norm(v) == 0.0) v = sample_complex_gaussian(n, engine);
  v = normalized(std::move(v));

  PowerIterationResult out;
  out.rayleigh_trace.reserve(iters + 1);
  ComplexVector w = op.apply(v);
  for (std::size_t k = 0; k < iters; ++k) {
    out.rayleigh_trace.push_back(dot(v, w).real());
    const double nw = norm(w);
    if (nw == 0.0) break;  // v is in the null space; any unit vector is as good
    v = std::move(w);
    v *= Complex{1.0 / nw, 0.0};
    w = op.apply(v);
  }
  out.eigenvalue = dot(v, w).real();
  out.rayleigh_trace.push_back(out.eigenvalue);
  out.vector = std::move(v);
  return out;
}

inline ComplexVector power_iteration(const LinearOperator& op, std::size_t iters, RngSeed seed) {
  return power_iteration_traced(op, iters, seed).vector;
}

}  // namespace phaseforge
