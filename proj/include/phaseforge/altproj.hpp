#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "phaseforge/numerics.hpp"

namespace phaseforge {

// When to stop the alternating projections loop. Invalid values are
// rejected by the constructor.
class StoppingCriteria {
 public:
  static constexpr std::size_t kDefaultMaxIters = 1000;
  static constexpr double kDefaultSuccessTol = 1e-7;
  static constexpr double kDefaultStagnationTol = 1e-6;
  static constexpr double kDefaultDivergenceGuard = 1e6;
  static constexpr std::size_t kStagnationWindow = 10;
  // Residuals below this are round-off; the iteration cannot move any more.
  static constexpr double kResidualFloor = 1e-13;

  StoppingCriteria() = default;

  explicit StoppingCriteria(std::size_t max_iters, double success_tol = kDefaultSuccessTol,
                            double stagnation_tol = kDefaultStagnationTol,
                            double divergence_guard = kDefaultDivergenceGuard)
      : max_iters_(max_iters),
        success_tol_(success_tol),
        stagnation_tol_(stagnation_tol),
        divergence_guard_(divergence_guard) {
    if (max_iters_ < 1) throw std::invalid_argument("StoppingCriteria: max_iters must be >= 1");
    if (!(success_tol_ > 0.0)) throw std::invalid_argument("StoppingCriteria: success_tol must be > 0");
    if (!(stagnation_tol_ >= 0.0)) throw std::invalid_argument("StoppingCriteria: stagnation_tol must be >= 0");
    if (!(divergence_guard_ > 1.0)) throw std::invalid_argument("StoppingCriteria: divergence_guard must be > 1");
  }

  std::size_t max_iters() const noexcept { return max_iters_; }
  double success_tol() const noexcept { return success_tol_; }
  double stagnation_tol() const noexcept { return stagnation_tol_; }
  double divergence_guard() const noexcept { return divergence_guard_; }

  friend bool operator==(const StoppingCriteria&, const StoppingCriteria&) = default;

 private:
  std::size_t max_iters_ = kDefaultMaxIters;
  double success_tol_ = kDefaultSuccessTol;
  double stagnation_tol_ = kDefaultStagnationTol;
  double divergence_guard_ = kDefaultDivergenceGuard;
};

enum class StopReason { Success, MaxIters, Stagnated };

inline std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::Success: return "success";
    case StopReason::MaxIters: return "max_iters";
    case StopReason::Stagnated: return "stagnated";
  }
  return "unknown";
}

inline StopReason stop_reason_from_string(std::string_view s) {
  if (s == "success") return StopReason::Success;
  if (s == "max_iters") return StopReason::MaxIters;
  if (s == "stagnated") return StopReason::Stagnated;
  throw std::invalid_argument("unknown stop reason '" + std::string(s) + "'");
}

struct SolverRun {
  ComplexVector final_iterate;
  std::size_t iterations_used = 0;
  StopReason stop_reason = StopReason::MaxIters;
  // Relative error dist(x0, z_t) / ||x0|| per iteration; only with ground truth.
  std::optional<std::vector<double>> error_trace;
  // Fixed-point residual of y_t = A z_t per iteration (see stagnation_residual).
  std::vector<double> stagnation_residual_trace;

  std::optional<double> final_error() const {
    if (!error_trace || error_trace->empty()) return std::nullopt;
    return error_trace->back();
  }
  double final_stagnation_residual() const {
    return stagnation_residual_trace.empty() ? 0.0 : stagnation_residual_trace.back();
  }
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void check_ap_inputs(const DenseComplexMatrix& a, const RealVector& b, std::size_t z_size) {
  require_equal_length(b.size(), a.rows(), "alternating projections: b");
  require_equal_length(z_size, a.cols(), "alternating projections: iterate");
  for (double v : b) {
    if (!(v >= 0.0)) throw std::invalid_argument("alternating projections: b must be nonnegative");
  }
}

// Projection of y onto the modulus set {|w| = b}.
inline ComplexVector modulus_projection(const RealVector& b, const ComplexVector& y) { return hadamard(b, phase(y)); }

}  // namespace detail

/// One alternating projections step z -> A^+(b . phase(A z)).
inline ComplexVector ap_step(const DenseComplexMatrix& a, const RealVector& b, const ComplexVector& z,
                             const PinvOptions& opts = {}) {
  detail::check_ap_inputs(a, b, z.size());
  return pinv_apply(a, detail::modulus_projection(b, a.apply(z)), opts);
}

/// ||(A A^+)(b . phase(y)) - y|| / ||b||; zero exactly at the fixed points
/// characterising stagnation (phase(0) = 1 convention).
inline double stagnation_residual(const DenseComplexMatrix& a, const RealVector& b, const ComplexVector& y,
                                  const PinvOptions& opts = {}) {
  detail::require_equal_length(y.size(), a.rows(), "stagnation_residual");
  const double nb = norm(b);
  if (nb == 0.0) throw std::invalid_argument("stagnation_residual: b is the zero vector");
  const ComplexVector projected = project_onto_range(a, detail::modulus_projection(b, y), opts);
  return norm(projected - y) / nb;
}

/// Distance d(y, E_b) = ||y - b . phase(y)|| from y to the modulus constraint set.
inline double modulus_set_distance(const RealVector& b, const ComplexVector& y) {
  return norm(y - detail::modulus_projection(b, y));
}

/// Iterates ap_step from z0 until success (only with ground truth), stagnation
/// of the fixed-point residual over a 10-iteration window, or max_iters.
inline SolverRun run(const DenseComplexMatrix& a, const RealVector& b, const ComplexVector& z0,
                     const StoppingCriteria& criteria = {}, const std::optional<ComplexVector>& ground_truth = std::nullopt,
                     const PinvOptions& pinv = {}) {
  detail::check_ap_inputs(a, b, z0.size());
  if (ground_truth) detail::require_equal_length(ground_truth->size(), a.cols(), "run: ground truth");
  const double nb = norm(b);
  if (nb == 0.0) throw std::invalid_argument("run: b is the zero vector");
  const double gt_norm = ground_truth ? norm(*ground_truth) : 0.0;
  if (ground_truth && gt_norm == 0.0) throw std::invalid_argument("run: ground truth is the zero vector");

  const double guard = criteria.divergence_guard() * norm(pinv_apply(a, to_complex(b), pinv));

  // Carry y = A z alongside z so each iteration costs one A^+ solve and one product.
  auto step = [&](const ComplexVector& z, const ComplexVector& y) {
    ComplexVector next = pinv_apply(a, detail::modulus_projection(b, y), pinv, z);
    if (!all_finite(next) || norm(next) > guard) {
      throw DivergenceError("run: iterate norm exceeded the divergence guard");
    }
    ComplexVector next_image = a.apply(next);
    return std::pair{std::move(next), std::move(next_image)};
  };

  SolverRun out;
  if (ground_truth) out.error_trace.emplace();
  auto [z, y] = step(z0, a.apply(z0));
  auto& residuals = out.stagnation_residual_trace;

  for (std::size_t t = 1;; ++t) {
    // The residual of y_t is ||y_{t+1} - y_t|| / ||b|| since y_{t+1} = (A A^+)(b . phase(y_t)).
    auto [z_next, y_next] = step(z, y);
    residuals.push_back(norm(y_next - y) / nb);
    out.iterations_used = t;

    if (ground_truth) {
      const double err = dist_up_to_phase(*ground_truth, z) / gt_norm;
      out.error_trace->push_back(err);
      if (err <= criteria.success_tol()) {
        out.stop_reason = StopReason::Success;
        break;
      }
    }
    const double r = residuals.back();
    if (r <= StoppingCriteria::kResidualFloor) {
      out.stop_reason = StopReason::Stagnated;
      break;
    }
    if (t > StoppingCriteria::kStagnationWindow) {
      const double before = residuals[t - 1 - StoppingCriteria::kStagnationWindow];
      if (std::abs(r - before) < criteria.stagnation_tol() * before) {
        out.stop_reason = StopReason::Stagnated;
        break;
      }
    }
    if (t >= criteria.max_iters()) {
      out.stop_reason = StopReason::MaxIters;
      break;
    }
    z = std::move(z_next);
    y = std::move(y_next);
  }
  out.final_iterate = std::move(z);
  return out;
}

}  // namespace phaseforge
