#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "phaseforge/numerics.hpp"
#include "phaseforge/rng.hpp"

namespace phaseforge {

enum class InitKind { TruncatedSpectral, RandomSphere, Supplied };

inline std::string_view to_string(InitKind k) {
  switch (k) {
    case InitKind::TruncatedSpectral: return "spectral";
    case InitKind::RandomSphere: return "random";
    case InitKind::Supplied: return "supplied";
  }
  return "unknown";
}

inline InitKind init_kind_from_string(std::string_view s) {
  if (s == "spectral") return InitKind::TruncatedSpectral;
  if (s == "random") return InitKind::RandomSphere;
  if (s == "supplied") return InitKind::Supplied;
  throw std::invalid_argument("unknown init kind '" + std::string(s) + "'");
}

inline constexpr std::size_t kDefaultSpectralPowerIters = 200;
inline constexpr double kTruncationFactor = 9.0;

struct InitSpec {
  InitKind kind = InitKind::TruncatedSpectral;
  std::size_t power_iters = kDefaultSpectralPowerIters;
  RngSeed seed{};
  std::optional<ComplexVector> supplied_vector;
  // Experimentation override for the threshold b_i^2 <= factor * mean(b^2).
  double truncation_factor = kTruncationFactor;
};

/// w_i = b_i^2 if b_i^2 <= factor * mean(b^2), else 0.
inline RealVector truncated_spectral_weights(const RealVector& b, double factor = kTruncationFactor) {
  if (b.empty()) throw DimensionError("truncated_spectral_weights: empty b");
  double mean_sq = 0.0;
  for (double v : b) mean_sq += v * v;
  mean_sq /= static_cast<double>(b.size());
  const double threshold = factor * mean_sq;

  RealVector w(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double sq = b[i] * b[i];
    w[i] = sq <= threshold ? sq : 0.0;
  }
  return w;
}

/// v -> (1/m) A^* (w . (A v)): the truncated spectral matrix
/// (1/m) sum_i w_i a_i a_i^* applied without assembling it.
class TruncatedSpectralOperator final : public LinearOperator {
 public:
  TruncatedSpectralOperator(const DenseComplexMatrix& a, RealVector weights) : a_(&a), weights_(std::move(weights)) {
    detail::require_equal_length(weights_.size(), a.rows(), "TruncatedSpectralOperator weights");
  }

  std::size_t input_dim() const override { return a_->cols(); }
  std::size_t output_dim() const override { return a_->cols(); }

  ComplexVector apply(const ComplexVector& v) const override {
    ComplexVector av = a_->apply(v);
    const double inv_m = 1.0 / static_cast<double>(a_->rows());
    for (std::size_t i = 0; i < av.size(); ++i) av[i] *= weights_[i] * inv_m;
    return a_->apply_adjoint(av);
  }
  ComplexVector apply_adjoint(const ComplexVector& w) const override { return apply(w); }

  const RealVector& weights() const noexcept { return weights_; }

 private:
  const DenseComplexMatrix* a_;
  RealVector weights_;
};

/// Unit-norm top eigenvector of the truncated spectral matrix, from b alone.
inline ComplexVector truncated_spectral_init(const DenseComplexMatrix& a, const RealVector& b,
                                             std::size_t power_iters = kDefaultSpectralPowerIters, RngSeed seed = {},
                                             double truncation_factor = kTruncationFactor) {
  detail::require_equal_length(b.size(), a.rows(), "truncated_spectral_init");
  RealVector w = truncated_spectral_weights(b, truncation_factor);
  bool any = false;
  for (double v : w) any = any || v > 0.0;
  if (!any) throw std::invalid_argument("truncated_spectral_init: every truncation weight is zero");
  const TruncatedSpectralOperator op(a, std::move(w));
  return power_iteration(op, power_iters, seed);
}

/// Uniform draw from the unit sphere of C^n.
inline ComplexVector random_sphere_init(std::size_t n, RngSeed seed) {
  if (n == 0) throw DimensionError("random_sphere_init: n must be >= 1");
  Engine engine = make_engine(seed);
  ComplexVector v = sample_complex_gaussian(n, engine);
  while (norm(v) == 0.0) v = sample_complex_gaussian(n, engine);
  return normalized(std::move(v));
}

inline ComplexVector make_initial(const InitSpec& spec, const DenseComplexMatrix& a, const RealVector& b) {
  switch (spec.kind) {
    case InitKind::TruncatedSpectral:
      return truncated_spectral_init(a, b, spec.power_iters, spec.seed, spec.truncation_factor);
    case InitKind::RandomSphere:
      return random_sphere_init(a.cols(), spec.seed);
    case InitKind::Supplied:
      if (!spec.supplied_vector) throw std::invalid_argument("make_initial: supplied init without a vector");
      detail::require_equal_length(spec.supplied_vector->size(), a.cols(), "make_initial: supplied vector");
      return *spec.supplied_vector;
  }
  throw std::invalid_argument("make_initial: unknown init kind");
}

}  // namespace phaseforge
