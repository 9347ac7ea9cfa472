#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace phaseforge {

using Complex = std::complex<double>;
using RealVector = std::vector<double>;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Fixed-length vector of complex doubles. The length is set at construction
// and no member function resizes it.
class ComplexVector {
 public:
  ComplexVector() = default;
  explicit ComplexVector(std::size_t n) : data_(n) {}
  ComplexVector(std::initializer_list<Complex> init) : data_(init) {}
  explicit ComplexVector(std::vector<Complex> values) : data_(std::move(values)) {}

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  Complex& operator[](std::size_t i) { return data_[i]; }
  const Complex& operator[](std::size_t i) const { return data_[i]; }

  Complex* data() noexcept { return data_.data(); }
  const Complex* data() const noexcept { return data_.data(); }

  std::span<Complex> span() noexcept { return data_; }
  std::span<const Complex> span() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  const std::vector<Complex>& values() const noexcept { return data_; }

  ComplexVector& operator+=(const ComplexVector& rhs) {
    require_same_size(rhs, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += rhs.data_[i];
    return *this;
  }
  ComplexVector& operator-=(const ComplexVector& rhs) {
    require_same_size(rhs, "operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= rhs.data_[i];
    return *this;
  }
  ComplexVector& operator*=(Complex s) noexcept {
    for (auto& v : data_) v *= s;
    return *this;
  }

  friend bool operator==(const ComplexVector&, const ComplexVector&) = default;

 private:
  void require_same_size(const ComplexVector& rhs, const char* what) const {
    if (rhs.size() != size()) {
      throw DimensionError(std::string(what) + ": length mismatch (" + std::to_string(size()) +
                           " vs " + std::to_string(rhs.size()) + ")");
    }
  }

  std::vector<Complex> data_;
};

inline ComplexVector operator+(ComplexVector a, const ComplexVector& b) { return a += b; }
inline ComplexVector operator-(ComplexVector a, const ComplexVector& b) { return a -= b; }
inline ComplexVector operator*(Complex s, ComplexVector v) { return v *= s; }
inline ComplexVector operator*(ComplexVector v, Complex s) { return v *= s; }

namespace detail {
inline void require_equal_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " +
                         std::to_string(b) + ")");
  }
}
}  // namespace detail

/// Unit-modulus phase of z, with the convention phase(0) = 1.
inline Complex phase(Complex z) noexcept {
  const double r = std::abs(z);
  if (r == 0.0) return Complex{1.0, 0.0};
  return z / r;
}

inline ComplexVector phase(const ComplexVector& z) {
  ComplexVector out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = phase(z[i]);
  return out;
}

inline RealVector modulus(const ComplexVector& z) {
  RealVector out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = std::abs(z[i]);
  return out;
}

inline ComplexVector hadamard(const ComplexVector& a, const ComplexVector& b) {
  detail::require_equal_length(a.size(), b.size(), "hadamard");
  ComplexVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

inline ComplexVector hadamard(const RealVector& a, const ComplexVector& b) {
  detail::require_equal_length(a.size(), b.size(), "hadamard");
  ComplexVector out(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

inline ComplexVector to_complex(const RealVector& v) {
  ComplexVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

/// Hermitian inner product, conjugate-linear in the first argument.
inline Complex dot(const ComplexVector& a, const ComplexVector& b) {
  detail::require_equal_length(a.size(), b.size(), "dot");
  Complex acc{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
  return acc;
}

inline double squared_norm(const ComplexVector& v) noexcept {
  double acc = 0.0;
  for (const auto& x : v) acc += std::norm(x);
  return acc;
}

inline double norm(const ComplexVector& v) noexcept { return std::sqrt(squared_norm(v)); }

inline double norm(const RealVector& v) noexcept {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

inline bool all_finite(const ComplexVector& v) noexcept {
  return std::all_of(v.begin(), v.end(), [](const Complex& z) {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
  });
}

inline ComplexVector normalized(ComplexVector v) {
  const double nv = norm(v);
  if (nv == 0.0) throw std::invalid_argument("normalized: zero vector");
  return v *= Complex{1.0 / nv, 0.0};
}

/// inf over phi of ||e^{i phi} x - z||.
///
/// The minimiser is e^{i phi} = phase(<x, z>), so this equals
/// sqrt(max(0, ||x||^2 + ||z||^2 - 2 |<x, z>|)); the aligned difference is
/// evaluated directly because the expanded form cancels catastrophically
/// once the distance drops below ~1e-8 ||x||.
inline double dist_up_to_phase(const ComplexVector& x, const ComplexVector& z) {
  detail::require_equal_length(x.size(), z.size(), "dist_up_to_phase");
  const Complex align = phase(dot(x, z));
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += std::norm(align * x[i] - z[i]);
  return std::sqrt(acc);
}

/// inf over phi and lambda > 0 of ||e^{i phi} x - lambda z||.
inline double dist_up_to_phase_and_scale(const ComplexVector& x, const ComplexVector& z) {
  detail::require_equal_length(x.size(), z.size(), "dist_up_to_phase_and_scale");
  const double zz = squared_norm(z);
  if (zz == 0.0) return norm(x);
  const double overlap = std::abs(dot(z, x));
  return std::sqrt(std::max(0.0, squared_norm(x) - overlap * overlap / zz));
}

struct OrthogonalDecomposition {
  Complex lambda;
  double mu = 0.0;
  // Unit vector orthogonal to the reference; all zeros when mu == 0.
  ComplexVector direction;
};

/// Splits u = lambda * ref + mu * direction with direction orthogonal to ref.
inline OrthogonalDecomposition orthogonal_decompose(const ComplexVector& u, const ComplexVector& ref) {
  detail::require_equal_length(u.size(), ref.size(), "orthogonal_decompose");
  const double rr = squared_norm(ref);
  if (rr == 0.0) throw std::invalid_argument("orthogonal_decompose: reference vector is zero");

  OrthogonalDecomposition out;
  out.lambda = dot(ref, u) / rr;
  ComplexVector rest = u - out.lambda * ref;
  out.mu = norm(rest);
  if (out.mu > 0.0) {
    rest *= Complex{1.0 / out.mu, 0.0};
    out.direction = std::move(rest);
  } else {
    out.direction = ComplexVector(u.size());
  }
  return out;
}

}  // namespace phaseforge
