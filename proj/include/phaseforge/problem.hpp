#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/crc.hpp>

#include "phaseforge/numerics.hpp"
#include "phaseforge/rng.hpp"

namespace phaseforge {

/// Phase retrieval instance: recover x0 (up to a global phase) from b = |A x0|.
class ProblemInstance {
 public:
  ProblemInstance() = default;

  /// Builds b = |A x0|.
  ProblemInstance(DenseComplexMatrix a, ComplexVector x0) : a_(std::move(a)), x0_(std::move(x0)) {
    check_dims();
    b_ = modulus(a_.apply(x0_));
  }

  /// Takes b as given and verifies b = |A x0| to 1e-12 relative.
  ProblemInstance(DenseComplexMatrix a, ComplexVector x0, RealVector b)
      : a_(std::move(a)), x0_(std::move(x0)), b_(std::move(b)) {
    check_dims();
    detail::require_equal_length(b_.size(), a_.rows(), "ProblemInstance b");
    const RealVector expected = modulus(a_.apply(x0_));
    const double scale = std::max(1.0, *std::max_element(expected.begin(), expected.end()));
    for (std::size_t i = 0; i < b_.size(); ++i) {
      if (!(std::abs(b_[i] - expected[i]) <= 1e-12 * scale)) {
        throw std::invalid_argument("ProblemInstance: b does not match |A x0| at row " + std::to_string(i));
      }
    }
  }

  std::size_t n() const noexcept { return a_.cols(); }
  std::size_t m() const noexcept { return a_.rows(); }
  const DenseComplexMatrix& matrix() const noexcept { return a_; }
  const ComplexVector& signal() const noexcept { return x0_; }
  const RealVector& measurements() const noexcept { return b_; }

  friend bool operator==(const ProblemInstance&, const ProblemInstance&) = default;

 private:
  void check_dims() const {
    if (a_.rows() == 0 || a_.cols() == 0) throw DimensionError("ProblemInstance: m and n must be >= 1");
    detail::require_equal_length(x0_.size(), a_.cols(), "ProblemInstance x0");
    if (!all_finite(x0_) || !all_finite(ComplexVector(a_.entries()))) {
      throw std::invalid_argument("ProblemInstance: non-finite entries");
    }
  }

  DenseComplexMatrix a_;
  ComplexVector x0_;
  RealVector b_;
};

/// m x n matrix with i.i.d. N(0, 1/2) + i N(0, 1/2) entries.
inline DenseComplexMatrix sample_sensing_matrix(std::size_t m, std::size_t n, RngSeed seed) {
  if (m == 0 || n == 0) throw DimensionError("sample_sensing_matrix: m and n must be >= 1");
  Engine engine = make_engine(seed);
  ComplexGaussian gauss;
  std::vector<Complex> entries(m * n);
  for (auto& z : entries) z = gauss(engine);
  return DenseComplexMatrix(m, n, std::move(entries));
}

/// Unit-norm complex Gaussian signal.
inline ComplexVector sample_signal(std::size_t n, RngSeed seed) {
  if (n == 0) throw DimensionError("sample_signal: n must be >= 1");
  Engine engine = make_engine(seed);
  ComplexVector x = sample_complex_gaussian(n, engine);
  while (norm(x) == 0.0) x = sample_complex_gaussian(n, engine);
  return normalized(std::move(x));
}

inline ProblemInstance make_instance(std::size_t n, std::size_t m, RngSeed seed) {
  return ProblemInstance(sample_sensing_matrix(m, n, derive_seed(seed, {1})),
                         sample_signal(n, derive_seed(seed, {2})));
}

// ---------------------------------------------------------------------------
// .pri container
//
//   offset  size          field
//   0       8             magic "PHASEPRI"
//   8       4             version (u32, currently 1)
//   12      4             reserved, zero
//   16      8             n (u64)
//   24      8             m (u64)
//   32      16 m n        A, row-major, (re, im) f64 pairs
//   ...     16 n          x0, (re, im) f64 pairs
//   ...     8 m           b, f64
//   ...     4             CRC-32 of every preceding byte
//
// All integers and floats little-endian.
// ---------------------------------------------------------------------------

inline constexpr std::string_view kInstanceMagic = "PHASEPRI";
inline constexpr std::uint32_t kInstanceVersion = 1;
inline constexpr std::size_t kInstanceHeaderSize = 32;

class InstanceFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedVersionError : public InstanceFormatError {
 public:
  explicit UnsupportedVersionError(std::uint32_t version)
      : InstanceFormatError("unsupported instance file version " + std::to_string(version) + " (expected " +
                            std::to_string(kInstanceVersion) + ")"),
        version_(version) {}

  std::uint32_t version() const noexcept { return version_; }

 private:
  std::uint32_t version_;
};

class ChecksumError : public InstanceFormatError {
 public:
  using InstanceFormatError::InstanceFormatError;
};

class InstanceIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

inline void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

inline void put_f64(std::vector<unsigned char>& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

inline std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

inline std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

inline double get_f64(const unsigned char* p) { return std::bit_cast<double>(get_u64(p)); }

inline std::uint32_t crc32(const unsigned char* data, std::size_t size) {
  boost::crc_32_type crc;
  crc.process_bytes(data, size);
  return crc.checksum();
}

}  // namespace detail

inline std::vector<unsigned char> encode_instance(const ProblemInstance& inst) {
  const std::size_t n = inst.n();
  const std::size_t m = inst.m();
  std::vector<unsigned char> out;
  out.reserve(kInstanceHeaderSize + 16 * m * n + 16 * n + 8 * m + 4);
  out.insert(out.end(), kInstanceMagic.begin(), kInstanceMagic.end());
  detail::put_u32(out, kInstanceVersion);
  detail::put_u32(out, 0);
  detail::put_u64(out, n);
  detail::put_u64(out, m);
  for (const Complex& z : inst.matrix().entries()) {
    detail::put_f64(out, z.real());
    detail::put_f64(out, z.imag());
  }
  for (const Complex& z : inst.signal()) {
    detail::put_f64(out, z.real());
    detail::put_f64(out, z.imag());
  }
  for (double v : inst.measurements()) detail::put_f64(out, v);
  detail::put_u32(out, detail::crc32(out.data(), out.size()));
  return out;
}

inline ProblemInstance decode_instance(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < kInstanceHeaderSize) throw InstanceFormatError("instance file truncated: header incomplete");
  if (std::memcmp(bytes.data(), kInstanceMagic.data(), kInstanceMagic.size()) != 0) {
    throw InstanceFormatError("not an instance file: bad magic");
  }
  const std::uint32_t version = detail::get_u32(bytes.data() + 8);
  if (version != kInstanceVersion) throw UnsupportedVersionError(version);

  const std::uint64_t n = detail::get_u64(bytes.data() + 16);
  const std::uint64_t m = detail::get_u64(bytes.data() + 24);
  if (n == 0 || m == 0) throw InstanceFormatError("instance file declares an empty dimension");
  // Reject sizes whose byte count would overflow before comparing to the file length.
  constexpr std::uint64_t kMaxDim = std::uint64_t{1} << 28;
  if (n > kMaxDim || m > kMaxDim || n * m > (std::numeric_limits<std::uint64_t>::max() >> 5)) {
    throw InstanceFormatError("instance file declares implausible dimensions");
  }
  const std::uint64_t expected = kInstanceHeaderSize + 16 * m * n + 16 * n + 8 * m + 4;
  if (bytes.size() < expected) throw InstanceFormatError("instance file truncated");
  if (bytes.size() > expected) throw InstanceFormatError("instance file has trailing bytes");

  const std::uint32_t stored_crc = detail::get_u32(bytes.data() + expected - 4);
  if (stored_crc != detail::crc32(bytes.data(), expected - 4)) throw ChecksumError("instance file checksum mismatch");

  const unsigned char* p = bytes.data() + kInstanceHeaderSize;
  std::vector<Complex> entries(m * n);
  for (auto& z : entries) {
    z = {detail::get_f64(p), detail::get_f64(p + 8)};
    p += 16;
  }
  ComplexVector x0(n);
  for (auto& z : x0) {
    z = {detail::get_f64(p), detail::get_f64(p + 8)};
    p += 16;
  }
  RealVector b(m);
  for (auto& v : b) {
    v = detail::get_f64(p);
    p += 8;
  }
  try {
    return ProblemInstance(DenseComplexMatrix(m, n, std::move(entries)), std::move(x0), std::move(b));
  } catch (const std::invalid_argument& e) {
    throw InstanceFormatError(std::string("instance file inconsistent: ") + e.what());
  }
}

inline void save_instance(const ProblemInstance& inst, const std::filesystem::path& path) {
  const std::vector<unsigned char> bytes = encode_instance(inst);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InstanceIoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InstanceIoError("write failed for " + path.string());
}

inline ProblemInstance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InstanceIoError("cannot open " + path.string() + " for reading");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw InstanceIoError("read failed for " + path.string());
  return decode_instance(bytes);
}

}  // namespace phaseforge
