#pragma once

// Prime-field arithmetic with arbitrary-precision moduli, plus dense matrices
// over the field. Values are immutable once built and safe to share.

#include <gmpxx.h>

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rzk/error.hpp"
#include "rzk/rng.hpp"

namespace rzk::fq {

using BigInt = mpz_class;

struct PrimalityResult {
  bool prime = false;
  /// True when the verdict is a proof (trial division, or Miller-Rabin with a
  /// base set known to be exact below 3.3e24). Above that bound the verdict
  /// comes from BPSW and is reported as unproven.
  bool proven = false;
};

namespace detail {

inline constexpr std::array<unsigned, 13> kWitnessBases = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41};
inline constexpr unsigned kTrialDivisionLimit = 1000;

inline const std::vector<unsigned>& small_primes() {
  static const std::vector<unsigned> primes = [] {
    std::vector<bool> composite(kTrialDivisionLimit, false);
    std::vector<unsigned> out;
    for (unsigned p = 2; p < kTrialDivisionLimit; ++p) {
      if (composite[p]) continue;
      out.push_back(p);
      for (unsigned m = p * p; m < kTrialDivisionLimit; m += p) composite[m] = true;
    }
    return out;
  }();
  return primes;
}

inline const BigInt& deterministic_mr_bound() {
  static const BigInt bound("3317044064679887385961981");
  return bound;
}

inline bool strong_probable_prime(const BigInt& n, const BigInt& n_minus_1, const BigInt& d, unsigned long s,
                                  unsigned base) {
  BigInt x;
  const BigInt a = base;
  mpz_powm(x.get_mpz_t(), a.get_mpz_t(), d.get_mpz_t(), n.get_mpz_t());
  if (x == 1 || x == n_minus_1) return true;
  for (unsigned long r = 1; r < s; ++r) {
    mpz_powm_ui(x.get_mpz_t(), x.get_mpz_t(), 2, n.get_mpz_t());
    if (x == n_minus_1) return true;
    if (x == 1) return false;
  }
  return false;
}

}  // namespace detail

inline PrimalityResult check_prime(const BigInt& n) {
  if (n < 2) return {false, true};
  for (unsigned p : detail::small_primes()) {
    if (n == p) return {true, true};
    if (mpz_divisible_ui_p(n.get_mpz_t(), p) != 0) return {false, true};
  }
  if (n < detail::kTrialDivisionLimit * detail::kTrialDivisionLimit) return {true, true};

  const BigInt n_minus_1 = n - 1;
  BigInt d = n_minus_1;
  const unsigned long s = mpz_scan1(d.get_mpz_t(), 0);
  mpz_tdiv_q_2exp(d.get_mpz_t(), d.get_mpz_t(), s);
  for (unsigned base : detail::kWitnessBases) {
    if (!detail::strong_probable_prime(n, n_minus_1, d, s, base)) return {false, true};
  }
  if (n < detail::deterministic_mr_bound()) return {true, true};
  const bool bpsw = mpz_probab_prime_p(n.get_mpz_t(), 30) > 0;
  return {bpsw, !bpsw};
}

/// A certified prime modulus. Cheap to copy; copies share the same value.
class FieldModulus {
 public:
  explicit FieldModulus(BigInt q) {
    require(q >= 2, ErrorCode::NotPrime, "modulus must be at least 2");
    const PrimalityResult r = check_prime(q);
    require(r.prime, ErrorCode::NotPrime, "modulus " + q.get_str() + " is composite");
    impl_ = std::make_shared<const Impl>(Impl{std::move(q), r.proven});
  }
  explicit FieldModulus(std::uint64_t q) : FieldModulus(BigInt(std::to_string(q))) {}

  const BigInt& q() const { return impl_->q; }
  bool proven_prime() const { return impl_->proven; }
  std::size_t bit_length() const { return mpz_sizeinbase(impl_->q.get_mpz_t(), 2); }

  /// ceil(log2 q).
  std::size_t ceil_log2() const {
    const BigInt m = impl_->q - 1;
    return m == 0 ? 0 : mpz_sizeinbase(m.get_mpz_t(), 2);
  }

  friend bool operator==(const FieldModulus& a, const FieldModulus& b) {
    return a.impl_ == b.impl_ || a.impl_->q == b.impl_->q;
  }

 private:
  struct Impl {
    BigInt q;
    bool proven;
  };
  std::shared_ptr<const Impl> impl_;
};

/// Smallest prime >= x.
inline FieldModulus next_prime_at_least(const BigInt& x) {
  require(x >= 2, ErrorCode::InvalidArgument, "next_prime_at_least requires x >= 2");
  BigInt c = x;
  if (c > 2 && mpz_even_p(c.get_mpz_t())) ++c;
  while (!check_prime(c).prime) c += (c == 2 ? 1 : 2);
  return FieldModulus(c);
}

class FieldElement {
 public:
  FieldElement(const FieldModulus& m, BigInt v) : modulus_(m), value_(std::move(v)) {
    mpz_mod(value_.get_mpz_t(), value_.get_mpz_t(), modulus_.q().get_mpz_t());
  }
  FieldElement(const FieldModulus& m, long v) : FieldElement(m, BigInt(v)) {}

  static FieldElement zero(const FieldModulus& m) { return FieldElement(m, 0L); }
  static FieldElement one(const FieldModulus& m) { return FieldElement(m, 1L); }

  const BigInt& value() const { return value_; }
  const FieldModulus& modulus() const { return modulus_; }
  bool is_zero() const { return value_ == 0; }

  FieldElement operator+(const FieldElement& o) const { return FieldElement(same(o), value_ + o.value_); }
  FieldElement operator-(const FieldElement& o) const { return FieldElement(same(o), value_ - o.value_); }
  FieldElement operator*(const FieldElement& o) const { return FieldElement(same(o), value_ * o.value_); }
  FieldElement operator-() const { return FieldElement(modulus_, -value_); }

  FieldElement inverse() const {
    require(!is_zero(), ErrorCode::DivisionByZero, "inverse of zero");
    BigInt r;
    mpz_invert(r.get_mpz_t(), value_.get_mpz_t(), modulus_.q().get_mpz_t());
    return FieldElement(modulus_, r);
  }

  friend bool operator==(const FieldElement& a, const FieldElement& b) {
    return a.modulus_ == b.modulus_ && a.value_ == b.value_;
  }

 private:
  const FieldModulus& same(const FieldElement& o) const {
    require(modulus_ == o.modulus_, ErrorCode::ModulusMismatch, "operands live in different fields");
    return modulus_;
  }

  FieldModulus modulus_;
  BigInt value_;
};

enum class FieldOp { Add, Sub, Mul, Inv };

/// Dispatching form of the field operations; `b` is ignored for Inv.
inline FieldElement field_arith(FieldOp op, const FieldElement& a, const std::optional<FieldElement>& b = {}) {
  if (op == FieldOp::Inv) return a.inverse();
  require(b.has_value(), ErrorCode::InvalidArgument, "binary field operation needs two operands");
  switch (op) {
    case FieldOp::Add: return a + *b;
    case FieldOp::Sub: return a - *b;
    case FieldOp::Mul: return a * *b;
    case FieldOp::Inv: break;
  }
  return a.inverse();
}

/// Uniform element of [0, q) by rejection from fixed-width random words.
inline BigInt sample_value(const FieldModulus& m, SeededRng& rng) {
  const std::size_t bits = m.bit_length();
  const std::size_t words = (bits + 63) / 64;
  const unsigned top_bits = static_cast<unsigned>(bits - 64 * (words - 1));
  const std::uint64_t top_mask = top_bits == 64 ? UINT64_MAX : ((std::uint64_t{1} << top_bits) - 1);
  std::vector<std::uint64_t> buf(words);
  BigInt v;
  do {
    for (std::size_t i = 0; i < words; ++i) buf[i] = rng.next_u64();
    buf[words - 1] &= top_mask;
    mpz_import(v.get_mpz_t(), words, -1, sizeof(std::uint64_t), 0, 0, buf.data());
  } while (v >= m.q());
  return v;
}

inline FieldElement sample_element(const FieldModulus& m, SeededRng& rng) { return FieldElement(m, sample_value(m, rng)); }

/// Cube root of a non-negative rational when numerator and denominator are both perfect cubes.
inline std::optional<mpq_class> exact_cube_root(mpq_class v) {
  v.canonicalize();
  BigInt num;
  BigInt den;
  if (mpz_root(num.get_mpz_t(), v.get_num().get_mpz_t(), 3) == 0) return std::nullopt;
  if (mpz_root(den.get_mpz_t(), v.get_den().get_mpz_t(), 3) == 0) return std::nullopt;
  mpq_class r(num, den);
  r.canonicalize();
  return r;
}

/// Row-major matrix over F_q. Entries are stored reduced, so every entry
/// shares the matrix modulus by construction.
class FqMatrix {
 public:
  FqMatrix(std::size_t rows, std::size_t cols, const FieldModulus& m)
      : rows_(rows), cols_(cols), modulus_(m), entries_(rows * cols, BigInt(0)) {
    require(rows > 0 && cols > 0, ErrorCode::ShapeMismatch, "matrix dimensions must be positive");
  }

  static FqMatrix from_values(std::size_t rows, std::size_t cols, const FieldModulus& m,
                              const std::vector<long>& values) {
    require(values.size() == rows * cols, ErrorCode::ShapeMismatch, "value count does not match shape");
    FqMatrix out(rows, cols, m);
    for (std::size_t k = 0; k < values.size(); ++k) out.set_value(k / cols, k % cols, BigInt(values[k]));
    return out;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const FieldModulus& modulus() const { return modulus_; }

  const BigInt& value(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }
  FieldElement at(std::size_t i, std::size_t j) const { return FieldElement(modulus_, value(i, j)); }

  void set_value(std::size_t i, std::size_t j, BigInt v) {
    mpz_mod(v.get_mpz_t(), v.get_mpz_t(), modulus_.q().get_mpz_t());
    entries_[i * cols_ + j] = std::move(v);
  }
  void set(std::size_t i, std::size_t j, const FieldElement& e) {
    require(e.modulus() == modulus_, ErrorCode::ModulusMismatch, "entry from a different field");
    entries_[i * cols_ + j] = e.value();
  }

  const std::vector<BigInt>& values() const { return entries_; }

  friend bool operator==(const FqMatrix& a, const FqMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.modulus_ == b.modulus_ && a.entries_ == b.entries_;
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  FieldModulus modulus_;
  std::vector<BigInt> entries_;
};

enum class MatrixOp { Add, Sub, Hadamard };

inline FqMatrix matrix_entrywise(MatrixOp op, const FqMatrix& a, const FqMatrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorCode::ShapeMismatch, "entry-wise op on unequal shapes");
  require(a.modulus() == b.modulus(), ErrorCode::ModulusMismatch, "entry-wise op across fields");
  FqMatrix out(a.rows(), a.cols(), a.modulus());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      switch (op) {
        case MatrixOp::Add: out.set_value(i, j, a.value(i, j) + b.value(i, j)); break;
        case MatrixOp::Sub: out.set_value(i, j, a.value(i, j) - b.value(i, j)); break;
        case MatrixOp::Hadamard: out.set_value(i, j, a.value(i, j) * b.value(i, j)); break;
      }
    }
  }
  return out;
}

inline FqMatrix operator+(const FqMatrix& a, const FqMatrix& b) { return matrix_entrywise(MatrixOp::Add, a, b); }
inline FqMatrix operator-(const FqMatrix& a, const FqMatrix& b) { return matrix_entrywise(MatrixOp::Sub, a, b); }
inline FqMatrix hadamard(const FqMatrix& a, const FqMatrix& b) { return matrix_entrywise(MatrixOp::Hadamard, a, b); }

inline FqMatrix sample_uniform(std::size_t rows, std::size_t cols, const FieldModulus& m, SeededRng& rng) {
  FqMatrix out(rows, cols, m);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out.set_value(i, j, sample_value(m, rng));
  return out;
}

}  // namespace rzk::fq
