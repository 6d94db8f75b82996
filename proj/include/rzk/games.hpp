#pragma once

// Two-player games given by explicit valuation tables, their coupled
// versions, exact classical values, and Born-rule evaluation of quantum
// strategies (including Bob's consecutive-measurement strategy).

#include <gmpxx.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rzk/error.hpp"
#include "rzk/fq.hpp"
#include "rzk/parallel.hpp"
#include "rzk/quantum.hpp"

namespace rzk::games {

using Rational = mpq_class;
using quantum::Matrix;

inline constexpr std::uint64_t kMaxStrategyEvaluations = 10'000'000;
inline constexpr Eigen::Index kMaxQuantumDimension = 64;

/// G = (I_A, I_B, O_A, O_B, V, p) with inputs and outputs indexed from 0.
/// The input distribution is stored as integer weights; it is uniform when
/// all weights are equal.
class Game {
 public:
  using Predicate = std::function<bool(std::size_t x, std::size_t y, std::size_t a, std::size_t b)>;

  Game(std::size_t inputs_a, std::size_t inputs_b, std::size_t outputs_a, std::size_t outputs_b, const Predicate& valuation,
       std::vector<std::uint64_t> weights = {})
      : ia_(inputs_a), ib_(inputs_b), oa_(outputs_a), ob_(outputs_b), weights_(std::move(weights)) {
    require(ia_ > 0 && ib_ > 0 && oa_ > 0 && ob_ > 0, ErrorCode::InvalidArgument, "game sets must be non-empty");
    if (weights_.empty()) weights_.assign(ia_ * ib_, 1);
    require(weights_.size() == ia_ * ib_, ErrorCode::InvalidArgument, "one weight per input pair");
    table_.resize(ia_ * ib_ * oa_ * ob_);
    for (std::size_t x = 0; x < ia_; ++x)
      for (std::size_t y = 0; y < ib_; ++y)
        for (std::size_t a = 0; a < oa_; ++a)
          for (std::size_t b = 0; b < ob_; ++b) table_[index(x, y, a, b)] = valuation(x, y, a, b) ? 1 : 0;
  }

  std::size_t inputs_a() const { return ia_; }
  std::size_t inputs_b() const { return ib_; }
  std::size_t outputs_a() const { return oa_; }
  std::size_t outputs_b() const { return ob_; }

  bool wins(std::size_t x, std::size_t y, std::size_t a, std::size_t b) const { return table_[index(x, y, a, b)] != 0; }
  std::uint64_t weight(std::size_t x, std::size_t y) const { return weights_[x * ib_ + y]; }
  std::uint64_t total_weight() const {
    std::uint64_t t = 0;
    for (auto w : weights_) t += w;
    return t;
  }
  bool uniform() const { return std::all_of(weights_.begin(), weights_.end(), [&](auto w) { return w == weights_[0]; }); }

 private:
  std::size_t index(std::size_t x, std::size_t y, std::size_t a, std::size_t b) const {
    return ((x * ib_ + y) * oa_ + a) * ob_ + b;
  }

  std::size_t ia_, ib_, oa_, ob_;
  std::vector<std::uint64_t> weights_;
  std::vector<std::uint8_t> table_;
};

/// CHSH^Q(P): x in F_Q, y in {0..P-1}, a, b in F_Q; win iff a + b = x*y (mod Q).
inline Game chsh_q(std::uint64_t q, std::uint64_t p) {
  require(p <= q, ErrorCode::ParameterOrder, "CHSH^Q(P) needs P <= Q");
  require(fq::check_prime(fq::BigInt(std::to_string(q))).prime, ErrorCode::NotPrime, "Q must be prime");
  return Game(q, p, q, q, [q](std::size_t x, std::size_t y, std::size_t a, std::size_t b) {
    return (a + b) % q == (x * y) % q;
  });
}

/// CHSH^Q(2)^{(x)n}: inputs x in F_Q^n and y in {0,1}^n, outputs in F_Q^n,
/// encoded little-endian; win iff a_i + b_i = x_i y_i for every i.
inline Game chsh_q_parallel(std::uint64_t q, std::size_t n) {
  require(n >= 1, ErrorCode::InvalidArgument, "need at least one repetition");
  require(fq::check_prime(fq::BigInt(std::to_string(q))).prime, ErrorCode::NotPrime, "Q must be prime");
  std::size_t qn = 1;
  for (std::size_t i = 0; i < n; ++i) {
    qn *= q;
    require(qn <= 256 && n <= 16, ErrorCode::TooLarge, "parallel game table too large");
  }
  require(qn * qn * qn * (std::size_t{1} << n) <= 20'000'000, ErrorCode::TooLarge, "parallel game table too large");
  return Game(qn, std::size_t{1} << n, qn, qn, [q, n](std::size_t x, std::size_t y, std::size_t a, std::size_t b) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t xi = x % q, ai = a % q, bi = b % q, yi = (y >> i) & 1U;
      if ((ai + bi) % q != (xi * yi) % q) return false;
      x /= q;
      a /= q;
      b /= q;
    }
    return true;
  });
}

/// Coupled game: Bob gets an ordered pair (y, y') with y != y' and answers
/// (b, b'); both instances must be won with Alice's single (x, a).
/// Bob input k enumerates pairs in lexicographic order; output b * |O_B| + b'.
class CoupledIndex {
 public:
  explicit CoupledIndex(std::size_t inputs_b) {
    for (std::size_t y = 0; y < inputs_b; ++y)
      for (std::size_t y2 = 0; y2 < inputs_b; ++y2)
        if (y != y2) pairs_.emplace_back(y, y2);
  }
  std::size_t size() const { return pairs_.size(); }
  std::pair<std::size_t, std::size_t> operator[](std::size_t k) const { return pairs_[k]; }

 private:
  std::vector<std::pair<std::size_t, std::size_t>> pairs_;
};

inline Game couple_game(const Game& g) {
  require(g.uniform(), ErrorCode::NotUniform, "the coupled game is defined for uniform input distributions");
  require(g.inputs_b() >= 2, ErrorCode::InvalidArgument, "Bob needs two distinct inputs");
  const CoupledIndex pairs(g.inputs_b());
  const std::size_t ob = g.outputs_b();
  return Game(g.inputs_a(), pairs.size(), g.outputs_a(), ob * ob,
              [&g, pairs, ob](std::size_t x, std::size_t k, std::size_t a, std::size_t bb) {
                const auto [y, y2] = pairs[k];
                return g.wins(x, y, a, bb / ob) && g.wins(x, y2, a, bb % ob);
              });
}

struct ProjectivityCertificate {
  std::size_t s = 0;  ///< max over (x, y, a) of the number of winning b
};

inline ProjectivityCertificate projectivity(const Game& g) {
  ProjectivityCertificate c;
  for (std::size_t x = 0; x < g.inputs_a(); ++x)
    for (std::size_t y = 0; y < g.inputs_b(); ++y) {
      if (g.weight(x, y) == 0) continue;
      for (std::size_t a = 0; a < g.outputs_a(); ++a) {
        std::size_t count = 0;
        for (std::size_t b = 0; b < g.outputs_b(); ++b) count += g.wins(x, y, a, b) ? 1 : 0;
        c.s = std::max(c.s, count);
      }
    }
  return c;
}

// ---------------------------------------------------------------------------
// Classical strategies

struct ClassicalStrategy {
  std::vector<std::size_t> alice;  ///< x -> a
  std::vector<std::size_t> bob;    ///< y -> b
};

/// Shared randomness: a finite mixture of deterministic strategies.
struct MixedClassicalStrategy {
  std::vector<std::pair<Rational, ClassicalStrategy>> components;
};

inline Rational evaluate_strategy(const Game& g, const ClassicalStrategy& s) {
  require(s.alice.size() == g.inputs_a() && s.bob.size() == g.inputs_b(), ErrorCode::ShapeMismatch,
          "strategy does not match the game's input sets");
  std::uint64_t won = 0;
  for (std::size_t x = 0; x < g.inputs_a(); ++x)
    for (std::size_t y = 0; y < g.inputs_b(); ++y) {
      require(s.alice[x] < g.outputs_a() && s.bob[y] < g.outputs_b(), ErrorCode::ShapeMismatch, "output out of range");
      if (g.wins(x, y, s.alice[x], s.bob[y])) won += g.weight(x, y);
    }
  Rational r(static_cast<unsigned long>(won), static_cast<unsigned long>(g.total_weight()));
  r.canonicalize();
  return r;
}

inline Rational evaluate_strategy(const Game& g, const MixedClassicalStrategy& s) {
  Rational total = 0;
  for (const auto& [w, c] : s.components) total += w * evaluate_strategy(g, c);
  return total;
}

/// The classical strategy induced on couple_game(g): Bob answers each
/// coordinate of (y, y') with his single-game function.
inline ClassicalStrategy couple_strategy(const Game& g, const ClassicalStrategy& s) {
  const CoupledIndex pairs(g.inputs_b());
  ClassicalStrategy c{s.alice, std::vector<std::size_t>(pairs.size())};
  for (std::size_t k = 0; k < pairs.size(); ++k) c.bob[k] = s.bob[pairs[k].first] * g.outputs_b() + s.bob[pairs[k].second];
  return c;
}

namespace detail {

inline std::uint64_t checked_pow(std::uint64_t base, std::uint64_t exp, std::uint64_t cap) {
  std::uint64_t r = 1;
  for (std::uint64_t k = 0; k < exp; ++k) {
    if (base != 0 && r > cap / base) return cap + 1;
    r *= base;
  }
  return r;
}

/// Best total weight when the enumerated side plays each deterministic
/// strategy and the other side best-responds input by input.
inline std::uint64_t best_response_scan(const Game& g, bool enumerate_alice) {
  const std::size_t n_enum = enumerate_alice ? g.inputs_a() : g.inputs_b();
  const std::size_t o_enum = enumerate_alice ? g.outputs_a() : g.outputs_b();
  const std::size_t n_resp = enumerate_alice ? g.inputs_b() : g.inputs_a();
  const std::size_t o_resp = enumerate_alice ? g.outputs_b() : g.outputs_a();
  const std::uint64_t strategies = checked_pow(o_enum, n_enum, UINT64_MAX / 2);

  const std::size_t chunks = 64;
  std::vector<std::uint64_t> best(chunks, 0);
  parallel_for(chunks, [&](std::size_t chunk) {
    std::vector<std::size_t> f(n_enum);
    for (std::uint64_t idx = chunk; idx < strategies; idx += chunks) {
      std::uint64_t rem = idx;
      for (std::size_t i = 0; i < n_enum; ++i) {
        f[i] = rem % o_enum;
        rem /= o_enum;
      }
      std::uint64_t total = 0;
      for (std::size_t r = 0; r < n_resp; ++r) {
        std::uint64_t best_here = 0;
        for (std::size_t o = 0; o < o_resp; ++o) {
          std::uint64_t s = 0;
          for (std::size_t i = 0; i < n_enum; ++i) {
            const std::size_t x = enumerate_alice ? i : r;
            const std::size_t y = enumerate_alice ? r : i;
            const std::size_t a = enumerate_alice ? f[i] : o;
            const std::size_t b = enumerate_alice ? o : f[i];
            if (g.wins(x, y, a, b)) s += g.weight(x, y);
          }
          best_here = std::max(best_here, s);
        }
        total += best_here;
      }
      best[chunk] = std::max(best[chunk], total);
    }
  });
  return *std::max_element(best.begin(), best.end());
}

}  // namespace detail

/// Exact classical value: the maximum over deterministic strategies.
inline Rational classical_value(const Game& g) {
  const std::uint64_t cap = kMaxStrategyEvaluations;
  const std::uint64_t alice_cost = detail::checked_pow(g.outputs_a(), g.inputs_a(), cap) *
                                   g.inputs_b() * g.outputs_b() * g.inputs_a();
  const std::uint64_t bob_cost = detail::checked_pow(g.outputs_b(), g.inputs_b(), cap) *
                                 g.inputs_a() * g.outputs_a() * g.inputs_b();
  const bool alice_side = alice_cost <= bob_cost;
  require(std::min(alice_cost, bob_cost) <= cap, ErrorCode::TooLarge, "exhaustive classical value exceeds 1e7 evaluations");
  const std::uint64_t best = detail::best_response_scan(g, alice_side);
  Rational r(static_cast<unsigned long>(best), static_cast<unsigned long>(g.total_weight()));
  r.canonicalize();
  return r;
}

// ---------------------------------------------------------------------------
// Quantum strategies

/// Shared state on C^{d_A} (x) C^{d_B}; Alice holds one measurement per x
/// (operators indexed by a), Bob one per y (indexed by b).
struct QuantumStrategy {
  Eigen::Index dim_a = 0;
  Eigen::Index dim_b = 0;
  quantum::DensityMatrix state;
  std::vector<std::vector<Matrix>> alice;
  std::vector<std::vector<Matrix>> bob;

  QuantumStrategy(Eigen::Index da, Eigen::Index db, quantum::DensityMatrix rho, std::vector<std::vector<Matrix>> a,
                  std::vector<std::vector<Matrix>> b)
      : dim_a(da), dim_b(db), state(std::move(rho)), alice(std::move(a)), bob(std::move(b)) {
    require(da * db == state.dim(), ErrorCode::DimensionMismatch, "state dimension must be d_A * d_B");
    require(da * db <= kMaxQuantumDimension, ErrorCode::TooLarge, "quantum strategies are capped at d_A * d_B <= 64");
    check_measurements(alice, da);
    check_measurements(bob, db);
  }

 private:
  static void check_measurements(const std::vector<std::vector<Matrix>>& ms, Eigen::Index d) {
    for (const auto& m : ms) {
      Matrix sum = Matrix::Zero(d, d);
      for (const Matrix& op : m) {
        require(op.rows() == d && op.cols() == d, ErrorCode::DimensionMismatch, "measurement operator has wrong size");
        sum += op;
      }
      require((sum - Matrix::Identity(d, d)).norm() <= quantum::kProjectorTolerance, ErrorCode::InvalidArgument,
              "measurement operators do not sum to identity");
    }
  }
};

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline void require_shape(const Game& g, const QuantumStrategy& s) {
  require(s.alice.size() == g.inputs_a() && s.bob.size() == g.inputs_b(), ErrorCode::ShapeMismatch,
          "strategy does not match the game's input sets");
  for (const auto& m : s.alice) require(m.size() == g.outputs_a(), ErrorCode::ShapeMismatch, "Alice output count");
  for (const auto& m : s.bob) require(m.size() == g.outputs_b(), ErrorCode::ShapeMismatch, "Bob output count");
}

/// Born-rule win probability: sum over winning (x, y, a, b) of p(x, y) tr((A^x_a (x) B^y_b) rho).
inline double evaluate_strategy(const Game& g, const QuantumStrategy& s) {
  require_shape(g, s);
  const double total = static_cast<double>(g.total_weight());
  double value = 0;
  for (std::size_t x = 0; x < g.inputs_a(); ++x)
    for (std::size_t y = 0; y < g.inputs_b(); ++y)
      for (std::size_t a = 0; a < g.outputs_a(); ++a)
        for (std::size_t b = 0; b < g.outputs_b(); ++b)
          if (g.wins(x, y, a, b))
            value += static_cast<double>(g.weight(x, y)) *
                     quantum::trace_product(kron(s.alice[x][a], s.bob[y][b]), s.state.matrix());
  return value / total;
}

/// Bob's strategy for the coupled game: on (y, y') he measures Q^y, then
/// measures Q^{y'} on the post-measurement state. Alice plays as in G.
struct ConsecutiveStrategy {
  QuantumStrategy base;
  double base_value = 0.0;   ///< value of `base` on G
  std::size_t bob_inputs = 0;  ///< n = |I_B|
  std::size_t projectivity = 0;  ///< S
  double lower_bound = 0.0;  ///< (1/64S) max(v - 1/n, 0)^3
};

inline ConsecutiveStrategy consecutive_strategy(const Game& g, const QuantumStrategy& s) {
  require_shape(g, s);
  for (const auto& m : s.bob)
    for (const Matrix& op : m)
      require((op * op - op).norm() <= quantum::kProjectorTolerance && (op - op.adjoint()).norm() <= quantum::kProjectorTolerance,
              ErrorCode::NotProjective, "Bob's measurements must be projective");
  ConsecutiveStrategy c{s, evaluate_strategy(g, s), g.inputs_b(), projectivity(g).s, 0.0};
  c.lower_bound = quantum::consecutive_measurement_bound(c.base_value, c.bob_inputs, std::max<std::size_t>(c.projectivity, 1));
  return c;
}

/// Win probability of the sequential strategy on couple_game(g):
/// average over x and ordered pairs y != y' of
/// sum_{a,b,b' winning} tr(K rho K^dagger), K = A^x_a (x) Q^{y'}_{b'} Q^y_b.
inline double evaluate_consecutive(const Game& g, const ConsecutiveStrategy& c) {
  require(g.uniform(), ErrorCode::NotUniform, "coupled evaluation needs a uniform game");
  const QuantumStrategy& s = c.base;
  require_shape(g, s);
  const CoupledIndex pairs(g.inputs_b());
  const Matrix& rho = s.state.matrix();
  double value = 0;
  for (std::size_t x = 0; x < g.inputs_a(); ++x)
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto [y, y2] = pairs[k];
      for (std::size_t a = 0; a < g.outputs_a(); ++a)
        for (std::size_t b = 0; b < g.outputs_b(); ++b) {
          if (!g.wins(x, y, a, b)) continue;
          for (std::size_t b2 = 0; b2 < g.outputs_b(); ++b2) {
            if (!g.wins(x, y2, a, b2)) continue;
            const Matrix kraus = kron(s.alice[x][a], s.bob[y2][b2] * s.bob[y][b]);
            value += (kraus * rho * kraus.adjoint()).trace().real();
          }
        }
    }
  return value / static_cast<double>(g.inputs_a() * pairs.size());
}

/// Diagonal embedding of a classical mixture: shared state sum_r p_r |r r><r r|,
/// with every measurement operator diagonal in the randomness register.
inline QuantumStrategy embed_classical(const Game& g, const MixedClassicalStrategy& mix) {
  const auto r = static_cast<Eigen::Index>(mix.components.size());
  require(r > 0, ErrorCode::InvalidArgument, "empty mixture");
  Matrix rho = Matrix::Zero(r * r, r * r);
  for (Eigen::Index k = 0; k < r; ++k) rho(k * r + k, k * r + k) = mix.components[k].first.get_d();
  std::vector<std::vector<Matrix>> alice(g.inputs_a(), std::vector<Matrix>(g.outputs_a(), Matrix::Zero(r, r)));
  std::vector<std::vector<Matrix>> bob(g.inputs_b(), std::vector<Matrix>(g.outputs_b(), Matrix::Zero(r, r)));
  for (Eigen::Index k = 0; k < r; ++k) {
    const ClassicalStrategy& c = mix.components[k].second;
    for (std::size_t x = 0; x < g.inputs_a(); ++x) alice[x][c.alice[x]](k, k) = 1.0;
    for (std::size_t y = 0; y < g.inputs_b(); ++y) bob[y][c.bob[y]](k, k) = 1.0;
  }
  return QuantumStrategy(r, r, quantum::DensityMatrix(rho), std::move(alice), std::move(bob));
}

/// Projective measurement in the real basis rotated by theta.
inline std::vector<Matrix> rotated_basis(double theta) {
  Eigen::Vector2cd v0(std::cos(theta), std::sin(theta));
  Eigen::Vector2cd v1(-std::sin(theta), std::cos(theta));
  return {v0 * v0.adjoint(), v1 * v1.adjoint()};
}

/// The optimal entangled strategy for binary CHSH (CHSH^2(2)): a maximally
/// entangled pair, Alice at angles 0 and pi/4, Bob at +-pi/8.
inline QuantumStrategy epr_chsh_strategy() {
  Eigen::Vector4cd phi(1, 0, 0, 1);
  phi /= std::sqrt(2.0);
  const double pi = std::acos(-1.0);
  return QuantumStrategy(2, 2, quantum::DensityMatrix(phi * phi.adjoint()), {rotated_basis(0), rotated_basis(pi / 4)},
                         {rotated_basis(pi / 8), rotated_basis(-pi / 8)});
}

// ---------------------------------------------------------------------------
// Closed-form bounds for CHSH^Q(P) and its parallel repetition

struct BoundsReport {
  fq::BigInt q;
  std::uint64_t p = 0;
  std::uint64_t repetitions = 0;
  bool q_prime = false;
  double single_bound = 0.0;  ///< 1/P + 4/Q^{1/3}
  bool single_bound_exact = false;  ///< Q is a perfect cube, so the bound is exact
  Rational single_coupled_bound;  ///< 1/Q
  Rational quoted_coupled;         ///< (1/2^n)((1 + 1/Q)^n - 1)
  Rational exact_coupled;         ///< E_{y != y'} Q^{-|y - y'|_H} over ordered distinct pairs
  Rational normalization_ratio;   ///< exact / quoted = 2^n / (2^n - 1)
  std::optional<double> repeated_value_bound;  ///< 1/2^n + 4 (2n / (Q 2^n))^{1/3} when Q > n
};

inline fq::BigInt binomial(unsigned long n, unsigned long k) {
  fq::BigInt r;
  mpz_bin_uiui(r.get_mpz_t(), n, k);
  return r;
}

/// Exact E_{y != y'}[Q^{-|y - y'|_H}] over ordered pairs of distinct n-bit
/// strings, grouping the 2^n * C(n, d) pairs at Hamming distance d.
inline Rational coupled_expectation(const fq::BigInt& q, unsigned long n) {
  require(n >= 1, ErrorCode::InvalidArgument, "need at least one repetition");
  Rational sum = 0;
  fq::BigInt q_pow = 1;
  for (unsigned long d = 1; d <= n; ++d) {
    q_pow *= q;
    sum += Rational(binomial(n, d), q_pow);
  }
  const fq::BigInt strings = fq::BigInt(1) << n;
  Rational r = sum * Rational(strings, strings * (strings - 1));
  r.canonicalize();
  return r;
}

inline BoundsReport chsh_q_bounds(const fq::BigInt& q, std::uint64_t p, std::uint64_t repetitions) {
  require(p >= 1 && repetitions >= 1, ErrorCode::InvalidArgument, "P and the repetition count must be positive");
  require(fq::BigInt(std::to_string(p)) <= q, ErrorCode::ParameterOrder, "P must not exceed Q");
  BoundsReport r;
  r.q = q;
  r.p = p;
  r.repetitions = repetitions;
  r.q_prime = fq::check_prime(q).prime;

  fq::BigInt root;
  r.single_bound_exact = mpz_root(root.get_mpz_t(), q.get_mpz_t(), 3) != 0;
  const double cube_root = r.single_bound_exact ? root.get_d() : std::cbrt(q.get_d());
  r.single_bound = 1.0 / static_cast<double>(p) + 4.0 / cube_root;
  r.single_coupled_bound = Rational(fq::BigInt(1), q);

  const unsigned long n = repetitions;
  const fq::BigInt strings = fq::BigInt(1) << n;
  fq::BigInt num_pow;
  fq::BigInt den_pow;
  const fq::BigInt q_plus_1 = q + 1;
  mpz_pow_ui(num_pow.get_mpz_t(), q_plus_1.get_mpz_t(), n);
  mpz_pow_ui(den_pow.get_mpz_t(), q.get_mpz_t(), n);
  Rational growth(num_pow - den_pow, den_pow);  // (1 + 1/Q)^n - 1
  growth.canonicalize();
  r.quoted_coupled = growth / Rational(strings);
  r.quoted_coupled.canonicalize();
  r.exact_coupled = coupled_expectation(q, n);
  r.normalization_ratio = r.exact_coupled / r.quoted_coupled;
  r.normalization_ratio.canonicalize();
  if (q > fq::BigInt(std::to_string(n))) {
    const double nn = static_cast<double>(n);
    const double two_n = std::ldexp(1.0, static_cast<int>(n));
    r.repeated_value_bound = 1.0 / two_n + 4.0 * std::cbrt(2.0 * nn / (q.get_d() * two_n));
  }
  return r;
}

}  // namespace rzk::games
