#pragma once

// F_Q relativistic commitments: bit, P-ary string, and n bits in parallel.
// Commit: y_i = a_i + d_i * x_i. Reveal: (d_i, a_i) for the opened slots.

#include <gmpxx.h>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rzk/error.hpp"
#include "rzk/fq.hpp"
#include "rzk/games.hpp"
#include "rzk/rng.hpp"

namespace rzk::commitment {

using fq::BigInt;
using fq::FieldElement;
using fq::FieldModulus;
using Rational = mpq_class;
using fq::exact_cube_root;

enum class CommitKind { Bit, String, Parallel };

inline std::string to_string(CommitKind k) {
  switch (k) {
    case CommitKind::Bit: return "bit";
    case CommitKind::String: return "string";
    case CommitKind::Parallel: return "parallel";
  }
  return "unknown";
}

/// Key material for one commitment. Both prover agents hold `a`; both
/// verifier agents hold `x` (called b_i in the parallel scheme).
struct CommitmentInstance {
  FieldModulus q;
  CommitKind kind;
  std::uint64_t alphabet;  ///< 2 for bit and parallel slots, P for strings
  std::vector<FieldElement> a;
  std::vector<FieldElement> x;

  std::size_t width() const { return a.size(); }

  /// `size` is P for strings and the slot count for parallel; ignored for bits.
  static CommitmentInstance sample(CommitKind kind, const FieldModulus& q, std::uint64_t size, SeededRng& rng) {
    std::uint64_t alphabet = 2;
    std::size_t slots = 1;
    if (kind == CommitKind::String) {
      require(size >= 1, ErrorCode::InvalidArgument, "alphabet must be non-empty");
      require(BigInt(std::to_string(size)) <= q.q(), ErrorCode::ParameterOrder, "string commitment needs P <= Q");
      alphabet = size;
    } else if (kind == CommitKind::Parallel) {
      require(size >= 1, ErrorCode::InvalidArgument, "need at least one slot");
      slots = size;
    }
    CommitmentInstance inst{q, kind, alphabet, {}, {}};
    for (std::size_t i = 0; i < slots; ++i) inst.a.push_back(fq::sample_element(q, rng));
    for (std::size_t i = 0; i < slots; ++i) inst.x.push_back(fq::sample_element(q, rng));
    return inst;
  }
};

struct CommitMessage {
  std::vector<FieldElement> y;
};

struct RevealMessage {
  std::vector<BigInt> d;
  std::vector<FieldElement> a;
  std::optional<std::vector<std::size_t>> subset;  ///< parallel case only; d and a follow its order
};

inline void check_value(const CommitmentInstance& inst, const BigInt& d) {
  require(d >= 0 && d < BigInt(std::to_string(inst.alphabet)), ErrorCode::ValueOutOfRange,
          "committed value outside the alphabet");
}

inline CommitMessage commit(const CommitmentInstance& inst, const std::vector<BigInt>& d) {
  require(d.size() == inst.width(), ErrorCode::WidthMismatch, "one committed value per slot");
  CommitMessage c;
  for (std::size_t i = 0; i < d.size(); ++i) {
    check_value(inst, d[i]);
    c.y.push_back(inst.a[i] + FieldElement(inst.q, d[i]) * inst.x[i]);
  }
  return c;
}

inline CommitMessage commit(const CommitmentInstance& inst, const BigInt& d) { return commit(inst, std::vector<BigInt>{d}); }

inline RevealMessage honest_reveal(const CommitmentInstance& inst, const std::vector<BigInt>& d,
                                   std::optional<std::vector<std::size_t>> subset = std::nullopt) {
  RevealMessage r;
  if (!subset) {
    r.d = d;
    r.a = inst.a;
    return r;
  }
  for (std::size_t i : *subset) {
    require(i < inst.width(), ErrorCode::WidthMismatch, "subset index out of range");
    r.d.push_back(d[i]);
    r.a.push_back(inst.a[i]);
  }
  r.subset = std::move(subset);
  return r;
}

/// Accepts iff y_i = a_i + d_i x_i on every opened slot.
inline bool verify_reveal(const CommitmentInstance& inst, const CommitMessage& c, const RevealMessage& r) {
  require(c.y.size() == inst.width(), ErrorCode::WidthMismatch, "commit message width");
  std::vector<std::size_t> slots;
  if (r.subset) {
    require(inst.kind == CommitKind::Parallel, ErrorCode::WidthMismatch, "subsets apply to parallel commitments only");
    require(std::set<std::size_t>(r.subset->begin(), r.subset->end()).size() == r.subset->size(), ErrorCode::WidthMismatch,
            "repeated subset index");
    slots = *r.subset;
  } else {
    for (std::size_t i = 0; i < inst.width(); ++i) slots.push_back(i);
  }
  require(r.d.size() == slots.size() && r.a.size() == slots.size(), ErrorCode::WidthMismatch, "reveal width");
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const std::size_t i = slots[k];
    require(i < inst.width(), ErrorCode::WidthMismatch, "subset index out of range");
    if (r.d[k] < 0 || r.d[k] >= BigInt(std::to_string(inst.alphabet))) return false;
    if (!(c.y[i] == r.a[k] + FieldElement(inst.q, r.d[k]) * inst.x[i])) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Sum-binding parameters

inline double cube_root(const Rational& v, bool& exact) {
  if (auto r = exact_cube_root(v)) {
    exact = true;
    return r->get_d();
  }
  exact = false;
  return std::cbrt(v.get_d());
}

struct EpsilonReport {
  CommitKind kind = CommitKind::String;
  std::uint64_t size = 0;  ///< P, or |S| for parallel
  BigInt q;
  double epsilon = 0.0;
  bool exact = false;  ///< the cube root was exact
  std::optional<Rational> epsilon_exact;
  /// String case: the quoted cost 3(log2 P + |log2 eps|) + 8 bits per round.
  std::optional<double> quoted_bits;
  /// String case: log2 Q solved from eps = 4P / Q^{1/3}, i.e. 3(log2 P + |log2 eps|) + 6 when eps < 1.
  std::optional<double> derived_bits;
};

inline EpsilonReport sum_binding_epsilon(CommitKind kind, std::uint64_t size, const BigInt& q) {
  require(size >= 1 && q > 0, ErrorCode::InvalidArgument, "parameters must be positive");
  EpsilonReport r;
  r.kind = kind;
  r.size = size;
  r.q = q;
  if (kind == CommitKind::Parallel) {
    // eps = 4 (2|S| 2^{2|S|} / Q)^{1/3}
    const BigInt numerator = BigInt(std::to_string(2 * size)) * (BigInt(1) << (2 * size));
    const double root = cube_root(Rational(numerator, q), r.exact);
    r.epsilon = 4.0 * root;
    if (r.exact) r.epsilon_exact = 4 * *exact_cube_root(Rational(numerator, q));
    return r;
  }
  const std::uint64_t p = kind == CommitKind::Bit ? 2 : size;
  r.size = p;
  const double root = cube_root(Rational(q), r.exact);
  r.epsilon = 4.0 * static_cast<double>(p) / root;
  if (r.exact) {
    Rational e(BigInt(std::to_string(4 * p)), exact_cube_root(Rational(q))->get_num());
    e.canonicalize();
    r.epsilon_exact = e;
  }
  const double log_p = std::log2(static_cast<double>(p));
  const double log_eps = std::abs(std::log2(r.epsilon));
  r.quoted_bits = 3.0 * (log_p + log_eps) + 8.0;
  r.derived_bits = std::log2(64.0 * std::pow(static_cast<double>(p), 3) / std::pow(r.epsilon, 3));
  return r;
}

// ---------------------------------------------------------------------------
// Classical binding attacks

/// A deterministic classical cheating committer for a single-slot commitment:
/// the committing agent maps the challenge x to y, the revealing agent maps
/// each value d it tries to open to a key a' (or abstains).
struct ClassicalAttacker {
  std::vector<std::uint64_t> y_of_x;
  std::vector<std::optional<std::uint64_t>> a_of_d;
};

/// sum over d of Pr_x[ y(x) = a'(d) + d x ], exactly.
inline Rational reveal_probability_sum(std::uint64_t q, const ClassicalAttacker& s) {
  require(s.y_of_x.size() == q, ErrorCode::WidthMismatch, "one answer per challenge");
  std::uint64_t hits = 0;
  for (std::uint64_t d = 0; d < s.a_of_d.size(); ++d) {
    if (!s.a_of_d[d]) continue;
    for (std::uint64_t x = 0; x < q; ++x)
      if (s.y_of_x[x] % q == (*s.a_of_d[d] + d * x) % q) ++hits;
  }
  Rational r(static_cast<unsigned long>(hits), static_cast<unsigned long>(q));
  r.canonicalize();
  return r;
}

/// Best classical sum of reveal probabilities. A cheating committer for
/// alphabet P is a CHSH^Q(P) strategy (Alice answers y, Bob answers -a'),
/// so the sum is P times the game's classical value. For the parallel kind
/// with a fixed subset of size `size`, the game is CHSH^Q(2)^{(x)|S|}.
inline Rational binding_attack_value(CommitKind kind, std::uint64_t size, std::uint64_t q) {
  if (kind == CommitKind::Parallel) {
    const Rational v = games::classical_value(games::chsh_q_parallel(q, size));
    Rational r = v * Rational(BigInt(1) << size);
    r.canonicalize();
    return r;
  }
  const std::uint64_t p = kind == CommitKind::Bit ? 2 : size;
  require(p <= q, ErrorCode::ParameterOrder, "alphabet larger than the field");
  Rational r = games::classical_value(games::chsh_q(q, p)) * static_cast<unsigned long>(p);
  r.canonicalize();
  return r;
}

}  // namespace rzk::commitment
