#pragma once

// Two-prover relativistic zero-knowledge protocol for Hamiltonian Cycle.
//
//   preprocessing  P1, P2 share a permutation Pi and a uniform matrix A
//   V1 -> P1       B uniform in M_n(F_Q)
//   P1 -> V1       Y = A + B o M_{Pi(G)}
//   V2 -> P2       chall in {0, 1}
//   P2 -> V2       chall 0: (Pi, A); chall 1: (C', A_{u,v} for (u,v) in C')
//
// V2 must receive P2's answer before anything about B could reach it.

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <json.hpp>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rzk/error.hpp"
#include "rzk/fq.hpp"
#include "rzk/graphs.hpp"
#include "rzk/parallel.hpp"
#include "rzk/rng.hpp"
#include "rzk/spacetime.hpp"

namespace rzk::zkproto {

using fq::BigInt;
using fq::FieldElement;
using fq::FieldModulus;
using fq::FqMatrix;
using graphs::Cycle;
using graphs::Graph;
using graphs::Permutation;
using Rational = mpq_class;

// ---------------------------------------------------------------------------
// Transcripts

/// Answer to chall = 0: the permutation and the full opening matrix.
struct PermutationAnswer {
  std::vector<int> pi;
  FqMatrix a;
};

/// Answer to chall = 1: a cycle (vertex order) and one opening per directed
/// couple (c[k], c[k+1 mod n]).
struct CycleAnswer {
  std::vector<int> cycle;
  std::vector<FieldElement> openings;
};

using Answer = std::variant<PermutationAnswer, CycleAnswer>;

enum class RejectReason { None, Algebra0, Algebra1, BadPermutation, BadCycle, Timing };

inline std::string to_string(RejectReason r) {
  switch (r) {
    case RejectReason::None: return "none";
    case RejectReason::Algebra0: return "algebra-0";
    case RejectReason::Algebra1: return "algebra-1";
    case RejectReason::BadPermutation: return "bad-permutation";
    case RejectReason::BadCycle: return "bad-cycle";
    case RejectReason::Timing: return "timing";
  }
  return "unknown";
}

struct Verdict {
  bool accept = false;
  RejectReason reason = RejectReason::None;
  std::optional<std::pair<std::size_t, std::size_t>> entry;  ///< first failing (i, j) for algebra rejects
  std::optional<spacetime::CausalityVerdict> timing;
};

struct Transcript {
  std::size_t n;
  FieldModulus q;
  FqMatrix b;
  FqMatrix y;
  int chall;
  Answer answer;
  spacetime::Layout layout;
  spacetime::Timeline timeline;
  Verdict verdict;
};

// ---------------------------------------------------------------------------
// Verification

inline std::optional<Permutation> parse_permutation(const std::vector<int>& pi, std::size_t n) {
  if (pi.size() != n) return std::nullopt;
  try {
    return Permutation(pi);
  } catch (const Error&) {
    return std::nullopt;
  }
}

inline bool valid_cycle(const std::vector<int>& order, std::size_t n) {
  if (order.size() != n) return false;
  try {
    (void)Cycle(order);
    return true;
  } catch (const Error&) {
    return false;
  }
}

/// First (i, j) where Y_{i,j} != A_{i,j} + B_{i,j} M_{Pi(G)}_{i,j}.
inline std::optional<std::pair<std::size_t, std::size_t>> check_chall0(const Graph& g, const FqMatrix& b, const FqMatrix& y,
                                                                       const Permutation& pi, const FqMatrix& a) {
  const FqMatrix expected = a + fq::hadamard(b, graphs::adjacency_matrix(graphs::apply_permutation(pi, g), b.modulus()));
  for (std::size_t i = 0; i < y.rows(); ++i)
    for (std::size_t j = 0; j < y.cols(); ++j)
      if (expected.value(i, j) != y.value(i, j)) return std::make_pair(i, j);
  return std::nullopt;
}

/// First cycle couple (u, v) where Y_{u,v} != A'_{u,v} + B_{u,v}.
inline std::optional<std::pair<std::size_t, std::size_t>> check_chall1(const FqMatrix& b, const FqMatrix& y,
                                                                       const CycleAnswer& ans) {
  const std::size_t n = ans.cycle.size();
  for (std::size_t k = 0; k < n; ++k) {
    const auto u = static_cast<std::size_t>(ans.cycle[k]);
    const auto v = static_cast<std::size_t>(ans.cycle[(k + 1) % n]);
    if (!(y.at(u, v) == ans.openings[k] + b.at(u, v))) return std::make_pair(u, v);
  }
  return std::nullopt;
}

inline void require_well_formed(const Transcript& t, const Graph& g, const FieldModulus& q) {
  const auto n = static_cast<std::size_t>(g.size());
  auto shaped = [&](const FqMatrix& m) { return m.rows() == n && m.cols() == n && m.modulus() == q; };
  require(t.n == n && t.q == q, ErrorCode::Malformed, "transcript is for a different instance");
  require(shaped(t.b) && shaped(t.y), ErrorCode::Malformed, "B and Y must be n x n over F_Q");
  require(t.chall == 0 || t.chall == 1, ErrorCode::Malformed, "chall must be a bit");
  require(static_cast<int>(t.answer.index()) == t.chall, ErrorCode::Malformed, "answer variant does not match chall");
  if (const auto* p = std::get_if<PermutationAnswer>(&t.answer)) {
    require(shaped(p->a), ErrorCode::Malformed, "opening matrix must be n x n over F_Q");
  } else {
    const auto& c = std::get<CycleAnswer>(t.answer);
    require(c.openings.size() == c.cycle.size(), ErrorCode::Malformed, "one opening per cycle couple");
    for (const auto& o : c.openings) require(o.modulus() == q, ErrorCode::Malformed, "opening from a different field");
  }
}

/// Checks the revealed object, the algebra for the transcript's challenge,
/// and V2's timing constraint, in that order.
inline Verdict verify(const Transcript& t, const Graph& g, const FieldModulus& q) {
  require_well_formed(t, g, q);
  Verdict v;
  auto reject = [&](RejectReason r, std::optional<std::pair<std::size_t, std::size_t>> entry = std::nullopt) {
    v.accept = false;
    v.reason = r;
    v.entry = entry;
    return v;
  };
  if (const auto* p = std::get_if<PermutationAnswer>(&t.answer)) {
    const auto pi = parse_permutation(p->pi, t.n);
    if (!pi) return reject(RejectReason::BadPermutation);
    if (auto bad = check_chall0(g, t.b, t.y, *pi, p->a)) return reject(RejectReason::Algebra0, bad);
  } else {
    const auto& c = std::get<CycleAnswer>(t.answer);
    if (!valid_cycle(c.cycle, t.n)) return reject(RejectReason::BadCycle);
    if (auto bad = check_chall1(t.b, t.y, c)) return reject(RejectReason::Algebra1, bad);
  }
  const spacetime::SpacetimeEvent* b_send = nullptr;
  const spacetime::SpacetimeEvent* answer_recv = nullptr;
  for (const auto& e : t.timeline.events()) {
    if (e.kind == spacetime::EventKind::Send && e.msg == "B") b_send = &e;
    if (e.kind == spacetime::EventKind::Receive && e.msg == "answer") answer_recv = &e;
  }
  require(b_send != nullptr && answer_recv != nullptr, ErrorCode::Malformed, "timeline lacks the B send or answer receipt");
  v.timing = spacetime::nss_check(*b_send, *answer_recv, t.layout);
  if (!v.timing->pass) return reject(RejectReason::Timing);
  v.accept = true;
  return v;
}

// ---------------------------------------------------------------------------
// Running the protocol

struct RunOptions {
  double separation = 1.0;  ///< |V1 - V2|; provers sit at their verifiers
  double delay = 0.0;       ///< processing time of each prover
  std::uint64_t run = 0;
};

using P1Response = std::function<FqMatrix(const FqMatrix& b)>;
using P2Response = std::function<Answer(int chall)>;

/// Runs one round with fixed verifier messages. P2 is a function of chall
/// only, so nothing about B reaches it.
inline Transcript execute(const Graph& g, const FieldModulus& q, const FqMatrix& b, int chall, const P1Response& p1,
                          const P2Response& p2, const RunOptions& opt = {}) {
  using spacetime::Site;
  require(opt.delay >= 0, ErrorCode::InvalidArgument, "processing delay must be non-negative");
  spacetime::Simulation sim(spacetime::Layout::honest(opt.separation), opt.run);
  const double b_at_p1 = sim.transmit("B", Site::V1, Site::P1, 0.0);
  sim.transmit("Y", Site::P1, Site::V1, b_at_p1 + opt.delay);
  const double chall_at_p2 = sim.transmit("chall", Site::V2, Site::P2, 0.0);
  sim.transmit("answer", Site::P2, Site::V2, chall_at_p2 + opt.delay);
  Transcript t{static_cast<std::size_t>(g.size()), q, b, p1(b), chall, p2(chall), sim.layout(), sim.timeline(), {}};
  t.verdict = verify(t, g, q);
  return t;
}

/// Honest provers with their shared preprocessing.
struct HonestProver {
  Graph g;
  Cycle cycle;
  Permutation pi;
  FqMatrix a;

  static HonestProver prepare(const Graph& g, const Cycle& c, const FieldModulus& q, SeededRng& rng) {
    require(c.size() == g.size() && graphs::cycle_in_graph(g, c), ErrorCode::InvalidWitness,
            "witness is not a Hamiltonian cycle of the graph");
    Permutation pi = Permutation::random(g.size(), rng);
    FqMatrix a = fq::sample_uniform(g.size(), g.size(), q, rng);
    return HonestProver{g, c, std::move(pi), std::move(a)};
  }

  FqMatrix respond_p1(const FqMatrix& b) const {
    return a + fq::hadamard(b, graphs::adjacency_matrix(graphs::apply_permutation(pi, g), a.modulus()));
  }

  Answer respond_p2(int chall) const {
    if (chall == 0) return PermutationAnswer{pi.mapping(), a};
    const Cycle image = graphs::apply_permutation(pi, cycle);
    CycleAnswer ans{image.order(), {}};
    for (auto [u, v] : image.edges()) ans.openings.push_back(a.at(u, v));
    return ans;
  }
};

struct HonestRunOptions {
  RunOptions timing;
  std::optional<FqMatrix> b;  ///< fixed V1 message instead of a uniform one
  std::optional<int> chall;   ///< fixed challenge instead of a fair coin
};

inline Transcript run_honest(const Graph& g, const Cycle& c, const FieldModulus& q, std::uint64_t seed,
                             const HonestRunOptions& opt = {}) {
  SeededRng rng(seed);
  const HonestProver prover = HonestProver::prepare(g, c, q, rng);
  const FqMatrix b = opt.b ? *opt.b : fq::sample_uniform(g.size(), g.size(), q, rng);
  const int chall = opt.chall ? *opt.chall : (rng.coin() ? 1 : 0);
  return execute(
      g, q, b, chall, [&](const FqMatrix& m) { return prover.respond_p1(m); },
      [&](int ch) { return prover.respond_p2(ch); }, opt.timing);
}

// ---------------------------------------------------------------------------
// Cheating provers

/// Two non-communicating cheating provers. P2's strategy takes the challenge
/// and the shared seed only; it has no parameter through which B could flow.
struct CheatingProverPair {
  std::string name;
  std::function<FqMatrix(const FqMatrix& b, std::uint64_t shared)> p1;
  std::function<Answer(int chall, std::uint64_t shared)> p2;
};

/// Provers in which P2 reads B. B can only reach P2 through a physical relay
/// from P1, which the timeline records.
struct SignallingProverPair {
  std::string name;
  std::function<FqMatrix(const FqMatrix& b, std::uint64_t shared)> p1;
  std::function<Answer(int chall, const FqMatrix& b, std::uint64_t shared)> p2;
};

inline Transcript run_cheating(const Graph& g, const FieldModulus& q, const CheatingProverPair& pair, const FqMatrix& b,
                               int chall, std::uint64_t shared, const RunOptions& opt = {}) {
  return execute(
      g, q, b, chall, [&](const FqMatrix& m) { return pair.p1(m, shared); }, [&](int ch) { return pair.p2(ch, shared); }, opt);
}

inline Transcript run_signalling(const Graph& g, const FieldModulus& q, const SignallingProverPair& pair, const FqMatrix& b,
                                 int chall, std::uint64_t shared, const RunOptions& opt = {}) {
  using spacetime::Site;
  spacetime::Simulation sim(spacetime::Layout::honest(opt.separation), opt.run);
  const double b_at_p1 = sim.transmit("B", Site::V1, Site::P1, 0.0);
  sim.transmit("Y", Site::P1, Site::V1, b_at_p1 + opt.delay);
  const double b_at_p2 = sim.transmit("relay-B", Site::P1, Site::P2, b_at_p1);
  const double chall_at_p2 = sim.transmit("chall", Site::V2, Site::P2, 0.0);
  sim.transmit("answer", Site::P2, Site::V2, std::max(b_at_p2, chall_at_p2) + opt.delay);
  Transcript t{static_cast<std::size_t>(g.size()), q, b, pair.p1(b, shared), chall, pair.p2(chall, b, shared),
               sim.layout(), sim.timeline(), {}};
  t.verdict = verify(t, g, q);
  return t;
}

namespace detail {

struct SharedPlan {
  Permutation pi;
  FqMatrix a;
  Cycle target;       ///< Pi(C*) for the closest cycle C* of G
  FqMatrix adjacency;  ///< M_{Pi(G)}
  std::vector<std::pair<int, int>> missing;  ///< couples of `target` absent from Pi(G)
};

inline SharedPlan shared_plan(const Graph& g, const Cycle& closest, const FieldModulus& q, SeededRng& rng) {
  Permutation pi = Permutation::random(g.size(), rng);
  FqMatrix a = fq::sample_uniform(g.size(), g.size(), q, rng);
  Cycle target = graphs::apply_permutation(pi, closest);
  FqMatrix m = graphs::adjacency_matrix(graphs::apply_permutation(pi, g), q);
  std::vector<std::pair<int, int>> missing;
  for (auto [u, v] : target.edges())
    if (m.value(u, v) == 0) missing.emplace_back(u, v);
  return SharedPlan{std::move(pi), std::move(a), std::move(target), std::move(m), std::move(missing)};
}

inline CycleAnswer open_cycle(const Cycle& c, const FqMatrix& a) {
  CycleAnswer ans{c.order(), {}};
  for (auto [u, v] : c.edges()) ans.openings.push_back(a.at(u, v));
  return ans;
}

}  // namespace detail

/// Commits so that the closest cycle opens as all ones; chall 1 always
/// wins, chall 0 wins iff B vanishes on every missing couple.
inline CheatingProverPair optimal_strategy(const Graph& g, const FieldModulus& q) {
  const Cycle closest = graphs::closest_cycle(g);
  return CheatingProverPair{
      "optimal",
      [g, closest, q](const FqMatrix& b, std::uint64_t shared) {
        SeededRng rng(shared);
        const auto plan = detail::shared_plan(g, closest, q, rng);
        FqMatrix y = plan.a + fq::hadamard(b, plan.adjacency);
        for (auto [u, v] : plan.missing) y.set(u, v, plan.a.at(u, v) + b.at(u, v));
        return y;
      },
      [g, closest, q](int chall, std::uint64_t shared) -> Answer {
        SeededRng rng(shared);
        const auto plan = detail::shared_plan(g, closest, q, rng);
        if (chall == 0) return PermutationAnswer{plan.pi.mapping(), plan.a};
        return detail::open_cycle(plan.target, plan.a);
      }};
}

/// Commits honestly to Pi(G); on chall 1 opens the closest cycle, guessing
/// a uniform key for each missing couple.
inline CheatingProverPair honest_style_strategy(const Graph& g, const FieldModulus& q) {
  const Cycle closest = graphs::closest_cycle(g);
  return CheatingProverPair{
      "honest-style",
      [g, closest, q](const FqMatrix& b, std::uint64_t shared) {
        SeededRng rng(shared);
        const auto plan = detail::shared_plan(g, closest, q, rng);
        return FqMatrix(plan.a + fq::hadamard(b, plan.adjacency));
      },
      [g, closest, q](int chall, std::uint64_t shared) -> Answer {
        SeededRng rng(shared);
        const auto plan = detail::shared_plan(g, closest, q, rng);
        if (chall == 0) return PermutationAnswer{plan.pi.mapping(), plan.a};
        CycleAnswer ans = detail::open_cycle(plan.target, plan.a);
        const auto edges = plan.target.edges();
        for (std::size_t k = 0; k < edges.size(); ++k)
          if (plan.adjacency.value(edges[k].first, edges[k].second) == 0)
            ans.openings[k] = ans.openings[k] + fq::sample_element(q, rng);
        return ans;
      }};
}

/// Uniformly random commitments and answers.
inline CheatingProverPair random_strategy(const Graph& g, const FieldModulus& q) {
  const int n = g.size();
  return CheatingProverPair{
      "random",
      [n, q](const FqMatrix&, std::uint64_t shared) {
        SeededRng rng(SeededRng::derive_seed(shared, 1));
        return fq::sample_uniform(n, n, q, rng);
      },
      [n, q](int chall, std::uint64_t shared) -> Answer {
        SeededRng rng(SeededRng::derive_seed(shared, 2));
        if (chall == 0) {
          const Permutation pi = Permutation::random(n, rng);
          return PermutationAnswer{pi.mapping(), fq::sample_uniform(n, n, q, rng)};
        }
        const Cycle c = graphs::random_cycle(n, rng);
        CycleAnswer ans{c.order(), {}};
        for (int k = 0; k < n; ++k) ans.openings.push_back(fq::sample_element(q, rng));
        return ans;
      }};
}

inline CheatingProverPair strategy_by_name(const std::string& name, const Graph& g, const FieldModulus& q) {
  if (name == "optimal") return optimal_strategy(g, q);
  if (name == "honest-style") return honest_style_strategy(g, q);
  if (name == "random") return random_strategy(g, q);
  throw Error(ErrorCode::InvalidArgument, "unknown strategy " + name);
}

struct AttackReport {
  std::string strategy;
  std::uint64_t trials = 0;
  std::uint64_t wins = 0;
  double rate = 0.0;
  double ci_low = 0.0;   ///< 99% Wilson interval
  double ci_high = 0.0;
  std::map<std::string, std::uint64_t> rejections;
};

inline constexpr double kZ99 = 2.5758293035489004;

inline std::pair<double, double> wilson_interval(std::uint64_t wins, std::uint64_t trials, double z = kZ99) {
  if (trials == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(trials);
  const double p = static_cast<double>(wins) / nn;
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * nn)) / (1 + z2 / nn);
  const double half = z * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn)) / (1 + z2 / nn);
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

/// Monte Carlo win rate: each trial draws B, chall and the provers' shared
/// seed from its own derived stream, so results do not depend on threading.
inline AttackReport attack_harness(const Graph& g, const FieldModulus& q, const CheatingProverPair& pair, std::uint64_t trials,
                                   std::uint64_t seed, const RunOptions& opt = {}) {
  std::vector<RejectReason> outcome(trials, RejectReason::None);
  std::vector<std::uint8_t> won(trials, 0);
  parallel_for(trials, [&](std::size_t t) {
    SeededRng rng(SeededRng::derive_seed(seed, t));
    const FqMatrix b = fq::sample_uniform(g.size(), g.size(), q, rng);
    const int chall = rng.coin() ? 1 : 0;
    const std::uint64_t shared = rng.next_u64();
    RunOptions o = opt;
    o.run = t;
    const Transcript tr = run_cheating(g, q, pair, b, chall, shared, o);
    won[t] = tr.verdict.accept ? 1 : 0;
    outcome[t] = tr.verdict.reason;
  });
  AttackReport r;
  r.strategy = pair.name;
  r.trials = trials;
  for (std::uint64_t t = 0; t < trials; ++t) {
    r.wins += won[t];
    if (!won[t]) ++r.rejections[to_string(outcome[t])];
  }
  r.rate = trials ? static_cast<double>(r.wins) / static_cast<double>(trials) : 0.0;
  std::tie(r.ci_low, r.ci_high) = wilson_interval(r.wins, trials);
  return r;
}

/// If both answers open the same (B, Y) and the graph has no Hamiltonian
/// cycle, some couple (u, v) of C' is absent from Pi(G) and the two openings
/// give B_{u,v} = A_{u,v} - A'_{u,v}.
struct ExtractedKey {
  int u = 0;
  int v = 0;
  FieldElement value;
};

inline std::optional<ExtractedKey> extract_from_both_answers(const Graph& g, const FqMatrix& b, const FqMatrix& y,
                                                             const PermutationAnswer& ans0, const CycleAnswer& ans1) {
  const auto n = static_cast<std::size_t>(g.size());
  const auto pi = parse_permutation(ans0.pi, n);
  if (!pi || !valid_cycle(ans1.cycle, n) || ans1.openings.size() != n) return std::nullopt;
  if (check_chall0(g, b, y, *pi, ans0.a) || check_chall1(b, y, ans1)) return std::nullopt;
  const Graph image = graphs::apply_permutation(*pi, g);
  for (std::size_t k = 0; k < n; ++k) {
    const int u = ans1.cycle[k];
    const int v = ans1.cycle[(k + 1) % n];
    if (!image.has_edge(u, v)) return ExtractedKey{u, v, ans0.a.at(u, v) - ans1.openings[k]};
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Exact classical soundness

inline constexpr int kMaxSoundnessVertices = 7;

/// Optimal classical win probability on a non-Hamiltonian graph. For each
/// deterministic pair of P2 answers ((Pi, A), (C', A')), P1 can satisfy both
/// challenges for B exactly when every couple (u, v) of C' has
/// A'_{uv} - A_{uv} = B_{uv} (1 - M_{uv}); otherwise it satisfies one. The
/// value is 1/2 + 1/2 max over answers of Pr_B[both], where Pr_B[both]
/// factorises over couples and each factor is the best count of consistent
/// B_{uv} over the opening difference, scanned over F_Q.
inline Rational classical_soundness_value(const Graph& g, const FieldModulus& q) {
  const int n = g.size();
  require(n <= kMaxSoundnessVertices, ErrorCode::TooLarge, "exact soundness scan supports n <= 7");
  require(!graphs::find_hamiltonian_cycle(g), ErrorCode::GraphIsHamiltonian, "graph has a Hamiltonian cycle");
  require(q.q() <= 10'000'000, ErrorCode::TooLarge, "field too large for the per-couple scan");
  const std::uint64_t qq = q.q().get_ui();
  BigInt q_pow;
  mpz_pow_ui(q_pow.get_mpz_t(), q.q().get_mpz_t(), static_cast<unsigned long>(n));
  require(q_pow < (BigInt(1) << 63), ErrorCode::TooLarge, "Q^n exceeds 64 bits");

  // best_count[m] = max over d of #{b in F_Q : b (1 - m) = d}
  std::uint64_t best_count[2] = {0, 0};
  for (int m = 0; m < 2; ++m) {
    std::vector<std::uint64_t> hist(qq, 0);
    for (std::uint64_t b = 0; b < qq; ++b) ++hist[(b * static_cast<std::uint64_t>(1 - m)) % qq];
    best_count[m] = *std::max_element(hist.begin(), hist.end());
  }

  const auto perms = Permutation::all(n);
  const auto cycles = graphs::enumerate_cycles(n);
  std::vector<std::uint64_t> best(perms.size(), 0);
  parallel_for(perms.size(), [&](std::size_t p) {
    const Graph image = graphs::apply_permutation(perms[p], g);
    for (const Cycle& c : cycles) {
      std::uint64_t product = 1;
      for (auto [u, v] : c.edges()) product *= best_count[image.has_edge(u, v) ? 1 : 0];
      best[p] = std::max(best[p], product);
    }
  });
  const std::uint64_t top = *std::max_element(best.begin(), best.end());
  Rational both(BigInt(std::to_string(top)), q_pow);
  Rational value = Rational(1, 2) + both / 2;
  value.canonicalize();
  return value;
}

// ---------------------------------------------------------------------------
// Parameters

struct SoundnessBound {
  double value = 0.0;  ///< 1/2 + (64 S / Q)^{1/3}
  std::optional<Rational> exact;  ///< present when 64 S / Q is a rational cube
  bool vacuous = false;           ///< value >= 1
};

inline BigInt factorial(unsigned long n) {
  BigInt r;
  mpz_fac_ui(r.get_mpz_t(), n);
  return r;
}

/// 1/2 + (64 S / Q)^{1/3}, with S = n! by default.
inline SoundnessBound soundness_bound(unsigned long n, const BigInt& q, std::optional<BigInt> projectivity = std::nullopt) {
  require(q >= 1, ErrorCode::InvalidArgument, "Q must be positive");
  const BigInt s = projectivity ? *projectivity : factorial(n);
  Rational ratio(64 * s, q);
  ratio.canonicalize();
  SoundnessBound r;
  if (auto root = fq::exact_cube_root(ratio)) {
    r.exact = Rational(1, 2) + *root;
    r.exact->canonicalize();
    r.value = r.exact->get_d();
  } else {
    r.value = 0.5 + std::cbrt(ratio.get_d());
  }
  r.vacuous = r.value >= 1.0;
  return r;
}

struct SoundnessParameters {
  unsigned long n = 0;
  unsigned long k = 0;
  BigInt q0;  ///< 64 n! 2^{3k}
  FieldModulus q;
  std::size_t log2_q = 0;  ///< ceil(log2 Q)
  BigInt bits_per_round;   ///< n^2 ceil(log2 Q)
};

inline SoundnessParameters size_parameters(unsigned long n, unsigned long k) {
  require(n >= 3, ErrorCode::InvalidArgument, "need n >= 3");
  require(k >= 1, ErrorCode::InvalidArgument, "need k >= 1");
  const BigInt q0 = 64 * factorial(n) * (BigInt(1) << (3 * k));
  FieldModulus q = fq::next_prime_at_least(q0);
  const std::size_t bits = q.ceil_log2();
  return SoundnessParameters{n, k, q0, q, bits, BigInt(std::to_string(n * n)) * BigInt(std::to_string(bits))};
}

// ---------------------------------------------------------------------------
// Zero knowledge

/// A classical (possibly cheating) verifier with finitely many equally
/// likely coin values: B depends on the coin, chall on the coin and Y.
class VerifierStrategy {
 public:
  virtual ~VerifierStrategy() = default;
  virtual std::size_t coins() const = 0;
  virtual FqMatrix choose_b(std::size_t coin, std::size_t n, const FieldModulus& q) const = 0;
  virtual int choose_chall(std::size_t coin, const FqMatrix& b, const FqMatrix& y) const = 0;
};

class FunctionVerifier : public VerifierStrategy {
 public:
  using BFn = std::function<FqMatrix(std::size_t coin, std::size_t n, const FieldModulus& q)>;
  using ChallFn = std::function<int(std::size_t coin, const FqMatrix& b, const FqMatrix& y)>;

  FunctionVerifier(std::size_t coins, BFn b, ChallFn chall) : coins_(coins), b_(std::move(b)), chall_(std::move(chall)) {
    require(coins_ >= 1, ErrorCode::InvalidArgument, "a verifier needs at least one coin value");
  }

  std::size_t coins() const override { return coins_; }
  FqMatrix choose_b(std::size_t coin, std::size_t n, const FieldModulus& q) const override { return b_(coin, n, q); }
  int choose_chall(std::size_t coin, const FqMatrix& b, const FqMatrix& y) const override { return chall_(coin, b, y) ? 1 : 0; }

 private:
  std::size_t coins_;
  BFn b_;
  ChallFn chall_;
};

/// One forward pass of a verifier: B once, then chall once. Asking for
/// either again (rewinding) throws.
class VerifierSession {
 public:
  VerifierSession(const VerifierStrategy& v, std::size_t coin) : verifier_(v), coin_(coin) {
    require(coin < v.coins(), ErrorCode::InvalidArgument, "coin out of range");
  }

  const FqMatrix& first(std::size_t n, const FieldModulus& q) {
    require(stage_ == 0, ErrorCode::RewindAttempt, "the verifier's first message was already produced");
    b_.emplace(verifier_.choose_b(coin_, n, q));
    require(b_->rows() == n && b_->cols() == n && b_->modulus() == q, ErrorCode::Malformed, "verifier sent a malformed B");
    stage_ = 1;
    return *b_;
  }

  int second(const FqMatrix& y) {
    require(stage_ == 1, ErrorCode::RewindAttempt, "the verifier's challenge can be requested once, after B");
    stage_ = 2;
    return verifier_.choose_chall(coin_, *b_, y);
  }

  int invocations() const { return stage_; }

 private:
  const VerifierStrategy& verifier_;
  std::size_t coin_;
  int stage_ = 0;
  std::optional<FqMatrix> b_;
};

/// Simulator without the witness: Y uniform, then on chall 0 a uniform Pi
/// with A = Y - B o M_{Pi(G)}, on chall 1 a uniform directed cycle C' with
/// A'_{u,v} = Y_{u,v} - B_{u,v}.
inline Transcript zk_simulate(const VerifierStrategy& verifier, const Graph& g, const FieldModulus& q, SeededRng& rng,
                              const RunOptions& opt = {}) {
  const auto n = static_cast<std::size_t>(g.size());
  VerifierSession session(verifier, rng.uniform_below(verifier.coins()));
  const FqMatrix b = session.first(n, q);
  const FqMatrix y = fq::sample_uniform(n, n, q, rng);
  const int chall = session.second(y);
  Answer answer = [&]() -> Answer {
    if (chall == 0) {
      const Permutation pi = Permutation::random(g.size(), rng);
      return PermutationAnswer{pi.mapping(), y - fq::hadamard(b, graphs::adjacency_matrix(graphs::apply_permutation(pi, g), q))};
    }
    const Cycle c = graphs::random_cycle(g.size(), rng);
    CycleAnswer ans{c.order(), {}};
    for (auto [u, v] : c.edges()) ans.openings.push_back(y.at(u, v) - b.at(u, v));
    return ans;
  }();
  return execute(
      g, q, b, chall, [&](const FqMatrix&) { return y; }, [&](int) { return answer; }, opt);
}

/// Exact distribution over verifier views, as integer weights with a common total.
struct ViewDistribution {
  std::map<std::string, std::uint64_t> weight;
  std::uint64_t total = 0;

  void add(const std::string& key, std::uint64_t w) {
    weight[key] += w;
    total += w;
  }
};

enum class SimulatorVariant { Faithful, BiasedPermutation };

namespace detail {

inline void append_matrix(std::ostringstream& out, const FqMatrix& m) {
  for (const auto& v : m.values()) out << v.get_str() << ',';
  out << '|';
}

inline std::string view_key(std::size_t coin, const FqMatrix& b, const FqMatrix& y, int chall, const Answer& answer) {
  std::ostringstream out;
  out << coin << '|';
  append_matrix(out, b);
  append_matrix(out, y);
  out << chall << '|';
  if (const auto* p = std::get_if<PermutationAnswer>(&answer)) {
    for (int v : p->pi) out << v << ',';
    out << '|';
    append_matrix(out, p->a);
  } else {
    const auto& c = std::get<CycleAnswer>(answer);
    for (int v : c.cycle) out << v << ',';
    out << '|';
    for (const auto& o : c.openings) out << o.value().get_str() << ',';
  }
  return out.str();
}

inline std::vector<FqMatrix> all_matrices(std::size_t n, const FieldModulus& q) {
  const std::uint64_t qq = q.q().get_ui();
  std::uint64_t count = 1;
  for (std::size_t k = 0; k < n * n; ++k) count *= qq;
  std::vector<FqMatrix> out;
  out.reserve(count);
  for (std::uint64_t idx = 0; idx < count; ++idx) {
    FqMatrix m(n, n, q);
    std::uint64_t r = idx;
    for (std::size_t k = 0; k < n * n; ++k) {
      m.set_value(k / n, k % n, BigInt(static_cast<unsigned long>(r % qq)));
      r /= qq;
    }
    out.push_back(std::move(m));
  }
  return out;
}

inline void require_enumerable(const Graph& g, const FieldModulus& q) {
  require(g.size() <= 3 && q.q() <= 3, ErrorCode::TooLarge, "exact view enumeration needs n <= 3 and Q <= 3");
}

}  // namespace detail

/// Views of the verifier against the honest provers, each (coin, Pi, A) weighted 1.
inline ViewDistribution real_distribution(const VerifierStrategy& verifier, const Graph& g, const FieldModulus& q) {
  detail::require_enumerable(g, q);
  const auto witness = graphs::find_hamiltonian_cycle(g);
  require(witness.has_value(), ErrorCode::InvalidWitness, "zero knowledge is only defined on Hamiltonian graphs");
  const auto n = static_cast<std::size_t>(g.size());
  const auto matrices = detail::all_matrices(n, q);
  ViewDistribution dist;
  for (std::size_t coin = 0; coin < verifier.coins(); ++coin)
    for (const Permutation& pi : Permutation::all(g.size()))
      for (const FqMatrix& a : matrices) {
        const HonestProver prover{g, *witness, pi, a};
        VerifierSession session(verifier, coin);
        const FqMatrix& b = session.first(n, q);
        const FqMatrix y = prover.respond_p1(b);
        const int chall = session.second(y);
        dist.add(detail::view_key(coin, b, y, chall, prover.respond_p2(chall)), 1);
      }
  return dist;
}

/// Simulator views on the same scale: (coin, Y) has mass n! per branch,
/// split evenly over the n! permutations or the (n-1)! directed cycles.
/// The biased variant moves one permutation's mass onto the identity.
inline ViewDistribution simulated_distribution(const VerifierStrategy& verifier, const Graph& g, const FieldModulus& q,
                                               SimulatorVariant variant = SimulatorVariant::Faithful) {
  detail::require_enumerable(g, q);
  const auto n = static_cast<std::size_t>(g.size());
  const auto matrices = detail::all_matrices(n, q);
  const auto perms = Permutation::all(g.size());
  const auto cycles = graphs::enumerate_cycles(g.size());
  const std::uint64_t per_cycle = perms.size() / cycles.size();
  ViewDistribution dist;
  for (std::size_t coin = 0; coin < verifier.coins(); ++coin)
    for (const FqMatrix& y : matrices) {
      VerifierSession session(verifier, coin);
      const FqMatrix& b = session.first(n, q);
      const int chall = session.second(y);
      if (chall == 0) {
        for (std::size_t p = 0; p < perms.size(); ++p) {
          std::uint64_t w = 1;
          if (variant == SimulatorVariant::BiasedPermutation) w = p == 0 ? 2 : (p == perms.size() - 1 ? 0 : 1);
          if (w == 0) continue;
          const FqMatrix a = y - fq::hadamard(b, graphs::adjacency_matrix(graphs::apply_permutation(perms[p], g), q));
          dist.add(detail::view_key(coin, b, y, 0, PermutationAnswer{perms[p].mapping(), a}), w);
        }
      } else {
        for (const Cycle& c : cycles) {
          CycleAnswer ans{c.order(), {}};
          for (auto [u, v] : c.edges()) ans.openings.push_back(y.at(u, v) - b.at(u, v));
          dist.add(detail::view_key(coin, b, y, 1, ans), per_cycle);
        }
      }
    }
  return dist;
}

inline Rational total_variation(const ViewDistribution& p, const ViewDistribution& r) {
  require(p.total > 0 && r.total > 0, ErrorCode::InvalidArgument, "empty distribution");
  // Compare p(k)/P with r(k)/R on the common denominator P * R.
  BigInt diff = 0;
  auto visit = [&](const std::string& key) {
    const auto pi = p.weight.find(key);
    const auto ri = r.weight.find(key);
    const BigInt a = BigInt(std::to_string(pi == p.weight.end() ? 0 : pi->second)) * BigInt(std::to_string(r.total));
    const BigInt c = BigInt(std::to_string(ri == r.weight.end() ? 0 : ri->second)) * BigInt(std::to_string(p.total));
    diff += abs(a - c);
  };
  for (const auto& [key, w] : p.weight) visit(key);
  for (const auto& [key, w] : r.weight)
    if (!p.weight.count(key)) visit(key);
  Rational tv(diff, 2 * BigInt(std::to_string(p.total)) * BigInt(std::to_string(r.total)));
  tv.canonicalize();
  return tv;
}

inline Rational zk_distance(const VerifierStrategy& verifier, const Graph& g, const FieldModulus& q,
                            SimulatorVariant variant = SimulatorVariant::Faithful) {
  return total_variation(real_distribution(verifier, g, q), simulated_distribution(verifier, g, q, variant));
}

// ---------------------------------------------------------------------------
// JSON

/// Integers that fit in 64 bits are JSON numbers, larger ones decimal strings.
inline nlohmann::json bigint_json(const BigInt& v) {
  if (v >= 0 && v.fits_ulong_p()) return static_cast<std::uint64_t>(v.get_ui());
  return v.get_str();
}

inline BigInt bigint_from_json(const nlohmann::json& j) {
  if (j.is_number_unsigned() || j.is_number_integer()) return BigInt(std::to_string(j.get<std::int64_t>()));
  require(j.is_string(), ErrorCode::Malformed, "expected an integer");
  try {
    return BigInt(j.get<std::string>());
  } catch (const std::invalid_argument&) {
    throw Error(ErrorCode::Malformed, "expected a decimal integer");
  }
}

inline nlohmann::json matrix_json(const FqMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(bigint_json(m.value(i, j)));
    rows.push_back(row);
  }
  return rows;
}

inline FqMatrix matrix_from_json(const nlohmann::json& j, std::size_t n, const FieldModulus& q) {
  require(j.is_array() && j.size() == n, ErrorCode::Malformed, "matrix must have n rows");
  FqMatrix m(n, n, q);
  for (std::size_t i = 0; i < n; ++i) {
    require(j[i].is_array() && j[i].size() == n, ErrorCode::Malformed, "matrix must have n columns");
    for (std::size_t k = 0; k < n; ++k) {
      const BigInt v = bigint_from_json(j[i][k]);
      require(v >= 0 && v < q.q(), ErrorCode::Malformed, "matrix entry outside F_Q");
      m.set_value(i, k, v);
    }
  }
  return m;
}

/// Vertices are written 1-based.
inline nlohmann::json transcript_json(const Transcript& t) {
  nlohmann::json answer;
  if (const auto* p = std::get_if<PermutationAnswer>(&t.answer)) {
    answer["type"] = "permutation";
    nlohmann::json pi = nlohmann::json::array();
    for (int v : p->pi) pi.push_back(v + 1);
    answer["pi"] = pi;
    answer["openings"] = matrix_json(p->a);
  } else {
    const auto& c = std::get<CycleAnswer>(t.answer);
    answer["type"] = "cycle";
    nlohmann::json cycle = nlohmann::json::array();
    for (int v : c.cycle) cycle.push_back(v + 1);
    answer["cycle"] = cycle;
    nlohmann::json openings = nlohmann::json::array();
    for (const auto& o : c.openings) openings.push_back(bigint_json(o.value()));
    answer["openings"] = openings;
  }
  return {{"n", t.n},
          {"q", bigint_json(t.q.q())},
          {"separation", t.layout.verifier_separation()},
          {"B", matrix_json(t.b)},
          {"Y", matrix_json(t.y)},
          {"chall", t.chall},
          {"answer", answer},
          {"timeline", t.timeline.to_json()},
          {"verdict", t.verdict.accept ? "accept" : "reject"},
          {"reason", to_string(t.verdict.reason)}};
}

inline spacetime::Site site_from_json(const nlohmann::json& j) {
  const std::string s = j.get<std::string>();
  if (s == "P1") return spacetime::Site::P1;
  if (s == "P2") return spacetime::Site::P2;
  if (s == "V1") return spacetime::Site::V1;
  if (s == "V2") return spacetime::Site::V2;
  throw Error(ErrorCode::Malformed, "unknown site " + s);
}

/// Parses a transcript; the verdict is recomputed by the caller via verify().
inline Transcript transcript_from_json(const nlohmann::json& j) {
  try {
    const auto n = j.at("n").get<std::size_t>();
    const FieldModulus q(bigint_from_json(j.at("q")));
    const FqMatrix b = matrix_from_json(j.at("B"), n, q);
    const FqMatrix y = matrix_from_json(j.at("Y"), n, q);
    const int chall = j.at("chall").get<int>();
    const auto& a = j.at("answer");
    const std::string type = a.at("type").get<std::string>();
    auto vertices = [](const nlohmann::json& arr) {
      std::vector<int> out;
      for (const auto& v : arr) out.push_back(v.get<int>() - 1);
      return out;
    };
    std::optional<Answer> answer;
    if (type == "permutation") {
      answer = PermutationAnswer{vertices(a.at("pi")), matrix_from_json(a.at("openings"), n, q)};
    } else if (type == "cycle") {
      CycleAnswer c{vertices(a.at("cycle")), {}};
      for (const auto& o : a.at("openings")) {
        const BigInt v = bigint_from_json(o);
        require(v >= 0 && v < q.q(), ErrorCode::Malformed, "opening outside F_Q");
        c.openings.emplace_back(q, v);
      }
      answer = std::move(c);
    } else {
      throw Error(ErrorCode::Malformed, "unknown answer type " + type);
    }
    const auto layout = spacetime::Layout::honest(j.at("separation").get<double>());
    std::vector<spacetime::SpacetimeEvent> events;
    for (const auto& e : j.at("timeline")) {
      const std::string kind = e.at("kind").get<std::string>();
      require(kind == "send" || kind == "receive", ErrorCode::Malformed, "unknown event kind");
      events.push_back({kind == "send" ? spacetime::EventKind::Send : spacetime::EventKind::Receive, e.at("msg").get<std::string>(),
                        site_from_json(e.at("from")), site_from_json(e.at("to")), e.at("time").get<double>(), 0});
    }
    return Transcript{n, q, b, y, chall, std::move(*answer), layout, spacetime::schedule(std::move(events), layout), {}};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Malformed, e.what());
  }
}

}  // namespace rzk::zkproto
