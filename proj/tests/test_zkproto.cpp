#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "rzk/zkproto.hpp"

namespace {

using namespace rzk;
using namespace rzk::zkproto;

Graph star(int leaves) {
  Graph g(leaves + 1);
  for (int v = 1; v <= leaves; ++v) g.add_edge(0, v);
  return g;
}

Rational half_plus(const Rational& x) {
  Rational r = Rational(1, 2) + x / 2;
  r.canonicalize();
  return r;
}

Rational q_power(unsigned long q, int m) {
  BigInt p = 1;
  for (int i = 0; i < m; ++i) p *= q;
  return Rational(BigInt(1), p);
}

TEST(RunHonest, AcceptsEveryBForBothChallengesOnTriangle) {
  const Graph k3 = Graph::complete(3);
  const Cycle c({0, 1, 2});
  const FieldModulus q(3);
  const auto matrices = detail::all_matrices(3, q);
  for (int chall = 0; chall < 2; ++chall)
    for (const FqMatrix& b : matrices) {
      HonestRunOptions opt;
      opt.b = b;
      opt.chall = chall;
      const Transcript t = run_honest(k3, c, q, 17, opt);
      ASSERT_TRUE(t.verdict.accept) << to_string(t.verdict.reason);
    }
}

TEST(RunHonest, RandomHamiltonianGraphsAlwaysAccept) {
  SeededRng rng(12);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform_below(6));
    const Cycle c = graphs::random_cycle(n, rng);
    Graph g(n);
    for (auto [u, v] : c.edges()) g.add_edge(u, v);
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v)
        if (!g.has_edge(u, v) && rng.coin()) g.add_edge(u, v);
    const FieldModulus q(trial % 2 == 0 ? 5 : 3079);
    const Transcript t = run_honest(g, c, q, rng.next_u64());
    ASSERT_TRUE(t.verdict.accept) << to_string(t.verdict.reason);
    ASSERT_TRUE(t.verdict.timing->pass);
    if (t.chall == 1) {
      EXPECT_EQ(std::get<CycleAnswer>(t.answer).openings.size(), static_cast<std::size_t>(n));
    }
  }
}

TEST(RunHonest, RejectsInvalidWitness) {
  try {
    (void)run_honest(Graph::path(4), Cycle({0, 1, 2, 3}), FieldModulus(5), 1);
    FAIL() << "expected InvalidWitness";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidWitness);
  }
}

TEST(Verify, FlippedOpeningIsLocated) {
  const Graph g = Graph::complete(4);
  const Cycle c({0, 1, 2, 3});
  const FieldModulus q(7);
  SeededRng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    HonestRunOptions opt;
    opt.chall = 0;
    Transcript t = run_honest(g, c, q, rng.next_u64(), opt);
    auto& ans = std::get<PermutationAnswer>(t.answer);
    const std::size_t i = rng.uniform_below(4);
    const std::size_t j = rng.uniform_below(4);
    ans.a.set_value(i, j, ans.a.value(i, j) + 1 + rng.uniform_below(6));
    const Verdict v = verify(t, g, q);
    EXPECT_FALSE(v.accept);
    EXPECT_EQ(v.reason, RejectReason::Algebra0);
    EXPECT_EQ(v.entry, std::make_pair(i, j));
  }
}

TEST(Verify, DeadlineAnswerFailsTiming) {
  HonestRunOptions opt;
  opt.timing.separation = 2.0;
  opt.timing.delay = 2.0;
  const Transcript late = run_honest(Graph::complete(3), Cycle({0, 1, 2}), FieldModulus(5), 9, opt);
  EXPECT_FALSE(late.verdict.accept);
  EXPECT_EQ(late.verdict.reason, RejectReason::Timing);
  EXPECT_DOUBLE_EQ(late.verdict.timing->slack, 0.0);

  opt.timing.delay = 1.999;
  EXPECT_TRUE(run_honest(Graph::complete(3), Cycle({0, 1, 2}), FieldModulus(5), 9, opt).verdict.accept);
}

TEST(Verify, BadObjectsAndMalformedTranscripts) {
  const Graph g = Graph::complete(4);
  const FieldModulus q(5);
  HonestRunOptions opt;
  opt.chall = 0;
  Transcript t0 = run_honest(g, Cycle({0, 1, 2, 3}), q, 4, opt);
  std::get<PermutationAnswer>(t0.answer).pi = {0, 0, 1, 2};
  EXPECT_EQ(verify(t0, g, q).reason, RejectReason::BadPermutation);

  opt.chall = 1;
  Transcript t1 = run_honest(g, Cycle({0, 1, 2, 3}), q, 4, opt);
  std::get<CycleAnswer>(t1.answer).cycle = {0, 1, 1, 3};
  EXPECT_EQ(verify(t1, g, q).reason, RejectReason::BadCycle);

  Transcript wrong_variant = run_honest(g, Cycle({0, 1, 2, 3}), q, 4, opt);
  wrong_variant.chall = 0;
  try {
    (void)verify(wrong_variant, g, q);
    FAIL() << "expected Malformed";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Malformed);
  }
  EXPECT_THROW(verify(t1, Graph::complete(5), q), Error);
}

// Oracle for Q = 2, n = 3: every deterministic P2 answer pair, P1 best
// response per B, with no factorisation over couples.
Rational brute_force_soundness_q2(const Graph& g) {
  const FieldModulus q(2);
  const auto perms = Permutation::all(3);
  const auto cycles = graphs::enumerate_cycles(3);
  std::uint64_t best = 0;
  for (const Permutation& pi : perms) {
    const FqMatrix adj = graphs::adjacency_matrix(graphs::apply_permutation(pi, g), q);
    unsigned m[9];
    for (int k = 0; k < 9; ++k) m[k] = adj.value(k / 3, k % 3).get_ui();
    for (unsigned a_bits = 0; a_bits < 512; ++a_bits)
      for (const Cycle& c : cycles)
        for (unsigned ap_bits = 0; ap_bits < 8; ++ap_bits) {
          std::uint64_t total = 0;
          for (unsigned b_bits = 0; b_bits < 512; ++b_bits) {
            bool both = true;
            const auto edges = c.edges();
            for (std::size_t k = 0; k < edges.size(); ++k) {
              const auto [u, v] = edges[k];
              const unsigned idx = u * 3 + v;
              const unsigned a = (a_bits >> idx) & 1U;
              const unsigned b = (b_bits >> idx) & 1U;
              const unsigned y0 = (a + b * m[idx]) & 1U;
              const unsigned y1 = (((ap_bits >> k) & 1U) + b) & 1U;
              if (y0 != y1) both = false;
            }
            total += both ? 2 : 1;
          }
          best = std::max<std::uint64_t>(best, total);
        }
  }
  Rational r(static_cast<unsigned long>(best), 1024UL);
  r.canonicalize();
  return r;
}

TEST(ClassicalSoundness, Examples) {
  const Graph path3 = Graph::path(3);
  EXPECT_EQ(classical_soundness_value(path3, FieldModulus(3)), Rational(2, 3));
  EXPECT_EQ(classical_soundness_value(path3, FieldModulus(5)), Rational(3, 5));
  EXPECT_EQ(classical_soundness_value(star(3), FieldModulus(3)), Rational(5, 9));
  EXPECT_EQ(graphs::min_missing_edges(star(3)), 2);
  try {
    (void)classical_soundness_value(Graph::complete(4), FieldModulus(3));
    FAIL() << "expected GraphIsHamiltonian";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GraphIsHamiltonian);
  }
  EXPECT_THROW(classical_soundness_value(Graph::path(8), FieldModulus(3)), Error);
}

TEST(ClassicalSoundness, MatchesBruteForceAtQ2) {
  EXPECT_EQ(classical_soundness_value(Graph::path(3), FieldModulus(2)), brute_force_soundness_q2(Graph::path(3)));
  EXPECT_EQ(classical_soundness_value(Graph(3), FieldModulus(2)), brute_force_soundness_q2(Graph(3)));
}

TEST(ClassicalSoundness, MatchesMissingEdgeFormulaAndQuantumBound) {
  const std::vector<Graph> graphs_under_test = {Graph::path(3), Graph::path(4), Graph::path(5), star(3), star(4), Graph(4),
                                                Graph::path(6)};
  for (const Graph& g : graphs_under_test)
    for (unsigned long qv : {2UL, 3UL, 5UL, 7UL, 11UL}) {
      const Rational value = classical_soundness_value(g, FieldModulus(qv));
      EXPECT_EQ(value, half_plus(q_power(qv, graphs::min_missing_edges(g))));
      EXPECT_LE(value.get_d(), soundness_bound(g.size(), BigInt(qv)).value);
    }
}

TEST(AttackHarness, OptimalFamilyMatchesExactValue) {
  const Graph g = Graph::path(3);
  for (unsigned long qv : {3UL, 5UL}) {
    const FieldModulus q(qv);
    const AttackReport r = attack_harness(g, q, optimal_strategy(g, q), 20000, 77 + qv);
    const double exact = classical_soundness_value(g, q).get_d();
    EXPECT_LE(r.ci_low, exact);
    EXPECT_GE(r.ci_high, exact);
  }
}

TEST(AttackHarness, HonestStyleAndRandom) {
  const Graph g = star(3);
  const FieldModulus q(3);
  const CheatingProverPair honest = honest_style_strategy(g, q);
  std::uint64_t chall0 = 0, chall0_wins = 0, chall1 = 0, chall1_wins = 0;
  SeededRng rng(5);
  for (int t = 0; t < 9000; ++t) {
    const FqMatrix b = fq::sample_uniform(4, 4, q, rng);
    const int chall = t % 2;
    const Transcript tr = run_cheating(g, q, honest, b, chall, rng.next_u64());
    (chall == 0 ? chall0 : chall1) += 1;
    (chall == 0 ? chall0_wins : chall1_wins) += tr.verdict.accept ? 1 : 0;
  }
  EXPECT_EQ(chall0_wins, chall0);
  const auto [lo, hi] = wilson_interval(chall1_wins, chall1);
  EXPECT_LE(lo, 1.0 / 9);
  EXPECT_GE(hi, 1.0 / 9);

  const AttackReport random = attack_harness(g, q, random_strategy(g, q), 4000, 6);
  EXPECT_LT(random.rate, classical_soundness_value(g, q).get_d());
}

TEST(AttackHarness, ReadingBInP2FailsTiming) {
  const Graph g = Graph::path(3);
  const FieldModulus q(5);
  const Cycle closest = graphs::closest_cycle(g);
  // P2 uses B to open C' consistently with an honest-looking chall-0 commitment.
  const SignallingProverPair leaky{
      "leaky",
      [&](const FqMatrix& b, std::uint64_t shared) {
        SeededRng r(shared);
        const auto plan = detail::shared_plan(g, closest, q, r);
        return FqMatrix(plan.a + fq::hadamard(b, plan.adjacency));
      },
      [&](int chall, const FqMatrix& b, std::uint64_t shared) -> Answer {
        SeededRng r(shared);
        const auto plan = detail::shared_plan(g, closest, q, r);
        if (chall == 0) return PermutationAnswer{plan.pi.mapping(), plan.a};
        CycleAnswer ans = detail::open_cycle(plan.target, plan.a);
        const auto edges = plan.target.edges();
        for (std::size_t k = 0; k < edges.size(); ++k)
          if (plan.adjacency.value(edges[k].first, edges[k].second) == 0)
            ans.openings[k] = ans.openings[k] - b.at(edges[k].first, edges[k].second);
        return ans;
      }};
  SeededRng rng(8);
  for (int t = 0; t < 200; ++t) {
    const Transcript tr = run_signalling(g, q, leaky, fq::sample_uniform(3, 3, q, rng), t % 2, rng.next_u64());
    EXPECT_FALSE(tr.verdict.accept);
    EXPECT_EQ(tr.verdict.reason, RejectReason::Timing);
    EXPECT_GE(tr.timeline.find(spacetime::EventKind::Receive, "answer").time, 1.0);
  }
}

TEST(Extraction, BothAnswersRevealBOnAMissingCouple) {
  const Graph g = star(3);
  const FieldModulus q(5);
  const CheatingProverPair pair = optimal_strategy(g, q);
  SeededRng rng(21);
  int extracted = 0;
  for (int t = 0; t < 2000; ++t) {
    FqMatrix b = fq::sample_uniform(4, 4, q, rng);
    const std::uint64_t shared = rng.next_u64();
    // Zero B on the planned missing couples half the time so both answers win.
    if (t % 2 == 0) {
      SeededRng r(shared);
      for (auto [u, v] : detail::shared_plan(g, graphs::closest_cycle(g), q, r).missing) b.set_value(u, v, 0);
    }
    const FqMatrix y = pair.p1(b, shared);
    const auto a0 = std::get<PermutationAnswer>(pair.p2(0, shared));
    const auto a1 = std::get<CycleAnswer>(pair.p2(1, shared));
    if (auto key = extract_from_both_answers(g, b, y, a0, a1)) {
      EXPECT_EQ(key->value, b.at(key->u, key->v));
      ++extracted;
    }
  }
  EXPECT_GE(extracted, 1000);
}

TEST(Parameters, SizeParametersMatchFrozenValues) {
  // Q values frozen from an independent sympy.nextprime computation.
  struct Row {
    unsigned long n, k;
    const char* q0;
    const char* q;
    std::size_t log2q;
    const char* bits;
  };
  const Row rows[] = {
      {3, 1, "3072", "3079", 12, "108"},
      {4, 2, "98304", "98317", 17, "272"},
      {3, 10, "412316860416", "412316860441", 39, "351"},
      {5, 10, "8246337208320", "8246337208331", 43, "1075"},
      {8, 20, "2975090884207876484628480", "2975090884207876484628493", 82, "5248"},
  };
  for (const Row& r : rows) {
    const SoundnessParameters p = size_parameters(r.n, r.k);
    EXPECT_EQ(p.q0, BigInt(r.q0));
    EXPECT_EQ(p.q.q(), BigInt(r.q));
    EXPECT_EQ(p.log2_q, r.log2q);
    EXPECT_EQ(p.bits_per_round, BigInt(r.bits));
  }
  EXPECT_THROW(size_parameters(3, 0), Error);
  EXPECT_THROW(size_parameters(2, 1), Error);
}

TEST(Parameters, SoundnessBoundAtQ0) {
  const SoundnessBound k1 = soundness_bound(3, BigInt(3072));
  ASSERT_TRUE(k1.exact.has_value());
  EXPECT_EQ(*k1.exact, 1);
  EXPECT_TRUE(k1.vacuous);
  for (unsigned long n = 3; n <= 8; ++n)
    for (unsigned long k = 1; k <= 20; ++k) {
      const SoundnessBound b = soundness_bound(n, size_parameters(n, k).q0);
      ASSERT_TRUE(b.exact.has_value());
      EXPECT_EQ(*b.exact, Rational(1, 2) + Rational(BigInt(1), BigInt(1) << k));
    }
  EXPECT_FALSE(soundness_bound(3, BigInt(3079)).exact.has_value());
  EXPECT_LT(soundness_bound(3, BigInt(3079)).value, 1.0);
}

FunctionVerifier honest_coin_verifier() {
  return FunctionVerifier(
      2, [](std::size_t, std::size_t n, const FieldModulus& q) { return FqMatrix(n, n, q); },
      [](std::size_t coin, const FqMatrix&, const FqMatrix&) { return static_cast<int>(coin); });
}

TEST(ZeroKnowledge, PerfectForFixedAndAdaptiveVerifiers) {
  const Graph g = Graph::complete(3);
  const FieldModulus q2(2);
  const FunctionVerifier fixed(
      1, [](std::size_t, std::size_t n, const FieldModulus& q) { return FqMatrix::from_values(n, n, q, {1, 0, 1, 1, 1, 0, 0, 1, 1}); },
      [](std::size_t, const FqMatrix&, const FqMatrix&) { return 1; });
  EXPECT_EQ(zk_distance(fixed, g, q2), 0);
  EXPECT_EQ(zk_distance(honest_coin_verifier(), g, q2), 0);

  const FieldModulus q3(3);
  const FunctionVerifier adaptive(
      3,
      [](std::size_t coin, std::size_t n, const FieldModulus& q) {
        SeededRng r(100 + coin);
        return fq::sample_uniform(n, n, q, r);
      },
      [](std::size_t coin, const FqMatrix& b, const FqMatrix& y) {
        BigInt s = coin;
        for (const auto& v : y.values()) s += v;
        s += b.value(0, 1);
        return static_cast<int>(s.get_ui() % 2);
      });
  EXPECT_EQ(zk_distance(adaptive, g, q3), 0);
}

TEST(ZeroKnowledge, BiasedSimulatorIsDetected) {
  const Graph g = Graph::complete(3);
  const FieldModulus q(2);
  EXPECT_GT(zk_distance(honest_coin_verifier(), g, q, SimulatorVariant::BiasedPermutation), 0);
}

TEST(ZeroKnowledge, ZeroBMakesOpeningEqualY) {
  const Graph g = Graph::complete(3);
  const FieldModulus q(3);
  const FunctionVerifier zero(
      1, [](std::size_t, std::size_t n, const FieldModulus& m) { return FqMatrix(n, n, m); },
      [](std::size_t, const FqMatrix&, const FqMatrix&) { return 0; });
  SeededRng rng(4);
  for (int t = 0; t < 20; ++t) {
    const Transcript sim = zk_simulate(zero, g, q, rng);
    EXPECT_TRUE(sim.verdict.accept);
    EXPECT_EQ(std::get<PermutationAnswer>(sim.answer).a, sim.y);
    HonestRunOptions opt;
    opt.b = FqMatrix(3, 3, q);
    opt.chall = 0;
    const Transcript real = run_honest(g, Cycle({0, 1, 2}), q, rng.next_u64(), opt);
    EXPECT_EQ(std::get<PermutationAnswer>(real.answer).a, real.y);
  }
}

TEST(ZeroKnowledge, SimulatedTranscriptsVerifyOnLargerGraphs) {
  const Graph g = Graph::complete(6);
  const FieldModulus q(101);
  const FunctionVerifier v(
      4,
      [](std::size_t coin, std::size_t n, const FieldModulus& m) {
        SeededRng r(coin);
        return fq::sample_uniform(n, n, m, r);
      },
      [](std::size_t, const FqMatrix&, const FqMatrix& y) { return static_cast<int>(y.value(0, 0).get_ui() % 2); });
  SeededRng rng(6);
  for (int t = 0; t < 100; ++t) EXPECT_TRUE(zk_simulate(v, g, q, rng).verdict.accept);
}

TEST(ZeroKnowledge, SessionRefusesRewinding) {
  const FunctionVerifier v = honest_coin_verifier();
  VerifierSession s(v, 0);
  const FieldModulus q(2);
  const FqMatrix b = s.first(3, q);
  EXPECT_EQ(s.second(b), 0);
  EXPECT_EQ(s.invocations(), 2);
  try {
    (void)s.second(b);
    FAIL() << "expected RewindAttempt";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RewindAttempt);
  }
  EXPECT_THROW(s.first(3, q), Error);
  EXPECT_THROW(zk_distance(v, Graph::complete(4), q), Error);
  EXPECT_THROW(zk_distance(v, Graph::path(3), q), Error);
}

TEST(TranscriptJson, RoundTripPreservesVerdict) {
  const Graph g = Graph::complete(5);
  const FieldModulus q = fq::next_prime_at_least(BigInt(1) << 70);
  for (int chall = 0; chall < 2; ++chall) {
    HonestRunOptions opt;
    opt.chall = chall;
    const Transcript t = run_honest(g, Cycle({0, 2, 4, 1, 3}), q, 31, opt);
    const nlohmann::json j = transcript_json(t);
    EXPECT_EQ(j["verdict"], "accept");
    EXPECT_TRUE(j["q"].is_string());
    Transcript back = transcript_from_json(nlohmann::json::parse(j.dump()));
    EXPECT_TRUE(verify(back, g, q).accept);
    EXPECT_EQ(back.y, t.y);
  }
  nlohmann::json broken = transcript_json(run_honest(g, Cycle({0, 1, 2, 3, 4}), q, 2));
  broken["B"].erase(0);
  try {
    (void)transcript_from_json(broken);
    FAIL() << "expected Malformed";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Malformed);
  }
}

}  // namespace
