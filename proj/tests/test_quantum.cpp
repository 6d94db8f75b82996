#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "rzk/quantum.hpp"

namespace {

using namespace rzk;
using namespace rzk::quantum;

// Scalar-loop evaluation of tr(A B C D E) style products, entry by entry,
// sharing no code with compute_V_E.
Matrix naive_mul(const Matrix& a, const Matrix& b) {
  Matrix c = Matrix::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j)
      for (Eigen::Index k = 0; k < a.cols(); ++k) c(i, j) += a(i, k) * b(k, j);
  return c;
}

Complex naive_trace(const Matrix& a) {
  Complex t = 0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) t += a(i, i);
  return t;
}

ValueAndCollision naive_V_E(const DensityMatrix& sigma, const ProjectorFamily& f) {
  const std::size_t n = f.size();
  ValueAndCollision out;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t s = 0; s < f.outcomes(); ++s)
      out.value += naive_trace(naive_mul(f.block(i, s).matrix(), sigma.matrix())).real();
  out.value /= n;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      for (std::size_t s = 0; s < f.outcomes(); ++s) {
        for (std::size_t t = 0; t < f.outcomes(); ++t) {
          const Matrix& pi = f.block(i, s).matrix();
          const Matrix& pj = f.block(j, t).matrix();
          const Matrix m = naive_mul(naive_mul(naive_mul(naive_mul(pj, pi), sigma.matrix()), pi), pj);
          out.collision += naive_trace(m).real();
        }
      }
    }
  }
  out.collision /= static_cast<double>(n * (n - 1));
  return out;
}

// The uniform superposition over n basis states measured by basis projectors.
struct TightInstance {
  DensityMatrix sigma;
  ProjectorFamily family;
};

TightInstance tight_instance(Eigen::Index n) {
  const PureState phi = PureState::normalized(Vector::Ones(n));
  std::vector<Projector> members;
  for (Eigen::Index i = 0; i < n; ++i) members.push_back(Projector(PureState::basis(n, i).projector()));
  return {DensityMatrix::pure(phi), ProjectorFamily::single(members)};
}

TEST(Types, ValidationRejectsBadOperators) {
  EXPECT_THROW(PureState(Vector::Ones(3)), Error);
  Matrix not_proj = Matrix::Identity(2, 2) * 0.5;
  EXPECT_THROW(Projector{not_proj}, Error);
  Matrix bad_rho = Matrix::Identity(2, 2);
  EXPECT_THROW(DensityMatrix{bad_rho}, Error);
  const Projector p(PureState::basis(2, 0).projector());
  try {
    ProjectorFamily({{p, p}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BlocksNotOrthogonal);
  }
}

TEST(RandomGenerators, BlocksAreOrthogonalAndStatesValid) {
  SeededRng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto d = static_cast<Eigen::Index>(2 + rng.uniform_below(15));
    const std::size_t s = 1 + rng.uniform_below(4);
    const ProjectorFamily f = random_projector_family(d, 4, s, rng);
    for (std::size_t i = 0; i < f.size(); ++i)
      for (std::size_t a = 0; a < s; ++a)
        for (std::size_t b = a + 1; b < s; ++b)
          EXPECT_LT((f.block(i, a).matrix() * f.block(i, b).matrix()).norm(), 1e-10);
    const Matrix u = random_unitary(d, rng);
    EXPECT_LT((u.adjoint() * u - Matrix::Identity(d, d)).norm(), 1e-10);
  }
}

TEST(LemmaProjection, Examples) {
  SeededRng rng(2);
  const PureState phi = random_pure_state(4, rng);
  const auto id = lemma_projection_identities(phi, Projector::identity(4), std::vector<PureState>{phi});
  EXPECT_TRUE(id.lemma1_checked);
  EXPECT_NEAR(id.projected_norm_sq, 1.0, 1e-12);
  EXPECT_TRUE(id.pass);

  // P|phi> = 0 and psi orthogonal to phi: 0 <= 0.
  const PureState e0 = PureState::basis(2, 0);
  const PureState e1 = PureState::basis(2, 1);
  const auto degenerate = lemma_projection_identities(e0, Projector(e1.projector()), std::vector<PureState>{e1});
  EXPECT_FALSE(degenerate.lemma1_checked);
  EXPECT_NEAR(degenerate.lemma2_violation, 0.0, 1e-15);
  EXPECT_TRUE(degenerate.pass);
}

TEST(LemmaProjection, RandomInstances) {
  SeededRng rng(3);
  double worst = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto d = static_cast<Eigen::Index>(2 + rng.uniform_below(15));
    const auto rank = static_cast<Eigen::Index>(1 + rng.uniform_below(d));
    const Matrix basis = random_unitary(d, rng);
    const Projector p = Projector::onto_columns(basis.leftCols(rank), d);
    std::vector<PureState> fixed;
    for (int k = 0; k < 3; ++k) fixed.push_back(PureState::normalized(basis.leftCols(rank) * gaussian_matrix(rank, 1, rng)));
    const auto r = lemma_projection_identities(random_pure_state(d, rng), p, fixed);
    worst = std::max(worst, r.max_violation);
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(ComputeVE, IdentityFamily) {
  SeededRng rng(4);
  const DensityMatrix sigma = random_density_matrix(5, 3, rng);
  const ProjectorFamily f = ProjectorFamily::single({Projector::identity(5), Projector::identity(5), Projector::identity(5)});
  const auto ve = compute_V_E(sigma, f);
  EXPECT_NEAR(ve.value, 1.0, 1e-12);
  EXPECT_NEAR(ve.collision, 1.0, 1e-12);
}

TEST(ComputeVE, TightInstance) {
  for (Eigen::Index n : {2, 3, 5, 8}) {
    const auto inst = tight_instance(n);
    const auto ve = compute_V_E(inst.sigma, inst.family);
    EXPECT_NEAR(ve.value, 1.0 / n, 1e-12);
    EXPECT_LT(std::abs(ve.collision), 1e-12);
    const auto r = check_theorem_multi(inst.sigma, inst.family);
    EXPECT_TRUE(r.pass);
    EXPECT_NEAR(r.bound, 0.0, 1e-15);
  }
}

TEST(ComputeVE, MatchesScalarLoopOracle) {
  SeededRng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const DensityMatrix sigma = random_density_matrix(8, 1 + rng.uniform_below(8), rng);
    const ProjectorFamily f = random_projector_family(8, 4, 2, rng);
    const auto fast = compute_V_E(sigma, f);
    const auto slow = naive_V_E(sigma, f);
    EXPECT_NEAR(fast.value, slow.value, 1e-10);
    EXPECT_NEAR(fast.collision, slow.collision, 1e-10);
  }
}

TEST(ComputeVE, DimensionMismatch) {
  SeededRng rng(6);
  try {
    compute_V_E(random_density_matrix(3, 1, rng), random_projector_family(4, 2, 1, rng));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(TheoremMulti, IdentityAndRandomSweep) {
  SeededRng rng(7);
  const DensityMatrix sigma = random_density_matrix(4, 2, rng);
  for (std::size_t n : {2U, 5U}) {
    std::vector<Projector> ids(n, Projector::identity(4));
    const auto r = check_theorem_multi(sigma, ProjectorFamily::single(ids));
    EXPECT_TRUE(r.pass);
    const double excess = 1.0 - 1.0 / n;
    EXPECT_NEAR(r.bound, excess * excess * excess / 64.0, 1e-15);
  }
  for (int trial = 0; trial < 300; ++trial) {
    const auto d = static_cast<Eigen::Index>(2 + rng.uniform_below(15));
    const std::size_t n = 2 + rng.uniform_below(7);
    const std::size_t s = 1 + rng.uniform_below(4);
    const auto style = trial % 2 == 0 ? InstanceStyle::Haar : InstanceStyle::Aligned;
    const auto t = random_theorem_trial(d, n, s, style, rng);
    ASSERT_TRUE(t.report.pass) << "margin " << t.report.margin;
  }
}

TEST(AlmostOrthogonal, OrthonormalAndIdenticalSaturate) {
  std::vector<PureState> basis;
  for (int i = 0; i < 4; ++i) basis.push_back(PureState::basis(4, i));
  const auto ortho = check_almost_orthogonal(basis);
  EXPECT_NEAR(ortho.cross_overlap, 0.0, 1e-15);
  EXPECT_NEAR(ortho.top_eigenvalue, 1.0, 1e-12);
  EXPECT_NEAR(ortho.margin, 0.0, 1e-12);

  SeededRng rng(8);
  const PureState phi = random_pure_state(5, rng);
  const std::size_t n = 6;
  const std::vector<PureState> same(n, phi);
  const auto ident = check_almost_orthogonal(same);
  EXPECT_NEAR(ident.cross_overlap, static_cast<double>(n * (n - 1)), 1e-9);
  EXPECT_NEAR(ident.top_eigenvalue, static_cast<double>(n), 1e-9);
  EXPECT_NEAR(ident.bound, static_cast<double>(n), 1e-9);
  EXPECT_TRUE(ident.pass);
}

TEST(AlmostOrthogonal, EigenvalueMatchesGramMatrix) {
  SeededRng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.uniform_below(9);
    const auto d = static_cast<Eigen::Index>(2 + rng.uniform_below(15));
    std::vector<PureState> states;
    for (std::size_t i = 0; i < n; ++i) states.push_back(random_pure_state(d, rng));
    const auto r = check_almost_orthogonal(states);
    ASSERT_TRUE(r.pass);
    // sum |phi_i><phi_i| and the Gram matrix share their non-zero spectrum.
    Matrix gram(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) gram(i, j) = states[i].amplitudes().dot(states[j].amplitudes());
    EXPECT_NEAR(r.top_eigenvalue, max_hermitian_eigenvalue(gram), 1e-9);
  }
}

TEST(MainProposition, ExamplesAndErrors) {
  const auto inst = tight_instance(4);
  const std::vector<double> two{2.0};
  const auto tight = check_main_proposition(inst.sigma, inst.family, two);
  EXPECT_TRUE(tight.pass);
  EXPECT_GE(tight.checks[0].rhs, 2.0 / 4 - 1e-12);

  SeededRng rng(10);
  const std::vector<Projector> ids(3, Projector::identity(3));
  const auto id = check_main_proposition(random_density_matrix(3, 3, rng), ProjectorFamily::single(ids), two);
  EXPECT_NEAR(id.checks[0].rhs, 2.0 * (1.0 / 3 + std::sqrt(2.0)), 1e-12);
  EXPECT_TRUE(id.pass);

  const std::vector<double> bad{1.0};
  try {
    check_main_proposition(inst.sigma, inst.family, bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::KappaOutOfRange);
  }
}

TEST(Pinching, Examples) {
  SeededRng rng(11);
  const PureState psi = random_pure_state(4, rng);
  const std::vector<Projector> one{Projector::onto_columns(random_unitary(4, rng).leftCols(2), 4)};
  const auto single = check_pinching(psi, one);
  EXPECT_NEAR(single.min_eigenvalue, 0.0, 1e-12);

  for (Eigen::Index m = 2; m <= 5; ++m) {
    std::vector<Projector> blocks;
    for (Eigen::Index i = 0; i < m; ++i) blocks.push_back(Projector(PureState::basis(m, i).projector()));
    const auto r = check_pinching(PureState::normalized(Vector::Ones(m)), blocks);
    EXPECT_NEAR(r.min_eigenvalue, 0.0, 1e-12);
    EXPECT_TRUE(r.pass);
  }

  const std::vector<Projector> overlapping{Projector::identity(2), Projector(PureState::basis(2, 0).projector())};
  EXPECT_THROW(check_pinching(PureState::basis(2, 0), overlapping), Error);
}

TEST(CompareBounds, Examples) {
  const auto a = compare_bounds(1.0, 2, 1);
  EXPECT_DOUBLE_EQ(a.ours, 1.0 / 512);
  ASSERT_TRUE(a.unruh.has_value());
  EXPECT_DOUBLE_EQ(*a.unruh, 0.5);

  const auto b = compare_bounds(1.0 / 4, 4, 1);
  EXPECT_EQ(b.ours, 0.0);
  EXPECT_FALSE(b.unruh.has_value());

  const auto c = compare_bounds(0.9, 100, 1);
  EXPECT_NEAR(*c.unruh, 0.72, 1e-12);
  EXPECT_NEAR(c.ours, 0.89 * 0.89 * 0.89 / 64, 1e-15);

  EXPECT_FALSE(compare_bounds(0.9, 100, 2).unruh.has_value());
}

TEST(CompareBounds, BothBoundsHoldOnHighValueInstances) {
  SeededRng rng(12);
  int unruh_regime = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const auto d = static_cast<Eigen::Index>(2 + rng.uniform_below(10));
    const std::size_t n = 2 + rng.uniform_below(7);
    const auto t = random_theorem_trial(d, n, 1, InstanceStyle::Aligned, rng);
    ASSERT_TRUE(t.report.pass);
    if (t.bounds.unruh) {
      ++unruh_regime;
      ASSERT_GE(t.report.collision, *t.bounds.unruh - kInequalityTolerance);
    }
  }
  EXPECT_GT(unruh_regime, 0);
}

}  // namespace
