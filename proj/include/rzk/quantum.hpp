#pragma once

// Dense complex linear algebra for the consecutive-measurement inequalities:
// states, projector families, the (V, E) functionals and numerical checks of
// each inequality the soundness argument composes.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rzk/error.hpp"
#include "rzk/rng.hpp"

namespace rzk::quantum {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr double kStateTolerance = 1e-10;
inline constexpr double kProjectorTolerance = 1e-9;
inline constexpr double kInequalityTolerance = 1e-9;
inline constexpr double kPsdTolerance = 1e-10;

inline double min_hermitian_eigenvalue(const Matrix& m) {
  const Matrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

inline double max_hermitian_eigenvalue(const Matrix& m) {
  const Matrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().maxCoeff();
}

/// Re tr(a b) without forming the product.
inline double trace_product(const Matrix& a, const Matrix& b) { return (a.transpose().cwiseProduct(b)).sum().real(); }

class PureState {
 public:
  explicit PureState(Vector amplitudes) : amp_(std::move(amplitudes)) {
    require(amp_.size() > 0, ErrorCode::DimensionMismatch, "empty state");
    require(std::abs(amp_.norm() - 1.0) <= kStateTolerance, ErrorCode::InvalidArgument, "state is not normalized");
  }

  static PureState normalized(const Vector& v) {
    const double norm = v.norm();
    require(norm > 0, ErrorCode::InvalidArgument, "cannot normalize the zero vector");
    return PureState(v / norm);
  }

  static PureState basis(Eigen::Index dim, Eigen::Index k) {
    Vector v = Vector::Zero(dim);
    v(k) = 1.0;
    return PureState(v);
  }

  Eigen::Index dim() const { return amp_.size(); }
  const Vector& amplitudes() const { return amp_; }
  Matrix projector() const { return amp_ * amp_.adjoint(); }

 private:
  Vector amp_;
};

class DensityMatrix {
 public:
  explicit DensityMatrix(Matrix rho) : rho_(std::move(rho)) {
    require(rho_.rows() == rho_.cols() && rho_.rows() > 0, ErrorCode::DimensionMismatch, "density matrix must be square");
    require((rho_ - rho_.adjoint()).norm() <= kStateTolerance, ErrorCode::InvalidArgument, "density matrix not Hermitian");
    require(std::abs(rho_.trace().real() - 1.0) <= kStateTolerance, ErrorCode::InvalidArgument,
            "density matrix trace is not 1");
    require(min_hermitian_eigenvalue(rho_) >= -kStateTolerance, ErrorCode::InvalidArgument,
            "density matrix has a negative eigenvalue");
  }

  static DensityMatrix pure(const PureState& s) { return DensityMatrix(s.projector()); }

  Eigen::Index dim() const { return rho_.rows(); }
  const Matrix& matrix() const { return rho_; }

 private:
  Matrix rho_;
};

class Projector {
 public:
  explicit Projector(Matrix p) : p_(std::move(p)) {
    require(p_.rows() == p_.cols() && p_.rows() > 0, ErrorCode::DimensionMismatch, "projector must be square");
    require((p_ * p_ - p_).norm() <= kProjectorTolerance, ErrorCode::InvalidArgument, "operator is not idempotent");
    require((p_ - p_.adjoint()).norm() <= kProjectorTolerance, ErrorCode::InvalidArgument, "operator is not Hermitian");
  }

  /// Orthogonal projector onto the span of the given orthonormal columns.
  static Projector onto_columns(const Matrix& orthonormal_cols, Eigen::Index dim) {
    if (orthonormal_cols.cols() == 0) return Projector(Matrix::Zero(dim, dim));
    return Projector(orthonormal_cols * orthonormal_cols.adjoint());
  }

  static Projector identity(Eigen::Index dim) { return Projector(Matrix::Identity(dim, dim)); }
  static Projector zero(Eigen::Index dim) { return Projector(Matrix::Zero(dim, dim)); }

  Eigen::Index dim() const { return p_.rows(); }
  const Matrix& matrix() const { return p_; }

 private:
  Matrix p_;
};

/// n measurements, each given by S mutually orthogonal blocks. Member i is the
/// projector P_i = sum_s P_i^s onto the "accepting" outcomes of measurement i.
class ProjectorFamily {
 public:
  explicit ProjectorFamily(std::vector<std::vector<Projector>> blocks) : blocks_(std::move(blocks)) {
    require(!blocks_.empty() && !blocks_.front().empty(), ErrorCode::InvalidArgument, "empty projector family");
    const std::size_t s = blocks_.front().size();
    const Eigen::Index d = blocks_.front().front().dim();
    totals_.reserve(blocks_.size());
    for (const auto& row : blocks_) {
      require(row.size() == s, ErrorCode::InvalidArgument, "every member needs the same number of blocks");
      Matrix total = Matrix::Zero(d, d);
      for (std::size_t a = 0; a < row.size(); ++a) {
        require(row[a].dim() == d, ErrorCode::DimensionMismatch, "block dimensions differ");
        for (std::size_t b = a + 1; b < row.size(); ++b) {
          require((row[a].matrix() * row[b].matrix()).norm() <= kProjectorTolerance, ErrorCode::BlocksNotOrthogonal,
                  "blocks of one member are not orthogonal");
        }
        total += row[a].matrix();
      }
      totals_.push_back(std::move(total));
    }
  }

  /// S = 1 family from plain projectors.
  static ProjectorFamily single(const std::vector<Projector>& members) {
    std::vector<std::vector<Projector>> blocks;
    for (const auto& p : members) blocks.push_back({p});
    return ProjectorFamily(std::move(blocks));
  }

  std::size_t size() const { return blocks_.size(); }
  std::size_t outcomes() const { return blocks_.front().size(); }
  Eigen::Index dim() const { return blocks_.front().front().dim(); }
  const Projector& block(std::size_t i, std::size_t s) const { return blocks_[i][s]; }
  const Matrix& total(std::size_t i) const { return totals_[i]; }

 private:
  std::vector<std::vector<Projector>> blocks_;
  std::vector<Matrix> totals_;
};

// ---------------------------------------------------------------------------
// Random instances

inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, SeededRng& rng) {
  Matrix g(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) g(i, j) = Complex(rng.gaussian(), rng.gaussian()) / std::sqrt(2.0);
  return g;
}

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases
/// of R's diagonal folded back into Q.
inline Matrix random_unitary(Eigen::Index d, SeededRng& rng) {
  Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(d, d, rng));
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR();
  for (Eigen::Index k = 0; k < d; ++k) {
    const double mag = std::abs(r(k, k));
    if (mag > 0) q.col(k) *= r(k, k) / mag;
  }
  return q;
}

inline PureState random_pure_state(Eigen::Index d, SeededRng& rng) {
  return PureState::normalized(gaussian_matrix(d, 1, rng).col(0));
}

/// Random mixed state of the given rank (Ginibre ensemble).
inline DensityMatrix random_density_matrix(Eigen::Index d, Eigen::Index rank, SeededRng& rng) {
  const Matrix w = gaussian_matrix(d, std::clamp<Eigen::Index>(rank, 1, d), rng);
  Matrix rho = w * w.adjoint();
  rho /= rho.trace().real();
  rho = 0.5 * (rho + rho.adjoint());
  return DensityMatrix(rho);
}

/// Splits `total` into `parts` non-negative integers uniformly over compositions.
inline std::vector<Eigen::Index> random_composition(Eigen::Index total, std::size_t parts, SeededRng& rng) {
  std::vector<Eigen::Index> cuts{0, total};
  for (std::size_t k = 0; k + 1 < parts; ++k)
    cuts.push_back(static_cast<Eigen::Index>(rng.uniform_below(static_cast<std::uint64_t>(total) + 1)));
  std::sort(cuts.begin(), cuts.end());
  std::vector<Eigen::Index> out;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) out.push_back(cuts[k + 1] - cuts[k]);
  return out;
}

/// Blocks built from consecutive columns of an orthonormal basis.
inline std::vector<Projector> blocks_from_basis(const Matrix& basis, const std::vector<Eigen::Index>& ranks) {
  std::vector<Projector> out;
  Eigen::Index col = 0;
  for (Eigen::Index r : ranks) {
    out.push_back(Projector::onto_columns(basis.middleCols(col, r), basis.rows()));
    col += r;
  }
  return out;
}

/// Each member uses its own Haar basis and a random total rank split into S
/// blocks, so blocks are orthogonal by construction.
inline ProjectorFamily random_projector_family(Eigen::Index d, std::size_t n, std::size_t s, SeededRng& rng) {
  std::vector<std::vector<Projector>> blocks;
  for (std::size_t i = 0; i < n; ++i) {
    const auto total = static_cast<Eigen::Index>(rng.uniform_below(static_cast<std::uint64_t>(d)) + 1);
    blocks.push_back(blocks_from_basis(random_unitary(d, rng), random_composition(total, s, rng)));
  }
  return ProjectorFamily(std::move(blocks));
}

/// Family whose members all nearly contain `anchor`; member i's first basis
/// vector is anchor tilted by a random amount. Produces large V, the regime
/// where the inequalities are closest to tight.
inline ProjectorFamily aligned_projector_family(const PureState& anchor, std::size_t n, std::size_t s, SeededRng& rng) {
  const Eigen::Index d = anchor.dim();
  std::vector<std::vector<Projector>> blocks;
  for (std::size_t i = 0; i < n; ++i) {
    const double tilt = rng.uniform01();
    Matrix seed = gaussian_matrix(d, d, rng);
    seed.col(0) = anchor.amplitudes() + tilt * seed.col(0) / std::sqrt(static_cast<double>(d));
    Eigen::HouseholderQR<Matrix> qr(seed);
    const Matrix basis = qr.householderQ();
    const auto total = static_cast<Eigen::Index>(rng.uniform_below(static_cast<std::uint64_t>(d)) + 1);
    auto ranks = random_composition(total - 1, s, rng);
    ranks[rng.uniform_below(s)] += 1;
    blocks.push_back(blocks_from_basis(basis, ranks));
  }
  return ProjectorFamily(std::move(blocks));
}

// ---------------------------------------------------------------------------
// Inequalities

struct LemmaReport {
  bool lemma1_checked = false;  ///< false when P|phi> vanishes (degenerate projection)
  double projected_norm_sq = 0.0;
  double lemma1_violation = 0.0;
  double lemma2_violation = 0.0;
  double max_violation = 0.0;
  bool pass = false;
};

/// Lemma 1 (normalized projection) and Lemma 2 (any fixed point of P):
/// |<phi|psi>|^2 = ||P phi||^2 = tr(P |phi><phi|), resp. |<phi|psi>|^2 <= tr(P |phi><phi|).
inline LemmaReport lemma_projection_identities(const PureState& phi, const Projector& p,
                                               std::span<const PureState> fixed_points = {}) {
  require(phi.dim() == p.dim(), ErrorCode::DimensionMismatch, "state and projector dimensions differ");
  LemmaReport r;
  const Vector projected = p.matrix() * phi.amplitudes();
  const double norm_sq = projected.squaredNorm();
  const double trace = trace_product(p.matrix(), phi.projector());
  r.projected_norm_sq = norm_sq;
  if (std::sqrt(norm_sq) >= 1e-12) {
    r.lemma1_checked = true;
    const Vector psi = projected / std::sqrt(norm_sq);
    const double overlap = std::norm(phi.amplitudes().dot(psi));
    r.lemma1_violation = std::max(std::abs(overlap - norm_sq), std::abs(norm_sq - trace));
  }
  for (const PureState& psi : fixed_points) {
    require(psi.dim() == p.dim(), ErrorCode::DimensionMismatch, "fixed point has the wrong dimension");
    require((p.matrix() * psi.amplitudes() - psi.amplitudes()).norm() <= kProjectorTolerance, ErrorCode::InvalidArgument,
            "state is not a fixed point of the projector");
    const double overlap = std::norm(phi.amplitudes().dot(psi.amplitudes()));
    r.lemma2_violation = std::max(r.lemma2_violation, overlap - trace);
  }
  r.max_violation = std::max(r.lemma1_violation, r.lemma2_violation);
  r.pass = r.max_violation <= kInequalityTolerance;
  return r;
}

struct ValueAndCollision {
  double value = 0.0;      ///< V: average acceptance probability of one measurement
  double collision = 0.0;  ///< E: probability that two distinct measurements both accept in sequence
};

/// V = (1/n) sum_i tr(P_i sigma);
/// E = 1/(n(n-1)) sum_{i != j} sum_{s,s'} tr(P_j^{s'} P_i^s sigma P_i^s P_j^{s'}).
inline ValueAndCollision compute_V_E(const DensityMatrix& sigma, const ProjectorFamily& family) {
  require(sigma.dim() == family.dim(), ErrorCode::DimensionMismatch, "state and family dimensions differ");
  const std::size_t n = family.size();
  require(n >= 2, ErrorCode::InvalidArgument, "need at least two measurements");
  const Matrix& rho = sigma.matrix();

  ValueAndCollision out;
  std::vector<Matrix> post(n);  // sum_s P_i^s sigma P_i^s
  for (std::size_t i = 0; i < n; ++i) {
    out.value += trace_product(family.total(i), rho);
    post[i] = Matrix::Zero(rho.rows(), rho.cols());
    for (std::size_t s = 0; s < family.outcomes(); ++s) {
      const Matrix& block = family.block(i, s).matrix();
      post[i].noalias() += block * rho * block;
    }
  }
  // sum_{s'} tr(P_j^{s'} X P_j^{s'}) = tr(P_j X) because each block is idempotent.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) out.collision += trace_product(family.total(j), post[i]);
  out.value /= static_cast<double>(n);
  out.collision /= static_cast<double>(n * (n - 1));
  return out;
}

struct MarginReport {
  double value = 0.0;
  double collision = 0.0;
  double bound = 0.0;
  double margin = 0.0;
  bool pass = false;
};

/// (1/64S) * max(V - 1/n, 0)^3
inline double consecutive_measurement_bound(double value, std::size_t n, std::size_t s) {
  const double excess = std::max(value - 1.0 / static_cast<double>(n), 0.0);
  return excess * excess * excess / (64.0 * static_cast<double>(s));
}

inline MarginReport check_theorem_multi(const DensityMatrix& sigma, const ProjectorFamily& family) {
  const auto ve = compute_V_E(sigma, family);
  MarginReport r;
  r.value = ve.value;
  r.collision = ve.collision;
  r.bound = consecutive_measurement_bound(ve.value, family.size(), family.outcomes());
  r.margin = ve.collision - r.bound;
  r.pass = r.margin >= -kInequalityTolerance;
  return r;
}

struct AlmostOrthogonalReport {
  double top_eigenvalue = 0.0;  ///< max over unit Omega of sum_i |<Omega|phi_i>|^2
  double cross_overlap = 0.0;   ///< C = sum_{i != j} |<phi_i|phi_j>|^2
  double bound = 0.0;           ///< 1 + sqrt((n-1) C / n)
  double margin = 0.0;
  bool pass = false;
};

inline AlmostOrthogonalReport check_almost_orthogonal(std::span<const PureState> states) {
  require(states.size() >= 2, ErrorCode::InvalidArgument, "need at least two states");
  const Eigen::Index d = states.front().dim();
  const auto n = static_cast<double>(states.size());
  Matrix sum = Matrix::Zero(d, d);
  AlmostOrthogonalReport r;
  for (std::size_t i = 0; i < states.size(); ++i) {
    require(states[i].dim() == d, ErrorCode::DimensionMismatch, "states have different dimensions");
    sum += states[i].projector();
    for (std::size_t j = 0; j < states.size(); ++j)
      if (i != j) r.cross_overlap += std::norm(states[i].amplitudes().dot(states[j].amplitudes()));
  }
  r.top_eigenvalue = max_hermitian_eigenvalue(sum);
  r.bound = 1.0 + std::sqrt((n - 1.0) * r.cross_overlap / n);
  r.margin = r.bound - r.top_eigenvalue;
  r.pass = r.margin >= -kInequalityTolerance;
  return r;
}

struct KappaCheck {
  double kappa = 0.0;
  double rhs = 0.0;  ///< (1 + 1/(kappa-1)) (1/n + sqrt(kappa E / V))
  double margin = 0.0;
  std::size_t threshold_set_size = 0;  ///< |{i : tr(P_i sigma) >= V/kappa}|, diagnostic only
  bool pass = false;
};

struct MainPropositionReport {
  double value = 0.0;
  double collision = 0.0;
  std::vector<KappaCheck> checks;
  bool pass = false;
};

inline MainPropositionReport check_main_proposition(const DensityMatrix& sigma, const ProjectorFamily& family,
                                                    std::span<const double> kappas) {
  require(family.outcomes() == 1, ErrorCode::InvalidArgument, "main proposition is stated for S = 1");
  for (double k : kappas) require(k > 1.0, ErrorCode::KappaOutOfRange, "kappa must exceed 1");
  const auto ve = compute_V_E(sigma, family);
  require(ve.value > 1e-12, ErrorCode::InvalidArgument, "V must be positive");
  MainPropositionReport r;
  r.value = ve.value;
  r.collision = ve.collision;
  r.pass = true;
  const auto n = static_cast<double>(family.size());
  for (double kappa : kappas) {
    KappaCheck c;
    c.kappa = kappa;
    c.rhs = (1.0 + 1.0 / (kappa - 1.0)) * (1.0 / n + std::sqrt(kappa * std::max(ve.collision, 0.0) / ve.value));
    c.margin = c.rhs - ve.value;
    for (std::size_t i = 0; i < family.size(); ++i)
      if (trace_product(family.total(i), sigma.matrix()) >= ve.value / kappa) ++c.threshold_set_size;
    c.pass = c.margin >= -kInequalityTolerance;
    r.pass = r.pass && c.pass;
    r.checks.push_back(c);
  }
  return r;
}

struct PinchingReport {
  double min_eigenvalue = 0.0;
  bool pass = false;
};

/// sum_i P_i |psi><psi| P_i - (1/m) P |psi><psi| P must be positive semidefinite.
inline PinchingReport check_pinching(const PureState& psi, std::span<const Projector> blocks) {
  require(!blocks.empty(), ErrorCode::InvalidArgument, "need at least one block");
  const Eigen::Index d = psi.dim();
  Matrix total = Matrix::Zero(d, d);
  for (std::size_t a = 0; a < blocks.size(); ++a) {
    require(blocks[a].dim() == d, ErrorCode::DimensionMismatch, "block dimension differs from state");
    for (std::size_t b = a + 1; b < blocks.size(); ++b)
      require((blocks[a].matrix() * blocks[b].matrix()).norm() <= kProjectorTolerance, ErrorCode::BlocksNotOrthogonal,
              "blocks are not mutually orthogonal");
    total += blocks[a].matrix();
  }
  const Matrix rho = psi.projector();
  Matrix diff = -(total * rho * total) / static_cast<double>(blocks.size());
  for (const Projector& p : blocks) diff += p.matrix() * rho * p.matrix();
  PinchingReport r;
  r.min_eigenvalue = min_hermitian_eigenvalue(diff);
  r.pass = r.min_eigenvalue >= -kPsdTolerance;
  return r;
}

struct BoundComparison {
  double ours = 0.0;
  std::optional<double> unruh;  ///< V(V^2 - 1/n); only when S = 1 and V >= 1/sqrt(n)
};

inline BoundComparison compare_bounds(double value, std::size_t n, std::size_t s) {
  require(value >= 0.0 && value <= 1.0, ErrorCode::InvalidArgument, "V must lie in [0, 1]");
  require(n >= 1 && s >= 1, ErrorCode::InvalidArgument, "n and S must be positive");
  BoundComparison out;
  out.ours = consecutive_measurement_bound(value, n, s);
  const double nn = static_cast<double>(n);
  if (s == 1 && value >= 1.0 / std::sqrt(nn)) out.unruh = value * (value * value - 1.0 / nn);
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps shared by the CLI and the acceptance suite

enum class InstanceStyle { Haar, Aligned };

struct TheoremTrial {
  Eigen::Index dim = 0;
  std::size_t n = 0;
  std::size_t outcomes = 0;
  MarginReport report;
  BoundComparison bounds;
};

/// One random instance; style alternates the spread-out and aligned families.
inline TheoremTrial random_theorem_trial(Eigen::Index dim, std::size_t n, std::size_t s, InstanceStyle style,
                                         SeededRng& rng) {
  const auto rank = static_cast<Eigen::Index>(rng.uniform_below(static_cast<std::uint64_t>(dim)) + 1);
  std::optional<DensityMatrix> sigma;
  std::optional<ProjectorFamily> family;
  if (style == InstanceStyle::Haar) {
    sigma.emplace(random_density_matrix(dim, rank, rng));
    family.emplace(random_projector_family(dim, n, s, rng));
  } else {
    const PureState anchor = random_pure_state(dim, rng);
    sigma.emplace(rank == 1 ? DensityMatrix::pure(anchor) : DensityMatrix(0.9 * anchor.projector() +
                                                                          0.1 * random_density_matrix(dim, rank, rng).matrix()));
    family.emplace(aligned_projector_family(anchor, n, s, rng));
  }
  TheoremTrial t;
  t.dim = dim;
  t.n = n;
  t.outcomes = s;
  t.report = check_theorem_multi(*sigma, *family);
  t.bounds = compare_bounds(std::clamp(t.report.value, 0.0, 1.0), n, s);
  return t;
}

}  // namespace rzk::quantum
