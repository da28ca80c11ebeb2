#include "thermo/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

namespace thermo {

namespace {

// Row axes first (in the given order), then the rest in original order.
std::vector<std::size_t> split_permutation(std::size_t rank, std::span<const std::size_t> row_axes) {
  if (row_axes.empty() || row_axes.size() >= rank) {
    throw std::invalid_argument("row axes must be a proper nonempty subset of the tensor axes");
  }
  std::vector<bool> used(rank, false);
  std::vector<std::size_t> perm;
  for (auto a : row_axes) {
    if (a >= rank || used[a]) throw std::invalid_argument("invalid or repeated row axis");
    used[a] = true;
    perm.push_back(a);
  }
  for (std::size_t k = 0; k < rank; ++k) {
    if (!used[k]) perm.push_back(k);
  }
  return perm;
}

}  // namespace

SvdResult truncated_svd(const DenseTensor& t, std::initializer_list<std::size_t> row_axes,
                        std::size_t max_rank, double rel_cutoff) {
  return truncated_svd(t, std::span<const std::size_t>(row_axes.begin(), row_axes.size()), max_rank,
                       rel_cutoff);
}

SvdResult truncated_svd(const DenseTensor& t, std::span<const std::size_t> row_axes,
                        std::size_t max_rank, double rel_cutoff) {
  if (max_rank < 1) throw std::invalid_argument("truncated_svd: max_rank must be >= 1");
  if (!(rel_cutoff >= 0.0 && rel_cutoff < 1.0)) {
    throw std::invalid_argument("truncated_svd: rel_cutoff must lie in [0, 1)");
  }
  if (!t.is_finite()) throw std::domain_error("truncated_svd: non-finite input");

  const auto perm = split_permutation(t.rank(), row_axes);
  const DenseTensor tp = t.permuted(perm);
  const CMatrix m = tp.as_matrix(row_axes.size());

  Eigen::BDCSVD<CMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const auto full = static_cast<std::size_t>(sv.size());

  std::vector<std::size_t> order(full);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sv[a] > sv[b]; });

  double total = 0.0;
  for (std::size_t i = 0; i < full; ++i) total += sv[i] * sv[i];
  const double largest = full > 0 ? sv[order[0]] : 0.0;

  std::size_t keep = 0;
  for (std::size_t i = 0; i < full && keep < max_rank; ++i) {
    if (i == 0 || sv[order[i]] > rel_cutoff * largest) ++keep;
    else break;
  }
  keep = std::max<std::size_t>(keep, 1);

  double dropped = 0.0;
  for (std::size_t i = keep; i < full; ++i) dropped += sv[order[i]] * sv[order[i]];

  CMatrix u(m.rows(), static_cast<Eigen::Index>(keep));
  CMatrix vh(static_cast<Eigen::Index>(keep), m.cols());
  SvdResult r;
  r.singular_values.resize(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    const auto src = static_cast<Eigen::Index>(order[i]);
    u.col(static_cast<Eigen::Index>(i)) = svd.matrixU().col(src);
    vh.row(static_cast<Eigen::Index>(i)) = svd.matrixV().col(src).adjoint();
    r.singular_values[i] = sv[src];
  }
  r.discarded_weight = total > 0.0 ? dropped / total : 0.0;

  Shape left_shape, right_shape{keep};
  for (std::size_t k = 0; k < row_axes.size(); ++k) left_shape.push_back(tp.extent(k));
  left_shape.push_back(keep);
  for (std::size_t k = row_axes.size(); k < tp.rank(); ++k) right_shape.push_back(tp.extent(k));
  r.left_isometry = DenseTensor::from_matrix(u, left_shape);
  r.right_isometry = DenseTensor::from_matrix(vh, right_shape);
  return r;
}

Isometrized isometrize(const DenseTensor& t, std::initializer_list<std::size_t> isometry_axes) {
  return isometrize(t, std::span<const std::size_t>(isometry_axes.begin(), isometry_axes.size()));
}

Isometrized isometrize(const DenseTensor& t, std::span<const std::size_t> isometry_axes) {
  if (!t.is_finite()) throw std::domain_error("isometrize: non-finite input");
  const auto perm = split_permutation(t.rank(), isometry_axes);
  const DenseTensor tp = t.permuted(perm);
  const CMatrix m = tp.as_matrix(isometry_axes.size());
  const Eigen::Index k = std::min(m.rows(), m.cols());

  Eigen::HouseholderQR<CMatrix> qr(m);
  CMatrix q = qr.householderQ() * CMatrix::Identity(m.rows(), k);
  CMatrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < k; ++i) {
    const double mag = std::abs(r(i, i));
    if (mag > 0.0) {
      const cplx phase = r(i, i) / mag;
      q.col(i) *= phase;
      r.row(i) *= std::conj(phase);
    }
  }

  Shape iso_shape, rem_shape{static_cast<std::size_t>(k)};
  for (std::size_t a = 0; a < isometry_axes.size(); ++a) iso_shape.push_back(tp.extent(a));
  iso_shape.push_back(static_cast<std::size_t>(k));
  for (std::size_t a = isometry_axes.size(); a < tp.rank(); ++a) rem_shape.push_back(tp.extent(a));
  return {DenseTensor::from_matrix(q, iso_shape), DenseTensor::from_matrix(r, rem_shape)};
}

CMatrix haar_unitary(std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw std::invalid_argument("haar_unitary: dim must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::numbers::sqrt2 / 2.0);
  const auto n = static_cast<Eigen::Index>(dim);
  CMatrix z(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double re = normal(rng);
      const double im = normal(rng);
      z(i, j) = cplx(re, im);
    }
  }
  Eigen::HouseholderQR<CMatrix> qr(z);
  CMatrix q = qr.householderQ();
  const auto& rr = qr.matrixQR();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mag = std::abs(rr(i, i));
    if (mag > 0.0) q.col(i) *= rr(i, i) / mag;
  }
  return q;
}

CMatrix squashed_haar(std::size_t dim, double alpha, std::uint64_t seed) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("squashed_haar: alpha must lie in [0, 1]");
  const CMatrix u = haar_unitary(dim, seed);
  // Schur vectors of a normal matrix are its (orthonormal) eigenvectors.
  Eigen::ComplexSchur<CMatrix> schur(u);
  const CMatrix& z = schur.matrixU();
  const auto& tri = schur.matrixT();
  Eigen::VectorXcd d(u.rows());
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    double phase = std::arg(tri(i, i));
    if (phase <= -std::numbers::pi) phase = std::numbers::pi;
    d(i) = std::polar(1.0, alpha * phase);
  }
  return z * d.asDiagonal() * z.adjoint();
}

CMatrix polar_project(const CMatrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) throw std::invalid_argument("polar_project: square matrix required");
  Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  if (!(s(s.size() - 1) > 1e-12 * s(0))) throw std::invalid_argument("polar_project: rank-deficient input");
  return svd.matrixU() * svd.matrixV().adjoint();
}

double unitarity_defect(const CMatrix& u) {
  return (u.adjoint() * u - CMatrix::Identity(u.cols(), u.cols())).norm();
}

CMatrix hermitian_part(const CMatrix& m) { return 0.5 * (m + m.adjoint()); }

CMatrix hermitian_exp(const CMatrix& h, double tau) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(h));
  const Eigen::VectorXd e = es.eigenvalues();
  Eigen::VectorXcd w(e.size());
  for (Eigen::Index i = 0; i < e.size(); ++i) w(i) = std::exp(-tau * e(i));
  return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint();
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace thermo
