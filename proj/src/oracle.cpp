#include "thermo/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "thermo/linalg.hpp"
#include "thermo/measures.hpp"

namespace thermo {

namespace {

std::size_t qubit_count(const CMatrix& rho) {
  const auto dim = static_cast<std::size_t>(rho.rows());
  if (rho.rows() != rho.cols() || dim < 2 || (dim & (dim - 1)) != 0) {
    throw std::invalid_argument("oracle: density matrix must be square with a power-of-two dimension");
  }
  std::size_t n = 0;
  while ((std::size_t{1} << n) < dim) ++n;
  return n;
}

}  // namespace

DenseState gibbs(const CMatrix& h, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw std::invalid_argument("gibbs: temperature must be positive and finite");
  }
  if (h.rows() != h.cols() || static_cast<std::size_t>(h.rows()) > kMaxOracleDim) {
    throw std::invalid_argument("gibbs: square Hamiltonian of dimension <= 1024 required");
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(h));
  const Eigen::VectorXd e = es.eigenvalues();
  Eigen::VectorXd w(e.size());
  for (Eigen::Index i = 0; i < e.size(); ++i) w(i) = std::exp(-(e(i) - e(0)) / temperature);
  w /= w.sum();
  DenseState out;
  out.temperature = temperature;
  out.rho = es.eigenvectors() * w.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
  out.energies.assign(e.data(), e.data() + e.size());
  out.probabilities.assign(w.data(), w.data() + w.size());
  return out;
}

DenseState gibbs(const RydbergParams& params, double temperature) {
  DenseState out = gibbs(build_dense(params), temperature);
  out.params = params;
  return out;
}

double exact_purity(const CMatrix& rho) { return (rho * rho).trace().real(); }

double exact_energy(const CMatrix& rho, const CMatrix& h) { return (rho * h).trace().real(); }

std::vector<double> exact_nz_profile(const CMatrix& rho) {
  const std::size_t n = qubit_count(rho);
  std::vector<double> out(n, 0.0);
  for (Eigen::Index s = 0; s < rho.rows(); ++s) {
    const double d = rho(s, s).real();
    for (std::size_t i = 0; i < n; ++i) {
      if ((s >> (n - 1 - i)) & 1) out[i] += d;
    }
  }
  return out;
}

double exact_negativity(const CMatrix& rho, std::size_t cut) {
  const std::size_t n = qubit_count(rho);
  if (static_cast<std::size_t>(rho.rows()) > kMaxOracleDim) {
    throw std::invalid_argument("exact_negativity: dimension above 1024");
  }
  if (cut < 1 || cut >= n) throw std::invalid_argument("exact_negativity: cut must lie in [1, N)");
  return partial_transpose_negativity(rho, std::size_t{1} << cut, std::size_t{1} << (n - cut));
}

double concurrence(const CMatrix& rho) {
  if (rho.rows() != 4 || rho.cols() != 4) throw std::invalid_argument("concurrence: 4x4 density matrix required");
  if (std::abs(rho.trace().real() - 1.0) > 1e-8 || (rho - rho.adjoint()).norm() > 1e-8) {
    throw std::invalid_argument("concurrence: not a unit-trace Hermitian matrix");
  }
  CMatrix yy = CMatrix::Zero(4, 4);
  yy(0, 3) = -1.0;
  yy(1, 2) = 1.0;
  yy(2, 1) = 1.0;
  yy(3, 0) = -1.0;
  const CMatrix tilde = yy * rho.conjugate() * yy;
  // Eigenvalues of ρ ρ̃ equal those of the Hermitian √ρ ρ̃ √ρ.
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(rho));
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const CMatrix sq = es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
  Eigen::SelfAdjointEigenSolver<CMatrix> rs(hermitian_part(sq * tilde * sq), Eigen::EigenvaluesOnly);
  std::vector<double> l;
  for (Eigen::Index i = 0; i < 4; ++i) l.push_back(std::sqrt(std::max(rs.eigenvalues()(i), 0.0)));
  std::sort(l.begin(), l.end(), std::greater<>());
  return std::max(0.0, l[0] - l[1] - l[2] - l[3]);
}

double wootters_eof(const CMatrix& rho) {
  const double c = concurrence(rho);
  const double x = 0.5 * (1.0 + std::sqrt(std::max(0.0, 1.0 - c * c)));
  auto h = [](double p) { return p > 0.0 && p < 1.0 ? -p * std::log(p) - (1.0 - p) * std::log(1.0 - p) : 0.0; };
  return h(x);
}

}  // namespace thermo
