#include "thermo/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "thermo/linalg.hpp"

namespace thermo {

double purity(const ThermalSpectrum& spec) {
  double g = 0.0;
  for (double p : spec.probabilities) g += p * p;
  return g;
}

double entropy(const ThermalSpectrum& spec, double order) {
  if (!(order >= 0.0)) throw std::invalid_argument("entropy: order must be >= 0");
  if (std::abs(order - 1.0) < 1e-14) {
    double s = 0.0;
    for (double p : spec.probabilities) {
      if (p > 0.0) s -= p * std::log(p);
    }
    return std::max(s, 0.0);
  }
  double sum = 0.0;
  for (double p : spec.probabilities) {
    if (p > 0.0) sum += std::pow(p, order);
  }
  return std::max(std::log(sum) / (1.0 - order), 0.0);
}

RootDensity root_density(const Tto& tto) {
  const CMatrix r = tto.root.as_matrix(2);
  RootDensity out;
  out.matrix = r * r.adjoint();
  out.matrix /= out.matrix.trace().real();
  out.left_dim = tto.root.extent(0);
  out.right_dim = tto.root.extent(1);
  return out;
}

double partial_transpose_negativity(const CMatrix& rho, std::size_t left_dim, std::size_t right_dim) {
  const auto dl = static_cast<Eigen::Index>(left_dim), dr = static_cast<Eigen::Index>(right_dim);
  if (rho.rows() != dl * dr || rho.cols() != dl * dr) {
    throw std::invalid_argument("partial_transpose_negativity: dimension mismatch");
  }
  CMatrix pt(rho.rows(), rho.cols());
  for (Eigen::Index l = 0; l < dl; ++l) {
    for (Eigen::Index r = 0; r < dr; ++r) {
      for (Eigen::Index lp = 0; lp < dl; ++lp) {
        for (Eigen::Index rp = 0; rp < dr; ++rp) pt(l * dr + r, lp * dr + rp) = rho(l * dr + rp, lp * dr + r);
      }
    }
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(pt), Eigen::EigenvaluesOnly);
  const double trace_norm = es.eigenvalues().cwiseAbs().sum();
  return 0.5 * (trace_norm - rho.trace().real());
}

double negativity(const RootDensity& rho) {
  return partial_transpose_negativity(rho.matrix, rho.left_dim, rho.right_dim);
}

double negativity(const Tto& tto) { return negativity(root_density(tto)); }

EofRoot eof_root(const CMatrix& rho, std::size_t left_dim, std::size_t right_dim, std::size_t k_keep) {
  if (k_keep < 1) throw std::invalid_argument("eof_root: k_keep must be >= 1");
  if (rho.rows() != static_cast<Eigen::Index>(left_dim * right_dim)) {
    throw std::invalid_argument("eof_root: dimension mismatch");
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(rho));
  const Eigen::Index dim = rho.rows();
  const auto k = static_cast<Eigen::Index>(std::min<std::size_t>(k_keep, static_cast<std::size_t>(dim)));
  EofRoot out;
  out.left_dim = left_dim;
  out.right_dim = right_dim;
  out.states.resize(dim, k);
  double total = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) total += std::max(es.eigenvalues()(dim - 1 - j), 0.0);
  if (!(total > 0.0)) throw std::runtime_error("eof_root: density has no positive weight");
  for (Eigen::Index j = 0; j < k; ++j) {
    const double p = std::max(es.eigenvalues()(dim - 1 - j), 0.0) / total;
    out.states.col(j) = std::sqrt(p) * es.eigenvectors().col(dim - 1 - j);
  }
  return out;
}

EofRoot eof_root(const Tto& tto, std::size_t k_keep) {
  const RootDensity rho = root_density(tto);
  return eof_root(rho.matrix, rho.left_dim, rho.right_dim, k_keep);
}

namespace {

double entropy_of_gram(const CMatrix& gram) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(gram, Eigen::EigenvaluesOnly);
  const double total = es.eigenvalues().sum();
  double s = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double w = es.eigenvalues()(i) / total;
    if (w > 1e-300) s -= w * std::log(w);
  }
  return std::max(s, 0.0);
}

// Entanglement of an unnormalized vector; Gram matrix of the smaller side.
double vector_entropy(const cplx* data, Eigen::Index dl, Eigen::Index dr) {
  Eigen::Map<const RowMajorCMatrix> m(data, dl, dr);
  const CMatrix gram = dl <= dr ? CMatrix(m * m.adjoint()) : CMatrix(m.adjoint() * m);
  return entropy_of_gram(gram);
}

}  // namespace

double entanglement_entropy(const Eigen::VectorXcd& psi, std::size_t left_dim, std::size_t right_dim) {
  if (psi.size() != static_cast<Eigen::Index>(left_dim * right_dim)) {
    throw std::invalid_argument("entanglement_entropy: dimension mismatch");
  }
  if (!(psi.squaredNorm() > 0.0)) throw std::invalid_argument("entanglement_entropy: zero vector");
  return vector_entropy(psi.data(), static_cast<Eigen::Index>(left_dim), static_cast<Eigen::Index>(right_dim));
}

double eof_objective(const EofRoot& root, const CMatrix& v) {
  const Eigen::Index k = root.states.cols();
  if (v.rows() != k || v.cols() != k) throw std::invalid_argument("eof_objective: unitary has the wrong size");
  if (unitarity_defect(v) > 1e-8) throw std::invalid_argument("eof_objective: matrix is not unitary");
  const CMatrix phi = root.states * v;
  const auto dl = static_cast<Eigen::Index>(root.left_dim), dr = static_cast<Eigen::Index>(root.right_dim);
  double total = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    const double q = phi.col(j).squaredNorm();
    if (q < 1e-300) continue;
    total += q * vector_entropy(phi.col(j).data(), dl, dr);
  }
  return total;
}

void NelderMeadConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("NelderMeadConfig: alpha must lie in [0, 1]");
  if (!(reflect > 0.0) || !(expand > reflect) || !(contract > 0.0 && contract < 1.0) ||
      !(shrink > 0.0 && shrink < 1.0)) {
    throw std::invalid_argument("NelderMeadConfig: invalid simplex coefficients");
  }
  if (!(tolerance >= 0.0)) throw std::invalid_argument("NelderMeadConfig: tolerance must be >= 0");
  if (max_evaluations < 1 || restarts < 1) {
    throw std::invalid_argument("NelderMeadConfig: max_evaluations and restarts must be >= 1");
  }
}

namespace {

struct Vertex {
  CMatrix u;
  double f = 0.0;
};

// Objective of the projected point; a degenerate combination scores +inf.
Vertex make_vertex(const EofRoot& root, const CMatrix& m) {
  try {
    CMatrix u = polar_project(m);
    const double f = eof_objective(root, u);
    return {std::move(u), f};
  } catch (const std::invalid_argument&) {
    return {m, std::numeric_limits<double>::infinity()};
  }
}

struct RunOutcome {
  Vertex best;
  std::size_t evaluations = 0;
  bool converged = false;
};

RunOutcome nelder_mead(const EofRoot& root, const CMatrix& start, const NelderMeadConfig& opt, std::uint64_t seed,
                       std::vector<double>& log) {
  const std::size_t k = static_cast<std::size_t>(start.rows());
  std::vector<Vertex> simplex;
  simplex.push_back({start, eof_objective(root, start)});
  for (std::size_t i = 1; i <= k * k; ++i) {
    simplex.push_back(make_vertex(root, start * squashed_haar(k, opt.alpha, mix_seed(seed, i))));
  }
  RunOutcome out;
  out.evaluations = simplex.size();
  auto by_value = [](const Vertex& a, const Vertex& b) { return a.f < b.f; };

  while (true) {
    std::stable_sort(simplex.begin(), simplex.end(), by_value);
    log.push_back(log.empty() ? simplex.front().f : std::min(log.back(), simplex.front().f));
    if (simplex.back().f - simplex.front().f < opt.tolerance) {
      out.converged = true;
      break;
    }
    if (out.evaluations >= opt.max_evaluations) break;

    const std::size_t n = simplex.size() - 1;
    CMatrix centroid = CMatrix::Zero(start.rows(), start.cols());
    for (std::size_t i = 0; i < n; ++i) centroid += simplex[i].u;
    centroid /= static_cast<double>(n);
    Vertex& worst = simplex.back();

    const CMatrix reflected = centroid + opt.reflect * (centroid - worst.u);
    Vertex r = make_vertex(root, reflected);
    ++out.evaluations;
    if (r.f < simplex.front().f) {
      Vertex e = make_vertex(root, centroid + opt.expand * (centroid - worst.u));
      ++out.evaluations;
      worst = e.f < r.f ? std::move(e) : std::move(r);
    } else if (r.f < simplex[n - 1].f) {
      worst = std::move(r);
    } else {
      const bool outside = r.f < worst.f;
      const CMatrix target = outside ? reflected : worst.u;
      Vertex c = make_vertex(root, centroid + opt.contract * (target - centroid));
      ++out.evaluations;
      if (c.f < std::min(r.f, worst.f)) {
        worst = std::move(c);
      } else {
        for (std::size_t i = 1; i < simplex.size(); ++i) {
          simplex[i] = make_vertex(root, simplex.front().u + opt.shrink * (simplex[i].u - simplex.front().u));
          ++out.evaluations;
        }
      }
    }
  }
  out.best = simplex.front();
  return out;
}

}  // namespace

EofResult minimize_eof(const EofRoot& root, const NelderMeadConfig& opt, const std::optional<CMatrix>& initial) {
  opt.validate();
  const Eigen::Index k = root.states.cols();
  CMatrix start = CMatrix::Identity(k, k);
  if (initial && initial->rows() == k && initial->cols() == k) start = polar_project(*initial);

  EofResult result;
  result.unitary = start;
  result.value = eof_objective(root, start);
  result.log.push_back(result.value);
  if (k == 1) {
    result.converged = true;
    result.evaluations = 1;
    return result;
  }
  for (std::size_t r = 0; r < opt.restarts; ++r) {
    const std::uint64_t seed = mix_seed(opt.seed, r);
    result.seeds.push_back(seed);
    RunOutcome run = nelder_mead(root, result.unitary, opt, seed, result.log);
    result.evaluations += run.evaluations;
    result.converged = result.converged || run.converged;
    if (run.best.f < result.value) {
      result.value = run.best.f;
      result.unitary = std::move(run.best.u);
    }
  }
  return result;
}

EofResult minimize_eof(const Tto& tto, std::size_t k_keep, const NelderMeadConfig& opt,
                       const std::optional<CMatrix>& initial) {
  return minimize_eof(eof_root(tto, k_keep), opt, initial);
}

void ScalingCurve::validate() const {
  if (n_sites < 1) throw std::invalid_argument("ScalingCurve: n_sites must be >= 1");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].first > 0.0)) throw std::invalid_argument("ScalingCurve: temperatures must be positive");
    if (i > 0 && !(points[i].first > points[i - 1].first)) {
      throw std::invalid_argument("ScalingCurve: temperatures must be ascending");
    }
  }
}

namespace {

double interpolate(const std::vector<std::pair<double, double>>& pts, double x) {
  auto it = std::lower_bound(pts.begin(), pts.end(), x, [](const auto& p, double v) { return p.first < v; });
  if (it == pts.begin()) return it->second;
  if (it == pts.end()) return pts.back().second;
  const auto& [x1, y1] = *it;
  const auto& [x0, y0] = *(it - 1);
  if (x1 == x0) return y1;
  return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
}

}  // namespace

CollapseResult collapse(const std::vector<ScalingCurve>& curves, double c, double z) {
  CollapseResult out;
  for (const auto& curve : curves) {
    curve.validate();
    if (curve.points.empty()) throw std::invalid_argument("collapse: empty curve");
    ScalingCurve t = curve;
    const double n = static_cast<double>(curve.n_sites);
    for (auto& [x, y] : t.points) {
      x *= std::pow(n, z);
      y -= c / 6.0 * std::log(n);
    }
    out.transformed.push_back(std::move(t));
  }
  for (std::size_t a = 0; a < out.transformed.size(); ++a) {
    for (std::size_t b = a + 1; b < out.transformed.size(); ++b) {
      const auto& pa = out.transformed[a].points;
      const auto& pb = out.transformed[b].points;
      const double lo = std::max(pa.front().first, pb.front().first);
      const double hi = std::min(pa.back().first, pb.back().first);
      if (lo > hi) throw std::domain_error("collapse: curves have no abscissa overlap");
      std::vector<double> xs{lo, hi};
      for (const auto* pts : {&pa, &pb}) {
        for (const auto& [x, y] : *pts) {
          if (x >= lo && x <= hi) xs.push_back(x);
        }
      }
      for (double x : xs) out.residual = std::max(out.residual, std::abs(interpolate(pa, x) - interpolate(pb, x)));
    }
  }
  return out;
}

}  // namespace thermo
