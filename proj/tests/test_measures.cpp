#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "thermo/linalg.hpp"
#include "thermo/measures.hpp"
#include "thermo/oracle.hpp"

using namespace thermo;

namespace {

// Two-site tree whose root purifies rho on 2 ⊗ 2.
Tto two_qubit_tree(const CMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(rho));
  Tto t;
  t.root = DenseTensor({2, 2, 4});
  for (std::size_t lr = 0; lr < 4; ++lr)
    for (std::size_t k = 0; k < 4; ++k) {
      const double w = std::max(es.eigenvalues()(static_cast<Eigen::Index>(3 - k)), 0.0);
      t.root[lr * 4 + k] = std::sqrt(w) * es.eigenvectors()(static_cast<Eigen::Index>(lr), static_cast<Eigen::Index>(3 - k));
    }
  return t;
}

CMatrix projector(const Eigen::VectorXcd& v) { return v * v.adjoint(); }

Eigen::VectorXcd bell() {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(4);
  v(0) = v(3) = 1.0 / std::sqrt(2.0);
  return v;
}

CMatrix random_density(std::uint64_t seed, double bell_weight) {
  const CMatrix g = haar_unitary(4, seed) * Eigen::VectorXd::LinSpaced(4, 0.2, 1.0).cast<cplx>().asDiagonal();
  CMatrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return bell_weight * projector(bell()) + (1.0 - bell_weight) * rho;
}

Tto thermal_tree(std::size_t n, double rb, double delta, double beta, std::size_t k0 = 256,
                 double dbeta_half = 0.0125) {
  RydbergParams p;
  p.n_sites = n;
  p.blockade_radius = rb;
  p.detuning = delta;
  EvolutionConfig c;
  c.dbeta_half = dbeta_half;
  c.max_bond = 64;
  c.snapshot_betas = {beta};
  const Lptn s = imaginary_time_evolve(infinite_temperature_state(n), p, c).back().state;
  return lptn_to_tto(pad_to_power_of_two(s), 64, k0).first;
}

}  // namespace

TEST_CASE("purity and entropies of spectra") {
  ThermalSpectrum pure{{1.0}, 1.0, 1};
  CHECK(purity(pure) == 1.0);
  CHECK(entropy(pure, 1.0) == 0.0);
  CHECK(entropy(pure, 2.0) == 0.0);
  ThermalSpectrum uniform{std::vector<double>(64, 1.0 / 64), 0.0, 64};
  CHECK(purity(uniform) == doctest::Approx(1.0 / 64));
  CHECK(entropy(uniform, 1.0) == doctest::Approx(std::log(64.0)));
  CHECK(entropy(uniform, 0.5) == doctest::Approx(std::log(64.0)));
  ThermalSpectrum mixed{{0.5, 0.3, 0.2}, 1.0, 3};
  CHECK(entropy(mixed, 2.0) == doctest::Approx(-std::log(purity(mixed))));
  CHECK(entropy(mixed, 0.0) == doctest::Approx(std::log(3.0)));
  CHECK(entropy(mixed, 1.0) == doctest::Approx(-(0.5 * std::log(0.5) + 0.3 * std::log(0.3) + 0.2 * std::log(0.2))));
  CHECK_THROWS(entropy(mixed, -1.0));
}

TEST_CASE("six-site purity against the dense oracle") {
  const Tto t = thermal_tree(6, 1.2, 1.0, 1.0 / 0.3);
  RydbergParams p;
  p.n_sites = 6;
  p.blockade_radius = 1.2;
  p.detuning = 1.0;
  CHECK(std::abs(purity(spectrum(t)) - exact_purity(gibbs(p, 0.3).rho)) < 1e-4);
}

TEST_CASE("negativity of two-qubit roots") {
  CHECK(negativity(two_qubit_tree(projector(bell()))) == doctest::Approx(0.5));
  Eigen::VectorXcd prod = Eigen::VectorXcd::Zero(4);
  prod(1) = 1.0;
  CHECK(std::abs(negativity(two_qubit_tree(projector(prod)))) < 1e-12);
  const CMatrix werner = 0.9 * projector(bell()) + 0.1 * CMatrix::Identity(4, 4) / 4.0;
  CHECK(std::abs(negativity(two_qubit_tree(werner)) - exact_negativity(werner, 1)) < 1e-12);
  const RootDensity rd = root_density(two_qubit_tree(werner));
  CHECK((rd.matrix - rd.matrix.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(rd.matrix.trace().real() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("negativity is invariant under local unitaries on the root bonds") {
  Tto t = thermal_tree(8, 1.14, 2.9, 3.0, 32, 0.05);
  const double before = negativity(t);
  CHECK(before > 1e-3);
  const CMatrix ul = haar_unitary(t.root.extent(0), 5), ur = haar_unitary(t.root.extent(1), 6);
  Tto rotated = t;
  rotated.root = contract(DenseTensor::from_matrix(ul), rotated.root, {{1, 0}});
  rotated.root = contract(DenseTensor::from_matrix(ur), rotated.root, {{1, 1}}).permuted({1, 0, 2});
  CHECK(std::abs(negativity(rotated) - before) < 1e-10);
}

TEST_CASE("pure states reduce to Schmidt quantities") {
  const Tto t = thermal_tree(8, 1.2, 2.9, 20.0, 1, 0.1);
  REQUIRE(t.mixing_dim() == 1);
  const CMatrix psi = t.root.reshaped({t.root.extent(0), t.root.extent(1)}).as_matrix(1);
  Eigen::JacobiSVD<CMatrix> svd(psi / psi.norm());
  const Eigen::VectorXd s = svd.singularValues();
  double se = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > 0) se -= s(i) * s(i) * std::log(s(i) * s(i));
  CHECK(std::abs(negativity(t) - 0.5 * (s.sum() * s.sum() - 1.0)) < 1e-10);
  NelderMeadConfig opt;
  const EofResult r = minimize_eof(t, 10, opt);
  CHECK(std::abs(r.value - se) < 1e-12);
  CHECK(se > 0.0);
}

TEST_CASE("EoF objective definitions") {
  const CMatrix werner = 0.7 * projector(bell()) + 0.3 * CMatrix::Identity(4, 4) / 4.0;
  const EofRoot root = eof_root(werner, 2, 2, 10);
  REQUIRE(root.kept() == 4);
  // identity: eigen-decomposition average
  Eigen::SelfAdjointEigenSolver<CMatrix> es(werner);
  double expect = 0.0;
  for (Eigen::Index j = 0; j < 4; ++j) {
    if (es.eigenvalues()(j) > 1e-14) expect += es.eigenvalues()(j) * entanglement_entropy(es.eigenvectors().col(j), 2, 2);
  }
  CHECK(eof_objective(root, CMatrix::Identity(4, 4)) == doctest::Approx(expect).epsilon(1e-12));
  CHECK_THROWS(eof_objective(root, 2.0 * CMatrix::Identity(4, 4)));
  CHECK_THROWS(eof_objective(root, CMatrix::Identity(3, 3)));

  const EofRoot pure = eof_root(projector(bell()), 2, 2, 1);
  REQUIRE(pure.kept() == 1);
  CMatrix phase(1, 1);
  phase(0, 0) = std::polar(1.0, 0.7);
  CHECK(eof_objective(pure, phase) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("minimize_eof against the concurrence formula") {
  NelderMeadConfig opt;
  opt.seed = 3;
  for (std::uint64_t seed : {1, 2, 3}) {
    const CMatrix rho = random_density(seed, 0.6);
    const EofRoot root = eof_root(rho, 2, 2, 4);
    const EofResult r = minimize_eof(root, opt);
    CHECK(std::abs(r.value - wootters_eof(rho)) < 5e-3);
    CHECK(r.value <= eof_objective(root, CMatrix::Identity(4, 4)) + 1e-12);
    CHECK(unitarity_defect(r.unitary) < 1e-10);
    for (std::size_t i = 1; i < r.log.size(); ++i) CHECK(r.log[i] <= r.log[i - 1]);
    CHECK(r.seeds.size() == opt.restarts);
    const EofResult again = minimize_eof(root, opt);
    CHECK(again.value == r.value);
  }
  const EofResult mixed = minimize_eof(eof_root(CMatrix::Identity(4, 4) / 4.0, 2, 2, 4), opt);
  CHECK(mixed.value < 5e-3);
}

TEST_CASE("warm start is used as the first vertex") {
  NelderMeadConfig opt;
  opt.restarts = 1;
  const CMatrix rho = random_density(9, 0.5);
  const EofRoot root = eof_root(rho, 2, 2, 4);
  const EofResult first = minimize_eof(root, opt);
  const EofResult warm = minimize_eof(root, opt, first.unitary);
  CHECK(warm.log.front() == doctest::Approx(first.value).epsilon(1e-9));
  CHECK(warm.value <= first.value + 1e-12);
}

TEST_CASE("scaling collapse") {
  ScalingCurve single{7, {{0.1, 1.0}, {0.2, 0.5}}, "eof"};
  CHECK(collapse({single}, 0.5, 1.0).residual == 0.0);

  // E = (c/6) ln N + exp(−T N^z) on grids sharing the same abscissae
  const double c = 0.5, z = 1.0;
  std::vector<ScalingCurve> curves;
  for (std::size_t n : {7, 13, 25}) {
    ScalingCurve curve{n, {}, "eof"};
    for (int k = 1; k <= 12; ++k) {
      const double x = 0.1 * k * 7.0;
      curve.points.emplace_back(x / std::pow(double(n), z), c / 6.0 * std::log(double(n)) + std::exp(-x));
    }
    curves.push_back(curve);
  }
  const CollapseResult good = collapse(curves, c, z);
  CHECK(good.residual < 1e-12);
  CHECK(collapse(curves, 0.0, 0.0).residual > 0.1);
  CHECK(good.transformed[1].points[0].first == doctest::Approx(0.7));

  ScalingCurve far{9, {{5.0, 1.0}, {6.0, 1.0}}, "eof"};
  CHECK_THROWS_AS(collapse({single, far}, 0.5, 0.0), std::domain_error);
  ScalingCurve unsorted{9, {{0.2, 1.0}, {0.1, 1.0}}, "eof"};
  CHECK_THROWS_AS(collapse({single, unsorted}, 0.5, 1.0), std::invalid_argument);
}

TEST_CASE("collapse residual interpolates between samples") {
  ScalingCurve a{2, {{1.0, 0.0}, {3.0, 2.0}}, "x"};
  ScalingCurve b{3, {{2.0, 0.0}, {4.0, 0.0}}, "x"};
  // overlap [2, 3]: a goes 1 → 2, b is 0
  CHECK(collapse({a, b}, 0.0, 0.0).residual == doctest::Approx(2.0));
}
