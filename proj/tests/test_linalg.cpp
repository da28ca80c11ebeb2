#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "thermo/linalg.hpp"

using namespace thermo;

namespace {

DenseTensor random_tensor(Shape shape, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  DenseTensor t(std::move(shape));
  for (auto& x : t.data()) x = cplx(g(rng), g(rng));
  return t;
}

DenseTensor rebuild(const SvdResult& s) {
  DenseTensor u = s.left_isometry;
  const std::size_t k = s.singular_values.size();
  for (std::size_t r = 0; r < u.size() / k; ++r)
    for (std::size_t j = 0; j < k; ++j) u[r * k + j] *= s.singular_values[j];
  return contract(u, s.right_isometry, {{u.rank() - 1, 0}});
}

}  // namespace

TEST_CASE("untruncated SVD reconstructs the tensor") {
  const DenseTensor t = random_tensor({3, 4, 2}, 7);
  const SvdResult s = truncated_svd(t, {0, 2}, 100, 0.0);
  CHECK(s.singular_values.size() == 4);
  CHECK(s.discarded_weight < 1e-15);
  // left isometry axes: (3, 2, k); right: (k, 4)
  const DenseTensor back = rebuild(s).permuted({0, 2, 1});
  CHECK(distance(back, t) < 1e-12);
  for (std::size_t i = 1; i < s.singular_values.size(); ++i) CHECK(s.singular_values[i] <= s.singular_values[i - 1]);
}

TEST_CASE("truncation error equals the discarded weight") {
  const DenseTensor t = random_tensor({6, 5}, 8);
  const SvdResult full = truncated_svd(t, {0}, 10, 0.0);
  const SvdResult cut = truncated_svd(t, {0}, 3, 0.0);
  double dropped = 0.0, total = 0.0;
  for (std::size_t i = 0; i < full.singular_values.size(); ++i) {
    total += full.singular_values[i] * full.singular_values[i];
    if (i >= 3) dropped += full.singular_values[i] * full.singular_values[i];
  }
  CHECK(cut.discarded_weight == doctest::Approx(dropped / total).epsilon(1e-12));
  const double err = distance(rebuild(cut), t);
  CHECK(err * err == doctest::Approx(dropped).epsilon(1e-10));
}

TEST_CASE("isometries are isometric") {
  const DenseTensor t = random_tensor({3, 2, 5}, 9);
  const SvdResult s = truncated_svd(t, {0, 1}, 4, 0.0);
  const CMatrix u = s.left_isometry.as_matrix(2);
  CHECK((u.adjoint() * u - CMatrix::Identity(u.cols(), u.cols())).norm() < 1e-12);
  const CMatrix v = s.right_isometry.as_matrix(1);
  CHECK((v * v.adjoint() - CMatrix::Identity(v.rows(), v.rows())).norm() < 1e-12);
}

TEST_CASE("relative cutoff drops tiny singular values") {
  DenseTensor t({3, 3});
  t.at({0, 0}) = 1.0;
  t.at({1, 1}) = 1e-12;
  const SvdResult s = truncated_svd(t, {0}, 3, 1e-10);
  CHECK(s.singular_values.size() == 1);
  CHECK_THROWS_AS(truncated_svd(t, {0}, 0), std::invalid_argument);
  DenseTensor bad({2, 2});
  bad[0] = std::nan("");
  CHECK_THROWS(truncated_svd(bad, {0}, 2));
}

TEST_CASE("isometrize splits into an isometry and a remainder") {
  const DenseTensor t = random_tensor({2, 3, 4}, 10);
  const auto [q, r] = isometrize(t, {0, 1});
  const CMatrix qm = q.as_matrix(2);
  CHECK(unitarity_defect(qm) < 1e-12);
  CHECK(distance(contract(q, r, {{2, 0}}), t) < 1e-12);
  const CMatrix rm = r.as_matrix(1);
  for (Eigen::Index i = 0; i < std::min(rm.rows(), rm.cols()); ++i) {
    CHECK(rm(i, i).real() >= 0.0);
    CHECK(std::abs(rm(i, i).imag()) < 1e-14);
  }
  DenseTensor col({5, 1});
  for (std::size_t i = 0; i < 5; ++i) col.at({i, 0}) = static_cast<double>(i + 1);
  const auto [qc, rc] = isometrize(col, {0});
  CHECK(rc.size() == 1);
  CHECK(rc[0].real() == doctest::Approx(std::sqrt(55.0)));
}

TEST_CASE("Haar and squashed Haar unitaries") {
  const CMatrix u = haar_unitary(5, 42);
  CHECK(unitarity_defect(u) < 1e-12);
  CHECK((haar_unitary(5, 42) - u).norm() == 0.0);
  CHECK((squashed_haar(5, 0.0, 42) - CMatrix::Identity(5, 5)).norm() < 1e-12);
  CHECK((squashed_haar(5, 1.0, 42) - u).norm() < 1e-10);
  CHECK(unitarity_defect(squashed_haar(5, 0.3, 42)) < 1e-12);
  // small alpha keeps the matrix near the identity
  CHECK((squashed_haar(5, 0.05, 42) - CMatrix::Identity(5, 5)).norm() < 0.05 * 3.15 * std::sqrt(5.0) + 1e-12);
}

TEST_CASE("polar projection returns the nearest unitary") {
  const CMatrix u = haar_unitary(4, 3);
  CHECK((polar_project(u) - u).norm() < 1e-12);
  const CMatrix m = u * 2.5;
  CHECK((polar_project(m) - u).norm() < 1e-12);
  CHECK_THROWS_AS(polar_project(CMatrix::Zero(3, 3)), std::invalid_argument);
}

TEST_CASE("hermitian_exp and kron") {
  CMatrix h(2, 2);
  h << 1.0, 0.0, 0.0, -2.0;
  const CMatrix e = hermitian_exp(h, 0.5);
  CHECK(e(0, 0).real() == doctest::Approx(std::exp(-0.5)));
  CHECK(e(1, 1).real() == doctest::Approx(std::exp(1.0)));
  const CMatrix k = kron(CMatrix::Identity(2, 2), h);
  CHECK(k(3, 3).real() == doctest::Approx(-2.0));
  CHECK(mix_seed(1, 2) != mix_seed(2, 1));
}
