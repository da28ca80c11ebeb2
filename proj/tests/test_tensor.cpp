#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "thermo/tensor.hpp"

using namespace thermo;

namespace {

DenseTensor random_tensor(Shape shape, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  DenseTensor t(std::move(shape));
  for (auto& x : t.data()) x = cplx(g(rng), g(rng));
  return t;
}

}  // namespace

TEST_CASE("row-major layout and element access") {
  DenseTensor t({2, 3});
  t.at({1, 2}) = 5.0;
  CHECK(t[5] == cplx(5.0));
  CHECK(t.size() == 6);
  const DenseTensor s = DenseTensor::scalar(cplx(1, 2));
  CHECK(s.rank() == 0);
  CHECK(s[0] == cplx(1, 2));
  CHECK_THROWS_AS(DenseTensor({2, 2}, std::vector<cplx>(3)), std::invalid_argument);
}

TEST_CASE("permutation moves entries to permuted positions") {
  const DenseTensor t = random_tensor({2, 3, 4}, 1);
  const DenseTensor p = t.permuted({2, 0, 1});
  CHECK(p.shape() == Shape{4, 2, 3});
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 3; ++b)
      for (std::size_t c = 0; c < 4; ++c) CHECK(p.at({c, a, b}) == t.at({a, b, c}));
}

TEST_CASE("contract matches an explicit index loop") {
  const DenseTensor a = random_tensor({3, 4, 5}, 2);
  const DenseTensor b = random_tensor({5, 2, 4}, 3);
  const DenseTensor c = contract(a, b, {{1, 2}, {2, 0}});
  REQUIRE(c.shape() == Shape{3, 2});
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      cplx expect = 0.0;
      for (std::size_t k = 0; k < 4; ++k)
        for (std::size_t l = 0; l < 5; ++l) expect += a.at({i, k, l}) * b.at({l, j, k});
      CHECK(std::abs(c.at({i, j}) - expect) < 1e-12);
    }
  }
}

TEST_CASE("outer product and full contraction") {
  const DenseTensor a = random_tensor({2, 3}, 4);
  const DenseTensor b = random_tensor({4}, 5);
  const DenseTensor outer = contract(a, b, {});
  CHECK(outer.shape() == Shape{2, 3, 4});
  CHECK(std::abs(outer.at({1, 2, 3}) - a.at({1, 2}) * b.at({3})) < 1e-14);
  const DenseTensor full = contract(a, a.conj(), {{0, 0}, {1, 1}});
  CHECK(full.rank() == 0);
  CHECK(std::abs(full[0].real() - a.norm() * a.norm()) < 1e-12);
}

TEST_CASE("contract rejects mismatched extents") {
  const DenseTensor a({2, 3});
  const DenseTensor b({4, 2});
  CHECK_THROWS_AS(contract(a, b, {{1, 0}}), std::invalid_argument);
  CHECK_THROWS(contract(a, b, {{5, 0}}));
}

TEST_CASE("matrix round trip") {
  const DenseTensor t = random_tensor({2, 3, 2}, 6);
  const CMatrix m = t.as_matrix(2);
  CHECK(m.rows() == 6);
  CHECK(m.cols() == 2);
  CHECK(distance(DenseTensor::from_matrix(m, {2, 3, 2}), t) < 1e-15);
  CHECK(m(4, 1) == t.at({1, 1, 1}));
}
