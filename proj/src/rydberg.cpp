#include "thermo/rydberg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "thermo/linalg.hpp"

namespace thermo {

void RydbergParams::validate() const {
  if (n_sites < 1) throw std::invalid_argument("RydbergParams: n_sites must be >= 1");
  if (interaction_range < 1) throw std::invalid_argument("RydbergParams: interaction_range must be >= 1");
  if (!std::isfinite(blockade_radius) || !(blockade_radius > 0.0)) {
    throw std::invalid_argument("RydbergParams: blockade_radius must be finite and positive");
  }
  if (!std::isfinite(detuning)) throw std::invalid_argument("RydbergParams: detuning must be finite");
}

std::size_t Mpo::max_bond() const {
  std::size_t w = 1;
  for (const auto& s : sites) w = std::max({w, s.extent(0), s.extent(1)});
  return w;
}

std::vector<DenseTensor> Mpo::closed_sites() const {
  std::vector<DenseTensor> out = sites;
  if (out.empty()) return out;
  const auto& first = sites.front();
  DenseTensor lb({1, first.extent(0)}, left_boundary);
  out.front() = contract(lb, first, {{1, 0}});
  const auto& last = out.back();
  DenseTensor rb({last.extent(1), 1}, right_boundary);
  out.back() = contract(last, rb, {{1, 0}}).permuted({0, 3, 1, 2});
  return out;
}

CMatrix pauli_x() {
  CMatrix m(2, 2);
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

CMatrix occupation() {
  CMatrix m = CMatrix::Zero(2, 2);
  m(1, 1) = 1.0;
  return m;
}

namespace {

CMatrix local_field(const RydbergParams& p) { return 0.5 * pauli_x() - p.detuning * occupation(); }

void set_block(DenseTensor& w, std::size_t a, std::size_t b, const CMatrix& op) {
  for (std::size_t o = 0; o < 2; ++o) {
    for (std::size_t i = 0; i < 2; ++i) {
      w.at({a, b, o, i}) += op(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(i));
    }
  }
}

double pair_coefficient(const RydbergParams& p, std::size_t distance) {
  if (distance == 0 || distance > p.interaction_range) return 0.0;
  return std::pow(p.blockade_radius, 6) / std::pow(static_cast<double>(distance), 6);
}

}  // namespace

double interaction_coefficient(const RydbergParams& params, std::size_t i, std::size_t j) {
  if (i == j) throw std::invalid_argument("interaction_coefficient: i and j must differ");
  if (i < 1 || j < 1 || i > params.n_sites || j > params.n_sites) {
    throw std::out_of_range("interaction_coefficient: site outside the chain");
  }
  return pair_coefficient(params, i > j ? i - j : j - i);
}

Mpo build_mpo(const RydbergParams& params) {
  params.validate();
  const std::size_t range = params.interaction_range;
  const std::size_t dim = range + 2;
  const std::size_t start = 0, done = range + 1;
  const CMatrix id = CMatrix::Identity(2, 2);
  const CMatrix n = occupation();

  DenseTensor w({dim, dim, 2, 2});
  set_block(w, start, start, id);
  set_block(w, start, done, local_field(params));
  set_block(w, start, 1, n);
  for (std::size_t d = 1; d <= range; ++d) {
    if (d < range) set_block(w, d, d + 1, id);
    set_block(w, d, done, pair_coefficient(params, d) * n);
  }
  set_block(w, done, done, id);

  Mpo mpo;
  mpo.sites.assign(params.n_sites, w);
  mpo.left_boundary.assign(dim, 0.0);
  mpo.right_boundary.assign(dim, 0.0);
  mpo.left_boundary[start] = 1.0;
  mpo.right_boundary[done] = 1.0;
  return mpo;
}

CMatrix build_dense(const RydbergParams& params) {
  params.validate();
  if (params.n_sites > kMaxDenseSites) {
    throw std::invalid_argument("build_dense: n_sites above the dense limit of " +
                                std::to_string(kMaxDenseSites));
  }
  const std::size_t n = params.n_sites;
  const auto dim = static_cast<Eigen::Index>(std::size_t{1} << n);
  CMatrix h = CMatrix::Zero(dim, dim);
  auto bit = [n](Eigen::Index state, std::size_t site) {
    return static_cast<int>((state >> (n - 1 - site)) & 1);
  };
  for (Eigen::Index s = 0; s < dim; ++s) {
    double diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      diag -= params.detuning * bit(s, i);
      for (std::size_t j = i + 1; j < n; ++j) diag += pair_coefficient(params, j - i) * bit(s, i) * bit(s, j);
      h(s ^ (Eigen::Index{1} << (n - 1 - i)), s) += 0.5;
    }
    h(s, s) += diag;
  }
  return h;
}

Mpo imaginary_step_mpo(const RydbergParams& params, double tau) {
  params.validate();
  const std::size_t n = params.n_sites;
  const std::size_t memory = std::min(params.interaction_range, n - 1);
  const std::size_t states = std::size_t{1} << memory;
  const std::size_t mask = states - 1;
  const CMatrix half = hermitian_exp(local_field(params), 0.5 * tau);

  std::vector<double> coeff(memory + 1, 0.0);
  for (std::size_t d = 1; d <= memory; ++d) coeff[d] = pair_coefficient(params, d);

  DenseTensor w({states, states, 2, 2});
  for (std::size_t s = 0; s < states; ++s) {
    double field = 0.0;  // Σ_d V_d · n_{i−d}
    for (std::size_t d = 1; d <= memory; ++d) field += coeff[d] * static_cast<double>((s >> (d - 1)) & 1);
    for (std::size_t x = 0; x < 2; ++x) {
      const std::size_t next = ((s << 1) | x) & mask;
      const double weight = x == 1 ? std::exp(-tau * field) : 1.0;
      for (std::size_t o = 0; o < 2; ++o) {
        for (std::size_t i = 0; i < 2; ++i) {
          w.at({s, next, o, i}) += half(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(x)) * weight *
                                   half(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(i));
        }
      }
    }
  }

  Mpo mpo;
  mpo.sites.assign(n, w);
  mpo.left_boundary.assign(states, 0.0);
  mpo.left_boundary[0] = 1.0;
  mpo.right_boundary.assign(states, 1.0);
  return mpo;
}

CMatrix imaginary_step_dense(const RydbergParams& params, double tau) {
  const CMatrix h = build_dense(params);
  const std::size_t n = params.n_sites;
  const auto dim = h.rows();
  // Detuning goes with the single-site factor; the interactions stay diagonal.
  CMatrix single_site = h;
  Eigen::VectorXcd interaction(dim);
  for (Eigen::Index s = 0; s < dim; ++s) {
    double occ = 0.0;
    for (std::size_t i = 0; i < n; ++i) occ += static_cast<double>((s >> (n - 1 - i)) & 1);
    single_site(s, s) = -params.detuning * occ;
    interaction(s) = std::exp(-tau * (h(s, s).real() + params.detuning * occ));
  }
  const CMatrix half = hermitian_exp(single_site, 0.5 * tau);
  return half * interaction.asDiagonal() * half;
}

Mpo product_mpo(const std::vector<CMatrix>& ops) {
  Mpo mpo;
  for (const auto& op : ops) {
    DenseTensor w({1, 1, 2, 2});
    set_block(w, 0, 0, op);
    mpo.sites.push_back(std::move(w));
  }
  mpo.left_boundary = {1.0};
  mpo.right_boundary = {1.0};
  return mpo;
}

Mpo identity_mpo(std::size_t n_sites) {
  return product_mpo(std::vector<CMatrix>(n_sites, CMatrix::Identity(2, 2)));
}

Mpo pad_mpo(const Mpo& mpo, std::size_t left, std::size_t right) {
  auto pass_through = [](std::size_t w) {
    DenseTensor t({w, w, 2, 2});
    for (std::size_t a = 0; a < w; ++a) {
      t.at({a, a, 0, 0}) = 1.0;
      t.at({a, a, 1, 1}) = 1.0;
    }
    return t;
  };
  Mpo out;
  out.left_boundary = mpo.left_boundary;
  out.right_boundary = mpo.right_boundary;
  const std::size_t wl = mpo.left_boundary.size(), wr = mpo.right_boundary.size();
  for (std::size_t k = 0; k < left; ++k) out.sites.push_back(pass_through(wl));
  out.sites.insert(out.sites.end(), mpo.sites.begin(), mpo.sites.end());
  for (std::size_t k = 0; k < right; ++k) out.sites.push_back(pass_through(wr));
  return out;
}

Mpo compress_mpo(const Mpo& mpo, double rel_cutoff) {
  Mpo out;
  out.sites = mpo.closed_sites();
  out.left_boundary = {1.0};
  out.right_boundary = {1.0};
  const std::size_t n = out.sites.size();
  if (n < 2) return out;
  // Left-orthogonalize, then truncate right to left.
  for (std::size_t i = 0; i + 1 < n; ++i) {
    auto [q, r] = isometrize(out.sites[i], {0, 2, 3});  // (wl, o, i, k)
    out.sites[i] = q.permuted({0, 3, 1, 2});
    out.sites[i + 1] = contract(r, out.sites[i + 1], {{1, 0}});
  }
  for (std::size_t i = n - 1; i > 0; --i) {
    SvdResult svd = truncated_svd(out.sites[i], {0}, out.sites[i].extent(0), rel_cutoff);
    out.sites[i] = std::move(svd.right_isometry);  // (k, wr, o, i)
    DenseTensor& u = svd.left_isometry;            // (wl, k)
    const std::size_t k = svd.singular_values.size();
    for (std::size_t r = 0; r < u.extent(0); ++r) {
      for (std::size_t j = 0; j < k; ++j) u[r * k + j] *= svd.singular_values[j];
    }
    out.sites[i - 1] = contract(out.sites[i - 1], u, {{1, 0}}).permuted({0, 3, 1, 2});
  }
  return out;
}

CMatrix mpo_to_dense(const Mpo& mpo) {
  // acc: (bond, out, in) flattened as a tensor.
  DenseTensor acc({mpo.left_boundary.size(), 1, 1}, mpo.left_boundary);
  for (const auto& w : mpo.sites) {
    // (b, O, I) x (b, b', o, i) -> (O, I, b', o, i) -> (b', O, o, I, i)
    DenseTensor next = contract(acc, w, {{0, 0}}).permuted({2, 0, 3, 1, 4});
    const auto& s = next.shape();
    acc = next.reshaped({s[0], s[1] * s[2], s[3] * s[4]});
  }
  DenseTensor rb({1, mpo.right_boundary.size()}, mpo.right_boundary);
  DenseTensor closed = contract(rb, acc, {{1, 0}});
  return closed.reshaped({acc.extent(1), acc.extent(2)}).as_matrix(1);
}

}  // namespace thermo
