#include "thermo/tto.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <stdexcept>

#include "thermo/linalg.hpp"

namespace thermo {

Lptn pad_to_power_of_two(const Lptn& state) {
  const std::size_t n = state.n_sites();
  if (n == 0) throw std::invalid_argument("pad_to_power_of_two: empty state");
  const std::size_t target = std::max<std::size_t>(2, std::bit_ceil(n));
  const std::size_t deficit = target - n;
  const std::size_t left = deficit / 2, right = deficit - left;

  DenseTensor dummy({1, 2, 1, 1});
  dummy.at({0, 0, 0, 0}) = 1.0;
  dummy.set_labels({"left", "phys", "kraus", "right"});

  Lptn out = state;
  out.sites.clear();
  out.sites.insert(out.sites.end(), left, dummy);
  out.sites.insert(out.sites.end(), state.sites.begin(), state.sites.end());
  out.sites.insert(out.sites.end(), right, dummy);
  if (state.center >= 0) out.center = state.center + static_cast<int>(left);
  out.padding.left += left;
  out.padding.right += right;
  return out;
}

namespace {

// Scales the last axis of t by s.
void scale_last_axis(DenseTensor& t, const std::vector<double>& s) {
  const std::size_t k = s.size();
  for (std::size_t r = 0; r < t.size() / k; ++r) {
    for (std::size_t j = 0; j < k; ++j) t[r * k + j] *= s[j];
  }
}

// Scales the first axis of t by s.
void scale_first_axis(DenseTensor& t, const std::vector<double>& s) {
  const std::size_t stride = t.size() / s.size();
  for (std::size_t j = 0; j < s.size(); ++j) {
    for (std::size_t c = 0; c < stride; ++c) t[j * stride + c] *= s[j];
  }
}

void canonicalize_row(std::vector<DenseTensor>& row, int center) {
  Lptn tmp;
  tmp.sites = std::move(row);
  tmp.center = center;
  move_center(tmp, 0);
  row = std::move(tmp.sites);
}

}  // namespace

std::pair<Tto, ConversionReport> lptn_to_tto(const Lptn& state, std::size_t m_tto, std::size_t k0,
                                             double svd_cutoff) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = state.n_sites();
  if (n < 2 || !std::has_single_bit(n)) {
    throw std::invalid_argument("lptn_to_tto: chain length must be a power of two >= 2");
  }
  if (m_tto < 1 || k0 < 1) throw std::invalid_argument("lptn_to_tto: bond limits must be >= 1");

  Tto tto;
  tto.padding = state.padding;
  tto.beta = state.beta;
  ConversionReport report;
  auto record = [&report](double w) {
    report.discarded_weights.push_back(w);
    report.norm_kept *= 1.0 - w;
  };

  std::vector<DenseTensor> row = state.sites;  // (l, down, up, r)
  int center = state.center;
  while (row.size() > 2) {
    canonicalize_row(row, center);
    const std::size_t pairs = row.size() / 2;
    std::vector<DenseTensor> nodes(pairs), next(pairs);
    std::vector<std::size_t> extents;
    for (std::size_t j = 0; j < pairs; ++j) {
      const DenseTensor t = contract(row[2 * j], row[2 * j + 1], {{3, 0}});  // (l, d1, u1, d2, u2, r)
      SvdResult lower = truncated_svd(t, {1, 3}, m_tto, svd_cutoff);
      record(lower.discarded_weight);
      nodes[j] = std::move(lower.left_isometry);  // (d1, d2, chi)
      DenseTensor w = std::move(lower.right_isometry);  // (chi, l, u1, u2, r)
      scale_first_axis(w, lower.singular_values);

      SvdResult upper = truncated_svd(w, {1, 0, 4}, m_tto, svd_cutoff);  // (l, chi, r, kappa)
      record(upper.discarded_weight);
      scale_last_axis(upper.left_isometry, upper.singular_values);
      DenseTensor y = upper.left_isometry.permuted({0, 1, 3, 2});  // (l, chi, kappa, r)
      extents.push_back(y.extent(1));

      if (j + 1 < pairs) {
        auto [q, r] = isometrize(y, {0, 1, 2});
        next[j] = std::move(q);
        row[2 * j + 2] = contract(r, row[2 * j + 2], {{1, 0}});
      } else {
        next[j] = std::move(y);
      }
    }
    tto.layers.push_back(std::move(nodes));
    report.bond_extents.push_back(std::move(extents));
    row = std::move(next);
    center = static_cast<int>(row.size()) - 1;
  }

  canonicalize_row(row, center);
  const DenseTensor t = contract(row[0], row[1], {{3, 0}});  // (1, d1, u1, d2, u2, 1)
  SvdResult top = truncated_svd(t, {1, 3}, k0, svd_cutoff);
  record(top.discarded_weight);
  scale_last_axis(top.left_isometry, top.singular_values);
  tto.root = std::move(top.left_isometry);  // (left, right, mixing)
  report.bond_extents.push_back({tto.root.extent(2)});

  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(tto), std::move(report)};
}

Tto isometrize_to_root(Tto tto) {
  for (std::size_t l = 0; l < tto.layers.size(); ++l) {
    auto& layer = tto.layers[l];
    for (std::size_t j = 0; j < layer.size(); ++j) {
      auto [q, r] = isometrize(layer[j], {0, 1});  // r: (chi', parent)
      layer[j] = std::move(q);
      DenseTensor& parent = l + 1 < tto.layers.size() ? tto.layers[l + 1][j / 2] : tto.root;
      const std::size_t slot = j % 2;
      DenseTensor merged = contract(r, parent, {{1, slot}});
      parent = slot == 0 ? std::move(merged) : merged.permuted({1, 0, 2});
    }
  }
  return tto;
}

ThermalSpectrum spectrum(const Tto& tto) {
  const CMatrix m = tto.root.as_matrix(2);
  Eigen::BDCSVD<CMatrix> svd(m);
  const Eigen::VectorXd s = svd.singularValues();
  ThermalSpectrum out;
  out.beta = tto.beta;
  out.kept_states = tto.mixing_dim();
  double total = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) total += s(i) * s(i);
  if (!(total > 0.0)) throw std::runtime_error("spectrum: root has zero norm");
  for (Eigen::Index i = 0; i < s.size(); ++i) out.probabilities.push_back(s(i) * s(i) / total);
  std::sort(out.probabilities.begin(), out.probabilities.end(), std::greater<>());
  return out;
}

namespace {

// env: (ket, w_left, w_right, bra) for a subtree's upward bond.
DenseTensor merge_env(const DenseTensor& node, const DenseTensor& e1, const DenseTensor& e2) {
  DenseTensor t = contract(e1, node, {{0, 0}});             // (w0, w1, c1', c2, p)
  t = contract(t, e2, {{1, 1}, {3, 0}});                    // (w0, c1', p, w2, c2')
  t = contract(t, node.conj(), {{1, 0}, {4, 1}});           // (w0, p, w2, p')
  return t.permuted({1, 0, 2, 3});
}

double contract_with(const Tto& tto, const Mpo& mpo) {
  const std::size_t n = tto.n_sites();
  Mpo full = mpo;
  if (mpo.n_sites() == tto.physical_sites() && mpo.n_sites() != n) {
    full = pad_mpo(mpo, tto.padding.left, tto.padding.right);
  }
  if (full.n_sites() != n) throw std::invalid_argument("tto_energy: MPO size does not match the tree");
  const auto w = full.closed_sites();
  std::vector<DenseTensor> envs;
  for (const auto& s : w) envs.push_back(s.permuted({3, 0, 1, 2}));
  for (const auto& layer : tto.layers) {
    std::vector<DenseTensor> up;
    for (std::size_t j = 0; j < layer.size(); ++j) up.push_back(merge_env(layer[j], envs[2 * j], envs[2 * j + 1]));
    envs = std::move(up);
  }
  const DenseTensor top = merge_env(tto.root, envs[0], envs[1]);  // (K, 1, 1, K')
  cplx total = 0.0;
  for (std::size_t k = 0; k < top.extent(0); ++k) total += top.at({k, 0, 0, k});
  return total.real();
}

}  // namespace

double tto_trace(const Tto& tto) { return contract_with(tto, identity_mpo(tto.n_sites())); }

double tto_energy(const Tto& tto, const Mpo& mpo) { return contract_with(tto, mpo) / tto_trace(tto); }

CMatrix tto_purification_matrix(const Tto& tto) {
  if (tto.n_sites() > kMaxDenseSites) throw std::invalid_argument("tto_purification_matrix: tree too large");
  auto merge = [](const DenseTensor& node, const DenseTensor& m1, const DenseTensor& m2) {
    DenseTensor t = contract(m1, node, {{1, 0}});  // (P1, c2, p)
    t = contract(t, m2, {{1, 1}}).permuted({0, 2, 1});  // (P1, P2, p)
    return t.reshaped({t.extent(0) * t.extent(1), t.extent(2)});
  };
  std::vector<DenseTensor> maps(tto.n_sites(), DenseTensor::identity(2));
  for (const auto& layer : tto.layers) {
    std::vector<DenseTensor> up;
    for (std::size_t j = 0; j < layer.size(); ++j) up.push_back(merge(layer[j], maps[2 * j], maps[2 * j + 1]));
    maps = std::move(up);
  }
  return merge(tto.root, maps[0], maps[1]).as_matrix(1);
}

CMatrix tto_dense_density(const Tto& tto) {
  const CMatrix x = tto_purification_matrix(tto);
  CMatrix rho = x * x.adjoint();
  return rho / rho.trace().real();
}

TopSplit top_split(const Tto& tto) {
  const std::size_t half = tto.n_sites() / 2;
  TopSplit s;
  s.left_first = 1;
  s.left_last = half - tto.padding.left;
  s.right_first = s.left_last + 1;
  s.right_last = tto.physical_sites();
  return s;
}

}  // namespace thermo
