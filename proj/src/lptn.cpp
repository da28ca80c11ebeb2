#include "thermo/lptn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace thermo {

std::size_t Lptn::max_bond() const {
  std::size_t m = 1;
  for (const auto& s : sites) m = std::max({m, s.extent(0), s.extent(3)});
  return m;
}

std::vector<std::size_t> Lptn::bond_dims() const {
  std::vector<std::size_t> dims;
  for (std::size_t i = 0; i + 1 < sites.size(); ++i) dims.push_back(sites[i].extent(3));
  return dims;
}

void EvolutionConfig::validate() const {
  if (!(dbeta_half > 0.0) || !std::isfinite(dbeta_half)) {
    throw std::invalid_argument("EvolutionConfig: dbeta_half must be positive");
  }
  if (max_bond < 1) throw std::invalid_argument("EvolutionConfig: max_bond must be >= 1");
  if (!(svd_cutoff >= 0.0 && svd_cutoff < 1.0)) {
    throw std::invalid_argument("EvolutionConfig: svd_cutoff must lie in [0, 1)");
  }
  for (std::size_t i = 0; i < snapshot_betas.size(); ++i) {
    if (!(snapshot_betas[i] >= 0.0) || !std::isfinite(snapshot_betas[i])) {
      throw std::invalid_argument("EvolutionConfig: snapshot betas must be finite and non-negative");
    }
    if (i > 0 && snapshot_betas[i] < snapshot_betas[i - 1]) {
      throw std::invalid_argument("EvolutionConfig: snapshot betas must be ascending");
    }
  }
}

Lptn infinite_temperature_state(std::size_t n_sites) {
  if (n_sites < 1) throw std::invalid_argument("infinite_temperature_state: n_sites must be >= 1");
  DenseTensor site({1, 2, 2, 1});
  site.at({0, 0, 0, 0}) = 1.0;
  site.at({0, 1, 1, 0}) = 1.0;
  site.set_labels({"left", "phys", "kraus", "right"});
  Lptn state;
  state.sites.assign(n_sites, site);
  state.center = -1;
  return state;
}

namespace {

// (a, a') -> Σ E[a,a'] A[a,p,k,b] conj(A[a',p,k,b'])
DenseTensor grow_left(const DenseTensor& env, const DenseTensor& a) {
  DenseTensor t = contract(env, a, {{0, 0}});           // (a', p, k, b)
  return contract(t, a.conj(), {{0, 0}, {1, 1}, {2, 2}});  // (b, b')
}

DenseTensor grow_right(const DenseTensor& env, const DenseTensor& a) {
  DenseTensor t = contract(a, env, {{3, 0}});           // (a, p, k, b')
  return contract(t, a.conj(), {{1, 1}, {2, 2}, {3, 3}});  // (a, a')
}

void shift_center_right(Lptn& s, std::size_t i) {
  auto [q, r] = isometrize(s.sites[i], {0, 1, 2});
  s.sites[i] = std::move(q);
  s.sites[i + 1] = contract(r, s.sites[i + 1], {{1, 0}});
}

void shift_center_left(Lptn& s, std::size_t i) {
  auto [q, r] = isometrize(s.sites[i], {1, 2, 3});
  s.sites[i] = q.permuted({3, 0, 1, 2});
  s.sites[i - 1] = contract(s.sites[i - 1], r, {{3, 1}});
}

double center_norm(const Lptn& s) { return s.sites[static_cast<std::size_t>(s.center)].norm(); }

}  // namespace

double trace(const Lptn& state) {
  if (state.center >= 0) {
    const double n = center_norm(state);
    return n * n;
  }
  DenseTensor env({1, 1}, {1.0});
  for (const auto& a : state.sites) env = grow_left(env, a);
  return env[0].real();
}

void normalize(Lptn& state) {
  const double tr = trace(state);
  if (!(tr > 0.0) || !std::isfinite(tr)) throw std::runtime_error("normalize: trace is not positive and finite");
  const double factor = std::sqrt(tr);
  const std::size_t target = state.center >= 0 ? static_cast<std::size_t>(state.center) : 0;
  state.sites[target] *= 1.0 / factor;
  state.log_scale += std::log(factor);
}

void move_center(Lptn& state, std::size_t site) {
  const std::size_t n = state.n_sites();
  if (site >= n) throw std::out_of_range("move_center: site outside the chain");
  if (state.center < 0) {
    for (std::size_t i = 0; i < site; ++i) shift_center_right(state, i);
    for (std::size_t i = n - 1; i > site; --i) shift_center_left(state, i);
  } else {
    auto c = static_cast<std::size_t>(state.center);
    for (; c < site; ++c) shift_center_right(state, c);
    for (; c > site; --c) shift_center_left(state, c);
  }
  state.center = static_cast<int>(site);
}

double apply_mpo(Lptn& state, const Mpo& op, std::size_t max_bond, double svd_cutoff) {
  const std::size_t n = state.n_sites();
  if (op.n_sites() != n) throw std::invalid_argument("apply_mpo: site count mismatch");
  const auto w = op.closed_sites();
  if (state.center != 0 && state.center != static_cast<int>(n) - 1) move_center(state, 0);
  double discarded = 0.0;

  if (state.center == 0) {
    DenseTensor carry({1, 1, 1}, {1.0});  // (new, mpo, old)
    for (std::size_t i = 0; i < n; ++i) {
      DenseTensor t = contract(carry, state.sites[i], {{2, 0}});  // (new, wl, p, k, old_r)
      t = contract(t, w[i], {{1, 0}, {2, 3}});                     // (new, k, old_r, wr, o)
      if (i + 1 < n) {
        SvdResult svd = truncated_svd(t, {0, 4, 1}, max_bond, svd_cutoff);
        discarded += svd.discarded_weight;
        state.sites[i] = std::move(svd.left_isometry);
        DenseTensor& right = svd.right_isometry;  // (chi, old_r, wr)
        const std::size_t stride = right.size() / svd.singular_values.size();
        for (std::size_t k = 0; k < svd.singular_values.size(); ++k) {
          for (std::size_t j = 0; j < stride; ++j) right[k * stride + j] *= svd.singular_values[k];
        }
        carry = right.permuted({0, 2, 1});
      } else {
        const std::size_t dn = t.extent(0), k = t.extent(1);
        state.sites[i] = t.permuted({0, 4, 1, 2, 3}).reshaped({dn, 2, k, 1});
      }
    }
    state.center = static_cast<int>(n) - 1;
  } else {
    DenseTensor carry({1, 1, 1}, {1.0});  // (old, mpo, new)
    for (std::size_t i = n; i-- > 0;) {
      DenseTensor t = contract(state.sites[i], carry, {{3, 0}});  // (old_l, p, k, wr, new)
      t = contract(w[i], t, {{1, 3}, {3, 1}});                     // (wl, o, old_l, k, new)
      if (i > 0) {
        SvdResult svd = truncated_svd(t, {2, 0}, max_bond, svd_cutoff);
        discarded += svd.discarded_weight;
        state.sites[i] = std::move(svd.right_isometry);  // (chi, o, k, new)
        DenseTensor& left = svd.left_isometry;            // (old_l, wl, chi)
        const std::size_t chi = svd.singular_values.size();
        for (std::size_t r = 0; r < left.size() / chi; ++r) {
          for (std::size_t k = 0; k < chi; ++k) left[r * chi + k] *= svd.singular_values[k];
        }
        carry = std::move(left);
      } else {
        const std::size_t k = t.extent(3), dn = t.extent(4);
        state.sites[i] = t.permuted({2, 1, 3, 4, 0}).reshaped({1, 2, k, dn});
      }
    }
    state.center = 0;
  }
  for (auto& s : state.sites) {
    if (!s.is_finite()) throw std::runtime_error("apply_mpo: non-finite tensor produced");
  }
  return discarded;
}

std::vector<Snapshot> imaginary_time_evolve(Lptn state, const RydbergParams& params,
                                            const EvolutionConfig& config) {
  if (params.n_sites != state.n_sites()) throw std::invalid_argument("imaginary_time_evolve: site count mismatch");
  return imaginary_time_evolve(std::move(state), [&params](double tau) { return compress_mpo(imaginary_step_mpo(params, tau), 1e-14); },
                               config);
}

std::vector<Snapshot> imaginary_time_evolve(Lptn state, const StepMpoFactory& step,
                                            const EvolutionConfig& config) {
  config.validate();
  if (state.sites.empty()) throw std::invalid_argument("imaginary_time_evolve: empty state");
  std::vector<Snapshot> out;
  if (config.snapshot_betas.empty()) return out;
  if (config.snapshot_betas.front() < state.beta - 1e-12) {
    throw std::invalid_argument("imaginary_time_evolve: snapshot beta below the state's beta");
  }
  const int last = static_cast<int>(state.n_sites()) - 1;
  if (state.center != 0 && state.center != last) move_center(state, 0);
  normalize(state);

  const double full_tau = config.dbeta_half;
  const Mpo full_step = step(full_tau);
  for (double target : config.snapshot_betas) {
    const double eps = 1e-12 * std::max(1.0, target);
    while (target - state.beta > eps) {
      const double dbeta = std::min(2.0 * full_tau, target - state.beta);
      const double tau = 0.5 * dbeta;
      const double w = tau == full_tau ? apply_mpo(state, full_step, config.max_bond, config.svd_cutoff)
                                       : apply_mpo(state, step(tau), config.max_bond, config.svd_cutoff);
      state.discarded.push_back(w);
      normalize(state);
      state.beta += dbeta;
    }
    state.beta = std::max(state.beta, target);
    out.push_back({target, state});
    out.back().state.beta = target;
  }
  return out;
}

double expectation_mpo(const Lptn& state, const Mpo& op) {
  if (op.n_sites() != state.n_sites()) throw std::invalid_argument("expectation_mpo: site count mismatch");
  const auto w = op.closed_sites();
  DenseTensor env({1, 1, 1}, {1.0});  // (ket, mpo, bra)
  DenseTensor norm_env({1, 1}, {1.0});
  for (std::size_t i = 0; i < state.n_sites(); ++i) {
    const auto& a = state.sites[i];
    DenseTensor t = contract(env, a, {{0, 0}});           // (w, bra, p, k, b)
    t = contract(t, w[i], {{0, 0}, {2, 3}});              // (bra, k, b, w', o)
    env = contract(t, a.conj(), {{0, 0}, {4, 1}, {1, 2}}); // (b, w', b')
    norm_env = grow_left(norm_env, a);
  }
  return env[0].real() / norm_env[0].real();
}

std::vector<double> local_expectations(const Lptn& state, const CMatrix& op) {
  if (op.rows() != 2 || op.cols() != 2) throw std::invalid_argument("local_expectations: 2x2 operator required");
  const std::size_t n = state.n_sites();
  std::vector<DenseTensor> left(n + 1), right(n + 1);
  left[0] = DenseTensor({1, 1}, {1.0});
  for (std::size_t i = 0; i < n; ++i) left[i + 1] = grow_left(left[i], state.sites[i]);
  right[n] = DenseTensor({1, 1}, {1.0});
  for (std::size_t i = n; i-- > 0;) right[i] = grow_right(right[i + 1], state.sites[i]);
  const double norm = left[n][0].real();
  const DenseTensor o = DenseTensor::from_matrix(op);

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = state.sites[i];
    DenseTensor t = contract(left[i], a, {{0, 0}});     // (a', p, k, b)
    t = contract(t, o, {{1, 1}});                      // (a', k, b, p_out)
    t = contract(t, right[i + 1], {{2, 0}});           // (a', k, p_out, b')
    const DenseTensor v = contract(t, a.conj(), {{0, 0}, {2, 1}, {1, 2}, {3, 3}});
    out[i] = v[0].real() / norm;
  }
  return out;
}

CMatrix purification_matrix(const Lptn& state) {
  DenseTensor acc({1, 1, 1}, {1.0});  // (phys, kraus, bond)
  for (const auto& a : state.sites) {
    DenseTensor t = contract(acc, a, {{2, 0}}).permuted({0, 2, 1, 3, 4});  // (P, p, K, k, b)
    const auto& s = t.shape();
    acc = t.reshaped({s[0] * s[1], s[2] * s[3], s[4]});
  }
  const std::size_t rows = acc.extent(0), cols = acc.extent(1) * acc.extent(2);
  return acc.reshaped({rows, cols}).as_matrix(1);
}

CMatrix dense_density(const Lptn& state) {
  const CMatrix x = purification_matrix(state);
  CMatrix rho = x * x.adjoint();
  return rho / rho.trace().real();
}

}  // namespace thermo
