#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "thermo/tensor.hpp"
#include "thermo/tto.hpp"

namespace thermo {

double purity(const ThermalSpectrum& spec);
/// Rényi entropy of order q (von Neumann at q = 1), natural log.
double entropy(const ThermalSpectrum& spec, double order);

/// ρ_eff over the (left | right) bonds of the root, normalized to unit trace.
struct RootDensity {
  CMatrix matrix;
  std::size_t left_dim = 0;
  std::size_t right_dim = 0;
};
RootDensity root_density(const Tto& tto);

/// (‖ρ^{T_R}‖₁ − 1)/2 of a density matrix on a dl ⊗ dr space; the right
/// factor is the fast index.
double partial_transpose_negativity(const CMatrix& rho, std::size_t left_dim, std::size_t right_dim);
double negativity(const RootDensity& rho);
/// Negativity across the tree's top split.
double negativity(const Tto& tto);

/// Weighted pure states √p_j |ψ_j⟩ of the root as columns of a
/// (dl·dr) × k matrix, Σ p_j = 1.
struct EofRoot {
  CMatrix states;
  std::size_t left_dim = 0;
  std::size_t right_dim = 0;

  std::size_t kept() const { return static_cast<std::size_t>(states.cols()); }
};
/// Top k_keep eigenstates of the root density, renormalized.
EofRoot eof_root(const Tto& tto, std::size_t k_keep);
/// Same from an explicit density matrix on dl ⊗ dr.
EofRoot eof_root(const CMatrix& rho, std::size_t left_dim, std::size_t right_dim, std::size_t k_keep);

/// Entanglement entropy (natural log) of a normalized pure state on dl ⊗ dr.
double entanglement_entropy(const Eigen::VectorXcd& psi, std::size_t left_dim, std::size_t right_dim);

/// Σ_j q_j S_E(φ_j/‖φ_j‖) with φ_j the columns of states · v.
double eof_objective(const EofRoot& root, const CMatrix& v);

struct NelderMeadConfig {
  double alpha = 0.15;  ///< squash exponent of the initial simplex
  double reflect = 1.0;
  double expand = 2.0;
  double contract = 0.5;
  double shrink = 0.5;
  double tolerance = 1e-6;  ///< stop when max − min objective over the simplex drops below
  std::size_t max_evaluations = 5000;  ///< per restart
  std::size_t restarts = 3;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EofResult {
  double value = 0.0;
  CMatrix unitary;
  /// Best objective after every simplex iteration, across all restarts.
  std::vector<double> log;
  std::vector<std::uint64_t> seeds;
  std::size_t evaluations = 0;
  bool converged = false;
};

/// Nelder–Mead over unitaries; restart r > 0 starts from the best vertex so far.
EofResult minimize_eof(const EofRoot& root, const NelderMeadConfig& opt,
                       const std::optional<CMatrix>& initial = std::nullopt);
EofResult minimize_eof(const Tto& tto, std::size_t k_keep, const NelderMeadConfig& opt,
                       const std::optional<CMatrix>& initial = std::nullopt);

struct ScalingCurve {
  std::size_t n_sites = 0;
  std::vector<std::pair<double, double>> points;  ///< (T, value), T ascending
  std::string measure;

  void validate() const;
};

struct CollapseResult {
  std::vector<ScalingCurve> transformed;  ///< points hold (T·N^z, value − (c/6) ln N)
  double residual = 0.0;
};

/// Maximum vertical distance between piecewise-linear transformed curves on
/// each pair's overlapping abscissa range.
CollapseResult collapse(const std::vector<ScalingCurve>& curves, double c, double z);

}  // namespace thermo
