#pragma once

#include <cstddef>
#include <vector>

#include "thermo/rydberg.hpp"
#include "thermo/tensor.hpp"

namespace thermo {

/// Exact thermal density matrix of a small chain.
struct DenseState {
  CMatrix rho;
  double temperature = 0.0;
  RydbergParams params;
  /// Eigenvalues of H (ascending) and their Boltzmann weights.
  std::vector<double> energies;
  std::vector<double> probabilities;
};

inline constexpr std::size_t kMaxOracleDim = 1024;

/// ρ = e^{−H/T}/Z via the eigendecomposition, shifted by the ground energy.
DenseState gibbs(const CMatrix& h, double temperature);
DenseState gibbs(const RydbergParams& params, double temperature);

double exact_purity(const CMatrix& rho);
double exact_energy(const CMatrix& rho, const CMatrix& h);
/// ⟨n_i⟩ for every site; site 1 is the most significant bit.
std::vector<double> exact_nz_profile(const CMatrix& rho);

/// Negativity for the cut after `cut` sites (1 ≤ cut < N).
double exact_negativity(const CMatrix& rho, std::size_t cut);

/// Two-qubit entanglement of formation from the concurrence, natural log.
double concurrence(const CMatrix& rho);
double wootters_eof(const CMatrix& rho);

}  // namespace thermo
