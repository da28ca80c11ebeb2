#pragma once

#include <cstddef>
#include <vector>

#include "thermo/tensor.hpp"

namespace thermo {

/// Rydberg chain parameters in units of the Rabi frequency and lattice spacing.
struct RydbergParams {
  std::size_t n_sites = 2;
  double blockade_radius = 1.0;  ///< R_B / a
  double detuning = 0.0;         ///< Δ / Ω
  std::size_t interaction_range = 4;

  /// Throws std::invalid_argument on a violated invariant.
  void validate() const;
};

/// Matrix product operator. Site tensors have axes
/// (left bond, right bond, physical out, physical in); the boundary vectors
/// close the outermost bonds.
struct Mpo {
  std::vector<DenseTensor> sites;
  std::vector<cplx> left_boundary;
  std::vector<cplx> right_boundary;

  std::size_t n_sites() const { return sites.size(); }
  std::size_t max_bond() const;
  /// Site tensors with the boundary vectors folded in (edge bonds of extent 1).
  std::vector<DenseTensor> closed_sites() const;
};

/// Local single-site operators in the {|g⟩, |r⟩} basis.
CMatrix pauli_x();
CMatrix occupation();

/// (R_B/a)^6 / |i − j|^6 inside the interaction range, else 0. Sites are 1-based.
double interaction_coefficient(const RydbergParams& params, std::size_t i, std::size_t j);

/// H = ½ Σ σx − Δ Σ n + Σ_{i<j} V_ij n_i n_j as a finite-automaton MPO with
/// bond dimension interaction_range + 2.
Mpo build_mpo(const RydbergParams& params);

/// Dense 2^N × 2^N Hamiltonian; site 1 is the most significant bit.
CMatrix build_dense(const RydbergParams& params);
inline constexpr std::size_t kMaxDenseSites = 12;

/// One second-order imaginary-time step e^{−τ H_1/2} e^{−τ H_int} e^{−τ H_1/2},
/// with H_1 the single-site part and H_int the diagonal interaction part.
/// The interaction factor is exact; its MPO tracks the last
/// min(range, N − 1) occupations.
Mpo imaginary_step_mpo(const RydbergParams& params, double tau);

/// Dense version of imaginary_step_mpo for oracle checks.
CMatrix imaginary_step_dense(const RydbergParams& params, double tau);

/// Single-site operators multiplied into a one-site MPO form (bond 1).
Mpo product_mpo(const std::vector<CMatrix>& ops);
Mpo identity_mpo(std::size_t n_sites);

/// Inserts identity-acting sites on both ends; the boundary vectors pass through.
Mpo pad_mpo(const Mpo& mpo, std::size_t left, std::size_t right);

/// Drops MPO bond directions whose singular values fall below rel_cutoff
/// times the largest on that bond (canonical sweep). Boundaries become scalars.
Mpo compress_mpo(const Mpo& mpo, double rel_cutoff);

/// Contracts an MPO into a dense matrix (small chains only).
CMatrix mpo_to_dense(const Mpo& mpo);

}  // namespace thermo
