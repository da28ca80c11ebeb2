#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "thermo/linalg.hpp"
#include "thermo/rydberg.hpp"
#include "thermo/tensor.hpp"

namespace thermo {

/// Decoupled |g⟩ sites appended to the ends of a chain.
struct Padding {
  std::size_t left = 0;
  std::size_t right = 0;
};

/// Locally purified tensor network ρ = X X†. Site tensors have axes
/// (left bond, physical, kraus, right bond); X's column index is the
/// collection of kraus legs.
struct Lptn {
  std::vector<DenseTensor> sites;
  /// Site holding the isometry center, or -1 when no canonical form is known.
  int center = -1;
  double beta = 0.0;
  /// log of the factor divided out of X so far, i.e. X_true = e^{log_scale} X.
  double log_scale = 0.0;
  /// Summed discarded weight per evolution step.
  std::vector<double> discarded;
  Padding padding;

  std::size_t n_sites() const { return sites.size(); }
  std::size_t max_bond() const;
  std::vector<std::size_t> bond_dims() const;
};

struct EvolutionConfig {
  double dbeta_half = 0.05;  ///< imaginary step dβ/2
  std::size_t max_bond = 50;
  std::vector<double> snapshot_betas;
  /// Relative singular-value floor used by every truncation.
  double svd_cutoff = kDefaultSvdCutoff;

  void validate() const;
};

struct Snapshot {
  double beta = 0.0;
  Lptn state;
};

/// Returns the MPO of one imaginary step e^{−τH} (approximate to second order).
using StepMpoFactory = std::function<Mpo(double tau)>;

/// Kraus legs of dimension 2 tied to the physical legs by identities; ρ = 𝟙.
Lptn infinite_temperature_state(std::size_t n_sites);

/// Tr ρ = ‖X‖².
double trace(const Lptn& state);
/// Rescales X so that Tr ρ = 1, folding the factor into log_scale.
void normalize(Lptn& state);
/// QR sweeps placing the isometry center at `site`.
void move_center(Lptn& state, std::size_t site);

/// Applies an MPO to the physical legs by a zip-up sweep starting at the
/// current center's end of the chain, truncating each bond to `max_bond`.
/// Returns the summed discarded weight.
double apply_mpo(Lptn& state, const Mpo& op, std::size_t max_bond, double svd_cutoff);

/// Repeated e^{−dβ H/2} steps; the last step before each snapshot is
/// shortened so every snapshot β is hit exactly. Snapshots have Tr ρ = 1.
std::vector<Snapshot> imaginary_time_evolve(Lptn state, const StepMpoFactory& step,
                                            const EvolutionConfig& config);
std::vector<Snapshot> imaginary_time_evolve(Lptn state, const RydbergParams& params,
                                            const EvolutionConfig& config);

/// Tr(ρ O) / Tr(ρ).
double expectation_mpo(const Lptn& state, const Mpo& op);
/// Per-site Tr(ρ O_i) / Tr(ρ) for a 2×2 operator.
std::vector<double> local_expectations(const Lptn& state, const CMatrix& op);

/// X as a 2^N × (Π kraus) matrix; small chains only.
CMatrix purification_matrix(const Lptn& state);
/// Dense ρ / Tr ρ; small chains only.
CMatrix dense_density(const Lptn& state);

}  // namespace thermo
