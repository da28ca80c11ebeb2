#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "thermo/lptn.hpp"
#include "thermo/rydberg.hpp"
#include "thermo/tensor.hpp"

namespace thermo {

/// Binary tree tensor operator for ρ = X X†.
///
/// layers[0] is the bottom layer; each node has axes (left child, right child,
/// parent) and the bottom nodes' children are physical legs. The root has axes
/// (left subtree, right subtree, mixing). A chain of N = 2^n sites has n − 1
/// layers below the root.
struct Tto {
  std::vector<std::vector<DenseTensor>> layers;
  DenseTensor root;
  Padding padding;
  double beta = 0.0;

  std::size_t n_sites() const { return std::size_t{2} << layers.size(); }
  std::size_t physical_sites() const { return n_sites() - padding.left - padding.right; }
  std::size_t mixing_dim() const { return root.extent(2); }
};

struct ThermalSpectrum {
  std::vector<double> probabilities;  ///< descending, summing to 1
  double beta = 0.0;
  std::size_t kept_states = 0;
};

struct ConversionReport {
  std::vector<double> discarded_weights;
  /// Π (1 − w_k) over all truncations.
  double norm_kept = 1.0;
  /// Upward bond extents per layer; the last entry holds the mixing bond.
  std::vector<std::vector<std::size_t>> bond_extents;
  double wall_seconds = 0.0;
};

/// Appends decoupled |g⟩ sites (bond and kraus extents 1) so the chain length
/// becomes the next power of two (at least 2). The deficit is split with the
/// extra site on the right.
Lptn pad_to_power_of_two(const Lptn& state);

/// Layer-by-layer conversion: contract neighbouring pairs, split off the
/// lower isometry (≤ m_tto), compress the upward legs (≤ m_tto) and recurse;
/// the final split's mixing bond is truncated to ≤ k0. Every truncation
/// happens at the isometry center. Requires a power-of-two chain.
std::pair<Tto, ConversionReport> lptn_to_tto(const Lptn& state, std::size_t m_tto, std::size_t k0,
                                             double svd_cutoff = kDefaultSvdCutoff);

/// Bottom-up QR sweep leaving every non-root node isometric toward the root.
Tto isometrize_to_root(Tto tto);

/// Squared singular values of the root across (left, right | mixing), normalized.
ThermalSpectrum spectrum(const Tto& tto);

/// Tr(ρ H) / Tr(ρ). Accepts an MPO for the physical chain (it is padded with
/// identity sites) or for the padded chain.
double tto_energy(const Tto& tto, const Mpo& mpo);

/// Tr ρ of the stored (unnormalized) tree.
double tto_trace(const Tto& tto);

/// X as a 2^N × mixing matrix over the padded chain; small trees only.
CMatrix tto_purification_matrix(const Tto& tto);
CMatrix tto_dense_density(const Tto& tto);

/// Physical 1-based site ranges on the two sides of the top split.
struct TopSplit {
  std::size_t left_first = 0, left_last = 0, right_first = 0, right_last = 0;
};
TopSplit top_split(const Tto& tto);

}  // namespace thermo
