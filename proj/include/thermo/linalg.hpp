#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "thermo/tensor.hpp"

namespace thermo {

/// Default relative floor on s_i / s_1 below which singular values are dropped.
inline constexpr double kDefaultSvdCutoff = 1e-10;

struct SvdResult {
  DenseTensor left_isometry;   ///< (row extents..., k)
  std::vector<double> singular_values;
  DenseTensor right_isometry;  ///< (k, column extents...)
  /// Sum of squared dropped singular values over the sum of all squared ones.
  double discarded_weight = 0.0;
};

/// SVD over the bipartition (row_axes | remaining axes), keeping at most
/// `max_rank` values and only those with s_i / s_1 > rel_cutoff.
///
/// Row axes appear on the left isometry in the order given; the remaining
/// axes keep their original order on the right isometry. Singular values are
/// sorted descending with ties kept in the decomposition's index order.
SvdResult truncated_svd(const DenseTensor& t, std::span<const std::size_t> row_axes,
                        std::size_t max_rank, double rel_cutoff = kDefaultSvdCutoff);
SvdResult truncated_svd(const DenseTensor& t, std::initializer_list<std::size_t> row_axes,
                        std::size_t max_rank, double rel_cutoff = kDefaultSvdCutoff);

struct Isometrized {
  DenseTensor isometry;   ///< (isometry_axes..., k), isometric onto the new bond
  DenseTensor remainder;  ///< (k, other axes...)
};

/// QR-based split: the isometry carries `isometry_axes`, the remainder carries
/// the new bond and everything else. The remainder's leading diagonal is real
/// and non-negative.
Isometrized isometrize(const DenseTensor& t, std::span<const std::size_t> isometry_axes);
Isometrized isometrize(const DenseTensor& t, std::initializer_list<std::size_t> isometry_axes);

/// Haar-random unitary (QR of a complex Ginibre matrix with phase fix).
CMatrix haar_unitary(std::size_t dim, std::uint64_t seed);

/// U† D^alpha U from the eigendecomposition U† D U of a Haar unitary; the
/// eigenphases use the principal branch (−π, π].
CMatrix squashed_haar(std::size_t dim, double alpha, std::uint64_t seed);

/// Unitary polar factor of a square, full-rank matrix (the Frobenius-nearest unitary).
CMatrix polar_project(const CMatrix& m);

/// ‖U†U − I‖_F.
double unitarity_defect(const CMatrix& u);

/// Hermitian part (m + m†)/2; guards eigen solvers against rounding asymmetry.
CMatrix hermitian_part(const CMatrix& m);

/// exp(−tau·h) for Hermitian h via its eigendecomposition.
CMatrix hermitian_exp(const CMatrix& h, double tau);

/// Kronecker product a ⊗ b.
CMatrix kron(const CMatrix& a, const CMatrix& b);

/// Mixes two 64-bit values into a new seed (splitmix64 finalizer).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace thermo
