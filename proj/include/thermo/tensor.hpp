#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace thermo {

using cplx = std::complex<double>;
using Shape = std::vector<std::size_t>;
using CMatrix = Eigen::MatrixXcd;
using RowMajorCMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense complex tensor with row-major storage (last axis fastest).
///
/// Axis labels are optional tags carried along for diagnostics and
/// serialization; no operation relies on them.
class DenseTensor {
 public:
  DenseTensor();
  explicit DenseTensor(Shape shape);
  DenseTensor(Shape shape, std::vector<cplx> data);

  static DenseTensor scalar(cplx value);
  static DenseTensor identity(std::size_t n);
  /// Rank-2 tensor holding a copy of `m`.
  static DenseTensor from_matrix(const CMatrix& m);

  std::size_t rank() const { return shape_.size(); }
  const Shape& shape() const { return shape_; }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }

  std::span<cplx> data() { return data_; }
  std::span<const cplx> data() const { return data_; }

  cplx& operator[](std::size_t flat) { return data_[flat]; }
  const cplx& operator[](std::size_t flat) const { return data_[flat]; }

  cplx& at(std::initializer_list<std::size_t> index);
  const cplx& at(std::initializer_list<std::size_t> index) const;
  std::size_t flat_index(std::span<const std::size_t> index) const;

  const std::vector<std::string>& labels() const { return labels_; }
  void set_labels(std::vector<std::string> labels);

  /// Same data, new shape; the entry count must agree.
  DenseTensor reshaped(Shape shape) const;
  /// Result axis k is axis perm[k] of this tensor.
  DenseTensor permuted(std::span<const std::size_t> perm) const;
  DenseTensor permuted(std::initializer_list<std::size_t> perm) const;
  DenseTensor conj() const;

  /// Matrix whose rows run over the first `row_axes` axes.
  CMatrix as_matrix(std::size_t row_axes) const;
  /// Reshapes a matrix back into a tensor of the given shape.
  static DenseTensor from_matrix(const CMatrix& m, Shape shape);

  double norm() const;
  bool is_finite() const;

  DenseTensor& operator*=(cplx factor);
  DenseTensor& operator+=(const DenseTensor& other);
  DenseTensor& operator-=(const DenseTensor& other);

 private:
  Shape shape_;
  std::vector<cplx> data_;
  std::vector<std::string> labels_;
};

DenseTensor operator*(cplx factor, DenseTensor t);
DenseTensor operator+(DenseTensor a, const DenseTensor& b);
DenseTensor operator-(DenseTensor a, const DenseTensor& b);

std::size_t shape_product(std::span<const std::size_t> shape);

using AxisPair = std::pair<std::size_t, std::size_t>;

/// Sums over the paired axes. Result axes are the unpaired axes of `a`
/// followed by the unpaired axes of `b`, each in original order.
DenseTensor contract(const DenseTensor& a, const DenseTensor& b, std::span<const AxisPair> pairs);
DenseTensor contract(const DenseTensor& a, const DenseTensor& b, std::initializer_list<AxisPair> pairs);

/// Frobenius distance ‖a − b‖ for equal shapes.
double distance(const DenseTensor& a, const DenseTensor& b);

}  // namespace thermo
