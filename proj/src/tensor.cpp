#include "thermo/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace thermo {

std::size_t shape_product(std::span<const std::size_t> shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

namespace {

void check_extents(const Shape& shape) {
  for (auto e : shape) {
    if (e == 0) throw std::invalid_argument("DenseTensor: extents must be positive");
  }
}

std::vector<std::size_t> strides_of(const Shape& shape) {
  std::vector<std::size_t> strides(shape.size(), 1);
  for (std::size_t k = shape.size(); k-- > 1;) strides[k - 1] = strides[k] * shape[k];
  return strides;
}

}  // namespace

DenseTensor::DenseTensor() : data_(1, cplx{0.0, 0.0}) {}

DenseTensor::DenseTensor(Shape shape) : shape_(std::move(shape)) {
  check_extents(shape_);
  data_.assign(shape_product(shape_), cplx{0.0, 0.0});
}

DenseTensor::DenseTensor(Shape shape, std::vector<cplx> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_extents(shape_);
  if (data_.size() != shape_product(shape_)) {
    throw std::invalid_argument("DenseTensor: entry count " + std::to_string(data_.size()) +
                                " does not match shape product " +
                                std::to_string(shape_product(shape_)));
  }
}

DenseTensor DenseTensor::scalar(cplx value) { return DenseTensor(Shape{}, {value}); }

DenseTensor DenseTensor::identity(std::size_t n) {
  DenseTensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t.data_[i * n + i] = 1.0;
  return t;
}

DenseTensor DenseTensor::from_matrix(const CMatrix& m) {
  return from_matrix(m, {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
}

DenseTensor DenseTensor::from_matrix(const CMatrix& m, Shape shape) {
  DenseTensor t(std::move(shape));
  if (t.size() != static_cast<std::size_t>(m.size())) {
    throw std::invalid_argument("DenseTensor::from_matrix: size mismatch");
  }
  Eigen::Map<RowMajorCMatrix>(t.data_.data(), m.rows(), m.cols()) = m;
  return t;
}

std::size_t DenseTensor::flat_index(std::span<const std::size_t> index) const {
  if (index.size() != shape_.size()) throw std::out_of_range("DenseTensor: index rank mismatch");
  std::size_t flat = 0;
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= shape_[k]) throw std::out_of_range("DenseTensor: index out of range");
    flat = flat * shape_[k] + index[k];
  }
  return flat;
}

cplx& DenseTensor::at(std::initializer_list<std::size_t> index) {
  return data_[flat_index(std::span<const std::size_t>(index.begin(), index.size()))];
}

const cplx& DenseTensor::at(std::initializer_list<std::size_t> index) const {
  return data_[flat_index(std::span<const std::size_t>(index.begin(), index.size()))];
}

void DenseTensor::set_labels(std::vector<std::string> labels) {
  if (!labels.empty() && labels.size() != shape_.size()) {
    throw std::invalid_argument("DenseTensor: one label per axis required");
  }
  labels_ = std::move(labels);
}

DenseTensor DenseTensor::reshaped(Shape shape) const {
  DenseTensor t;
  t.shape_ = std::move(shape);
  check_extents(t.shape_);
  if (shape_product(t.shape_) != data_.size()) {
    throw std::invalid_argument("DenseTensor::reshaped: entry count mismatch");
  }
  t.data_ = data_;
  return t;
}

DenseTensor DenseTensor::permuted(std::initializer_list<std::size_t> perm) const {
  return permuted(std::span<const std::size_t>(perm.begin(), perm.size()));
}

DenseTensor DenseTensor::permuted(std::span<const std::size_t> perm) const {
  const std::size_t r = rank();
  if (perm.size() != r) throw std::invalid_argument("DenseTensor::permuted: wrong permutation length");
  std::vector<bool> seen(r, false);
  for (auto p : perm) {
    if (p >= r || seen[p]) throw std::invalid_argument("DenseTensor::permuted: not a permutation");
    seen[p] = true;
  }
  bool trivial = true;
  for (std::size_t k = 0; k < r; ++k) trivial = trivial && perm[k] == k;

  Shape out_shape(r);
  for (std::size_t k = 0; k < r; ++k) out_shape[k] = shape_[perm[k]];
  DenseTensor out;
  out.shape_ = out_shape;
  if (!labels_.empty()) {
    out.labels_.resize(r);
    for (std::size_t k = 0; k < r; ++k) out.labels_[k] = labels_[perm[k]];
  }
  if (trivial || r < 2) {
    out.data_ = data_;
    return out;
  }
  out.data_.resize(data_.size());

  const auto in_strides = strides_of(shape_);
  std::vector<std::size_t> src_stride(r);
  for (std::size_t k = 0; k < r; ++k) src_stride[k] = in_strides[perm[k]];

  // Odometer over the output, innermost axis in a tight loop.
  const std::size_t inner = out_shape[r - 1];
  const std::size_t inner_stride = src_stride[r - 1];
  std::vector<std::size_t> idx(r, 0);
  std::size_t src = 0;
  for (std::size_t dst = 0; dst < out.data_.size(); dst += inner) {
    for (std::size_t j = 0; j < inner; ++j) out.data_[dst + j] = data_[src + j * inner_stride];
    for (std::size_t k = r - 1; k-- > 0;) {
      src += src_stride[k];
      if (++idx[k] < out_shape[k]) break;
      src -= src_stride[k] * out_shape[k];
      idx[k] = 0;
    }
  }
  return out;
}

DenseTensor DenseTensor::conj() const {
  DenseTensor t = *this;
  for (auto& x : t.data_) x = std::conj(x);
  return t;
}

CMatrix DenseTensor::as_matrix(std::size_t row_axes) const {
  if (row_axes > rank()) throw std::invalid_argument("DenseTensor::as_matrix: too many row axes");
  const auto rows = static_cast<Eigen::Index>(
      shape_product(std::span<const std::size_t>(shape_.data(), row_axes)));
  const auto cols = static_cast<Eigen::Index>(data_.size()) / rows;
  return Eigen::Map<const RowMajorCMatrix>(data_.data(), rows, cols);
}

double DenseTensor::norm() const {
  double s = 0.0;
  for (const auto& x : data_) s += std::norm(x);
  return std::sqrt(s);
}

bool DenseTensor::is_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](const cplx& x) {
    return std::isfinite(x.real()) && std::isfinite(x.imag());
  });
}

DenseTensor& DenseTensor::operator*=(cplx factor) {
  for (auto& x : data_) x *= factor;
  return *this;
}

DenseTensor& DenseTensor::operator+=(const DenseTensor& other) {
  if (other.shape_ != shape_) throw std::invalid_argument("DenseTensor: shape mismatch in +=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

DenseTensor& DenseTensor::operator-=(const DenseTensor& other) {
  if (other.shape_ != shape_) throw std::invalid_argument("DenseTensor: shape mismatch in -=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

DenseTensor operator*(cplx factor, DenseTensor t) { return t *= factor; }
DenseTensor operator+(DenseTensor a, const DenseTensor& b) { return a += b; }
DenseTensor operator-(DenseTensor a, const DenseTensor& b) { return a -= b; }

double distance(const DenseTensor& a, const DenseTensor& b) { return (a - b).norm(); }

DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     std::initializer_list<AxisPair> pairs) {
  return contract(a, b, std::span<const AxisPair>(pairs.begin(), pairs.size()));
}

DenseTensor contract(const DenseTensor& a, const DenseTensor& b, std::span<const AxisPair> pairs) {
  std::vector<bool> a_paired(a.rank(), false), b_paired(b.rank(), false);
  for (const auto& [ia, ib] : pairs) {
    if (ia >= a.rank() || ib >= b.rank()) throw std::out_of_range("contract: axis index out of range");
    if (a_paired[ia] || b_paired[ib]) throw std::invalid_argument("contract: axis paired twice");
    if (a.extent(ia) != b.extent(ib)) {
      throw std::invalid_argument("contract: extent mismatch (" + std::to_string(a.extent(ia)) +
                                  " vs " + std::to_string(b.extent(ib)) + ")");
    }
    a_paired[ia] = b_paired[ib] = true;
  }

  std::vector<std::size_t> perm_a, perm_b;
  Shape out_shape;
  for (std::size_t k = 0; k < a.rank(); ++k) {
    if (!a_paired[k]) {
      perm_a.push_back(k);
      out_shape.push_back(a.extent(k));
    }
  }
  const std::size_t a_free = perm_a.size();
  for (const auto& p : pairs) perm_a.push_back(p.first);
  for (const auto& p : pairs) perm_b.push_back(p.second);
  for (std::size_t k = 0; k < b.rank(); ++k) {
    if (!b_paired[k]) {
      perm_b.push_back(k);
      out_shape.push_back(b.extent(k));
    }
  }

  const DenseTensor ap = a.permuted(perm_a);
  const DenseTensor bp = b.permuted(perm_b);
  const auto m = static_cast<Eigen::Index>(
      shape_product(std::span<const std::size_t>(ap.shape().data(), a_free)));
  const auto kdim = static_cast<Eigen::Index>(ap.size()) / m;
  const auto n = static_cast<Eigen::Index>(bp.size()) / kdim;

  DenseTensor out(out_shape);
  Eigen::Map<RowMajorCMatrix> c(out.data().data(), m, n);
  c.noalias() = Eigen::Map<const RowMajorCMatrix>(ap.data().data(), m, kdim) *
                Eigen::Map<const RowMajorCMatrix>(bp.data().data(), kdim, n);
  return out;
}

}  // namespace thermo
