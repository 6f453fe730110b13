#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gagnet {

using Index = std::int64_t;
using Real = double;

template <typename Scalar>
using FlatArray = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixR = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense n-d array over a flat Eigen buffer, row-major (last dimension contiguous).
template <typename Scalar>
class TensorT {
 public:
  TensorT() = default;

  explicit TensorT(std::vector<Index> dims)
      : dims_(std::move(dims)), data_(FlatArray<Scalar>::Zero(count(dims_))) {}

  TensorT(std::vector<Index> dims, FlatArray<Scalar> values)
      : dims_(std::move(dims)), data_(std::move(values)) {
    if (data_.size() != count(dims_))
      throw std::invalid_argument("tensor: value count does not match shape");
  }

  static TensorT zeros(std::vector<Index> dims) { return TensorT(std::move(dims)); }

  static TensorT full(std::vector<Index> dims, Scalar v) {
    TensorT t(std::move(dims));
    t.data_.setConstant(v);
    return t;
  }

  static TensorT scalar(Scalar v) {
    TensorT t(std::vector<Index>{1});
    t.data_[0] = v;
    return t;
  }

  static TensorT of(std::vector<Index> dims, std::vector<Scalar> values) {
    FlatArray<Scalar> flat(static_cast<Index>(values.size()));
    for (Index i = 0; i < flat.size(); ++i) flat[i] = values[static_cast<size_t>(i)];
    return TensorT(std::move(dims), std::move(flat));
  }

  const std::vector<Index>& dims() const { return dims_; }
  int rank() const { return static_cast<int>(dims_.size()); }
  Index dim(int i) const { return dims_.at(static_cast<size_t>(i)); }
  Index numel() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  FlatArray<Scalar>& flat() { return data_; }
  const FlatArray<Scalar>& flat() const { return data_; }

  Scalar& operator[](Index i) { return data_[i]; }
  Scalar operator[](Index i) const { return data_[i]; }

  /// Multi-index access; slow path, meant for tests and small fixtures.
  Scalar& at(std::initializer_list<Index> idx) { return data_[offset(idx)]; }
  Scalar at(std::initializer_list<Index> idx) const { return data_[offset(idx)]; }

  /// Same buffer, new shape (numel must match).
  TensorT reshaped(std::vector<Index> dims) const {
    if (count(dims) != numel()) throw std::invalid_argument("tensor: reshape changes element count");
    return TensorT(std::move(dims), data_);
  }

  bool same_shape(const TensorT& o) const { return dims_ == o.dims_; }

  std::string shape_str() const {
    std::ostringstream os;
    os << '(';
    for (size_t i = 0; i < dims_.size(); ++i) os << (i ? "," : "") << dims_[i];
    os << ')';
    return os.str();
  }

  static Index count(const std::vector<Index>& dims) {
    Index n = 1;
    for (Index d : dims) {
      if (d < 0) throw std::invalid_argument("tensor: negative dimension");
      n *= d;
    }
    return n;
  }

 private:
  Index offset(std::initializer_list<Index> idx) const {
    if (idx.size() != dims_.size()) throw std::invalid_argument("tensor: index rank mismatch");
    Index off = 0;
    auto it = idx.begin();
    for (size_t i = 0; i < dims_.size(); ++i, ++it) off = off * dims_[i] + *it;
    return off;
  }

  std::vector<Index> dims_;
  FlatArray<Scalar> data_;
};

using Tensor = TensorT<Real>;

/// View a tensor's buffer as a rows x cols row-major matrix.
template <typename Scalar>
inline Eigen::Map<MatrixR<Scalar>> mat_view(TensorT<Scalar>& t, Index rows, Index cols) {
  if (rows * cols != t.numel()) throw std::invalid_argument("mat_view: size mismatch");
  return Eigen::Map<MatrixR<Scalar>>(t.data(), rows, cols);
}

template <typename Scalar>
inline Eigen::Map<const MatrixR<Scalar>> mat_view(const TensorT<Scalar>& t, Index rows, Index cols) {
  if (rows * cols != t.numel()) throw std::invalid_argument("mat_view: size mismatch");
  return Eigen::Map<const MatrixR<Scalar>>(t.data(), rows, cols);
}

}  // namespace gagnet
