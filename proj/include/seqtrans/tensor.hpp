#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "seqtrans/error.hpp"

namespace seqtrans {

/// Row-major activation matrix.
template <typename Real>
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Real> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, Real(0)) {}

  Real* row(std::size_t i) { return data.data() + i * cols; }
  const Real* row(std::size_t i) const { return data.data() + i * cols; }
  Real& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  Real operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

/// Parameter tensor: values plus a same-shaped gradient buffer.
template <typename Real>
struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<Real> value;
  std::vector<Real> grad;
  bool trainable = true;

  std::size_t size() const { return value.size(); }
};

inline std::size_t shape_size(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

/// Named parameter collection; indices are stable once added.
template <typename Real>
class ParamStore {
 public:
  std::size_t add(const std::string& name, std::vector<std::size_t> shape, bool trainable = true) {
    if (index_.contains(name)) throw Error("model", "duplicate parameter '" + name + "'");
    Tensor<Real> t;
    t.name = name;
    t.shape = std::move(shape);
    t.value.assign(shape_size(t.shape), Real(0));
    t.grad.assign(t.value.size(), Real(0));
    t.trainable = trainable;
    index_.emplace(name, tensors_.size());
    tensors_.push_back(std::move(t));
    return tensors_.size() - 1;
  }

  Tensor<Real>& operator[](std::size_t i) { return tensors_[i]; }
  const Tensor<Real>& operator[](std::size_t i) const { return tensors_[i]; }
  std::size_t size() const { return tensors_.size(); }

  /// Index of a named tensor, or npos.
  std::size_t find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? npos : it->second;
  }
  Tensor<Real>& at(const std::string& name) {
    std::size_t i = find(name);
    if (i == npos) throw Error("model", "no parameter named '" + name + "'");
    return tensors_[i];
  }
  const Tensor<Real>& at(const std::string& name) const {
    std::size_t i = find(name);
    if (i == npos) throw Error("model", "no parameter named '" + name + "'");
    return tensors_[i];
  }

  void zero_grad() {
    for (auto& t : tensors_) std::fill(t.grad.begin(), t.grad.end(), Real(0));
  }

  std::vector<std::vector<Real>> snapshot() const {
    std::vector<std::vector<Real>> out;
    out.reserve(tensors_.size());
    for (const auto& t : tensors_) out.push_back(t.value);
    return out;
  }
  void restore(const std::vector<std::vector<Real>>& values) {
    for (std::size_t i = 0; i < tensors_.size(); ++i) tensors_[i].value = values.at(i);
  }

  auto begin() { return tensors_.begin(); }
  auto end() { return tensors_.end(); }
  auto begin() const { return tensors_.begin(); }
  auto end() const { return tensors_.end(); }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<Tensor<Real>> tensors_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace seqtrans
