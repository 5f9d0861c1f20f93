// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "groklab/common.hpp"
#include "groklab/rng.hpp"

namespace groklab {

/// Dense row-major tensor. Up to 3 axes in practice; most ops in this
/// project treat tensors as matrices (rows x cols) or vectors.
template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  Tensor() = default;
  Tensor(std::vector<int> s, std::vector<T> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (numel_of(shape) != static_cast<int64_t>(data.size())) {
      throw ShapeError("tensor data length does not match shape");
    }
  }

  static int64_t numel_of(const std::vector<int>& s) {
    int64_t n = 1;
    for (int d : s) {
      if (d <= 0) throw ShapeError("non-positive tensor dimension");
      n *= d;
    }
    return n;
  }

  static Tensor zeros(std::vector<int> s) {
    Tensor t;
    int64_t n = numel_of(s);
    t.shape = std::move(s);
    t.data.assign(static_cast<size_t>(n), T(0));
    return t;
  }

  static Tensor full(std::vector<int> s, T value) {
    Tensor t = zeros(std::move(s));
    std::fill(t.data.begin(), t.data.end(), value);
    return t;
  }

  /// i.i.d. normal(0, std^2) from the given generator.
  static Tensor randn(std::vector<int> s, SplitMix64& rng, double std_dev) {
    Tensor t = zeros(std::move(s));
    for (T& v : t.data) v = static_cast<T>(rng.normal() * std_dev);
    return t;
  }

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  int ndim() const { return static_cast<int>(shape.size()); }

  int rows() const {
    if (shape.empty()) throw ShapeError("rows() on rank-0 tensor");
    return shape[0];
  }
  int cols() const {
    if (shape.size() < 2) return 1;
    int c = 1;
    for (size_t i = 1; i < shape.size(); ++i) c *= shape[i];
    return c;
  }

  T& operator()(int i, int j) { return data[static_cast<size_t>(i) * cols() + j]; }
  const T& operator()(int i, int j) const {
    return data[static_cast<size_t>(i) * cols() + j];
  }
  T& operator[](size_t i) { return data[i]; }
  const T& operator[](size_t i) const { return data[i]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (size_t i = 0; i < data.size(); ++i)
      out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

inline std::string shape_str(const std::vector<int>& s) {
  std::string out = "(";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

}  // namespace groklab
