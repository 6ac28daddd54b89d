#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace velgan::nn {

// Dense NCHW tensor. Plain storage + a handful of accessors; all heavy math
// happens through Eigen maps over the raw buffer.
template <typename T>
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<T> v;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_)
      : n(n_), c(c_), h(h_), w(w_),
        v(static_cast<size_t>(n_) * c_ * h_ * w_, T(0)) {}

  size_t size() const { return v.size(); }
  bool same_shape(const Tensor& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }
  std::string shape_str() const {
    return std::to_string(n) + "x" + std::to_string(c) + "x" +
           std::to_string(h) + "x" + std::to_string(w);
  }

  T* data() { return v.data(); }
  const T* data() const { return v.data(); }

  // Pointer to the (sample i, channel j) plane of h*w values.
  T* plane(int i, int j) {
    return v.data() + (static_cast<size_t>(i) * c + j) * h * w;
  }
  const T* plane(int i, int j) const {
    return v.data() + (static_cast<size_t>(i) * c + j) * h * w;
  }

  T& at(int i, int j, int y, int x) {
    return v[((static_cast<size_t>(i) * c + j) * h + y) * w + x];
  }
  T at(int i, int j, int y, int x) const {
    return v[((static_cast<size_t>(i) * c + j) * h + y) * w + x];
  }

  void zero() { std::fill(v.begin(), v.end(), T(0)); }

  void require_shape(int n_, int c_, int h_, int w_, const char* who) const {
    if (n != n_ || c != c_ || h != h_ || w != w_)
      throw std::runtime_error(std::string(who) + ": expected shape " +
                               Tensor(n_, c_, h_, w_).shape_str() + ", got " +
                               shape_str());
  }
};

// Channel-wise concatenation [a | b].
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.n != b.n || a.h != b.h || a.w != b.w)
    throw std::runtime_error("concat_channels: spatial/batch mismatch (" +
                             a.shape_str() + " vs " + b.shape_str() + ")");
  Tensor<T> out(a.n, a.c + b.c, a.h, a.w);
  const size_t plane = static_cast<size_t>(a.h) * a.w;
  for (int i = 0; i < a.n; ++i) {
    std::copy(a.plane(i, 0), a.plane(i, 0) + static_cast<size_t>(a.c) * plane,
              out.plane(i, 0));
    std::copy(b.plane(i, 0), b.plane(i, 0) + static_cast<size_t>(b.c) * plane,
              out.plane(i, a.c));
  }
  return out;
}

// Inverse of concat_channels at channel index c_first.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& x, int c_first) {
  if (c_first < 1 || c_first >= x.c)
    throw std::runtime_error("split_channels: bad split index");
  Tensor<T> a(x.n, c_first, x.h, x.w);
  Tensor<T> b(x.n, x.c - c_first, x.h, x.w);
  const size_t plane = static_cast<size_t>(x.h) * x.w;
  for (int i = 0; i < x.n; ++i) {
    std::copy(x.plane(i, 0), x.plane(i, 0) + static_cast<size_t>(c_first) * plane,
              a.plane(i, 0));
    std::copy(x.plane(i, c_first),
              x.plane(i, c_first) + static_cast<size_t>(x.c - c_first) * plane,
              b.plane(i, 0));
  }
  return {std::move(a), std::move(b)};
}

}  // namespace velgan::nn
