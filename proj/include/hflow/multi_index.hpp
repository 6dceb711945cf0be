#pragma once

#include <array>
#include <cassert>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>

namespace hflow {

inline constexpr int kMaxDim = 3;

// Multi-index n = (n_1, ..., n_d) with d <= kMaxDim.  Value type, no heap.
class MultiIndex {
 public:
  MultiIndex() : dim_(0), v_{} {}

  explicit MultiIndex(int dim) : dim_(dim), v_{} {
    assert(dim >= 1 && dim <= kMaxDim);
  }

  MultiIndex(std::initializer_list<int> vals) : dim_(0), v_{} {
    assert(vals.size() >= 1 && vals.size() <= kMaxDim);
    for (int x : vals) v_[dim_++] = x;
  }

  static MultiIndex zeros(int dim) { return MultiIndex(dim); }

  // e_j, the unit index along `axis`.
  static MultiIndex unit(int dim, int axis) {
    MultiIndex n(dim);
    assert(axis >= 0 && axis < dim);
    n.v_[axis] = 1;
    return n;
  }

  int dim() const { return dim_; }

  // |n| = n_1 + ... + n_d
  int order() const {
    int s = 0;
    for (int j = 0; j < dim_; ++j) s += v_[j];
    return s;
  }

  int operator[](int j) const {
    assert(j >= 0 && j < dim_);
    return v_[j];
  }
  int& operator[](int j) {
    assert(j >= 0 && j < dim_);
    return v_[j];
  }

  bool operator==(const MultiIndex& o) const {
    if (dim_ != o.dim_) return false;
    for (int j = 0; j < dim_; ++j)
      if (v_[j] != o.v_[j]) return false;
    return true;
  }
  bool operator!=(const MultiIndex& o) const { return !(*this == o); }

  // Componentwise n_j <= o_j.
  bool leq(const MultiIndex& o) const {
    assert(dim_ == o.dim_);
    for (int j = 0; j < dim_; ++j)
      if (v_[j] > o.v_[j]) return false;
    return true;
  }

  bool nonnegative() const {
    for (int j = 0; j < dim_; ++j)
      if (v_[j] < 0) return false;
    return true;
  }

  MultiIndex plus(const MultiIndex& o) const {
    assert(dim_ == o.dim_);
    MultiIndex r(dim_);
    for (int j = 0; j < dim_; ++j) r.v_[j] = v_[j] + o.v_[j];
    return r;
  }

  MultiIndex minus(const MultiIndex& o) const {
    assert(dim_ == o.dim_);
    MultiIndex r(dim_);
    for (int j = 0; j < dim_; ++j) r.v_[j] = v_[j] - o.v_[j];
    return r;
  }

  MultiIndex shifted(int axis, int delta) const {
    MultiIndex r = *this;
    r.v_[axis] += delta;
    return r;
  }

  std::string to_string() const {
    std::string s = "(";
    for (int j = 0; j < dim_; ++j) {
      if (j) s += ",";
      s += std::to_string(v_[j]);
    }
    return s + ")";
  }

 private:
  int dim_;
  std::array<int, kMaxDim> v_;
};

inline std::uint64_t binomial(int n, int r) {
  if (r < 0 || r > n) return 0;
  if (r > n - r) r = n - r;
  std::uint64_t acc = 1;
  for (int i = 1; i <= r; ++i) acc = acc * static_cast<std::uint64_t>(n - r + i) / i;
  return acc;
}

// Product of per-axis binomials, C(n, r) = prod_j C(n_j, r_j).
inline std::uint64_t multi_binomial(const MultiIndex& n, const MultiIndex& r) {
  assert(n.dim() == r.dim());
  std::uint64_t acc = 1;
  for (int j = 0; j < n.dim(); ++j) acc *= binomial(n[j], r[j]);
  return acc;
}

// Row-major flattening of the tensor box {0..N}^d; axis 0 is the slowest.
inline std::size_t flat_index(const MultiIndex& n, int per_axis_max) {
  std::size_t idx = 0;
  for (int j = 0; j < n.dim(); ++j) {
    assert(n[j] >= 0 && n[j] <= per_axis_max);
    idx = idx * static_cast<std::size_t>(per_axis_max + 1) + static_cast<std::size_t>(n[j]);
  }
  return idx;
}

inline MultiIndex unflatten(std::size_t idx, int dim, int per_axis_max) {
  MultiIndex n(dim);
  const auto base = static_cast<std::size_t>(per_axis_max + 1);
  for (int j = dim - 1; j >= 0; --j) {
    n[j] = static_cast<int>(idx % base);
    idx /= base;
  }
  assert(idx == 0);
  return n;
}

inline std::size_t box_size(int dim, int per_axis_max) {
  std::size_t s = 1;
  for (int j = 0; j < dim; ++j) s *= static_cast<std::size_t>(per_axis_max + 1);
  return s;
}

// Visit every multi-index in {0..max}^d in row-major (flat) order.
template <class F>
void for_each_box(int dim, int per_axis_max, F&& fn) {
  const std::size_t total = box_size(dim, per_axis_max);
  for (std::size_t i = 0; i < total; ++i) fn(unflatten(i, dim, per_axis_max));
}

// Visit every r with 0 <= r <= k componentwise, in row-major order of r.
template <class F>
void for_each_leq(const MultiIndex& k, F&& fn) {
  const int d = k.dim();
  MultiIndex r = MultiIndex::zeros(d);
  while (true) {
    fn(r);
    int j = d - 1;
    while (j >= 0) {
      if (r[j] < k[j]) {
        ++r[j];
        break;
      }
      r[j] = 0;
      --j;
    }
    if (j < 0) return;
  }
}

// Visit every multi-index with |r| <= total order, entries unbounded otherwise.
template <class F>
void for_each_order_leq(int dim, int total, F&& fn) {
  MultiIndex cap(dim);
  for (int j = 0; j < dim; ++j) cap[j] = total;
  for_each_leq(cap, [&](const MultiIndex& r) {
    if (r.order() <= total) fn(r);
  });
}

}  // namespace hflow
