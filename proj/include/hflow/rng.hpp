#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace hflow {

// Philox4x32-10 block cipher (Salmon et al., SC 2011).  Counter-based: every
// draw is a pure function of (seed, stream, index), so parallel consumers
// never share mutable state and any draw can be replayed in isolation.
struct Philox4x32 {
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter,
                                            std::array<std::uint32_t, 2> key);
};

// Stateless draws addressed by (seed, stream, index).  Streams are cheap;
// distinct consumers carve disjoint stream spaces via the tag helpers below
// so equal seeds never alias across unrelated uses.
class CounterRng {
 public:
  static std::uint64_t raw64(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);
  static double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);  // [0,1)
  // Box-Muller pair from one block's two 64-bit halves.
  static std::array<double, 2> normal_pair(std::uint64_t seed, std::uint64_t stream,
                                           std::uint64_t index);
  static double normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);
};

// Disjoint stream namespaces for the library's RNG consumers.
inline std::uint64_t brownian_stream(std::uint64_t path_index) {
  return (std::uint64_t{1} << 56) | path_index;
}
inline std::uint64_t sampler_stream(std::uint64_t sample_index) {
  return (std::uint64_t{2} << 56) | sample_index;
}

// A d-dimensional Brownian path on a uniform grid, reproducible from
// (seed, path_index) alone.  Increment (k, j) ~ N(0, dt), independent across
// steps, axes and path indices.
class BrownianPath {
 public:
  BrownianPath(int dim, double dt, int steps, std::uint64_t seed, std::uint64_t path_index);

  int dim() const { return dim_; }
  double dt() const { return dt_; }
  int steps() const { return steps_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t path_index() const { return path_index_; }

  double increment(int step, int axis) const {
    return increments_[static_cast<std::size_t>(step) * dim_ + axis];
  }
  std::span<const double> step_increments(int step) const {
    return {increments_.data() + static_cast<std::size_t>(step) * dim_,
            static_cast<std::size_t>(dim_)};
  }

  // B at t_k = k dt (partial sum of increments before k).
  std::vector<double> value_at(int step) const;

  // Same Brownian motion on a grid coarser by `factor` (must divide steps):
  // increments are consecutive-group sums, for strong-order refinement tests.
  BrownianPath coarsened(int factor) const;

 private:
  BrownianPath() = default;
  int dim_ = 0;
  double dt_ = 0.0;
  int steps_ = 0;
  std::uint64_t seed_ = 0;
  std::uint64_t path_index_ = 0;
  std::vector<double> increments_;
};

}  // namespace hflow
