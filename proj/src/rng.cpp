#include "hflow/rng.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace hflow {

namespace {

constexpr std::uint32_t kPhiloxW32A = 0x9E3779B9;
constexpr std::uint32_t kPhiloxW32B = 0xBB67AE85;
constexpr std::uint32_t kPhiloxM4x32A = 0xD2511F53;
constexpr std::uint32_t kPhiloxM4x32B = 0xCD9E8D57;

inline void mul_hi_lo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(p);
  hi = static_cast<std::uint32_t>(p >> 32);
}

}  // namespace

std::array<std::uint32_t, 4> Philox4x32::block(std::array<std::uint32_t, 4> c,
                                               std::array<std::uint32_t, 2> k) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t lo0, hi0, lo1, hi1;
    mul_hi_lo(kPhiloxM4x32A, c[0], lo0, hi0);
    mul_hi_lo(kPhiloxM4x32B, c[2], lo1, hi1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kPhiloxW32A;
    k[1] += kPhiloxW32B;
  }
  return c;
}

std::uint64_t CounterRng::raw64(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed),
                                            static_cast<std::uint32_t>(seed >> 32)};
  const auto out = Philox4x32::block(ctr, key);
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

double CounterRng::uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return static_cast<double>(raw64(seed, stream, index) >> 11) * 0x1.0p-53;
}

std::array<double, 2> CounterRng::normal_pair(std::uint64_t seed, std::uint64_t stream,
                                              std::uint64_t index) {
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed),
                                            static_cast<std::uint32_t>(seed >> 32)};
  const auto out = Philox4x32::block(ctr, key);
  const std::uint64_t a = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
  const std::uint64_t b = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
  // u1 in (0, 1] keeps the logarithm finite; u2 in [0, 1).
  const double u1 = static_cast<double>((a >> 11) + 1) * 0x1.0p-53;
  const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  return {r * std::cos(angle), r * std::sin(angle)};
}

double CounterRng::normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return normal_pair(seed, stream, index)[0];
}

BrownianPath::BrownianPath(int dim, double dt, int steps, std::uint64_t seed,
                           std::uint64_t path_index)
    : dim_(dim), dt_(dt), steps_(steps), seed_(seed), path_index_(path_index) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("BrownianPath: bad dimension");
  if (dt <= 0.0) throw std::invalid_argument("BrownianPath: dt must be positive");
  if (steps < 0) throw std::invalid_argument("BrownianPath: negative step count");
  increments_.resize(static_cast<std::size_t>(steps) * dim_);
  const double scale = std::sqrt(dt);
  for (int k = 0; k < steps; ++k)
    for (int j = 0; j < dim_; ++j)
      increments_[static_cast<std::size_t>(k) * dim_ + j] =
          scale * CounterRng::normal(seed, brownian_stream(path_index),
                                     static_cast<std::uint64_t>(k) * 4 + j);
}

std::vector<double> BrownianPath::value_at(int step) const {
  assert(step >= 0 && step <= steps_);
  std::vector<double> b(static_cast<std::size_t>(dim_), 0.0);
  for (int k = 0; k < step; ++k)
    for (int j = 0; j < dim_; ++j) b[static_cast<std::size_t>(j)] += increment(k, j);
  return b;
}

BrownianPath BrownianPath::coarsened(int factor) const {
  if (factor < 1 || steps_ % factor != 0)
    throw std::invalid_argument("BrownianPath::coarsened: factor must divide the step count");
  BrownianPath out;
  out.dim_ = dim_;
  out.dt_ = dt_ * factor;
  out.steps_ = steps_ / factor;
  out.seed_ = seed_;
  out.path_index_ = path_index_;
  out.increments_.assign(static_cast<std::size_t>(out.steps_) * dim_, 0.0);
  for (int k = 0; k < steps_; ++k)
    for (int j = 0; j < dim_; ++j)
      out.increments_[static_cast<std::size_t>(k / factor) * dim_ + j] += increment(k, j);
  return out;
}

}  // namespace hflow
