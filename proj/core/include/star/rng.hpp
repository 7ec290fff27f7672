#pragma once

#include <cstdint>
#include <random>

namespace star {

/// A reproducible random stream identified by (seed, stream id).
///
/// Identical (seed, stream) pairs give identical sequences. Distinct stream
/// ids are decorrelated by hashing both words through a seed sequence, which
/// lets every chain or replicate own a stream derived from one master seed.
class RngStream {
 public:
  using result_type = std::mt19937_64::result_type;

  explicit RngStream(std::uint64_t seed = 0, std::uint64_t stream = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  /// A child stream whose identity depends on this stream's identity and `id`.
  RngStream split(std::uint64_t id) const;

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  /// Gamma with the given shape and *rate*.
  double gamma(double shape, double rate);
  double exponential(double rate);
  std::uint64_t poisson(double mean);
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

}  // namespace star
