#include "star/rng.hpp"

#include "star/error.hpp"

#include <cmath>
#include <limits>

namespace star {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Input: return "input";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Parameter: return "parameter";
    case ErrorKind::Numerical: return "numerical";
    case ErrorKind::Design: return "design";
    case ErrorKind::State: return "state";
    case ErrorKind::DegenerateData: return "degenerate-data";
    case ErrorKind::TransformDegeneracy: return "transformation-degeneracy";
  }
  return "unknown";
}

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x53544152u};
  return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(make_engine(seed, stream)) {}

RngStream RngStream::split(std::uint64_t id) const {
  // splitmix64 finalizer mixes the parent stream id with the child id
  std::uint64_t z = stream_ + 0x9E3779B97F4A7C15ull * (id + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  z ^= z >> 31;
  return RngStream(seed_, z);
}

double RngStream::uniform() {
  // 53 random bits mapped to the open interval (0, 1)
  const auto bits = engine_() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(engine_);
}

double RngStream::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) {
    throw Error(ErrorKind::Parameter, "gamma draw needs shape > 0 and rate > 0");
  }
  std::gamma_distribution<double> dist(shape, 1.0 / rate);
  double x = dist(engine_);
  // Very small shapes underflow to exactly zero.
  if (x <= 0.0) x = std::numeric_limits<double>::min();
  return x;
}

double RngStream::exponential(double rate) { return -std::log(uniform()) / rate; }

std::uint64_t RngStream::poisson(double mean) {
  if (!(mean >= 0.0)) throw Error(ErrorKind::Parameter, "poisson mean must be nonnegative");
  if (mean == 0.0) return 0;
  std::poisson_distribution<std::uint64_t> dist(mean);
  return dist(engine_);
}

std::size_t RngStream::index(std::size_t n) {
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

}  // namespace star
