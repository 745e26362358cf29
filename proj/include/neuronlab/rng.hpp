#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace neuronlab {

/// Philox4x32-10 block function: 128-bit counter, 64-bit key.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Reserved stream tags. A generator's stream id is a 64-bit path hash built
/// from (root seed, experiment, replica, purpose); see Rng::split.
enum class Stream : std::uint64_t {
  inputs = 1,
  labels = 2,
  test_inputs = 3,
  test_labels = 4,
  init = 5,
  sgd = 6,
  teacher = 7,
  calibration = 8,
  oracle = 9,
  replica = 0x100,
  sweep_point = 0x200,
};

/// Counter-based generator. The key is the root seed; the upper half of the
/// counter is the stream id and the lower half counts 128-bit blocks, so two
/// streams never overlap and the sequence for a (seed, stream) pair does not
/// depend on how many other streams were drawn from or on thread layout.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1).
  double uniform_open();
  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  /// Child generator on a disjoint stream derived from this one's id and `tag`.
  Rng split(std::uint64_t tag) const;
  Rng split(Stream tag) const { return split(static_cast<std::uint64_t>(tag)); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

/// SplitMix64 finalizer, used to mix stream paths.
std::uint64_t mix64(std::uint64_t x);

}  // namespace neuronlab
