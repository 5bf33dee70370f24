#pragma once

#include <array>
#include <cstdint>

namespace cargoflow {

/// Philox4x64-10 counter-based generator block function.
/// Stateless: output is a pure function of (counter, key), which is what makes
/// Monte Carlo results independent of how work is sharded across workers.
std::array<std::uint64_t, 4> philox4x64(const std::array<std::uint64_t, 4>& counter,
                                        const std::array<std::uint64_t, 2>& key);

/// A deterministic random stream keyed by (seed, stream_id). Streams with
/// distinct ids are statistically independent; draws within a stream are
/// sequential. Every stochastic routine in the library derives its stream id
/// from a stable quantity (cycle index, filament index, path index), never
/// from execution order.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : key_{seed, stream_id} {}

  /// Raw 64-bit draw.
  std::uint64_t next_u64();

  /// Uniform on (0, 1] (safe to pass to log()).
  double uniform();

  /// Standard normal (Box-Muller; pairs cached).
  double normal();

  /// Exponential with the given rate (mean 1/rate).
  double exponential(double rate);

  /// Gamma(shape, rate) by Marsaglia-Tsang squeeze, shape < 1 handled by the
  /// boosting identity.
  double gamma(double shape, double rate);

 private:
  std::array<std::uint64_t, 2> key_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 4> buf_{};
  int buf_pos_ = 4;  // empty
  double cached_normal_ = 0;
  bool has_cached_normal_ = false;
};

}  // namespace cargoflow
