#ifndef IPLA_NOISE_HPP
#define IPLA_NOISE_HPP

#include <array>
#include <cstdint>

#include "ipla/types.hpp"

namespace ipla {

namespace detail {

// Philox4x32-10 counter-based block cipher (Salmon et al. style keyed
// multiply-bumped rounds). One invocation maps a 128-bit counter and a
// 64-bit key to four independent 32-bit words.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

}  // namespace detail

/// A counter-based Gaussian noise stream. A block is addressed purely by
/// (seed, stream_id, step): no internal state, so any block can be drawn
/// in any order, from any thread, with identical results.
///
/// Counter layout per Philox call:
///   c0 = low 32 bits of step, c1 = block index within the draw,
///   c2 = low 32 bits of stream_id (source index),
///   c3 = high 32 bits of stream_id (replicate).
/// Key = the 64-bit run seed. Each call yields two N(0,1) doubles via
/// Box-Muller on 53-bit uniforms.
class NoiseStream {
 public:
  /// Silent stream: all blocks are exactly zero.
  NoiseStream() = default;

  NoiseStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_id_(stream_id), live_(true) {}

  bool live() const { return live_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// d iid standard normals for the given step counter.
  Vector normals(std::uint64_t step, Index d) const;

  /// Same draw written into a caller-owned buffer (hot path).
  void fill_normals(std::uint64_t step, Eigen::Ref<Vector> out) const;

  /// d iid uniforms on [0,1) for the given step counter.
  Vector uniforms(std::uint64_t step, Index d) const;

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_id_ = 0;
  bool live_ = false;
};

/// Stream ids pack (replicate, source): source 0 is the theta noise,
/// sources 1..N drive the particles. Disjoint across replicates.
inline std::uint64_t make_stream_id(std::uint32_t replicate, std::uint32_t source) {
  return (static_cast<std::uint64_t>(replicate) << 32) | source;
}

/// Step counter reserved for drawing the initial condition. Chains must
/// therefore run strictly fewer than 2^32 - 1 steps.
inline constexpr std::uint64_t kInitStep = 0xFFFFFFFFull;

}  // namespace ipla

#endif  // IPLA_NOISE_HPP
