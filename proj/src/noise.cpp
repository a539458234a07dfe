#include "ipla/noise.hpp"

#include <cmath>

namespace ipla {

namespace detail {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kBump0 = 0x9E3779B9u;
constexpr std::uint32_t kBump1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kBump0;
    key[1] += kBump1;
  }
  return ctr;
}

}  // namespace detail

namespace {

// 53-bit uniform in [0,1) from two 32-bit words.
inline double to_unit_double(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace

void NoiseStream::fill_normals(std::uint64_t step, Eigen::Ref<Vector> out) const {
  const Index d = out.size();
  if (!live_) {
    out.setZero();
    return;
  }
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_),
                                            static_cast<std::uint32_t>(seed_ >> 32)};
  const std::uint32_t c2 = static_cast<std::uint32_t>(stream_id_);
  const std::uint32_t c3 = static_cast<std::uint32_t>(stream_id_ >> 32);
  const std::uint32_t step_word = static_cast<std::uint32_t>(step);
  const double two_pi = 2.0 * M_PI;
  for (Index i = 0; i < d; i += 2) {
    const std::uint32_t block = static_cast<std::uint32_t>(i / 2);
    const auto w = detail::philox4x32({step_word, block, c2, c3}, key);
    // Box-Muller; 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - to_unit_double(w[0], w[1]);
    const double u2 = to_unit_double(w[2], w[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    out[i] = r * std::cos(two_pi * u2);
    if (i + 1 < d) out[i + 1] = r * std::sin(two_pi * u2);
  }
}

Vector NoiseStream::normals(std::uint64_t step, Index d) const {
  Vector out(d);
  fill_normals(step, out);
  return out;
}

Vector NoiseStream::uniforms(std::uint64_t step, Index d) const {
  Vector out(d);
  if (!live_) {
    out.setZero();
    return out;
  }
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_),
                                            static_cast<std::uint32_t>(seed_ >> 32)};
  const std::uint32_t c2 = static_cast<std::uint32_t>(stream_id_);
  const std::uint32_t c3 = static_cast<std::uint32_t>(stream_id_ >> 32);
  const std::uint32_t step_word = static_cast<std::uint32_t>(step);
  for (Index i = 0; i < d; i += 2) {
    const std::uint32_t block = static_cast<std::uint32_t>(i / 2);
    const auto w = detail::philox4x32({step_word, block, c2, c3}, key);
    out[i] = to_unit_double(w[0], w[1]);
    if (i + 1 < d) out[i + 1] = to_unit_double(w[2], w[3]);
  }
  return out;
}

}  // namespace ipla
