#ifndef IPLA_SAMPLER_HPP
#define IPLA_SAMPLER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ipla/model.hpp"
#include "ipla/noise.hpp"
#include "ipla/toy_models.hpp"
#include "ipla/types.hpp"

namespace ipla {

/// Particle-system state: parameter block plus one latent row per particle.
struct SystemState {
  Vector theta;
  Matrix cloud;  // N rows of d_x
  std::uint64_t step = 0;
  double time = 0.0;
};

enum class InitKind { point, gaussian };

/// Initial law. Point mass puts theta and every particle exactly at the
/// given means; gaussian adds scale * N(0, I) per block (independent draws
/// per particle). Empty mean vectors broadcast zero.
struct InitSpec {
  InitKind kind = InitKind::point;
  Vector theta_mean;
  Vector x_mean;
  double theta_scale = 1.0;
  double x_scale = 1.0;
};

struct RunConfig {
  int n_particles = 1;
  double gamma = 0.01;
  std::uint64_t n_steps = 0;
  std::uint64_t seed = 0;
  InitSpec init;
  int replicates = 1;
};

/// gamma must be positive and, when the model carries both constants, lie
/// inside the stability window (0, min(1/L, 2/mu)). Throws GammaOutOfRange
/// or ConfigError.
void validate_run_config(const RunConfig& cfg, const ModelSpec& model);

enum class Algorithm { ipla, pgd };

std::string algorithm_name(Algorithm alg);

/// Seeded access to the noise sources of one replicate: source 0 drives the
/// theta block, sources 1..N the particles. A default-constructed ChainNoise
/// (live = false) yields zero noise everywhere, including the initial draw.
struct ChainNoise {
  std::uint64_t seed = 0;
  std::uint32_t replicate = 0;
  bool live = true;

  NoiseStream stream(std::uint32_t source) const {
    return live ? NoiseStream(seed, make_stream_id(replicate, source)) : NoiseStream();
  }
};

/// Initial state drawn at the reserved init counter of each stream.
SystemState init_state(const ModelSpec& model, const RunConfig& cfg,
                       const ChainNoise& noise);

/// One explicit Euler-Maruyama update with caller-supplied standard-normal
/// blocks (used by tests and by the coupled-noise experiments):
///   theta' = theta - (gamma/N) sum_j gradTheta U(theta, x_j)
///            + [ipla only] sqrt(2 gamma / N) xi_theta
///   x_i'   = x_i - gamma gradX U(theta, x_i) + sqrt(2 gamma) xi_i.
/// All gradients are evaluated at the pre-step state. The theta drift sum
/// runs in ascending value order per coordinate, so it is exactly invariant
/// under particle relabeling. Throws DivergedState on non-finite gradients.
SystemState step_with_noise(const ModelSpec& model, const SystemState& s, double gamma,
                            const Vector& xi_theta, const Matrix& xi_cloud, Algorithm alg);

/// The two per-step kernels with noise drawn from the replicate streams at
/// counter = s.step.
SystemState ipla_step(const ModelSpec& model, const SystemState& s, double gamma,
                      const ChainNoise& noise);
SystemState pgd_step(const ModelSpec& model, const SystemState& s, double gamma,
                     const ChainNoise& noise);

/// z = (theta, x_1 / sqrt(N), ..., x_N / sqrt(N)).
struct RescaledState {
  Vector z;
};

RescaledState rescale(const SystemState& s);

/// Rescaled coordinates of a configuration with every particle at x.
Vector rescale_point(const Vector& theta, const Vector& x, int n_particles);

struct RecorderSpec {
  std::uint64_t stride = 0;  // 0: record only step 0 and the final step
  std::vector<std::uint64_t> explicit_steps;  // extra checkpoints to record

  RecorderSpec() = default;
  explicit RecorderSpec(std::uint64_t stride_) : stride(stride_) {}
};

struct TrajectorySample {
  std::uint64_t step = 0;
  double time = 0.0;
  Vector theta;
};

struct ReplicateResult {
  std::vector<TrajectorySample> trajectory;
  Vector theta_final;
  Vector cloud_mean;
  double cloud_sq_radius = 0.0;  // mean over particles of |x_i|^2
};

struct RunRecord {
  Algorithm algorithm = Algorithm::ipla;
  RunConfig config;
  std::vector<ReplicateResult> replicates;
  double wall_seconds = 0.0;  // informational; never persisted
  std::string version = kLibraryVersion;

  Matrix final_thetas() const;  // one row per replicate
};

/// Run cfg.replicates independent chains for cfg.n_steps steps each.
/// Replicates use disjoint stream ids and may run on several threads; the
/// record is bit-identical for any thread count. Throws DivergedState with
/// the failing replicate/step on non-finite gradients.
RunRecord run_chain(const ModelSpec& model, const RunConfig& cfg,
                    const RecorderSpec& recorder, Algorithm alg, int threads = 1);

/// Propagation-of-chaos experiment on the Gaussian model: the IPLA chain and
/// an Euler-discretised mean-field reference share the per-particle Brownian
/// increments; the reference theta drift uses the closed-form mean from
/// gaussian_meanfield_reference. Records sup_n |theta_n - theta_n^MF| per
/// replicate.
struct ChaosRecord {
  int n_particles = 0;
  std::vector<double> sup_distance;  // one entry per replicate
  double mean_sup_distance = 0.0;
  double se = 0.0;  // standard error of the mean
};

ChaosRecord coupled_chaos_run(const GaussianHierarchicalParams& p, const RunConfig& cfg,
                              int threads = 1, bool live_noise = true);

}  // namespace ipla

#endif  // IPLA_SAMPLER_HPP
