#include "ipla/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "ipla/errors.hpp"
#include "ipla/parallel.hpp"

namespace ipla {

void validate_run_config(const RunConfig& cfg, const ModelSpec& model) {
  if (cfg.n_particles < 1) throw ConfigError("n_particles must be >= 1");
  if (cfg.replicates < 1) throw ConfigError("replicates must be >= 1");
  if (!(cfg.gamma > 0.0)) throw GammaOutOfRange("gamma must be positive");
  if (cfg.n_steps >= kInitStep) throw ConfigError("n_steps exceeds the step counter range");
  if (cfg.init.theta_mean.size() != 0 && cfg.init.theta_mean.size() != model.d_theta)
    throw ConfigError("init theta mean has wrong dimension");
  if (cfg.init.x_mean.size() != 0 && cfg.init.x_mean.size() != model.d_x)
    throw ConfigError("init x mean has wrong dimension");
  if (model.analytic && model.analytic->mu && model.analytic->lipschitz_L) {
    const double window =
        std::min(1.0 / *model.analytic->lipschitz_L, 2.0 / *model.analytic->mu);
    if (cfg.gamma >= window)
      throw GammaOutOfRange("gamma outside the stability window (0, min(1/L, 2/mu))");
  }
}

std::string algorithm_name(Algorithm alg) {
  return alg == Algorithm::ipla ? "ipla" : "pgd";
}

SystemState init_state(const ModelSpec& model, const RunConfig& cfg,
                       const ChainNoise& noise) {
  SystemState s;
  s.theta = cfg.init.theta_mean.size() ? cfg.init.theta_mean : Vector::Zero(model.d_theta);
  const Vector x_mean = cfg.init.x_mean.size() ? cfg.init.x_mean : Vector::Zero(model.d_x);
  s.cloud.resize(cfg.n_particles, model.d_x);
  s.cloud.rowwise() = x_mean.transpose();
  if (cfg.init.kind == InitKind::gaussian) {
    s.theta += cfg.init.theta_scale * noise.stream(0).normals(kInitStep, model.d_theta);
    for (int i = 0; i < cfg.n_particles; ++i)
      s.cloud.row(i) += cfg.init.x_scale *
                        noise.stream(static_cast<std::uint32_t>(i) + 1)
                            .normals(kInitStep, model.d_x)
                            .transpose();
  }
  return s;
}

namespace {

// Buffers reused across the steps of one chain.
struct StepWorkspace {
  Matrix g_theta;
  Matrix g_x;
  Vector xi_theta;
  Matrix xi_cloud;
  std::vector<double> sum_buf;
};

void check_gradients_finite(const Matrix& g_theta, const Matrix& g_x, std::uint64_t step,
                            int replicate) {
  if (g_theta.allFinite() && g_x.allFinite()) return;
  for (Index i = 0; i < g_x.rows(); ++i)
    if (!g_x.row(i).allFinite() || !g_theta.row(i).allFinite())
      throw DivergedState("non-finite gradient at step " + std::to_string(step) +
                              ", particle " + std::to_string(i),
                          step, i, replicate);
  throw DivergedState("non-finite gradient at step " + std::to_string(step), step, -1,
                      replicate);
}

// Ascending-value summation: invariant under any relabeling of the
// particles, so exchangeability holds bit-for-bit.
double sorted_column_sum(const Matrix& m, Index col, std::vector<double>& buf) {
  buf.resize(static_cast<std::size_t>(m.rows()));
  for (Index i = 0; i < m.rows(); ++i) buf[static_cast<std::size_t>(i)] = m(i, col);
  std::sort(buf.begin(), buf.end());
  double sum = 0.0;
  for (double v : buf) sum += v;
  return sum;
}

// Core update; xi blocks are standard normals (already drawn or zero).
void step_inplace(const ModelSpec& model, SystemState& s, double gamma,
                  const Vector& xi_theta, const Matrix& xi_cloud, Algorithm alg,
                  StepWorkspace& ws, int replicate) {
  const Index n = s.cloud.rows();
  eval_grad_cloud(model, s.theta, s.cloud, ws.g_theta, ws.g_x);
  check_gradients_finite(ws.g_theta, ws.g_x, s.step, replicate);

  const double drift_scale = gamma / static_cast<double>(n);
  for (Index c = 0; c < model.d_theta; ++c)
    s.theta[c] -= drift_scale * sorted_column_sum(ws.g_theta, c, ws.sum_buf);
  if (alg == Algorithm::ipla)
    s.theta += std::sqrt(2.0 * gamma / static_cast<double>(n)) * xi_theta;

  s.cloud += std::sqrt(2.0 * gamma) * xi_cloud - gamma * ws.g_x;

  s.step += 1;
  s.time += gamma;
}

void draw_step_noise(const ModelSpec& model, const ChainNoise& noise, std::uint64_t step,
                     Index n_particles, StepWorkspace& ws) {
  ws.xi_theta.resize(model.d_theta);
  ws.xi_cloud.resize(n_particles, model.d_x);
  if (!noise.live) {
    ws.xi_theta.setZero();
    ws.xi_cloud.setZero();
    return;
  }
  noise.stream(0).fill_normals(step, ws.xi_theta);
  Vector row(model.d_x);
  for (Index i = 0; i < n_particles; ++i) {
    noise.stream(static_cast<std::uint32_t>(i) + 1).fill_normals(step, row);
    ws.xi_cloud.row(i) = row.transpose();
  }
}

void check_state_dims(const ModelSpec& model, const SystemState& s) {
  if (s.theta.size() != model.d_theta || s.cloud.cols() != model.d_x || s.cloud.rows() < 1)
    throw ConfigError("state dimensions do not match the model");
}

}  // namespace

SystemState step_with_noise(const ModelSpec& model, const SystemState& s, double gamma,
                            const Vector& xi_theta, const Matrix& xi_cloud, Algorithm alg) {
  check_state_dims(model, s);
  if (!(gamma > 0.0)) throw GammaOutOfRange("gamma must be positive");
  if (xi_theta.size() != model.d_theta || xi_cloud.rows() != s.cloud.rows() ||
      xi_cloud.cols() != model.d_x)
    throw ConfigError("noise block dimensions do not match the state");
  SystemState out = s;
  StepWorkspace ws;
  step_inplace(model, out, gamma, xi_theta, xi_cloud, alg, ws, 0);
  return out;
}

SystemState ipla_step(const ModelSpec& model, const SystemState& s, double gamma,
                      const ChainNoise& noise) {
  check_state_dims(model, s);
  if (!(gamma > 0.0)) throw GammaOutOfRange("gamma must be positive");
  SystemState out = s;
  StepWorkspace ws;
  draw_step_noise(model, noise, s.step, s.cloud.rows(), ws);
  step_inplace(model, out, gamma, ws.xi_theta, ws.xi_cloud, Algorithm::ipla, ws, 0);
  return out;
}

SystemState pgd_step(const ModelSpec& model, const SystemState& s, double gamma,
                     const ChainNoise& noise) {
  check_state_dims(model, s);
  if (!(gamma > 0.0)) throw GammaOutOfRange("gamma must be positive");
  SystemState out = s;
  StepWorkspace ws;
  draw_step_noise(model, noise, s.step, s.cloud.rows(), ws);
  step_inplace(model, out, gamma, ws.xi_theta, ws.xi_cloud, Algorithm::pgd, ws, 0);
  return out;
}

RescaledState rescale(const SystemState& s) {
  const Index n = s.cloud.rows();
  const Index d_x = s.cloud.cols();
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  RescaledState out;
  out.z.resize(s.theta.size() + n * d_x);
  out.z.head(s.theta.size()) = s.theta;
  for (Index i = 0; i < n; ++i)
    out.z.segment(s.theta.size() + i * d_x, d_x) = scale * s.cloud.row(i).transpose();
  return out;
}

Vector rescale_point(const Vector& theta, const Vector& x, int n_particles) {
  SystemState s;
  s.theta = theta;
  s.cloud.resize(n_particles, x.size());
  s.cloud.rowwise() = x.transpose();
  return rescale(s).z;
}

Matrix RunRecord::final_thetas() const {
  if (replicates.empty()) return Matrix();
  Matrix out(static_cast<Index>(replicates.size()), replicates.front().theta_final.size());
  for (std::size_t r = 0; r < replicates.size(); ++r)
    out.row(static_cast<Index>(r)) = replicates[r].theta_final.transpose();
  return out;
}

RunRecord run_chain(const ModelSpec& model, const RunConfig& cfg,
                    const RecorderSpec& recorder, Algorithm alg, int threads) {
  validate_model(model);
  validate_run_config(cfg, model);
  const std::uint64_t stride = recorder.stride;
  std::vector<std::uint64_t> checkpoints = recorder.explicit_steps;
  std::sort(checkpoints.begin(), checkpoints.end());

  const auto t0 = std::chrono::steady_clock::now();
  RunRecord record;
  record.algorithm = alg;
  record.config = cfg;
  record.replicates.resize(static_cast<std::size_t>(cfg.replicates));

  parallel_for(cfg.replicates, threads, [&](int r) {
    const ChainNoise noise{cfg.seed, static_cast<std::uint32_t>(r), true};
    SystemState s = init_state(model, cfg, noise);
    ReplicateResult& res = record.replicates[static_cast<std::size_t>(r)];
    res.trajectory.push_back({s.step, s.time, s.theta});

    StepWorkspace ws;
    for (std::uint64_t n = 0; n < cfg.n_steps; ++n) {
      draw_step_noise(model, noise, s.step, s.cloud.rows(), ws);
      step_inplace(model, s, cfg.gamma, ws.xi_theta, ws.xi_cloud, alg, ws, r);
      const bool on_grid = stride != 0 && s.step % stride == 0;
      if (on_grid || s.step == cfg.n_steps ||
          std::binary_search(checkpoints.begin(), checkpoints.end(), s.step))
        res.trajectory.push_back({s.step, s.time, s.theta});
    }
    if (!s.cloud.allFinite() || !s.theta.allFinite())
      throw DivergedState("non-finite state at end of run", s.step, -1, r);

    res.theta_final = s.theta;
    res.cloud_mean = s.cloud.colwise().mean().transpose();
    res.cloud_sq_radius = s.cloud.rowwise().squaredNorm().mean();
  });

  record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return record;
}

ChaosRecord coupled_chaos_run(const GaussianHierarchicalParams& p, const RunConfig& cfg,
                              int threads, bool live_noise) {
  const ModelSpec model = make_gaussian_model(p);
  validate_run_config(cfg, model);
  const Index d_x = model.d_x;
  const double inv_lat = 1.0 / (p.sigma_lat * p.sigma_lat);

  // Mean-field skeleton starts at the law of the initial condition.
  const double m0 =
      cfg.init.x_mean.size() ? cfg.init.x_mean.mean() : 0.0;

  ChaosRecord record;
  record.n_particles = cfg.n_particles;
  record.sup_distance.assign(static_cast<std::size_t>(cfg.replicates), 0.0);

  parallel_for(cfg.replicates, threads, [&](int r) {
    const ChainNoise noise{cfg.seed, static_cast<std::uint32_t>(r), live_noise};
    SystemState s = init_state(model, cfg, noise);
    const double theta0_mf = s.theta[0];

    Matrix mf_cloud = s.cloud;  // coupled start
    double theta_mf = theta0_mf;
    double sup = 0.0;

    StepWorkspace ws;
    Matrix mf_g_theta, mf_g_x;
    Vector theta_mf_vec(1);
    for (std::uint64_t n = 0; n < cfg.n_steps; ++n) {
      draw_step_noise(model, noise, s.step, s.cloud.rows(), ws);

      // Mean-field reference: Euler at the same step size, exact mean in
      // the theta drift, same Brownian increments in the particles.
      const auto ref = gaussian_meanfield_reference(p, theta0_mf, m0, s.time);
      const double mf_mean = ref.second;
      theta_mf_vec[0] = theta_mf;
      eval_grad_cloud(model, theta_mf_vec, mf_cloud, mf_g_theta, mf_g_x);
      theta_mf -= cfg.gamma * inv_lat * static_cast<double>(d_x) * (theta_mf - mf_mean);
      mf_cloud -= cfg.gamma * mf_g_x;
      mf_cloud += std::sqrt(2.0 * cfg.gamma) * ws.xi_cloud;

      step_inplace(model, s, cfg.gamma, ws.xi_theta, ws.xi_cloud, Algorithm::ipla, ws, r);
      sup = std::max(sup, std::abs(s.theta[0] - theta_mf));
    }
    record.sup_distance[static_cast<std::size_t>(r)] = sup;
  });

  double mean = 0.0;
  for (double v : record.sup_distance) mean += v;
  mean /= static_cast<double>(record.sup_distance.size());
  double var = 0.0;
  for (double v : record.sup_distance) var += (v - mean) * (v - mean);
  if (record.sup_distance.size() > 1) {
    var /= static_cast<double>(record.sup_distance.size() - 1);
    record.se = std::sqrt(var / static_cast<double>(record.sup_distance.size()));
  }
  record.mean_sup_distance = mean;
  return record;
}

}  // namespace ipla
