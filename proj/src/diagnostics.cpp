#include "ipla/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "ipla/errors.hpp"
#include "ipla/parallel.hpp"

namespace ipla {

double w2_to_dirac(const EmpiricalLaw& law, const Vector& point) {
  if (law.samples.rows() == 0) throw EmptySample("empirical law has no samples");
  if (law.samples.cols() != point.size())
    throw SizeMismatch("law dimension does not match the point");
  return std::sqrt((law.samples.rowwise() - point.transpose()).rowwise().squaredNorm().mean());
}

double w2_1d(const EmpiricalLaw& a, const EmpiricalLaw& b) {
  if (a.samples.rows() == 0 || b.samples.rows() == 0)
    throw EmptySample("empirical law has no samples");
  if (a.samples.cols() != 1 || b.samples.cols() != 1)
    throw SizeMismatch("w2_1d requires one-dimensional laws");
  if (a.samples.rows() != b.samples.rows())
    throw SizeMismatch("w2_1d requires equal sample counts");
  std::vector<double> xs(a.samples.col(0).data(), a.samples.col(0).data() + a.samples.rows());
  std::vector<double> ys(b.samples.col(0).data(), b.samples.col(0).data() + b.samples.rows());
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double d = xs[i] - ys[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(xs.size()));
}

BoundTerms error_bound(const BoundInputs& b) {
  if (b.mu <= 0.0) throw DomainError("bound requires mu > 0");
  if (b.d_theta <= 0 || b.d_x <= 0) throw DomainError("bound requires positive dimensions");
  if (b.n_particles <= 0) throw DomainError("bound requires a positive particle count");
  if (b.z0_dist < 0.0) throw DomainError("bound requires z0_dist >= 0");
  if (!(b.gamma > 0.0)) throw GammaOutOfRange("gamma must be positive");
  double window = 2.0 / b.mu;
  if (b.lipschitz_L) window = std::min(window, 1.0 / *b.lipschitz_L);
  if (b.gamma >= window)
    throw GammaOutOfRange("gamma outside the stability window (0, min(1/L, 2/mu))");

  const double n_particles = static_cast<double>(b.n_particles);
  const double d_theta = static_cast<double>(b.d_theta);
  const double d_x = static_cast<double>(b.d_x);

  BoundTerms out;
  out.concentration = std::sqrt(2.0 * d_theta / (n_particles * b.mu));
  out.ergodic = std::exp(-b.mu * static_cast<double>(b.n_steps) * b.gamma) *
                (b.z0_dist + std::sqrt((d_x * n_particles + d_theta) / (n_particles * b.mu)));
  if (b.c_disc) {
    out.has_discretization = true;
    out.discretization =
        *b.c_disc * (1.0 + std::sqrt(d_theta / n_particles + d_x)) * std::sqrt(b.gamma);
  }
  out.total = out.concentration + out.ergodic + out.discretization;
  return out;
}

namespace {

RateFit ols_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (syy <= 0.0) {
    fit.r2 = 1.0;  // constant response: the flat line fits exactly
  } else {
    double ss_res = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double resid = ys[i] - (fit.intercept + fit.slope * xs[i]);
      ss_res += resid * resid;
    }
    fit.r2 = 1.0 - ss_res / syy;
  }
  return fit;
}

void check_fit_points(const std::vector<double>& xs) {
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = i + 1; j < xs.size(); ++j)
      if (xs[i] == xs[j]) throw DomainError("rate fit needs distinct scales");
}

}  // namespace

RateFit fit_rate(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw DomainError("rate fit needs at least 3 points");
  std::vector<double> xs, ys;
  xs.reserve(points.size());
  ys.reserve(points.size());
  for (const auto& [scale, error] : points) {
    if (!(scale > 0.0) || !(error > 0.0))
      throw DomainError("rate fit needs positive scales and errors");
    xs.push_back(std::log(scale));
    ys.push_back(std::log(error));
  }
  check_fit_points(xs);
  return ols_fit(xs, ys);
}

RateFit fit_semilog(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw DomainError("rate fit needs at least 3 points");
  std::vector<double> xs, ys;
  xs.reserve(points.size());
  ys.reserve(points.size());
  for (const auto& [t, error] : points) {
    if (!(error > 0.0)) throw DomainError("rate fit needs positive errors");
    xs.push_back(t);
    ys.push_back(std::log(error));
  }
  check_fit_points(xs);
  return ols_fit(xs, ys);
}

RmseEstimate rmse_from_squares(const std::vector<double>& squared_distances) {
  if (squared_distances.empty()) throw EmptySample("no squared distances");
  const double m = static_cast<double>(squared_distances.size());
  double mean = 0.0;
  for (double v : squared_distances) mean += v;
  mean /= m;
  RmseEstimate est;
  est.value = std::sqrt(mean);
  if (squared_distances.size() > 1 && mean > 0.0) {
    double var = 0.0;
    for (double v : squared_distances) var += (v - mean) * (v - mean);
    var /= (m - 1.0);
    est.se = std::sqrt(var / m) / (2.0 * est.value);
  }
  return est;
}

RmseEstimate rmse_to_point(const Matrix& samples, const Vector& point) {
  if (samples.rows() == 0) throw EmptySample("no samples");
  std::vector<double> sq(static_cast<std::size_t>(samples.rows()));
  for (Index i = 0; i < samples.rows(); ++i)
    sq[static_cast<std::size_t>(i)] = (samples.row(i).transpose() - point).squaredNorm();
  return rmse_from_squares(sq);
}

DiscretizationCalibration calibrate_discretization(const ModelSpec& model,
                                                   const std::vector<RunConfig>& cfg_grid,
                                                   double reference_gamma, int threads,
                                                   bool live_noise) {
  if (cfg_grid.empty()) throw ConfigError("calibration needs a non-empty gamma grid");
  if (!(reference_gamma > 0.0)) throw GammaOutOfRange("reference gamma must be positive");
  validate_model(model);

  const RunConfig& head = cfg_grid.front();
  const double horizon = head.gamma * static_cast<double>(head.n_steps);
  for (const RunConfig& cfg : cfg_grid) {
    validate_run_config(cfg, model);
    if (cfg.n_particles != head.n_particles || cfg.seed != head.seed ||
        cfg.replicates != head.replicates)
      throw ConfigError("calibration grid must share N, seed and replicate count");
    const double h = cfg.gamma * static_cast<double>(cfg.n_steps);
    if (std::abs(h - horizon) > 1e-9 * std::max(1.0, horizon))
      throw ConfigError("calibration grid must share the horizon n_steps * gamma");
    const double ratio = cfg.gamma / reference_gamma;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio || ratio < 2.0)
      throw ConfigError("every grid gamma must be an integer multiple (>= 2) of the reference gamma");
  }

  const auto n_fine = static_cast<std::uint64_t>(std::llround(horizon / reference_gamma));

  // Fine-resolution endpoint per replicate, shared by every grid point.
  RunConfig ref_cfg = head;
  ref_cfg.gamma = reference_gamma;
  ref_cfg.n_steps = n_fine;
  validate_run_config(ref_cfg, model);

  const int n_rep = head.replicates;
  Matrix ref_endpoints(n_rep, model.d_theta);
  parallel_for(n_rep, threads, [&](int r) {
    const ChainNoise noise{head.seed, static_cast<std::uint32_t>(r), live_noise};
    SystemState s = init_state(model, ref_cfg, noise);
    for (std::uint64_t n = 0; n < n_fine; ++n)
      s = ipla_step(model, s, reference_gamma, noise);
    ref_endpoints.row(r) = s.theta.transpose();
  });

  DiscretizationCalibration out;
  const double dim_factor = 1.0 + std::sqrt(static_cast<double>(model.d_theta) /
                                                static_cast<double>(head.n_particles) +
                                            static_cast<double>(model.d_x));

  for (const RunConfig& cfg : cfg_grid) {
    const auto stride = static_cast<std::uint64_t>(std::llround(cfg.gamma / reference_gamma));
    const double agg_scale = 1.0 / std::sqrt(static_cast<double>(stride));
    std::vector<double> sq(static_cast<std::size_t>(n_rep));

    parallel_for(n_rep, threads, [&](int r) {
      const ChainNoise noise{cfg.seed, static_cast<std::uint32_t>(r), live_noise};
      SystemState s = init_state(model, cfg, noise);
      Vector xi_theta(model.d_theta), fine_theta(model.d_theta), fine_row(model.d_x);
      Matrix xi_cloud(cfg.n_particles, model.d_x);
      for (std::uint64_t n = 0; n < cfg.n_steps; ++n) {
        // Coarse increment = sum of the underlying fine Brownian increments
        // over this window, expressed as a standard normal (divide by
        // sqrt(stride)).
        xi_theta.setZero();
        xi_cloud.setZero();
        if (live_noise) {
          for (std::uint64_t k = 0; k < stride; ++k) {
            const std::uint64_t fine_step = n * stride + k;
            noise.stream(0).fill_normals(fine_step, fine_theta);
            xi_theta += fine_theta;
            for (Index i = 0; i < cfg.n_particles; ++i) {
              noise.stream(static_cast<std::uint32_t>(i) + 1).fill_normals(fine_step, fine_row);
              xi_cloud.row(i) += fine_row.transpose();
            }
          }
          xi_theta *= agg_scale;
          xi_cloud *= agg_scale;
        }
        s = step_with_noise(model, s, cfg.gamma, xi_theta, xi_cloud, Algorithm::ipla);
      }
      sq[static_cast<std::size_t>(r)] =
          (s.theta - ref_endpoints.row(r).transpose()).squaredNorm();
    });

    const RmseEstimate est = rmse_from_squares(sq);
    StrongErrorPoint point;
    point.gamma = cfg.gamma;
    point.rmse = est.value;
    point.se = est.se;
    point.implied_constant = est.value / (dim_factor * std::sqrt(cfg.gamma));
    out.points.push_back(point);
    out.constant = std::max(out.constant, point.implied_constant);
  }
  return out;
}

double estimate_disc_constant(const ModelSpec& model, const std::vector<RunConfig>& cfg_grid,
                              double reference_gamma, int threads) {
  return calibrate_discretization(model, cfg_grid, reference_gamma, threads).constant;
}

}  // namespace ipla
