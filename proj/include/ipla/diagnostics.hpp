#ifndef IPLA_DIAGNOSTICS_HPP
#define IPLA_DIAGNOSTICS_HPP

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "ipla/model.hpp"
#include "ipla/sampler.hpp"
#include "ipla/types.hpp"

namespace ipla {

/// iid replicate draws of some statistic, one row per draw.
struct EmpiricalLaw {
  Matrix samples;
};

/// W2 distance between an empirical law and a point mass: equals
/// sqrt(mean_i |s_i - point|^2). Throws EmptySample.
double w2_to_dirac(const EmpiricalLaw& law, const Vector& point);

/// Exact 1-D W2 between equal-size empirical laws via the sorted-sample
/// quantile coupling. Throws SizeMismatch / EmptySample.
double w2_1d(const EmpiricalLaw& a, const EmpiricalLaw& b);

/// Inputs of the nonasymptotic optimisation-error bound.
struct BoundInputs {
  double mu = 0.0;
  int d_theta = 0;
  int d_x = 0;
  long n_particles = 0;
  std::uint64_t n_steps = 0;
  double gamma = 0.0;
  double z0_dist = 0.0;                  // |z_0 - z*| in rescaled coordinates
  std::optional<double> c_disc;          // calibrated discretisation constant
  std::optional<double> lipschitz_L;
};

struct BoundTerms {
  double concentration = 0.0;   // sqrt(2 d_theta / (N mu))
  double ergodic = 0.0;         // e^{-mu n gamma} (z0_dist + sqrt((d_x N + d_theta)/(N mu)))
  double discretization = 0.0;  // c_disc (1 + sqrt(d_theta/N + d_x)) sqrt(gamma)
  bool has_discretization = false;
  double total = 0.0;           // sum of the available terms
};

/// Evaluate the three-term error bound. The discretisation term is filled
/// only when c_disc is present. Throws GammaOutOfRange when gamma falls
/// outside (0, min(1/L, 2/mu)) (the 1/L piece only when L is supplied).
BoundTerms error_bound(const BoundInputs& b);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Ordinary least squares of log(error) on log(scale). Needs >= 3 points
/// with distinct positive scales and positive errors; throws DomainError.
RateFit fit_rate(const std::vector<std::pair<double, double>>& points);

/// Ordinary least squares of log(error) on the (untransformed) abscissa;
/// the slope is the exponential decay rate per unit of t.
RateFit fit_semilog(const std::vector<std::pair<double, double>>& points);

/// RMSE of a sample of squared distances with a delta-method standard
/// error: se(sqrt(mean D)) ~= sd(D) / (2 sqrt(mean D) sqrt(M)).
struct RmseEstimate {
  double value = 0.0;
  double se = 0.0;
};

RmseEstimate rmse_from_squares(const std::vector<double>& squared_distances);
RmseEstimate rmse_to_point(const Matrix& samples, const Vector& point);

/// One grid point of the discretisation-error calibration.
struct StrongErrorPoint {
  double gamma = 0.0;
  double rmse = 0.0;           // endpoint strong error against the reference chain
  double se = 0.0;
  double implied_constant = 0.0;  // rmse / ((1 + sqrt(d_theta/N + d_x)) sqrt(gamma))
};

struct DiscretizationCalibration {
  double constant = 0.0;  // max of implied_constant over the grid
  std::vector<StrongErrorPoint> points;
};

/// Runs each grid config and a reference chain at reference_gamma with the
/// same underlying Brownian path (fine increments aggregated over each
/// coarse step) and measures the endpoint theta RMSE. All configs must
/// share N, seed, replicate count and the horizon n_steps * gamma, and
/// every gamma must be an integer multiple of reference_gamma.
/// Deterministic given the seeds; identical for any thread count.
DiscretizationCalibration calibrate_discretization(const ModelSpec& model,
                                                   const std::vector<RunConfig>& cfg_grid,
                                                   double reference_gamma, int threads = 1,
                                                   bool live_noise = true);

/// The scalar calibration entry point: max implied constant over the grid.
double estimate_disc_constant(const ModelSpec& model, const std::vector<RunConfig>& cfg_grid,
                              double reference_gamma, int threads = 1);

}  // namespace ipla

#endif  // IPLA_DIAGNOSTICS_HPP
