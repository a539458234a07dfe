#ifndef IPLA_MODEL_HPP
#define IPLA_MODEL_HPP

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>

#include "ipla/types.hpp"

namespace ipla {

/// Closed-form structure a model may carry. Every rate in the error bounds
/// is driven by mu (strong convexity) and lipschitz_L (gradient Lipschitz
/// constant); theta_star / x_star locate the minimiser of U when known.
struct ThetaMarginal {
  Vector mean;
  // Diagonal covariance of the stationary theta-marginal as a function of
  // the particle count.
  std::function<Vector(int n_particles)> covariance_diag;
};

struct AnalyticInfo {
  std::optional<Vector> theta_star;
  std::optional<Vector> x_star;
  std::optional<double> mu;
  std::optional<double> lipschitz_L;
  std::optional<ThetaMarginal> theta_marginal;
};

/// A latent-variable model: the negative log joint U(theta, x) with the
/// observed data baked in, plus its two gradient blocks. All callables
/// must be pure functions of their arguments (safe for concurrent use).
struct ModelSpec {
  Index d_theta = 0;
  Index d_x = 0;
  std::function<double(const Vector& theta, const Vector& x)> eval_U;
  std::function<Vector(const Vector& theta, const Vector& x)> grad_theta_U;
  std::function<Vector(const Vector& theta, const Vector& x)> grad_x_U;
  // Optional batched path: gradients of U at (theta, row i of cloud) for
  // every row at once. Must agree with the per-point functions; the
  // samplers fall back to a row loop when absent.
  std::function<void(const Vector& theta, const Matrix& cloud, Matrix& grad_theta_out,
                     Matrix& grad_x_out)>
      grad_cloud;
  std::optional<AnalyticInfo> analytic;
};

/// Throws ConfigError on dimension/callable problems and when an
/// AnalyticInfo carries mu > lipschitz_L.
void validate_model(const ModelSpec& model);

/// Evaluate both gradient blocks for every particle row, preferring the
/// batched callable when the model provides one.
void eval_grad_cloud(const ModelSpec& model, const Vector& theta, const Matrix& cloud,
                     Matrix& grad_theta_out, Matrix& grad_x_out);

struct GradCheckReport {
  double theta_rel_error = 0.0;
  double x_rel_error = 0.0;
  Index worst_theta_coord = -1;
  Index worst_x_coord = -1;
  double max_rel_error() const { return std::max(theta_rel_error, x_rel_error); }
};

/// Compare analytic gradients against central differences of eval_U at one
/// point. Reported per block: max over coordinates of
/// |analytic - fd| / (1 + |analytic|). Throws NonFiniteEvaluation if U is
/// not finite at any probe point.
GradCheckReport check_gradients(const ModelSpec& model, const Vector& theta,
                                const Vector& x, double h);

/// Step-size rule used when no explicit h is given.
inline double default_fd_step(const Vector& theta, const Vector& x) {
  const double mag = std::max(theta.size() ? theta.cwiseAbs().maxCoeff() : 0.0,
                              x.size() ? x.cwiseAbs().maxCoeff() : 0.0);
  return 1e-5 * (1.0 + mag);
}

/// Monte Carlo lower estimate of the strong-convexity constant: the minimum
/// over sampled pairs v, v' of <v - v', grad U(v) - grad U(v')> / |v - v'|^2
/// with v drawn uniformly from [-radius, radius]^(d_theta + d_x).
/// Deterministic given seed. Throws DegenerateProbe if no usable pair is
/// found.
double probe_convexity(const ModelSpec& model, std::uint64_t seed, int trials,
                       double radius);

}  // namespace ipla

#endif  // IPLA_MODEL_HPP
