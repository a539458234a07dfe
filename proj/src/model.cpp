#include "ipla/model.hpp"

#include <cmath>
#include <limits>

#include "ipla/errors.hpp"
#include "ipla/noise.hpp"

namespace ipla {

void validate_model(const ModelSpec& model) {
  if (model.d_theta <= 0 || model.d_x <= 0)
    throw ConfigError("model dimensions must be positive");
  if (!model.eval_U || !model.grad_theta_U || !model.grad_x_U)
    throw ConfigError("model must provide eval_U, grad_theta_U and grad_x_U");
  if (model.analytic && model.analytic->mu && model.analytic->lipschitz_L &&
      *model.analytic->mu > *model.analytic->lipschitz_L + 1e-12)
    throw ConfigError("analytic info inconsistent: mu exceeds the Lipschitz constant");
}

void eval_grad_cloud(const ModelSpec& model, const Vector& theta, const Matrix& cloud,
                     Matrix& grad_theta_out, Matrix& grad_x_out) {
  const Index n = cloud.rows();
  grad_theta_out.resize(n, model.d_theta);
  grad_x_out.resize(n, model.d_x);
  if (model.grad_cloud) {
    model.grad_cloud(theta, cloud, grad_theta_out, grad_x_out);
    return;
  }
  for (Index i = 0; i < n; ++i) {
    grad_theta_out.row(i) = model.grad_theta_U(theta, cloud.row(i).transpose());
    grad_x_out.row(i) = model.grad_x_U(theta, cloud.row(i).transpose());
  }
}

namespace {

double probe_U(const ModelSpec& model, const Vector& theta, const Vector& x) {
  const double u = model.eval_U(theta, x);
  if (!std::isfinite(u)) throw NonFiniteEvaluation("U not finite at finite-difference probe");
  return u;
}

}  // namespace

GradCheckReport check_gradients(const ModelSpec& model, const Vector& theta,
                                const Vector& x, double h) {
  if (h <= 0.0) throw DomainError("finite-difference step must be positive");
  GradCheckReport report;

  const Vector g_theta = model.grad_theta_U(theta, x);
  const Vector g_x = model.grad_x_U(theta, x);
  if (!g_theta.allFinite() || !g_x.allFinite())
    throw NonFiniteEvaluation("analytic gradient not finite at probe point");

  Vector tp = theta, tm = theta;
  for (Index k = 0; k < model.d_theta; ++k) {
    tp[k] += h;
    tm[k] -= h;
    const double fd = (probe_U(model, tp, x) - probe_U(model, tm, x)) / (2.0 * h);
    const double rel = std::abs(g_theta[k] - fd) / (1.0 + std::abs(g_theta[k]));
    if (rel >= report.theta_rel_error) {
      report.theta_rel_error = rel;
      report.worst_theta_coord = k;
    }
    tp[k] = theta[k];
    tm[k] = theta[k];
  }

  Vector xp = x, xm = x;
  for (Index k = 0; k < model.d_x; ++k) {
    xp[k] += h;
    xm[k] -= h;
    const double fd = (probe_U(model, theta, xp) - probe_U(model, theta, xm)) / (2.0 * h);
    const double rel = std::abs(g_x[k] - fd) / (1.0 + std::abs(g_x[k]));
    if (rel >= report.x_rel_error) {
      report.x_rel_error = rel;
      report.worst_x_coord = k;
    }
    xp[k] = x[k];
    xm[k] = x[k];
  }
  return report;
}

double probe_convexity(const ModelSpec& model, std::uint64_t seed, int trials,
                       double radius) {
  if (trials < 2) throw DomainError("probe_convexity needs at least 2 trials");
  if (radius <= 0.0) throw DomainError("probe radius must be positive");

  const Index d = model.d_theta + model.d_x;
  const NoiseStream stream(seed, make_stream_id(0, 0xC0FFEEu));
  double best = std::numeric_limits<double>::infinity();
  int usable = 0;

  for (int t = 0; t < trials; ++t) {
    // Two points per trial from one counter; coincident pairs are skipped
    // (their quotient is undefined), which acts as the resample.
    const Vector u = stream.uniforms(static_cast<std::uint64_t>(t), 2 * d);
    Vector v(d), w(d);
    for (Index k = 0; k < d; ++k) {
      v[k] = radius * (2.0 * u[k] - 1.0);
      w[k] = radius * (2.0 * u[d + k] - 1.0);
    }
    const Vector diff = v - w;
    const double dist2 = diff.squaredNorm();
    if (dist2 < 1e-24 * radius * radius) continue;

    const Vector tv = v.head(model.d_theta), xv = v.tail(model.d_x);
    const Vector tw = w.head(model.d_theta), xw = w.tail(model.d_x);
    Vector gv(d), gw(d);
    gv << model.grad_theta_U(tv, xv), model.grad_x_U(tv, xv);
    gw << model.grad_theta_U(tw, xw), model.grad_x_U(tw, xw);
    const double quotient = diff.dot(gv - gw) / dist2;
    if (!std::isfinite(quotient)) throw NonFiniteEvaluation("gradient not finite at probe pair");
    best = std::min(best, quotient);
    ++usable;
  }
  if (usable == 0) throw DegenerateProbe("all sampled pairs were coincident");
  return best;
}

}  // namespace ipla
