#ifndef IPLA_TOY_MODELS_HPP
#define IPLA_TOY_MODELS_HPP

#include <cstdint>
#include <string>
#include <utility>

#include "ipla/model.hpp"
#include "ipla/types.hpp"

namespace ipla {

/// Hierarchical Gaussian model with scalar prior mean:
///   x ~ N(theta * 1, sigma_lat^2 I),  y | x ~ N(x, sigma_obs^2 I).
/// U(theta, x) = |x - theta 1|^2 / (2 sigma_lat^2)
///             + |y - x|^2 / (2 sigma_obs^2) + normalising constants.
struct GaussianHierarchicalParams {
  Vector y;               // observation, length d_x
  double sigma_lat = 1.0;
  double sigma_obs = 1.0;
};

/// Bayesian logistic regression with a scalar prior mean:
///   x ~ N(theta * 1, sigma^2 I), labels y_j ~ Bernoulli(s(v_j . x)).
struct LogisticRegressionParams {
  Matrix covariates;      // d_y rows of v_j
  Vector labels;          // d_y entries in {0, 1}
  double sigma = 1.0;
};

/// Analytic fields (theta_star, mu, L, x_star, theta marginal) are
/// populated only for the sigma_lat = sigma_obs = 1 default; the model
/// itself works for any positive scales.
ModelSpec make_gaussian_model(const GaussianHierarchicalParams& p);

ModelSpec make_logistic_model(const LogisticRegressionParams& p);

/// Strong-convexity / Lipschitz constants of the Gaussian model's constant
/// Hessian (extremes over the joint (theta, x) space), unit scales.
double gaussian_mu_exact(Index d_x);
double gaussian_lipschitz_exact(Index d_x);

/// Exact flow of the deterministic skeleton of the mean-field dynamics for
/// the Gaussian model: with m the mean of the latent law,
///   d theta/dt = -d_x (theta - m) / sigma_lat^2,
///   d m/dt     = -( (m - theta)/sigma_lat^2 + (m - ybar)/sigma_obs^2 ).
/// Solved in closed form through the eigendecomposition of the 2x2 system
/// matrix. Returns (theta_t, m_t).
std::pair<double, double> gaussian_meanfield_reference(const GaussianHierarchicalParams& p,
                                                       double theta0, double m0, double t);

/// Numerically stable log-sigmoid pieces shared by the logistic model.
double log1p_exp(double u);
inline double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

struct SyntheticLogisticData {
  LogisticRegressionParams params;
  double theta_gen = 0.0;  // generating prior mean (not a minimiser)
  Vector x_gen;            // generating latent draw
};

/// Seeded generative draw: covariate rows iid N(0, I/d_x), one latent
/// x ~ N(theta_gen 1, sigma^2 I), labels Bernoulli(s(v_j . x)).
SyntheticLogisticData synthesize_logistic_data(std::uint64_t seed, Index d_x, Index d_y,
                                               double theta_gen, double sigma);

/// Reads `v_1,...,v_dx,label` rows (header required, '.' decimal point).
LogisticRegressionParams load_logistic_csv(const std::string& path, double sigma);

}  // namespace ipla

#endif  // IPLA_TOY_MODELS_HPP
