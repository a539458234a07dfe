#include "ipla/toy_models.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "ipla/errors.hpp"
#include "ipla/noise.hpp"

namespace ipla {

namespace {

void validate_gaussian_params(const GaussianHierarchicalParams& p) {
  if (p.y.size() <= 0) throw ConfigError("gaussian model: y must be non-empty");
  if (!p.y.allFinite()) throw ConfigError("gaussian model: y must be finite");
  if (p.sigma_lat <= 0.0 || p.sigma_obs <= 0.0)
    throw ConfigError("gaussian model: scales must be positive");
}

void validate_logistic_params(const LogisticRegressionParams& p) {
  if (p.covariates.rows() <= 0 || p.covariates.cols() <= 0)
    throw ConfigError("logistic model: covariate matrix must be non-empty");
  if (!p.covariates.allFinite()) throw ConfigError("logistic model: covariates must be finite");
  if (p.labels.size() != p.covariates.rows())
    throw ConfigError("logistic model: one label per covariate row required");
  for (Index j = 0; j < p.labels.size(); ++j)
    if (p.labels[j] != 0.0 && p.labels[j] != 1.0)
      throw ConfigError("logistic model: labels must be 0 or 1");
  if (p.sigma <= 0.0) throw ConfigError("logistic model: sigma must be positive");
}

}  // namespace

double gaussian_mu_exact(Index d_x) {
  const double d = static_cast<double>(d_x);
  return 0.5 * (d + 2.0 - std::sqrt(d * d + 4.0));
}

double gaussian_lipschitz_exact(Index d_x) {
  const double d = static_cast<double>(d_x);
  return 0.5 * (d + 2.0 + std::sqrt(d * d + 4.0));
}

ModelSpec make_gaussian_model(const GaussianHierarchicalParams& p) {
  validate_gaussian_params(p);
  const Index d_x = p.y.size();
  const double inv_lat = 1.0 / (p.sigma_lat * p.sigma_lat);
  const double inv_obs = 1.0 / (p.sigma_obs * p.sigma_obs);
  const double log_norm = 0.5 * d_x *
                          (std::log(2.0 * M_PI * p.sigma_lat * p.sigma_lat) +
                           std::log(2.0 * M_PI * p.sigma_obs * p.sigma_obs));
  const Vector y = p.y;

  ModelSpec model;
  model.d_theta = 1;
  model.d_x = d_x;
  model.eval_U = [=](const Vector& theta, const Vector& x) {
    const double t = theta[0];
    return 0.5 * inv_lat * (x.array() - t).matrix().squaredNorm() +
           0.5 * inv_obs * (y - x).squaredNorm() + log_norm;
  };
  model.grad_theta_U = [=](const Vector& theta, const Vector& x) {
    Vector g(1);
    g[0] = inv_lat * (d_x * theta[0] - x.sum());
    return g;
  };
  model.grad_x_U = [=](const Vector& theta, const Vector& x) -> Vector {
    return (inv_lat * (x.array() - theta[0]) + inv_obs * (x - y).array()).matrix();
  };
  model.grad_cloud = [=](const Vector& theta, const Matrix& cloud, Matrix& g_theta,
                         Matrix& g_x) {
    const double t = theta[0];
    g_theta.col(0) = (inv_lat * (d_x * t - cloud.rowwise().sum().array())).matrix();
    g_x = (inv_lat * (cloud.array() - t) +
           inv_obs * (cloud.rowwise() - y.transpose()).array())
              .matrix();
  };

  if (p.sigma_lat == 1.0 && p.sigma_obs == 1.0) {
    AnalyticInfo info;
    const double ybar = y.mean();
    info.theta_star = Vector::Constant(1, ybar);
    info.x_star = 0.5 * (Vector::Constant(d_x, ybar) + y);
    info.mu = gaussian_mu_exact(d_x);
    info.lipschitz_L = gaussian_lipschitz_exact(d_x);
    ThetaMarginal marginal;
    marginal.mean = Vector::Constant(1, ybar);
    marginal.covariance_diag = [d_x](int n_particles) {
      return Vector::Constant(1, 2.0 / (static_cast<double>(n_particles) * d_x));
    };
    info.theta_marginal = marginal;
    model.analytic = info;
  }
  return model;
}

double log1p_exp(double u) {
  return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
}

ModelSpec make_logistic_model(const LogisticRegressionParams& p) {
  validate_logistic_params(p);
  const Index d_x = p.covariates.cols();
  const double inv_s2 = 1.0 / (p.sigma * p.sigma);
  const double log_norm = 0.5 * d_x * std::log(2.0 * M_PI * p.sigma * p.sigma);
  const Matrix V = p.covariates;
  const Vector labels = p.labels;

  ModelSpec model;
  model.d_theta = 1;
  model.d_x = d_x;
  model.eval_U = [=](const Vector& theta, const Vector& x) {
    const Vector logits = V * x;
    double loss = 0.0;
    for (Index j = 0; j < logits.size(); ++j)
      loss += log1p_exp(logits[j]) - labels[j] * logits[j];
    return loss + 0.5 * inv_s2 * (x.array() - theta[0]).matrix().squaredNorm() + log_norm;
  };
  model.grad_theta_U = [=](const Vector& theta, const Vector& x) {
    Vector g(1);
    g[0] = inv_s2 * (d_x * theta[0] - x.sum());
    return g;
  };
  model.grad_x_U = [=](const Vector& theta, const Vector& x) -> Vector {
    // 1/(1+e^-u) saturates to 0/1 at +-inf without NaNs
    const Vector probs = (1.0 / (1.0 + (-(V * x)).array().exp())).matrix();
    return (inv_s2 * (x.array() - theta[0])).matrix() - V.transpose() * (labels - probs);
  };
  model.grad_cloud = [=](const Vector& theta, const Matrix& cloud, Matrix& g_theta,
                         Matrix& g_x) {
    const double t = theta[0];
    g_theta.col(0) = (inv_s2 * (d_x * t - cloud.rowwise().sum().array())).matrix();
    // probs: one sigmoid per (particle, observation)
    const Matrix probs = (1.0 / (1.0 + (-(cloud * V.transpose())).array().exp())).matrix();
    g_x = (inv_s2 * (cloud.array() - t)).matrix() +
          (probs.rowwise() - labels.transpose()) * V;
  };
  return model;
}

std::pair<double, double> gaussian_meanfield_reference(const GaussianHierarchicalParams& p,
                                                       double theta0, double m0, double t) {
  validate_gaussian_params(p);
  if (t < 0.0) throw DomainError("meanfield reference: time must be nonnegative");
  const double d = static_cast<double>(p.y.size());
  const double a = d / (p.sigma_lat * p.sigma_lat);
  const double b = 1.0 / (p.sigma_lat * p.sigma_lat);
  const double c = 1.0 / (p.sigma_obs * p.sigma_obs);
  const double ybar = p.y.mean();

  // d/dt (theta, m) = -A ((theta, m) - (ybar, ybar)),
  // A = [[a, -a], [-b, b + c]]; its eigenvalues are real and distinct.
  const double tr = a + b + c;
  const double det = a * c;
  const double disc = std::sqrt(tr * tr - 4.0 * det);
  const double lam1 = 0.5 * (tr - disc);
  const double lam2 = 0.5 * (tr + disc);

  const double u0 = theta0 - ybar;
  const double w0 = m0 - ybar;
  // Spectral projectors: exp(-At) = e^{-lam1 t} (A - lam2 I)/(lam1 - lam2)
  //                               + e^{-lam2 t} (A - lam1 I)/(lam2 - lam1).
  const double e1 = std::exp(-lam1 * t);
  const double e2 = std::exp(-lam2 * t);
  const double inv_gap = 1.0 / (lam1 - lam2);
  const double p11 = (a - lam2) * inv_gap, p12 = -a * inv_gap;
  const double p21 = -b * inv_gap, p22 = (b + c - lam2) * inv_gap;
  const double q11 = (a - lam1) * -inv_gap, q12 = a * inv_gap;
  const double q21 = b * inv_gap, q22 = (b + c - lam1) * -inv_gap;

  const double ut = e1 * (p11 * u0 + p12 * w0) + e2 * (q11 * u0 + q12 * w0);
  const double wt = e1 * (p21 * u0 + p22 * w0) + e2 * (q21 * u0 + q22 * w0);
  return {ut + ybar, wt + ybar};
}

SyntheticLogisticData synthesize_logistic_data(std::uint64_t seed, Index d_x, Index d_y,
                                               double theta_gen, double sigma) {
  if (d_x <= 0 || d_y <= 0) throw ConfigError("synthetic logistic data: dimensions must be positive");
  if (sigma <= 0.0) throw ConfigError("synthetic logistic data: sigma must be positive");

  const NoiseStream covariate_stream(seed, make_stream_id(0, 0xDA7A0001u));
  const NoiseStream latent_stream(seed, make_stream_id(0, 0xDA7A0002u));
  const NoiseStream label_stream(seed, make_stream_id(0, 0xDA7A0003u));

  SyntheticLogisticData out;
  out.theta_gen = theta_gen;
  out.params.sigma = sigma;
  out.x_gen = Vector::Constant(d_x, theta_gen) + sigma * latent_stream.normals(0, d_x);

  out.params.covariates.resize(d_y, d_x);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_x));
  for (Index j = 0; j < d_y; ++j)
    out.params.covariates.row(j) =
        scale * covariate_stream.normals(static_cast<std::uint64_t>(j), d_x).transpose();

  const Vector u = label_stream.uniforms(0, d_y);
  out.params.labels.resize(d_y);
  for (Index j = 0; j < d_y; ++j) {
    const double prob = sigmoid(out.params.covariates.row(j).dot(out.x_gen));
    out.params.labels[j] = u[j] < prob ? 1.0 : 0.0;
  }
  return out;
}

LogisticRegressionParams load_logistic_csv(const std::string& path, double sigma) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset: " + path);

  std::string line;
  if (!std::getline(in, line)) throw ConfigError("dataset is empty: " + path);
  // Header names the layout; only the column count is used.
  Index n_cols = 1;
  for (char ch : line)
    if (ch == ',') ++n_cols;
  if (n_cols < 2) throw ConfigError("dataset header must be v_1,...,v_dx,label");
  const Index d_x = n_cols - 1;

  std::vector<double> values;
  Index rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    Index cols = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError("dataset row " + std::to_string(rows + 1) + ": bad number '" + cell + "'");
      }
      ++cols;
    }
    if (cols != n_cols)
      throw ConfigError("dataset row " + std::to_string(rows + 1) + ": expected " +
                        std::to_string(n_cols) + " columns");
    ++rows;
  }
  if (rows == 0) throw ConfigError("dataset has no data rows: " + path);

  LogisticRegressionParams p;
  p.sigma = sigma;
  p.covariates.resize(rows, d_x);
  p.labels.resize(rows);
  for (Index j = 0; j < rows; ++j) {
    for (Index k = 0; k < d_x; ++k) p.covariates(j, k) = values[j * n_cols + k];
    p.labels[j] = values[j * n_cols + d_x];
  }
  validate_logistic_params(p);
  return p;
}

}  // namespace ipla
