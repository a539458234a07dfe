#ifndef IPLA_EXPERIMENTS_HPP
#define IPLA_EXPERIMENTS_HPP

#include <iosfwd>
#include <string>

#include "ipla/config.hpp"
#include "ipla/diagnostics.hpp"

namespace ipla {

struct ExecOptions {
  int threads = 1;
  bool gnuplot = false;
};

/// Exit codes shared by the library entry points and the CLI:
/// 0 success, 1 check failure, 2 configuration error, 3 divergence.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitDiverged = 3;

int cmd_run(const ExperimentConfig& cfg, const ExecOptions& opts, std::ostream& out);
int cmd_sweep(const ExperimentConfig& cfg, const ExecOptions& opts, std::ostream& out);
int cmd_compare(const ExperimentConfig& cfg, const ExecOptions& opts, std::ostream& out);
int cmd_chaos(const ExperimentConfig& cfg, const ExecOptions& opts, std::ostream& out);
int cmd_gradcheck(const ExperimentConfig& cfg, const ExecOptions& opts, std::ostream& out);
int cmd_bound(const ExperimentConfig& cfg, const ExecOptions& opts, std::ostream& out);

/// Dispatch on kind, check it against cfg.experiment when that is set, and
/// map exceptions to the exit codes above (messages go to err).
int run_experiment(const ExperimentConfig& cfg, ExperimentKind kind, const ExecOptions& opts,
                   std::ostream& out, std::ostream& err);

/// RMS distance in rescaled coordinates between the configured initial law
/// and the minimiser of U (needs analytic theta_star and x_star).
double initial_rescaled_distance(const ModelSpec& model, const RunConfig& cfg);

/// Bound inputs assembled from a model and a run configuration.
BoundInputs bound_inputs_for(const ModelSpec& model, const RunConfig& cfg,
                             std::optional<double> disc_constant);

}  // namespace ipla

#endif  // IPLA_EXPERIMENTS_HPP
