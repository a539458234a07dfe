#include "ipla/experiments.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "ipla/csv.hpp"
#include "ipla/errors.hpp"

namespace ipla {

namespace fs = std::filesystem;

namespace {

fs::path prepare_output_dir(const ExperimentConfig& cfg) {
  const fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string());
  return dir;
}

void write_config_echo(const ExperimentConfig& cfg, const fs::path& dir) {
  std::ofstream out(dir / "config_echo.json", std::ios::binary);
  if (!out) throw Error("cannot write config echo");
  out << config_to_json(cfg).dump(2) << "\n";
}

void write_plot_script(const fs::path& dir, const std::string& body) {
  std::ofstream out(dir / "plot.gp", std::ios::binary);
  if (!out) throw Error("cannot write plot script");
  out << "# gnuplot script (run from this directory)\n"
      << "set datafile separator \",\"\n"
      << "set key autotitle columnhead\n"
      << body;
}

Algorithm single_algorithm(AlgorithmChoice choice, const char* what) {
  switch (choice) {
    case AlgorithmChoice::ipla: return Algorithm::ipla;
    case AlgorithmChoice::pgd: return Algorithm::pgd;
    case AlgorithmChoice::both: break;
  }
  throw ConfigError(std::string(what) + " needs algorithm 'ipla' or 'pgd'");
}

std::uint64_t auto_stride(const ExperimentConfig& cfg, std::uint64_t n_steps,
                          std::uint64_t target_points = 100) {
  if (cfg.record_stride > 0) return cfg.record_stride;
  if (n_steps == 0) return 0;
  return std::max<std::uint64_t>(1, n_steps / target_points);
}

const AnalyticInfo* analytic_of(const ModelSpec& model) {
  return model.analytic ? &*model.analytic : nullptr;
}

Vector mean_or_zero(const Vector& v, Index d) { return v.size() ? v : Vector::Zero(d); }

std::vector<long> integral_values(const std::vector<double>& values, const char* what) {
  std::vector<long> out;
  for (double v : values) {
    const long n = std::lround(v);
    if (std::abs(v - static_cast<double>(n)) > 1e-9 || n < 1)
      throw ConfigError(std::string(what) + " values must be positive integers");
    out.push_back(n);
  }
  return out;
}

// RMSE over replicates at every recorded trajectory index.
struct TrajectoryRmse {
  std::vector<std::uint64_t> steps;
  std::vector<double> times;
  std::vector<RmseEstimate> rmse;
};

TrajectoryRmse trajectory_rmse(const RunRecord& record, const Vector& target) {
  TrajectoryRmse out;
  const std::size_t n_samples = record.replicates.front().trajectory.size();
  for (std::size_t k = 0; k < n_samples; ++k) {
    std::vector<double> sq;
    sq.reserve(record.replicates.size());
    for (const auto& rep : record.replicates)
      sq.push_back((rep.trajectory[k].theta - target).squaredNorm());
    out.steps.push_back(record.replicates.front().trajectory[k].step);
    out.times.push_back(record.replicates.front().trajectory[k].time);
    out.rmse.push_back(rmse_from_squares(sq));
  }
  return out;
}

void append_run_rows(csv::Table& table, const RunRecord& record) {
  for (std::size_t r = 0; r < record.replicates.size(); ++r)
    for (const auto& sample : record.replicates[r].trajectory) {
      std::vector<std::string> row = {csv::field(static_cast<long>(r)),
                                      csv::field(sample.step), csv::field(sample.time)};
      for (Index j = 0; j < sample.theta.size(); ++j)
        row.push_back(csv::field(sample.theta[j]));
      table.add_row(std::move(row));
    }
}

std::vector<std::string> run_csv_header(Index d_theta) {
  std::vector<std::string> header = {"replicate", "step", "time"};
  for (Index j = 0; j < d_theta; ++j) header.push_back("theta_" + std::to_string(j));
  return header;
}

}  // namespace

double initial_rescaled_distance(const ModelSpec& model, const RunConfig& cfg) {
  const AnalyticInfo* info = analytic_of(model);
  if (!info || !info->theta_star || !info->x_star)
    throw ConfigError("initial distance needs a model with analytic theta_star and x_star");
  const Vector theta0 = mean_or_zero(cfg.init.theta_mean, model.d_theta);
  const Vector x0 = mean_or_zero(cfg.init.x_mean, model.d_x);
  double sq = (theta0 - *info->theta_star).squaredNorm() + (x0 - *info->x_star).squaredNorm();
  if (cfg.init.kind == InitKind::gaussian) {
    sq += static_cast<double>(model.d_theta) * cfg.init.theta_scale * cfg.init.theta_scale;
    sq += static_cast<double>(model.d_x) * cfg.init.x_scale * cfg.init.x_scale;
  }
  return std::sqrt(sq);
}

BoundInputs bound_inputs_for(const ModelSpec& model, const RunConfig& cfg,
                             std::optional<double> disc_constant) {
  const AnalyticInfo* info = analytic_of(model);
  if (!info || !info->mu)
    throw ConfigError("the error bound needs a model with a known convexity constant");
  BoundInputs b;
  b.mu = *info->mu;
  b.d_theta = static_cast<int>(model.d_theta);
  b.d_x = static_cast<int>(model.d_x);
  b.n_particles = cfg.n_particles;
  b.n_steps = cfg.n_steps;
  b.gamma = cfg.gamma;
  b.z0_dist = initial_rescaled_distance(model, cfg);
  b.c_disc = disc_constant;
  b.lipschitz_L = info->lipschitz_L;
  return b;
}

int cmd_run(const ExperimentConfig& cfg, const ExecOptions& opts, std::ostream& out) {
  const BuiltModel bm = build_model(cfg.model);
  const Algorithm alg = single_algorithm(cfg.algorithm, "run");
  const fs::path dir = prepare_output_dir(cfg);

  RecorderSpec recorder;
  recorder.stride = auto_stride(cfg, cfg.run.n_steps);
  const RunRecord record = run_chain(bm.spec, cfg.run, recorder, alg, opts.threads);

  csv::Table run_table(run_csv_header(bm.spec.d_theta));
  append_run_rows(run_table, record);
  run_table.write_file(dir / "run.csv");

  csv::Table summary({"replicate", "statistic", "value"});
  for (std::size_t r = 0; r < record.replicates.size(); ++r) {
    const auto& rep = record.replicates[r];
    for (Index j = 0; j < rep.theta_final.size(); ++j)
      summary.add_row({csv::field(static_cast<long>(r)), "theta_final_" + std::to_string(j),
                       csv::field(rep.theta_final[j])});
    for (Index j = 0; j < rep.cloud_mean.size(); ++j)
      summary.add_row({csv::field(static_cast<long>(r)), "cloud_mean_" + std::to_string(j),
                       csv::field(rep.cloud_mean[j])});
    summary.add_row({csv::field(static_cast<long>(r)), "cloud_sq_radius",
                     csv::field(rep.cloud_sq_radius)});
  }

  const Matrix finals = record.final_thetas();
  const Vector theta_mean = finals.colwise().mean().transpose();
  for (Index j = 0; j < theta_mean.size(); ++j)
    summary.add_row({"all", "theta_mean_" + std::to_string(j), csv::field(theta_mean[j])});
  summary.add_row({"all", "algorithm", algorithm_name(alg)});
  summary.add_row({"all", "seed", csv::field(cfg.run.seed)});
  summary.add_row({"all", "n_particles", csv::field(static_cast<long>(cfg.run.n_particles))});
  summary.add_row({"all", "gamma", csv::field(cfg.run.gamma)});
  summary.add_row({"all", "n_steps", csv::field(cfg.run.n_steps)});
  summary.add_row({"all", "replicates", csv::field(static_cast<long>(cfg.run.replicates))});
  summary.add_row({"all", "library_version", record.version});
  if (bm.theta_gen)
    summary.add_row({"all", "theta_gen", csv::field(*bm.theta_gen)});

  out << "final theta mean over " << cfg.run.replicates << " replicate(s):";
  for (Index j = 0; j < theta_mean.size(); ++j) out << ' ' << theta_mean[j];
  out << '\n';

  const AnalyticInfo* info = analytic_of(bm.spec);
  if (info && info->theta_star) {
    const RmseEstimate rmse = rmse_to_point(finals, *info->theta_star);
    summary.add_row({"all", "rmse_theta_star", csv::field(rmse.value)});
    summary.add_row({"all", "rmse_se", csv::field(rmse.se)});
    out << "rmse to theta*: " << rmse.value << " (se " << rmse.se << ")\n";
    if (info->mu && info->x_star) {
      const BoundTerms terms =
          error_bound(bound_inputs_for(bm.spec, cfg.run, cfg.discretization_constant));
      summary.add_row({"all", "bound_concentration", csv::field(terms.concentration)});
      summary.add_row({"all", "bound_ergodic", csv::field(terms.ergodic)});
      if (terms.has_discretization)
        summary.add_row({"all", "bound_discretization", csv::field(terms.discretization)});
      summary.add_row({"all", "bound_total", csv::field(terms.total)});
      out << "error bound: concentration " << terms.concentration << " + ergodic "
          << terms.ergodic;
      if (terms.has_discretization) out << " + discretization " << terms.discretization;
      out << " = " << terms.total << '\n';
    }
  }

  summary.write_file(dir / "summary.csv");
  write_config_echo(cfg, dir);
  if (opts.gnuplot)
    write_plot_script(dir,
                      "set xlabel \"time\"\nset ylabel \"theta_0\"\n"
                      "plot \"run.csv\" using 3:4 with lines\n");
  return kExitOk;
}

namespace {

int sweep_n_particles(const ExperimentConfig& cfg, const BuiltModel& bm,
                      const ExecOptions& opts, const fs::path& dir, std::ostream& out) {
  const AnalyticInfo* info = analytic_of(bm.spec);
  if (!info || !info->theta_star)
    throw ConfigError("n_particles sweep needs a model with a known minimiser");
  const Algorithm alg = single_algorithm(cfg.algorithm, "sweep");
  const std::vector<long> n_values = integral_values(cfg.sweep.values, "n_particles");

  csv::Table sweep({"scale", "replicate", "statistic", "value"});
  std::vector<std::pair<double, double>> fit_points;
  const double horizon = cfg.run.gamma * static_cast<double>(cfg.run.n_steps);

  for (long n_particles : n_values) {
    RunConfig rc = cfg.run;
    rc.n_particles = static_cast<int>(n_particles);
    RecorderSpec recorder;
    recorder.stride = auto_stride(cfg, rc.n_steps, 64);
    const RunRecord record = run_chain(bm.spec, rc, recorder, alg, opts.threads);

    // stationary statistic: per replicate, time-average of the squared
    // distance over the second half of the horizon
    std::vector<double> sq;
    for (const auto& rep : record.replicates) {
      double acc = 0.0;
      int count = 0;
      for (const auto& sample : rep.trajectory)
        if (sample.time > 0.5 * horizon) {
          acc += (sample.theta - *info->theta_star).squaredNorm();
          ++count;
        }
      if (count == 0) throw ConfigError("sweep horizon too short to estimate stationarity");
      sq.push_back(acc / count);
    }
    const RmseEstimate est = rmse_from_squares(sq);
    for (std::size_t r = 0; r < sq.size(); ++r)
      sweep.add_row({csv::field(n_particles), csv::field(static_cast<long>(r)),
                     "sq_dist_stationary", csv::field(sq[r])});
    sweep.add_row({csv::field(n_particles), "all", "rmse", csv::field(est.value)});
    sweep.add_row({csv::field(n_particles), "all", "rmse_se", csv::field(est.se)});
    if (info->mu) {
      const double conc = std::sqrt(2.0 * static_cast<double>(bm.spec.d_theta) /
                                    (static_cast<double>(n_particles) * *info->mu));
      sweep.add_row({csv::field(n_particles), "all", "bound_concentration", csv::field(conc)});
    }
    fit_points.push_back({static_cast<double>(n_particles), est.value});
    out << "N = " << n_particles << ": stationary rmse " << est.value << " (se " << est.se
        << ")\n";
  }
  sweep.write_file(dir / "sweep.csv");

  csv::Table rates({"fit", "slope", "intercept", "r2", "n_points"});
  if (fit_points.size() >= 3) {
    const RateFit fit = fit_rate(fit_points);
    rates.add_row({"rmse_vs_n_particles", csv::field(fit.slope), csv::field(fit.intercept),
                   csv::field(fit.r2), csv::field(static_cast<long>(fit_points.size()))});
    out << "rmse vs N slope: " << fit.slope << " (r2 " << fit.r2 << ")\n";
  } else {
    out << "note: need at least 3 particle counts for a rate fit\n";
  }
  rates.write_file(dir / "rates.csv");
  if (opts.gnuplot)
    write_plot_script(dir,
                      "set logscale xy\nset xlabel \"N\"\nset ylabel \"rmse\"\n"
                      "plot \"sweep.csv\" using 1:(strcol(3) eq \"rmse\" ? column(4) : 1/0) "
                      "with points\n");
  return kExitOk;
}

int sweep_gamma(const ExperimentConfig& cfg, const BuiltModel& bm, const ExecOptions& opts,
                const fs::path& dir, std::ostream& out) {
  const double horizon = cfg.run.gamma * static_cast<double>(cfg.run.n_steps);
  if (!(horizon > 0.0)) throw ConfigError("gamma sweep needs run.n_steps > 0 (fixed horizon)");

  std::vector<RunConfig> grid;
  for (double gamma : cfg.sweep.values) {
    RunConfig rc = cfg.run;
    rc.gamma = gamma;
    const double steps = horizon / gamma;
    rc.n_steps = static_cast<std::uint64_t>(std::llround(steps));
    if (std::abs(static_cast<double>(rc.n_steps) * gamma - horizon) > 1e-9 * horizon)
      throw ConfigError("sweep gamma values must divide the horizon n_steps * gamma");
    grid.push_back(rc);
  }

  const DiscretizationCalibration cal =
      calibrate_discretization(bm.spec, grid, cfg.sweep.reference_gamma, opts.threads);

  csv::Table sweep({"scale", "replicate", "statistic", "value"});
  std::vector<std::pair<double, double>> fit_points;
  for (const auto& point : cal.points) {
    sweep.add_row({csv::field(point.gamma), "all", "strong_rmse", csv::field(point.rmse)});
    sweep.add_row({csv::field(point.gamma), "all", "strong_rmse_se", csv::field(point.se)});
    sweep.add_row(
        {csv::field(point.gamma), "all", "implied_constant", csv::field(point.implied_constant)});
    fit_points.push_back({point.gamma, point.rmse});
    out << "gamma = " << point.gamma << ": strong rmse " << point.rmse
        << ", implied constant " << point.implied_constant << '\n';
  }
  sweep.write_file(dir / "sweep.csv");

  csv::Table rates({"fit", "slope", "intercept", "r2", "n_points"});
  if (fit_points.size() >= 3) {
    const RateFit fit = fit_rate(fit_points);
    rates.add_row({"strong_error_vs_gamma", csv::field(fit.slope), csv::field(fit.intercept),
                   csv::field(fit.r2), csv::field(static_cast<long>(fit_points.size()))});
    out << "strong error vs gamma slope: " << fit.slope << " (r2 " << fit.r2 << ")\n";
  } else {
    out << "note: need at least 3 gamma values for a rate fit\n";
  }
  rates.write_file(dir / "rates.csv");
  out << "calibrated discretization constant: " << cal.constant << '\n';
  if (opts.gnuplot)
    write_plot_script(
        dir,
        "set logscale xy\nset xlabel \"gamma\"\nset ylabel \"strong rmse\"\n"
        "plot \"sweep.csv\" using 1:(strcol(3) eq \"strong_rmse\" ? column(4) : 1/0) "
        "with points\n");
  return kExitOk;
}

int sweep_iterations(const ExperimentConfig& cfg, const BuiltModel& bm,
                     const ExecOptions& opts, const fs::path& dir, std::ostream& out) {
  const AnalyticInfo* info = analytic_of(bm.spec);
  if (!info || !info->theta_star)
    throw ConfigError("iterations sweep needs a model with a known minimiser");
  const Algorithm alg = single_algorithm(cfg.algorithm, "sweep");
  const std::vector<long> checkpoints = integral_values(cfg.sweep.values, "iterations");

  RunConfig rc = cfg.run;
  rc.n_steps = static_cast<std::uint64_t>(checkpoints.back());
  RecorderSpec recorder;
  for (long n : checkpoints) recorder.explicit_steps.push_back(static_cast<std::uint64_t>(n));
  const RunRecord record = run_chain(bm.spec, rc, recorder, alg, opts.threads);
  const TrajectoryRmse traj = trajectory_rmse(record, *info->theta_star);

  // error floor: the stationary bound terms that do not decay with n
  double floor = 0.0;
  if (info->mu)
    floor += std::sqrt(2.0 * static_cast<double>(bm.spec.d_theta) /
                       (static_cast<double>(rc.n_particles) * *info->mu));
  if (cfg.discretization_constant)
    floor += *cfg.discretization_constant *
             (1.0 + std::sqrt(static_cast<double>(bm.spec.d_theta) / rc.n_particles +
                              static_cast<double>(bm.spec.d_x))) *
             std::sqrt(rc.gamma);

  csv::Table sweep({"scale", "replicate", "statistic", "value"});
  std::vector<std::pair<double, double>> prefix;
  for (std::size_t k = 0; k < traj.steps.size(); ++k) {
    if (traj.steps[k] == 0) continue;
    sweep.add_row({csv::field(traj.steps[k]), "all", "rmse", csv::field(traj.rmse[k].value)});
    sweep.add_row({csv::field(traj.steps[k]), "all", "rmse_se", csv::field(traj.rmse[k].se)});
    sweep.add_row({csv::field(traj.steps[k]), "all", "time", csv::field(traj.times[k])});
    if (traj.rmse[k].value >= 3.0 * floor)
      prefix.push_back({traj.times[k], traj.rmse[k].value});
    out << "n = " << traj.steps[k] << " (t = " << traj.times[k] << "): rmse "
        << traj.rmse[k].value << '\n';
  }
  sweep.write_file(dir / "sweep.csv");

  csv::Table rates({"fit", "slope", "intercept", "r2", "n_points"});
  if (prefix.size() >= 3) {
    const RateFit fit = fit_semilog(prefix);  // slope: d log(rmse) / d t
    rates.add_row({"log_rmse_vs_time_prefloor", csv::field(fit.slope),
                   csv::field(fit.intercept), csv::field(fit.r2),
                   csv::field(static_cast<long>(prefix.size()))});
    out << "pre-floor decay slope (per unit time): " << fit.slope << " (r2 " << fit.r2
        << ", floor " << floor << ")\n";
  } else {
    out << "note: fewer than 3 pre-floor points (floor " << floor << "); no decay fit\n";
  }
  rates.write_file(dir / "rates.csv");
  if (opts.gnuplot)
    write_plot_script(dir,
                      "set logscale y\nset xlabel \"time\"\nset ylabel \"rmse\"\n"
                      "plot \"sweep.csv\" using (strcol(3) eq \"rmse\" ? column(1) : 1/0):4 "
                      "with linespoints\n");
  return kExitOk;
}

}  // namespace

int cmd_sweep(const ExperimentConfig& cfg, const ExecOptions& opts, std::ostream& out) {
  const BuiltModel bm = build_model(cfg.model);
  const fs::path dir = prepare_output_dir(cfg);
  int code = kExitOk;
  switch (cfg.sweep.variant) {
    case SweepVariant::none:
      throw ConfigError("sweep needs a 'sweep' section");
    case SweepVariant::n_particles:
      code = sweep_n_particles(cfg, bm, opts, dir, out);
      break;
    case SweepVariant::gamma:
      code = sweep_gamma(cfg, bm, opts, dir, out);
      break;
    case SweepVariant::iterations:
      code = sweep_iterations(cfg, bm, opts, dir, out);
      break;
  }
  write_config_echo(cfg, dir);
  return code;
}

int cmd_compare(const ExperimentConfig& cfg, const ExecOptions& opts, std::ostream& out) {
  if (cfg.algorithm != AlgorithmChoice::both)
    throw ConfigError("compare needs algorithm 'both'");
  const BuiltModel bm = build_model(cfg.model);
  const fs::path dir = prepare_output_dir(cfg);

  RecorderSpec recorder;
  recorder.stride = auto_stride(cfg, cfg.run.n_steps);
  const RunRecord ipla_rec = run_chain(bm.spec, cfg.run, recorder, Algorithm::ipla, opts.threads);
  const RunRecord pgd_rec = run_chain(bm.spec, cfg.run, recorder, Algorithm::pgd, opts.threads);

  const AnalyticInfo* info = analytic_of(bm.spec);
  csv::Table table({"statistic", "step", "time", "value"});

  const std::size_t n_samples = ipla_rec.replicates.front().trajectory.size();
  const std::size_t n_rep = ipla_rec.replicates.size();
  for (std::size_t k = 0; k < n_samples; ++k) {
    const auto& head = ipla_rec.replicates.front().trajectory[k];
    double gap_sq = 0.0;
    Vector mean_ipla = Vector::Zero(bm.spec.d_theta);
    Vector mean_pgd = Vector::Zero(bm.spec.d_theta);
    for (std::size_t r = 0; r < n_rep; ++r) {
      const Vector& ti = ipla_rec.replicates[r].trajectory[k].theta;
      const Vector& tp = pgd_rec.replicates[r].trajectory[k].theta;
      gap_sq += (ti - tp).squaredNorm();
      mean_ipla += ti;
      mean_pgd += tp;
    }
    mean_ipla /= static_cast<double>(n_rep);
    mean_pgd /= static_cast<double>(n_rep);
    table.add_row({"theta_gap_rms", csv::field(head.step), csv::field(head.time),
                   csv::field(std::sqrt(gap_sq / static_cast<double>(n_rep)))});
    for (Index j = 0; j < bm.spec.d_theta; ++j) {
      table.add_row({"theta_mean_ipla_" + std::to_string(j), csv::field(head.step),
                     csv::field(head.time), csv::field(mean_ipla[j])});
      table.add_row({"theta_mean_pgd_" + std::to_string(j), csv::field(head.step),
                     csv::field(head.time), csv::field(mean_pgd[j])});
    }
    if (info && info->theta_star) {
      for (const auto* rec : {&ipla_rec, &pgd_rec}) {
        std::vector<double> sq;
        for (std::size_t r = 0; r < n_rep; ++r)
          sq.push_back(
              (rec->replicates[r].trajectory[k].theta - *info->theta_star).squaredNorm());
        const RmseEstimate est = rmse_from_squares(sq);
        table.add_row({std::string("rmse_") + algorithm_name(rec->algorithm),
                       csv::field(head.step), csv::field(head.time), csv::field(est.value)});
      }
    }
  }

  // endpoint summaries
  const std::uint64_t last_step = cfg.run.n_steps;
  const double last_time = ipla_rec.replicates.front().trajectory.back().time;
  for (const auto* rec : {&ipla_rec, &pgd_rec}) {
    const std::string alg = algorithm_name(rec->algorithm);
    const Matrix finals = rec->final_thetas();
    for (Index j = 0; j < bm.spec.d_theta; ++j) {
      const double mean = finals.col(j).mean();
      const double var = finals.rows() > 1
                             ? (finals.col(j).array() - mean).square().sum() /
                                   static_cast<double>(finals.rows() - 1)
                             : 0.0;
      table.add_row({"final_theta_mean_" + alg + "_" + std::to_string(j),
                     csv::field(last_step), csv::field(last_time), csv::field(mean)});
      table.add_row({"final_theta_se_" + alg + "_" + std::to_string(j), csv::field(last_step),
                     csv::field(last_time),
                     csv::field(std::sqrt(var / static_cast<double>(finals.rows())))});
    }
    if (info && info->theta_star) {
      const RmseEstimate est = rmse_to_point(finals, *info->theta_star);
      table.add_row({"final_rmse_" + alg, csv::field(last_step), csv::field(last_time),
                     csv::field(est.value)});
      table.add_row({"final_rmse_se_" + alg, csv::field(last_step), csv::field(last_time),
                     csv::field(est.se)});
      out << alg << ": final rmse to theta* " << est.value << " (se " << est.se << ")\n";
    } else {
      out << alg << ": final theta mean";
      for (Index j = 0; j < bm.spec.d_theta; ++j) out << ' ' << finals.col(j).mean();
      out << '\n';
    }
  }

  table.write_file(dir / "compare.csv");
  write_config_echo(cfg, dir);
  if (opts.gnuplot)
    write_plot_script(
        dir,
        "set logscale y\nset xlabel \"time\"\nset ylabel \"rmse\"\n"
        "plot \"compare.csv\" using (strcol(1) eq \"rmse_ipla\" ? column(3) : 1/0):4 "
        "with lines title \"ipla\", \\\n"
        "     \"compare.csv\" using (strcol(1) eq \"rmse_pgd\" ? column(3) : 1/0):4 "
        "with lines title \"pgd\"\n");
  return kExitOk;
}

int cmd_chaos(const ExperimentConfig& cfg, const ExecOptions& opts, std::ostream& out) {
  if (!cfg.model.is_gaussian())
    throw UnsupportedModel("the chaos experiment needs the gaussian model");
  const auto& params = std::get<GaussianHierarchicalParams>(cfg.model.spec);
  const fs::path dir = prepare_output_dir(cfg);

  std::vector<long> n_values;
  if (cfg.sweep.variant == SweepVariant::n_particles)
    n_values = integral_values(cfg.sweep.values, "n_particles");
  else if (cfg.sweep.variant == SweepVariant::none)
    n_values = {cfg.run.n_particles};
  else
    throw ConfigError("chaos accepts only an n_particles sweep");

  csv::Table table({"n_particles", "replicate", "statistic", "value"});
  std::vector<std::pair<double, double>> fit_points;
  for (long n : n_values) {
    RunConfig rc = cfg.run;
    rc.n_particles = static_cast<int>(n);
    const ChaosRecord rec = coupled_chaos_run(params, rc, opts.threads);
    for (std::size_t r = 0; r < rec.sup_distance.size(); ++r)
      table.add_row({csv::field(n), csv::field(static_cast<long>(r)), "sup_distance",
                     csv::field(rec.sup_distance[r])});
    table.add_row({csv::field(n), "all", "mean_sup_distance", csv::field(rec.mean_sup_distance)});
    table.add_row({csv::field(n), "all", "se", csv::field(rec.se)});
    fit_points.push_back({static_cast<double>(n), rec.mean_sup_distance});
    out << "N = " << n << ": mean sup distance " << rec.mean_sup_distance << " (se " << rec.se
        << ")\n";
  }

  if (fit_points.size() >= 3) {
    const RateFit fit = fit_rate(fit_points);
    table.add_row({"all", "all", "slope", csv::field(fit.slope)});
    table.add_row({"all", "all", "intercept", csv::field(fit.intercept)});
    table.add_row({"all", "all", "r2", csv::field(fit.r2)});
    out << "sup distance vs N slope: " << fit.slope << " (r2 " << fit.r2 << ")\n";
  } else {
    out << "note: need at least 3 particle counts for a rate fit; distances only\n";
  }
  table.write_file(dir / "chaos.csv");
  write_config_echo(cfg, dir);
  if (opts.gnuplot)
    write_plot_script(
        dir,
        "set logscale xy\nset xlabel \"N\"\nset ylabel \"mean sup distance\"\n"
        "plot \"chaos.csv\" using 1:(strcol(3) eq \"mean_sup_distance\" ? column(4) : 1/0) "
        "with points\n");
  return kExitOk;
}

int cmd_gradcheck(const ExperimentConfig& cfg, const ExecOptions&, std::ostream& out) {
  const BuiltModel bm = build_model(cfg.model);
  const int points = 100;
  const double tolerance = 1e-5;
  const NoiseStream probe(cfg.run.seed, make_stream_id(0, 0x6AADCu));

  double worst_theta = 0.0, worst_x = 0.0;
  int worst_theta_point = -1, worst_x_point = -1;
  try {
    for (int k = 0; k < points; ++k) {
      const Vector v = probe.normals(static_cast<std::uint64_t>(k),
                                     bm.spec.d_theta + bm.spec.d_x);
      const Vector theta = v.head(bm.spec.d_theta);
      const Vector x = v.tail(bm.spec.d_x);
      const double h = cfg.gradcheck.h ? *cfg.gradcheck.h : default_fd_step(theta, x);
      const GradCheckReport report = check_gradients(bm.spec, theta, x, h);
      if (report.theta_rel_error > worst_theta) {
        worst_theta = report.theta_rel_error;
        worst_theta_point = k;
      }
      if (report.x_rel_error > worst_x) {
        worst_x = report.x_rel_error;
        worst_x_point = k;
      }
    }
  } catch (const NonFiniteEvaluation& e) {
    out << "gradcheck: FAIL (" << e.what() << ")\n";
    return kExitCheckFailed;
  }

  out << "gradcheck over " << points << " seeded points"
      << (cfg.gradcheck.h ? " (h = " + csv::field(*cfg.gradcheck.h) + ")" : "") << "\n";
  out << "  theta block: max rel error " << worst_theta << " at point " << worst_theta_point
      << "\n";
  out << "  x block:     max rel error " << worst_x << " at point " << worst_x_point << "\n";
  const bool pass = worst_theta < tolerance && worst_x < tolerance;
  if (!pass) {
    const bool theta_block_worst = worst_theta >= worst_x;
    out << "gradcheck: FAIL (worst block: " << (theta_block_worst ? "theta" : "x")
        << ", threshold " << tolerance << ")\n";
    return kExitCheckFailed;
  }
  out << "gradcheck: PASS (threshold " << tolerance << ")\n";
  return kExitOk;
}

int cmd_bound(const ExperimentConfig& cfg, const ExecOptions&, std::ostream& out) {
  const BuiltModel bm = build_model(cfg.model);
  const fs::path dir = prepare_output_dir(cfg);
  const BoundInputs inputs = bound_inputs_for(bm.spec, cfg.run, cfg.discretization_constant);
  const BoundTerms terms = error_bound(inputs);

  csv::Table table({"name", "value"});
  table.add_row({"mu", csv::field(inputs.mu)});
  table.add_row({"d_theta", csv::field(static_cast<long>(inputs.d_theta))});
  table.add_row({"d_x", csv::field(static_cast<long>(inputs.d_x))});
  table.add_row({"n_particles", csv::field(inputs.n_particles)});
  table.add_row({"n_steps", csv::field(inputs.n_steps)});
  table.add_row({"gamma", csv::field(inputs.gamma)});
  table.add_row({"z0_dist", csv::field(inputs.z0_dist)});
  if (inputs.c_disc) table.add_row({"discretization_constant", csv::field(*inputs.c_disc)});
  table.add_row({"term_concentration", csv::field(terms.concentration)});
  table.add_row({"term_ergodic", csv::field(terms.ergodic)});
  if (terms.has_discretization)
    table.add_row({"term_discretization", csv::field(terms.discretization)});
  table.add_row({"total", csv::field(terms.total)});
  table.add_row({"total_without_discretization",
                 csv::field(terms.concentration + terms.ergodic)});
  table.write_file(dir / "bound.csv");
  write_config_echo(cfg, dir);

  out << "concentration " << terms.concentration << "\nergodic " << terms.ergodic << '\n';
  if (terms.has_discretization) out << "discretization " << terms.discretization << '\n';
  out << "total " << terms.total << '\n';
  return kExitOk;
}

int run_experiment(const ExperimentConfig& cfg, ExperimentKind kind, const ExecOptions& opts,
                   std::ostream& out, std::ostream& err) {
  try {
    if (cfg.experiment && *cfg.experiment != kind)
      throw ConfigError("config field 'experiment' is '" + to_string(*cfg.experiment) +
                        "' but the '" + to_string(kind) + "' command was invoked");
    switch (kind) {
      case ExperimentKind::run: return cmd_run(cfg, opts, out);
      case ExperimentKind::sweep: return cmd_sweep(cfg, opts, out);
      case ExperimentKind::compare: return cmd_compare(cfg, opts, out);
      case ExperimentKind::chaos: return cmd_chaos(cfg, opts, out);
      case ExperimentKind::gradcheck: return cmd_gradcheck(cfg, opts, out);
      case ExperimentKind::bound: return cmd_bound(cfg, opts, out);
    }
    throw ConfigError("unknown experiment kind");
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const DivergedState& e) {
    err << "diverged: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  }
}

}  // namespace ipla
