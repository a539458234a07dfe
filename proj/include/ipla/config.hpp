#ifndef IPLA_CONFIG_HPP
#define IPLA_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ipla/sampler.hpp"
#include "ipla/toy_models.hpp"
#include "ipla/types.hpp"

namespace ipla {

enum class ExperimentKind { run, sweep, compare, chaos, gradcheck, bound };
enum class AlgorithmChoice { ipla, pgd, both };
enum class SweepVariant { none, n_particles, gamma, iterations };

ExperimentKind experiment_kind_from(const std::string& name);
std::string to_string(ExperimentKind kind);
std::string to_string(AlgorithmChoice alg);
std::string to_string(SweepVariant variant);

struct LogisticSynthConfig {
  std::uint64_t seed = 0;
  long d_x = 1;
  long d_y = 1;
  double theta_gen = 0.0;
};

struct LogisticModelConfig {
  double sigma = 1.0;
  std::optional<std::string> dataset;          // CSV path, or
  std::optional<LogisticSynthConfig> synth;    // generated data
};

struct ModelConfig {
  std::variant<GaussianHierarchicalParams, LogisticModelConfig> spec;

  bool is_gaussian() const {
    return std::holds_alternative<GaussianHierarchicalParams>(spec);
  }
};

struct SweepConfig {
  SweepVariant variant = SweepVariant::none;
  std::vector<double> values;
  double reference_gamma = 1e-4;  // gamma sweeps only
};

struct GradcheckConfig {
  std::optional<double> h;  // default: 1e-5 * (1 + |point|_inf)
};

struct ExperimentConfig {
  std::optional<ExperimentKind> experiment;
  ModelConfig model;
  RunConfig run;
  std::uint64_t record_stride = 0;  // 0: endpoints only
  AlgorithmChoice algorithm = AlgorithmChoice::ipla;
  SweepConfig sweep;
  GradcheckConfig gradcheck;
  std::optional<double> discretization_constant;
  std::string output_dir = "out";
};

/// Strict parser: unknown keys and type mismatches raise ConfigError with
/// the offending field named.
ExperimentConfig parse_experiment_config(const nlohmann::json& doc);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Canonical echo: parse(config_to_json(c)) reproduces c, and serialising
/// twice gives identical bytes.
nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// Instantiated model plus the bits of provenance the harness reports.
struct BuiltModel {
  ModelSpec spec;
  std::optional<GaussianHierarchicalParams> gaussian;
  std::optional<double> theta_gen;  // synthetic logistic data only
};

BuiltModel build_model(const ModelConfig& cfg);

}  // namespace ipla

#endif  // IPLA_CONFIG_HPP
