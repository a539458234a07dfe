#include "ipla/config.hpp"

#include <fstream>

#include "ipla/errors.hpp"

namespace ipla {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, const std::string& ctx,
                         std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : allowed)
      if (it.key() == key) {
        known = true;
        break;
      }
    if (!known) throw ConfigError("unknown key '" + ctx + "." + it.key() + "'");
  }
}

const json* find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double get_double(const json& obj, const std::string& ctx, const char* key, double fallback,
                  bool required = false) {
  const json* v = find(obj, key);
  if (!v) {
    if (required) throw ConfigError("missing field '" + ctx + "." + key + "'");
    return fallback;
  }
  if (!v->is_number()) throw ConfigError("field '" + ctx + "." + key + "' must be a number");
  return v->get<double>();
}

std::uint64_t get_u64(const json& obj, const std::string& ctx, const char* key,
                      std::uint64_t fallback, bool required = false) {
  const json* v = find(obj, key);
  if (!v) {
    if (required) throw ConfigError("missing field '" + ctx + "." + key + "'");
    return fallback;
  }
  if (!v->is_number_integer() && !v->is_number_unsigned())
    throw ConfigError("field '" + ctx + "." + key + "' must be an integer");
  if (v->is_number_integer() && v->get<std::int64_t>() < 0)
    throw ConfigError("field '" + ctx + "." + key + "' must be nonnegative");
  return v->get<std::uint64_t>();
}

long get_long(const json& obj, const std::string& ctx, const char* key, long fallback,
              bool required = false) {
  const json* v = find(obj, key);
  if (!v) {
    if (required) throw ConfigError("missing field '" + ctx + "." + key + "'");
    return fallback;
  }
  if (!v->is_number_integer() && !v->is_number_unsigned())
    throw ConfigError("field '" + ctx + "." + key + "' must be an integer");
  return v->get<long>();
}

std::string get_string(const json& obj, const std::string& ctx, const char* key,
                       const std::string& fallback, bool required = false) {
  const json* v = find(obj, key);
  if (!v) {
    if (required) throw ConfigError("missing field '" + ctx + "." + key + "'");
    return fallback;
  }
  if (!v->is_string()) throw ConfigError("field '" + ctx + "." + key + "' must be a string");
  return v->get<std::string>();
}

// number -> length-1 vector; array -> vector
Vector get_vector(const json& obj, const std::string& ctx, const char* key) {
  const json* v = find(obj, key);
  if (!v) return Vector();
  if (v->is_number()) return Vector::Constant(1, v->get<double>());
  if (!v->is_array()) throw ConfigError("field '" + ctx + "." + key + "' must be a number or array");
  Vector out(static_cast<Index>(v->size()));
  Index i = 0;
  for (const auto& item : *v) {
    if (!item.is_number())
      throw ConfigError("field '" + ctx + "." + key + "' must hold numbers");
    out[i++] = item.get<double>();
  }
  return out;
}

InitSpec parse_init(const json& obj, const std::string& ctx) {
  InitSpec init;
  if (!obj.is_object()) throw ConfigError("field '" + ctx + "' must be an object");
  reject_unknown_keys(obj, ctx, {"type", "theta", "x", "theta_scale", "x_scale"});
  const std::string type = get_string(obj, ctx, "type", "point");
  if (type == "point")
    init.kind = InitKind::point;
  else if (type == "gaussian")
    init.kind = InitKind::gaussian;
  else
    throw ConfigError("field '" + ctx + ".type' must be 'point' or 'gaussian'");
  init.theta_mean = get_vector(obj, ctx, "theta");
  init.x_mean = get_vector(obj, ctx, "x");
  init.theta_scale = get_double(obj, ctx, "theta_scale", 1.0);
  init.x_scale = get_double(obj, ctx, "x_scale", 1.0);
  return init;
}

ModelConfig parse_model(const json& obj) {
  if (!obj.is_object()) throw ConfigError("field 'model' must be an object");
  const std::string type = get_string(obj, "model", "type", "", true);
  ModelConfig out;
  if (type == "gaussian") {
    reject_unknown_keys(obj, "model", {"type", "y", "sigma_lat", "sigma_obs"});
    GaussianHierarchicalParams p;
    p.y = get_vector(obj, "model", "y");
    if (p.y.size() == 0) throw ConfigError("missing field 'model.y'");
    p.sigma_lat = get_double(obj, "model", "sigma_lat", 1.0);
    p.sigma_obs = get_double(obj, "model", "sigma_obs", 1.0);
    out.spec = p;
  } else if (type == "logistic") {
    reject_unknown_keys(obj, "model", {"type", "sigma", "dataset", "synth"});
    LogisticModelConfig p;
    p.sigma = get_double(obj, "model", "sigma", 1.0);
    if (const json* dataset = find(obj, "dataset")) {
      if (!dataset->is_string()) throw ConfigError("field 'model.dataset' must be a string");
      p.dataset = dataset->get<std::string>();
    }
    if (const json* synth = find(obj, "synth")) {
      if (!synth->is_object()) throw ConfigError("field 'model.synth' must be an object");
      reject_unknown_keys(*synth, "model.synth", {"seed", "d_x", "d_y", "theta_gen"});
      LogisticSynthConfig s;
      s.seed = get_u64(*synth, "model.synth", "seed", 0, true);
      s.d_x = get_long(*synth, "model.synth", "d_x", 0, true);
      s.d_y = get_long(*synth, "model.synth", "d_y", 0, true);
      s.theta_gen = get_double(*synth, "model.synth", "theta_gen", 0.0);
      p.synth = s;
    }
    if (p.dataset.has_value() == p.synth.has_value())
      throw ConfigError("logistic model needs exactly one of 'model.dataset' or 'model.synth'");
    out.spec = p;
  } else {
    throw ConfigError("field 'model.type' must be 'gaussian' or 'logistic'");
  }
  return out;
}

SweepConfig parse_sweep(const json& obj) {
  if (!obj.is_object()) throw ConfigError("field 'sweep' must be an object");
  reject_unknown_keys(obj, "sweep", {"variant", "values", "reference_gamma"});
  SweepConfig out;
  const std::string variant = get_string(obj, "sweep", "variant", "", true);
  if (variant == "n_particles")
    out.variant = SweepVariant::n_particles;
  else if (variant == "gamma")
    out.variant = SweepVariant::gamma;
  else if (variant == "iterations")
    out.variant = SweepVariant::iterations;
  else
    throw ConfigError("field 'sweep.variant' must be n_particles, gamma or iterations");

  const json* values = find(obj, "values");
  if (!values || !values->is_array() || values->empty())
    throw ConfigError("field 'sweep.values' must be a non-empty array");
  double prev = 0.0;
  for (const auto& item : *values) {
    if (!item.is_number()) throw ConfigError("field 'sweep.values' must hold numbers");
    const double v = item.get<double>();
    if (v <= prev)
      throw ConfigError("field 'sweep.values' must be strictly increasing and positive");
    out.values.push_back(v);
    prev = v;
  }
  out.reference_gamma = get_double(obj, "sweep", "reference_gamma", 1e-4);
  return out;
}

}  // namespace

ExperimentKind experiment_kind_from(const std::string& name) {
  if (name == "run") return ExperimentKind::run;
  if (name == "sweep") return ExperimentKind::sweep;
  if (name == "compare") return ExperimentKind::compare;
  if (name == "chaos") return ExperimentKind::chaos;
  if (name == "gradcheck") return ExperimentKind::gradcheck;
  if (name == "bound") return ExperimentKind::bound;
  throw ConfigError("unknown experiment '" + name + "'");
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::run: return "run";
    case ExperimentKind::sweep: return "sweep";
    case ExperimentKind::compare: return "compare";
    case ExperimentKind::chaos: return "chaos";
    case ExperimentKind::gradcheck: return "gradcheck";
    case ExperimentKind::bound: return "bound";
  }
  return "run";
}

std::string to_string(AlgorithmChoice alg) {
  switch (alg) {
    case AlgorithmChoice::ipla: return "ipla";
    case AlgorithmChoice::pgd: return "pgd";
    case AlgorithmChoice::both: return "both";
  }
  return "ipla";
}

std::string to_string(SweepVariant variant) {
  switch (variant) {
    case SweepVariant::none: return "none";
    case SweepVariant::n_particles: return "n_particles";
    case SweepVariant::gamma: return "gamma";
    case SweepVariant::iterations: return "iterations";
  }
  return "none";
}

ExperimentConfig parse_experiment_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
  reject_unknown_keys(doc, "config",
                      {"experiment", "model", "run", "record_stride", "algorithm", "sweep",
                       "gradcheck", "discretization_constant", "output_dir"});

  ExperimentConfig cfg;
  if (const json* experiment = find(doc, "experiment")) {
    if (!experiment->is_string()) throw ConfigError("field 'experiment' must be a string");
    cfg.experiment = experiment_kind_from(experiment->get<std::string>());
  }

  const json* model = find(doc, "model");
  if (!model) throw ConfigError("missing field 'model'");
  cfg.model = parse_model(*model);

  if (const json* run = find(doc, "run")) {
    if (!run->is_object()) throw ConfigError("field 'run' must be an object");
    reject_unknown_keys(*run, "run",
                        {"n_particles", "gamma", "n_steps", "seed", "replicates", "init"});
    cfg.run.n_particles = static_cast<int>(get_long(*run, "run", "n_particles", 1));
    if (cfg.run.n_particles < 1) throw ConfigError("field 'run.n_particles' must be >= 1");
    cfg.run.gamma = get_double(*run, "run", "gamma", 0.01);
    if (!(cfg.run.gamma > 0.0)) throw ConfigError("field 'run.gamma' must be positive");
    cfg.run.n_steps = get_u64(*run, "run", "n_steps", 0);
    cfg.run.seed = get_u64(*run, "run", "seed", 0);
    cfg.run.replicates = static_cast<int>(get_long(*run, "run", "replicates", 1));
    if (cfg.run.replicates < 1) throw ConfigError("field 'run.replicates' must be >= 1");
    if (const json* init = find(*run, "init")) cfg.run.init = parse_init(*init, "run.init");
  }

  cfg.record_stride = get_u64(doc, "config", "record_stride", 0);

  const std::string alg = get_string(doc, "config", "algorithm", "ipla");
  if (alg == "ipla")
    cfg.algorithm = AlgorithmChoice::ipla;
  else if (alg == "pgd")
    cfg.algorithm = AlgorithmChoice::pgd;
  else if (alg == "both")
    cfg.algorithm = AlgorithmChoice::both;
  else
    throw ConfigError("field 'algorithm' must be ipla, pgd or both");

  if (const json* sweep = find(doc, "sweep")) cfg.sweep = parse_sweep(*sweep);

  if (const json* gradcheck = find(doc, "gradcheck")) {
    if (!gradcheck->is_object()) throw ConfigError("field 'gradcheck' must be an object");
    reject_unknown_keys(*gradcheck, "gradcheck", {"h"});
    if (find(*gradcheck, "h")) {
      const double h = get_double(*gradcheck, "gradcheck", "h", 0.0, true);
      if (!(h > 0.0)) throw ConfigError("field 'gradcheck.h' must be positive");
      cfg.gradcheck.h = h;
    }
  }

  if (find(doc, "discretization_constant")) {
    const double c = get_double(doc, "config", "discretization_constant", 0.0, true);
    if (!(c > 0.0)) throw ConfigError("field 'discretization_constant' must be positive");
    cfg.discretization_constant = c;
  }

  cfg.output_dir = get_string(doc, "config", "output_dir", "out");
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in " + path.string() + ": " + e.what());
  }
  return parse_experiment_config(doc);
}

json config_to_json(const ExperimentConfig& cfg) {
  json doc;
  if (cfg.experiment) doc["experiment"] = to_string(*cfg.experiment);

  json model;
  if (cfg.model.is_gaussian()) {
    const auto& p = std::get<GaussianHierarchicalParams>(cfg.model.spec);
    model["type"] = "gaussian";
    model["y"] = std::vector<double>(p.y.data(), p.y.data() + p.y.size());
    model["sigma_lat"] = p.sigma_lat;
    model["sigma_obs"] = p.sigma_obs;
  } else {
    const auto& p = std::get<LogisticModelConfig>(cfg.model.spec);
    model["type"] = "logistic";
    model["sigma"] = p.sigma;
    if (p.dataset) model["dataset"] = *p.dataset;
    if (p.synth) {
      json synth;
      synth["seed"] = p.synth->seed;
      synth["d_x"] = p.synth->d_x;
      synth["d_y"] = p.synth->d_y;
      synth["theta_gen"] = p.synth->theta_gen;
      model["synth"] = synth;
    }
  }
  doc["model"] = model;

  json run;
  run["n_particles"] = cfg.run.n_particles;
  run["gamma"] = cfg.run.gamma;
  run["n_steps"] = cfg.run.n_steps;
  run["seed"] = cfg.run.seed;
  run["replicates"] = cfg.run.replicates;
  json init;
  init["type"] = cfg.run.init.kind == InitKind::point ? "point" : "gaussian";
  init["theta"] = std::vector<double>(cfg.run.init.theta_mean.data(),
                                      cfg.run.init.theta_mean.data() + cfg.run.init.theta_mean.size());
  init["x"] = std::vector<double>(cfg.run.init.x_mean.data(),
                                  cfg.run.init.x_mean.data() + cfg.run.init.x_mean.size());
  init["theta_scale"] = cfg.run.init.theta_scale;
  init["x_scale"] = cfg.run.init.x_scale;
  run["init"] = init;
  doc["run"] = run;

  doc["record_stride"] = cfg.record_stride;
  doc["algorithm"] = to_string(cfg.algorithm);
  if (cfg.sweep.variant != SweepVariant::none) {
    json sweep;
    sweep["variant"] = to_string(cfg.sweep.variant);
    sweep["values"] = cfg.sweep.values;
    if (cfg.sweep.variant == SweepVariant::gamma)
      sweep["reference_gamma"] = cfg.sweep.reference_gamma;
    doc["sweep"] = sweep;
  }
  if (cfg.gradcheck.h) {
    json gradcheck;
    gradcheck["h"] = *cfg.gradcheck.h;
    doc["gradcheck"] = gradcheck;
  }
  if (cfg.discretization_constant)
    doc["discretization_constant"] = *cfg.discretization_constant;
  doc["output_dir"] = cfg.output_dir;
  return doc;
}

BuiltModel build_model(const ModelConfig& cfg) {
  BuiltModel out;
  if (cfg.is_gaussian()) {
    const auto& p = std::get<GaussianHierarchicalParams>(cfg.spec);
    out.spec = make_gaussian_model(p);
    out.gaussian = p;
  } else {
    const auto& p = std::get<LogisticModelConfig>(cfg.spec);
    if (p.dataset) {
      out.spec = make_logistic_model(load_logistic_csv(*p.dataset, p.sigma));
    } else {
      const auto synth = synthesize_logistic_data(p.synth->seed, p.synth->d_x, p.synth->d_y,
                                                  p.synth->theta_gen, p.sigma);
      out.spec = make_logistic_model(synth.params);
      out.theta_gen = synth.theta_gen;
    }
  }
  return out;
}

}  // namespace ipla
