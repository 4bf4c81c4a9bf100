#include "repmc/config.hpp"

#include <set>

#include <json.hpp>

namespace repmc {

namespace {

using nlohmann::json;

[[noreturn]] void config_fail(const std::string& path, const std::string& what) {
  throw ConfigError("config error at '" + path + "': " + what);
}

void reject_unknown_keys(const json& obj, const std::string& path,
                         const std::set<std::string>& allowed) {
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      config_fail(path + "." + item.key(), "unknown key");
    }
  }
}

double get_number(const json& obj, const std::string& path, const char* key,
                  double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) config_fail(path + "." + key, "expected a number");
  return v.get<double>();
}

std::size_t get_count(const json& obj, const std::string& path, const char* key,
                      std::size_t fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_unsigned()) {
    config_fail(path + "." + key, "expected a nonnegative integer");
  }
  return v.get<std::size_t>();
}

bool get_bool(const json& obj, const std::string& path, const char* key,
              bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) config_fail(path + "." + key, "expected a boolean");
  return v.get<bool>();
}

std::string get_string(const json& obj, const std::string& path, const char* key,
                       const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) config_fail(path + "." + key, "expected a string");
  return v.get<std::string>();
}

Vec get_vector(const json& v, const std::string& path) {
  if (!v.is_array()) config_fail(path, "expected an array of numbers");
  Vec out;
  for (const json& e : v) {
    if (!e.is_number()) config_fail(path, "expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

GaussianMixture default_toy_mixture() {
  GaussianMixture gm;
  gm.means = {{-3.0, 0.0}, {3.0, 0.0}};
  gm.variances = {{0.5, 0.5}, {0.5, 0.5}};
  gm.weights = {0.5, 0.5};
  return gm;
}

GaussianMixture parse_mixture(const json& obj, const std::string& path) {
  reject_unknown_keys(obj, path, {"means", "variances", "weights"});
  GaussianMixture gm;
  if (!obj.contains("means") || !obj.contains("variances") ||
      !obj.contains("weights")) {
    config_fail(path, "mixture needs means, variances and weights");
  }
  for (const json& m : obj.at("means")) {
    gm.means.push_back(get_vector(m, path + ".means"));
  }
  for (const json& v : obj.at("variances")) {
    gm.variances.push_back(get_vector(v, path + ".variances"));
  }
  gm.weights = get_vector(obj.at("weights"), path + ".weights");
  try {
    gm.validate();
  } catch (const Error& e) {
    config_fail(path, e.what());
  }
  return gm;
}

TaskConfig parse_task(const json& obj) {
  const std::string path = "task";
  TaskConfig task;
  std::string kind = get_string(obj, path, "kind", "toy2d");
  if (kind == "toy2d") {
    task.kind = TaskKind::Toy2d;
    reject_unknown_keys(obj, path, {"kind", "mixture", "init"});
    task.mixture = obj.contains("mixture")
                       ? parse_mixture(obj.at("mixture"), path + ".mixture")
                       : default_toy_mixture();
    task.init = obj.contains("init")
                    ? get_vector(obj.at("init"), path + ".init")
                    : Vec{-1.0, 0.0};
    if (task.init.size() != task.mixture.dim()) {
      config_fail(path + ".init", "init dimension must match the mixture");
    }
  } else if (kind == "synthetic-classifier") {
    task.kind = TaskKind::SyntheticClassifier;
    reject_unknown_keys(obj, path,
                        {"kind", "n", "classes", "input_dim", "feature_dim",
                         "hidden_dim", "adapter", "temperature", "seed",
                         "eval_size", "batch_size", "prior_precision",
                         "init_scale"});
    TaskParams& p = task.params;
    p.train_size = get_count(obj, path, "n", p.train_size);
    p.num_classes = get_count(obj, path, "classes", p.num_classes);
    p.input_dim = get_count(obj, path, "input_dim", p.input_dim);
    p.feature_dim = get_count(obj, path, "feature_dim", p.feature_dim);
    p.hidden_dim = get_count(obj, path, "hidden_dim", p.hidden_dim);
    p.temperature = get_number(obj, path, "temperature", p.temperature);
    p.seed = get_count(obj, path, "seed", p.seed);
    p.eval_size = get_count(obj, path, "eval_size", p.eval_size);
    std::string adapter = get_string(obj, path, "adapter", "mlp");
    if (adapter == "shift") {
      p.adapter = AdapterKind::Shift;
    } else if (adapter == "mlp") {
      p.adapter = AdapterKind::Mlp;
    } else {
      config_fail(path + ".adapter", "expected 'shift' or 'mlp'");
    }
    task.batch_size = get_count(obj, path, "batch_size", task.batch_size);
    task.prior_precision =
        get_number(obj, path, "prior_precision", task.prior_precision);
    task.init_scale = get_number(obj, path, "init_scale", task.init_scale);
    if (p.train_size < p.num_classes) {
      config_fail(path + ".n", "need n >= number of classes");
    }
    if (p.temperature <= 0.0) {
      config_fail(path + ".temperature", "temperature must be positive");
    }
    if (task.prior_precision < 0.0) {
      config_fail(path + ".prior_precision", "must be >= 0");
    }
  } else {
    config_fail(path + ".kind", "expected 'toy2d' or 'synthetic-classifier'");
  }
  return task;
}

SamplerBlock parse_sampler(const json& obj, TaskKind task_kind) {
  const std::string path = "sampler";
  reject_unknown_keys(obj, path,
                      {"algorithm", "cycles", "iters_per_cycle", "beta",
                       "step_size", "friction", "gamma_hat", "chains", "burnin",
                       "burnin_fraction", "momentum_reset"});
  SamplerBlock s;
  std::string algo = get_string(obj, path, "algorithm", "rcsghmc");
  if (algo == "sgld") {
    s.algorithm = AlgorithmChoice::Sgld;
  } else if (algo == "sghmc") {
    s.algorithm = AlgorithmChoice::Sghmc;
  } else if (algo == "rcsghmc") {
    s.algorithm = AlgorithmChoice::Rcsghmc;
  } else if (algo == "map") {
    s.algorithm = AlgorithmChoice::Map;
  } else {
    config_fail(path + ".algorithm",
                "expected one of sgld, sghmc, rcsghmc, map");
  }
  s.cycles = get_count(obj, path, "cycles", s.cycles);
  s.iters_per_cycle = get_count(obj, path, "iters_per_cycle", s.iters_per_cycle);
  s.beta = get_number(obj, path, "beta", s.beta);
  s.step_size = get_number(obj, path, "step_size", s.step_size);
  s.friction = get_number(obj, path, "friction", s.friction);
  s.gamma_hat = get_number(obj, path, "gamma_hat", s.gamma_hat);
  s.chains = get_count(obj, path, "chains", s.chains);
  s.momentum_reset = get_bool(obj, path, "momentum_reset", s.momentum_reset);

  std::string burnin_default =
      task_kind == TaskKind::SyntheticClassifier ? "adaptive-moment" : "none";
  std::string burnin = get_string(obj, path, "burnin", burnin_default);
  if (burnin == "none") {
    s.burnin = BurnIn::None;
  } else if (burnin == "adaptive-moment") {
    s.burnin = BurnIn::AdaptiveMoment;
  } else {
    config_fail(path + ".burnin", "expected 'none' or 'adaptive-moment'");
  }
  if (obj.contains("burnin_fraction")) {
    s.burnin_fraction = get_number(obj, path, "burnin_fraction", 0.0);
  }

  if (s.cycles < 1) config_fail(path + ".cycles", "must be >= 1");
  if (s.iters_per_cycle < 1) config_fail(path + ".iters_per_cycle", "must be >= 1");
  if (s.beta < 0.0 || s.beta > 1.0) config_fail(path + ".beta", "must lie in [0, 1]");
  if (s.step_size <= 0.0) config_fail(path + ".step_size", "must be positive");
  if (s.friction <= 0.0 || s.friction > 1.0) {
    config_fail(path + ".friction", "must lie in (0, 1]");
  }
  if (s.gamma_hat < 0.0 || s.gamma_hat >= s.friction) {
    config_fail(path + ".gamma_hat", "need 0 <= gamma_hat < friction");
  }
  if (s.chains < 1) config_fail(path + ".chains", "must be >= 1");
  if (s.burnin_fraction &&
      (*s.burnin_fraction < 0.0 || *s.burnin_fraction > s.beta)) {
    config_fail(path + ".burnin_fraction", "must lie in [0, beta]");
  }
  return s;
}

RepulsionConfig parse_repulsion(const json& obj, TaskKind task_kind) {
  const std::string path = "repulsion";
  reject_unknown_keys(obj, path,
                      {"mode", "metric", "strength", "epsilon", "batch_size",
                       "mmd_sigma"});
  RepulsionConfig r;
  r.mode = task_kind == TaskKind::SyntheticClassifier
               ? RepulsionMode::Representation
               : RepulsionMode::ParameterEuclidean;
  std::string mode_default = r.mode == RepulsionMode::Representation
                                 ? "representation"
                                 : "parameter-euclidean";
  std::string mode = get_string(obj, path, "mode", mode_default);
  if (mode == "parameter-euclidean") {
    r.mode = RepulsionMode::ParameterEuclidean;
  } else if (mode == "representation") {
    r.mode = RepulsionMode::Representation;
  } else {
    config_fail(path + ".mode", "expected 'parameter-euclidean' or 'representation'");
  }
  std::string metric = get_string(obj, path, "metric", "mmd");
  if (metric == "mmd") {
    r.metric = DistanceMetric::Mmd;
  } else if (metric == "wasserstein") {
    r.metric = DistanceMetric::Wasserstein;
  } else {
    config_fail(path + ".metric", "expected 'mmd' or 'wasserstein'");
  }
  r.strength = get_number(obj, path, "strength", r.strength);
  r.epsilon = get_number(obj, path, "epsilon", r.epsilon);
  r.probe_batch_size = get_count(obj, path, "batch_size", r.probe_batch_size);
  r.mmd_sigma = get_number(obj, path, "mmd_sigma", r.mmd_sigma);
  try {
    r.validate();
  } catch (const Error& e) {
    config_fail(path, e.what());
  }
  if (r.mode == RepulsionMode::Representation &&
      task_kind == TaskKind::Toy2d) {
    config_fail(path + ".mode",
                "representation mode needs the synthetic-classifier task");
  }
  return r;
}

AblateBlock parse_ablate(const json& obj) {
  const std::string path = "ablate";
  reject_unknown_keys(obj, path, {"sweep", "values"});
  AblateBlock a;
  a.sweep = get_string(obj, path, "sweep", "");
  if (a.sweep != "xi" && a.sweep != "cycles" && a.sweep != "repulsion_batch") {
    config_fail(path + ".sweep", "expected one of xi, cycles, repulsion_batch");
  }
  if (!obj.contains("values")) config_fail(path + ".values", "missing");
  a.values = get_vector(obj.at("values"), path + ".values");
  if (a.values.empty()) config_fail(path + ".values", "must be nonempty");
  for (double v : a.values) {
    if (a.sweep != "xi" && (v < 1.0 || v != static_cast<double>(static_cast<std::size_t>(v)))) {
      config_fail(path + ".values", "sweep '" + a.sweep + "' needs positive integers");
    }
  }
  return a;
}

DiversityBlock parse_diversity(const json& obj) {
  const std::string path = "diversity";
  reject_unknown_keys(obj, path, {"probe_size"});
  DiversityBlock d;
  d.probe_size = get_count(obj, path, "probe_size", d.probe_size);
  if (d.probe_size < 2) config_fail(path + ".probe_size", "must be >= 2");
  return d;
}

}  // namespace

CyclicalSchedule ExperimentConfig::schedule() const {
  CyclicalSchedule s;
  s.step_size_init = sampler.step_size;
  s.iters_per_cycle = sampler.iters_per_cycle;
  s.cycles = sampler.cycles;
  s.exploration_fraction = sampler.beta;
  return s;
}

SghmcConfig ExperimentConfig::sghmc() const {
  SghmcConfig c;
  c.friction = sampler.friction;
  c.gamma_hat = sampler.gamma_hat;
  c.repulsion = repulsion;
  c.burnin = sampler.burnin;
  c.burnin_fraction = sampler.burnin_fraction;
  c.momentum_reset = sampler.momentum_reset;
  return c;
}

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
  reject_unknown_keys(doc, "$",
                      {"task", "sampler", "repulsion", "output", "seeds",
                       "ablate", "diversity"});

  ExperimentConfig cfg;
  cfg.task = parse_task(doc.value("task", json::object()));
  cfg.sampler = parse_sampler(doc.value("sampler", json::object()), cfg.task.kind);
  cfg.repulsion = parse_repulsion(doc.value("repulsion", json::object()),
                                  cfg.task.kind);
  if (doc.contains("output")) {
    const json& out = doc.at("output");
    reject_unknown_keys(out, "output", {"dir"});
    cfg.output_dir = get_string(out, "output", "dir", cfg.output_dir);
  }
  if (doc.contains("seeds")) {
    const json& seeds = doc.at("seeds");
    if (!seeds.is_array() || seeds.empty()) {
      throw ConfigError("config error at 'seeds': expected a nonempty array");
    }
    cfg.seeds.clear();
    for (const json& s : seeds) {
      if (!s.is_number_unsigned()) {
        throw ConfigError("config error at 'seeds': expected unsigned integers");
      }
      cfg.seeds.push_back(s.get<std::uint64_t>());
    }
  }
  if (doc.contains("ablate")) cfg.ablate = parse_ablate(doc.at("ablate"));
  if (doc.contains("diversity")) {
    cfg.diversity = parse_diversity(doc.at("diversity"));
  }

  // Cross-checks that need the full document.
  if (cfg.task.kind == TaskKind::SyntheticClassifier &&
      cfg.repulsion.mode == RepulsionMode::Representation &&
      cfg.repulsion.probe_batch_size > cfg.task.params.eval_size) {
    throw ConfigError(
        "config error at 'repulsion.batch_size': exceeds task.eval_size");
  }
  try {
    SghmcConfig sc = cfg.sghmc();
    sc.validate(cfg.schedule());
  } catch (const Error& e) {
    throw ConfigError(std::string("config error: ") + e.what());
  }
  return cfg;
}

std::string effective_config_json(const ExperimentConfig& cfg) {
  json doc;
  json task;
  if (cfg.task.kind == TaskKind::Toy2d) {
    task["kind"] = "toy2d";
    json mixture;
    mixture["means"] = cfg.task.mixture.means;
    mixture["variances"] = cfg.task.mixture.variances;
    mixture["weights"] = cfg.task.mixture.weights;
    task["mixture"] = mixture;
    task["init"] = cfg.task.init;
  } else {
    task["kind"] = "synthetic-classifier";
    task["n"] = cfg.task.params.train_size;
    task["classes"] = cfg.task.params.num_classes;
    task["input_dim"] = cfg.task.params.input_dim;
    task["feature_dim"] = cfg.task.params.feature_dim;
    task["hidden_dim"] = cfg.task.params.hidden_dim;
    task["adapter"] =
        cfg.task.params.adapter == AdapterKind::Shift ? "shift" : "mlp";
    task["temperature"] = cfg.task.params.temperature;
    task["seed"] = cfg.task.params.seed;
    task["eval_size"] = cfg.task.params.eval_size;
    task["batch_size"] = cfg.task.batch_size;
    task["prior_precision"] = cfg.task.prior_precision;
    task["init_scale"] = cfg.task.init_scale;
  }
  doc["task"] = task;

  json sampler;
  switch (cfg.sampler.algorithm) {
    case AlgorithmChoice::Sgld: sampler["algorithm"] = "sgld"; break;
    case AlgorithmChoice::Sghmc: sampler["algorithm"] = "sghmc"; break;
    case AlgorithmChoice::Rcsghmc: sampler["algorithm"] = "rcsghmc"; break;
    case AlgorithmChoice::Map: sampler["algorithm"] = "map"; break;
  }
  sampler["cycles"] = cfg.sampler.cycles;
  sampler["iters_per_cycle"] = cfg.sampler.iters_per_cycle;
  sampler["beta"] = cfg.sampler.beta;
  sampler["step_size"] = cfg.sampler.step_size;
  sampler["friction"] = cfg.sampler.friction;
  sampler["gamma_hat"] = cfg.sampler.gamma_hat;
  sampler["chains"] = cfg.sampler.chains;
  sampler["burnin"] =
      cfg.sampler.burnin == BurnIn::AdaptiveMoment ? "adaptive-moment" : "none";
  if (cfg.sampler.burnin_fraction) {
    sampler["burnin_fraction"] = *cfg.sampler.burnin_fraction;
  }
  sampler["momentum_reset"] = cfg.sampler.momentum_reset;
  doc["sampler"] = sampler;

  json repulsion;
  repulsion["mode"] = cfg.repulsion.mode == RepulsionMode::Representation
                          ? "representation"
                          : "parameter-euclidean";
  repulsion["metric"] =
      cfg.repulsion.metric == DistanceMetric::Mmd ? "mmd" : "wasserstein";
  repulsion["strength"] = cfg.repulsion.strength;
  repulsion["epsilon"] = cfg.repulsion.epsilon;
  repulsion["batch_size"] = cfg.repulsion.probe_batch_size;
  repulsion["mmd_sigma"] = cfg.repulsion.mmd_sigma;
  doc["repulsion"] = repulsion;

  doc["output"]["dir"] = cfg.output_dir;
  doc["seeds"] = cfg.seeds;
  if (!cfg.ablate.sweep.empty()) {
    doc["ablate"]["sweep"] = cfg.ablate.sweep;
    doc["ablate"]["values"] = cfg.ablate.values;
  }
  doc["diversity"]["probe_size"] = cfg.diversity.probe_size;
  return doc.dump(2);
}

}  // namespace repmc
