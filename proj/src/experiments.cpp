#include "repmc/experiments.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <memory>

#include <json.hpp>

#include "repmc/diagnostics.hpp"

namespace repmc {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// 17 significant digits: doubles round-trip losslessly through the CSVs.
std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string());
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string trajectory_csv(const RunResult& result) {
  if (result.trajectories.empty()) return {};
  std::size_t K = result.trajectories.size();
  std::size_t T = result.archive.iters_per_cycle;
  std::size_t C = result.archive.cycles.size();
  std::size_t D = result.trajectories.front().front().size();

  std::string out = "cycle,iter,chain";
  for (std::size_t d = 0; d < D; ++d) out += ",theta" + std::to_string(d);
  out += "\n";
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t k = 0; k < K; ++k) {
        const ParamVector& theta = result.trajectories[k][c * T + t];
        out += std::to_string(c + 1) + "," + std::to_string(t + 1) + "," +
               std::to_string(k);
        for (double v : theta) out += "," + g17(v);
        out += "\n";
      }
    }
  }
  return out;
}

std::string samples_csv(const SampleArchive& archive) {
  if (archive.cycles.empty()) return {};
  std::size_t D = archive.cycles.front().end_samples.front().size();
  std::string out = "cycle,chain";
  for (std::size_t d = 0; d < D; ++d) out += ",theta" + std::to_string(d);
  out += "\n";
  for (std::size_t c = 0; c < archive.cycles.size(); ++c) {
    for (std::size_t k = 0; k < archive.chains; ++k) {
      out += std::to_string(c + 1) + "," + std::to_string(k);
      for (double v : archive.cycles[c].end_samples[k]) out += "," + g17(v);
      out += "\n";
    }
  }
  return out;
}

std::string distance_matrix_csv(const DistanceMatrix& dm) {
  std::string out;
  for (std::size_t i = 0; i < dm.labels.size(); ++i) {
    if (i > 0) out += ",";
    out += dm.labels[i];
  }
  out += "\n";
  for (std::size_t i = 0; i < dm.size(); ++i) {
    for (std::size_t j = 0; j < dm.size(); ++j) {
      if (j > 0) out += ",";
      out += g17(dm.entries.at(i, j));
    }
    out += "\n";
  }
  return out;
}

Algorithm to_algorithm(AlgorithmChoice choice) {
  switch (choice) {
    case AlgorithmChoice::Sgld: return Algorithm::Sgld;
    case AlgorithmChoice::Sghmc: return Algorithm::Sghmc;
    case AlgorithmChoice::Rcsghmc: return Algorithm::Rcsghmc;
    default:
      throw ConfigError("this command cannot run with sampler.algorithm=map");
  }
}

const char* algorithm_name(AlgorithmChoice choice) {
  switch (choice) {
    case AlgorithmChoice::Sgld: return "sgld";
    case AlgorithmChoice::Sghmc: return "sghmc";
    case AlgorithmChoice::Rcsghmc: return "rcsghmc";
    default: return "map";
  }
}

// Everything a single seeded run needs, kept alive together.
struct TaskBundle {
  std::unique_ptr<SyntheticTask> task;  // classifier only
  std::unique_ptr<Potential> potential;
};

TaskBundle build_task(const ExperimentConfig& cfg) {
  TaskBundle bundle;
  if (cfg.task.kind == TaskKind::Toy2d) {
    bundle.potential = std::make_unique<MixturePotential>(cfg.task.mixture);
  } else {
    bundle.task = std::make_unique<SyntheticTask>(
        make_synthetic_task(cfg.task.params));
    bundle.potential = std::make_unique<ClassifierPotential>(
        *bundle.task, cfg.task.prior_precision);
  }
  return bundle;
}

RunResult run_sampler(const ExperimentConfig& cfg, const TaskBundle& bundle,
                      std::uint64_t seed) {
  RunOptions opts;
  opts.algorithm = to_algorithm(cfg.sampler.algorithm);
  opts.chains = cfg.sampler.chains;
  opts.seed = seed;
  if (cfg.task.kind == TaskKind::Toy2d) {
    opts.init = {cfg.task.init};
    opts.batch_size = 0;
  } else {
    opts.param_dim = bundle.task->model.param_dim();
    opts.init_scale = cfg.task.init_scale;
    opts.batch_size = cfg.task.batch_size;
    opts.model = &bundle.task->model;
    opts.backbone = &bundle.task->backbone;
    opts.probe_pool = &bundle.task->eval.inputs;
  }
  return run(cfg.schedule(), cfg.sghmc(), *bundle.potential, opts);
}

ParamVector map_init(const ExperimentConfig& cfg, const TaskBundle& bundle,
                     std::uint64_t seed) {
  if (cfg.task.kind == TaskKind::Toy2d) return cfg.task.init;
  RngStream rng(seed, 0);
  ParamVector theta0 = gaussian_noise(rng, bundle.task->model.param_dim());
  for (double& v : theta0) v *= cfg.task.init_scale;
  return theta0;
}

// Run a list of independent jobs with a bounded number of workers; results
// depend only on each job's inputs, so the schedule never shows in outputs.
void run_parallel(std::size_t count, int jobs,
                  const std::function<void(std::size_t)>& work) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) work(i);
    return;
  }
  std::size_t window = std::min<std::size_t>(jobs, count);
  std::vector<std::future<void>> futures;
  std::size_t next = 0;
  while (next < count || !futures.empty()) {
    while (next < count && futures.size() < window) {
      futures.push_back(std::async(std::launch::async, work, next));
      ++next;
    }
    futures.front().get();
    futures.erase(futures.begin());
  }
}

std::vector<std::uint64_t> effective_seeds(const ExperimentConfig& cfg,
                                           const ExperimentOptions& options) {
  return options.seeds_override.empty() ? cfg.seeds : options.seeds_override;
}

fs::path effective_outdir(const ExperimentConfig& cfg,
                          const ExperimentOptions& options) {
  return options.outdir_override.empty() ? fs::path(cfg.output_dir)
                                         : fs::path(options.outdir_override);
}

json member_metrics_json(const EvalMetrics& m) {
  return json{{"accuracy", m.accuracy}, {"nll", m.mean_nll}};
}

// ---------------------------------------------------------------------------
// toy2d
// ---------------------------------------------------------------------------

json run_toy2d_seed(const ExperimentConfig& cfg, std::uint64_t seed,
                    const fs::path& seed_dir) {
  TaskBundle bundle = build_task(cfg);
  ensure_dir(seed_dir);

  json report;
  report["seed"] = seed;
  report["algorithm"] = algorithm_name(cfg.sampler.algorithm);
  std::vector<std::string> files;

  std::vector<ParamVector> samples;
  if (cfg.sampler.algorithm == AlgorithmChoice::Map) {
    MapResult map = map_baseline(*bundle.potential, map_init(cfg, bundle, seed),
                                 cfg.sampler.step_size);
    samples = {map.theta};
    report["final_potentials"] = {map.potential_value};
    report["map_grad_norm"] = map.grad_norm;
    std::string csv = "cycle,chain";
    for (std::size_t d = 0; d < map.theta.size(); ++d) {
      csv += ",theta" + std::to_string(d);
    }
    csv += "\n1,0";
    for (double v : map.theta) csv += "," + g17(v);
    csv += "\n";
    write_file(seed_dir / "samples.csv", csv);
    files.push_back("samples.csv");
  } else {
    RunResult result = run_sampler(cfg, bundle, seed);
    samples = result.archive.all_samples();
    json potentials = json::array();
    for (const CycleRecord& rec : result.archive.cycles) {
      for (double u : rec.end_potentials) potentials.push_back(u);
    }
    report["final_potentials"] = potentials;
    write_file(seed_dir / "trajectory.csv", trajectory_csv(result));
    write_file(seed_dir / "samples.csv", samples_csv(result.archive));
    files.push_back("trajectory.csv");
    files.push_back("samples.csv");
  }

  const GaussianMixture& gm = cfg.task.mixture;
  double radius = default_coverage_radius(gm);
  ModeCoverageReport coverage = mode_coverage(samples, gm, radius);
  report["coverage"] = coverage.coverage;
  report["coverage_radius"] = coverage.radius;
  json hits = json::array();
  for (bool h : coverage.hit) hits.push_back(h);
  report["mode_hits"] = hits;
  report["files"] = files;

  write_file(seed_dir / "report.json", report.dump(2) + "\n");
  return report;
}

json cmd_toy2d(const ExperimentConfig& cfg, const fs::path& outdir,
               const std::vector<std::uint64_t>& seeds, int jobs) {
  if (cfg.task.kind != TaskKind::Toy2d) {
    throw ConfigError("toy2d needs task.kind = 'toy2d'");
  }
  fs::path root = outdir / "toy2d";
  ensure_dir(root);

  std::vector<json> runs(seeds.size());
  run_parallel(seeds.size(), jobs, [&](std::size_t i) {
    runs[i] = run_toy2d_seed(cfg, seeds[i], root / std::to_string(seeds[i]));
  });

  double mean_coverage = 0.0;
  json run_array = json::array();
  for (const json& r : runs) {
    mean_coverage += r.at("coverage").get<double>();
    run_array.push_back(r);
  }
  mean_coverage /= static_cast<double>(runs.size());

  json report;
  report["experiment"] = "toy2d";
  report["seeds"] = seeds;
  report["runs"] = run_array;
  report["aggregate"] = {{"mean_coverage", mean_coverage}};
  write_file(root / "report.json", report.dump(2) + "\n");
  return report;
}

// ---------------------------------------------------------------------------
// ensemble-eval
// ---------------------------------------------------------------------------

json run_ensemble_seed(const ExperimentConfig& cfg, std::uint64_t seed,
                       const fs::path& seed_dir) {
  TaskBundle bundle = build_task(cfg);
  ensure_dir(seed_dir);

  json report;
  report["seed"] = seed;
  std::vector<std::string> files;

  // MAP baseline on the same data and seed.
  MapResult map = map_baseline(*bundle.potential, map_init(cfg, bundle, seed),
                               cfg.sampler.step_size);
  EvalMetrics map_eval = evaluate_member(map.theta, *bundle.task,
                                         bundle.task->eval);
  EvalMetrics map_train = evaluate_member(map.theta, *bundle.task,
                                          bundle.task->train);
  report["map"] = {{"holdout", member_metrics_json(map_eval)},
                   {"train", member_metrics_json(map_train)},
                   {"grad_norm", map.grad_norm}};

  // Posterior sample archive with the configured sampler.
  RunResult result = run_sampler(cfg, bundle, seed);
  std::vector<ParamVector> samples = result.archive.all_samples();
  Vec weights(samples.size(), 1.0 / static_cast<double>(samples.size()));

  json members = json::array();
  double mean_member_nll = 0.0;
  double mean_member_acc = 0.0;
  for (const ParamVector& theta : samples) {
    EvalMetrics m = evaluate_member(theta, *bundle.task, bundle.task->eval);
    members.push_back(member_metrics_json(m));
    mean_member_nll += m.mean_nll;
    mean_member_acc += m.accuracy;
  }
  mean_member_nll /= static_cast<double>(samples.size());
  mean_member_acc /= static_cast<double>(samples.size());

  EvalMetrics ens = evaluate_ensemble(samples, weights, *bundle.task,
                                      bundle.task->eval);
  report["members"] = members;
  report["mean_member"] = {{"accuracy", mean_member_acc},
                           {"nll", mean_member_nll}};
  report["ensemble"] = member_metrics_json(ens);
  report["jensen_gap"] = mean_member_nll - ens.mean_nll;  // >= 0

  write_file(seed_dir / "samples.csv", samples_csv(result.archive));
  files.push_back("samples.csv");
  report["files"] = files;
  write_file(seed_dir / "report.json", report.dump(2) + "\n");
  return report;
}

json cmd_ensemble_eval(const ExperimentConfig& cfg, const fs::path& outdir,
                       const std::vector<std::uint64_t>& seeds, int jobs) {
  if (cfg.task.kind != TaskKind::SyntheticClassifier) {
    throw ConfigError("ensemble-eval needs task.kind = 'synthetic-classifier'");
  }
  if (cfg.sampler.algorithm == AlgorithmChoice::Map) {
    throw ConfigError("ensemble-eval needs a sampling algorithm for the archive");
  }
  fs::path root = outdir / "ensemble-eval";
  ensure_dir(root);

  std::vector<json> runs(seeds.size());
  run_parallel(seeds.size(), jobs, [&](std::size_t i) {
    runs[i] = run_ensemble_seed(cfg, seeds[i], root / std::to_string(seeds[i]));
  });

  json run_array = json::array();
  double mean_gap = 0.0;
  for (const json& r : runs) {
    run_array.push_back(r);
    mean_gap += r.at("jensen_gap").get<double>();
  }
  mean_gap /= static_cast<double>(runs.size());

  json report;
  report["experiment"] = "ensemble-eval";
  report["seeds"] = seeds;
  report["runs"] = run_array;
  report["aggregate"] = {{"mean_jensen_gap", mean_gap}};
  write_file(root / "report.json", report.dump(2) + "\n");
  return report;
}

// ---------------------------------------------------------------------------
// diversity
// ---------------------------------------------------------------------------

json cmd_diversity(const ExperimentConfig& cfg, const fs::path& outdir,
                   const std::vector<std::uint64_t>& seeds, int jobs) {
  if (cfg.task.kind != TaskKind::SyntheticClassifier) {
    throw ConfigError("diversity needs task.kind = 'synthetic-classifier'");
  }
  if (cfg.sampler.algorithm != AlgorithmChoice::Rcsghmc) {
    throw ConfigError("diversity compares repulsion on/off and needs "
                      "sampler.algorithm = 'rcsghmc'");
  }
  if (cfg.sampler.cycles * cfg.sampler.chains < 2) {
    throw ConfigError("diversity needs at least two archived samples "
                      "(cycles x chains >= 2)");
  }
  fs::path root = outdir / "diversity";
  ensure_dir(root);

  // One probe batch for the whole analysis so matrices are comparable.
  TaskBundle probe_bundle = build_task(cfg);
  std::size_t probe_size =
      std::min(cfg.diversity.probe_size, probe_bundle.task->eval.size());
  RngStream probe_rng(cfg.task.params.seed, 1);
  std::vector<std::size_t> probe_rows = probe_rng.sample_without_replacement(
      probe_size, probe_bundle.task->eval.size());
  Matrix probe(probe_rows.size(), probe_bundle.task->eval.inputs.cols);
  for (std::size_t i = 0; i < probe_rows.size(); ++i) {
    std::copy(probe_bundle.task->eval.inputs.row(probe_rows[i]),
              probe_bundle.task->eval.inputs.row(probe_rows[i]) + probe.cols,
              probe.row(i));
  }

  ExperimentConfig control = cfg;
  control.repulsion.strength = 0.0;

  struct ArmOutcome {
    double mean_offdiag = 0.0;
  };
  std::vector<json> per_seed(seeds.size());

  run_parallel(seeds.size(), jobs, [&](std::size_t i) {
    std::uint64_t seed = seeds[i];
    fs::path seed_dir = root / std::to_string(seed);
    ensure_dir(seed_dir);

    json entry;
    entry["seed"] = seed;
    std::vector<std::string> files;
    ArmOutcome outcomes[2];
    const ExperimentConfig* arms[2] = {&cfg, &control};
    const char* arm_names[2] = {"repulsion", "control"};
    for (int a = 0; a < 2; ++a) {
      TaskBundle bundle = build_task(*arms[a]);
      RunResult result = run_sampler(*arms[a], bundle, seed);
      DistanceMatrix dm = pairwise_distance_matrix(
          result.archive, bundle.task->model, bundle.task->backbone, probe,
          DistanceMetric::Wasserstein);
      outcomes[a].mean_offdiag = mean_offdiagonal(dm);
      std::string matrix_name =
          std::string(arm_names[a]) + "_wasserstein.csv";
      write_file(seed_dir / matrix_name, distance_matrix_csv(dm));
      std::string samples_name = std::string(arm_names[a]) + "_samples.csv";
      write_file(seed_dir / samples_name, samples_csv(result.archive));
      files.push_back(matrix_name);
      files.push_back(samples_name);
    }
    entry["mean_offdiagonal_repulsion"] = outcomes[0].mean_offdiag;
    entry["mean_offdiagonal_control"] = outcomes[1].mean_offdiag;
    entry["difference"] =
        outcomes[0].mean_offdiag - outcomes[1].mean_offdiag;
    entry["files"] = files;
    write_file(seed_dir / "report.json", entry.dump(2) + "\n");
    per_seed[i] = entry;
  });

  double mean_rep = 0.0, mean_ctl = 0.0;
  std::size_t wins = 0;
  json run_array = json::array();
  for (const json& e : per_seed) {
    mean_rep += e.at("mean_offdiagonal_repulsion").get<double>();
    mean_ctl += e.at("mean_offdiagonal_control").get<double>();
    if (e.at("difference").get<double>() > 0.0) ++wins;
    run_array.push_back(e);
  }
  mean_rep /= static_cast<double>(per_seed.size());
  mean_ctl /= static_cast<double>(per_seed.size());

  json report;
  report["experiment"] = "diversity";
  report["seeds"] = seeds;
  report["runs"] = run_array;
  report["aggregate"] = {{"mean_offdiagonal_repulsion", mean_rep},
                         {"mean_offdiagonal_control", mean_ctl},
                         {"difference", mean_rep - mean_ctl},
                         {"seeds_with_positive_difference", wins}};
  write_file(root / "comparison.json", report.dump(2) + "\n");
  write_file(root / "report.json", report.dump(2) + "\n");
  return report;
}

// ---------------------------------------------------------------------------
// ablate
// ---------------------------------------------------------------------------

ExperimentConfig apply_sweep_value(const ExperimentConfig& base,
                                   const std::string& sweep, double value) {
  ExperimentConfig cfg = base;
  if (sweep == "xi") {
    cfg.repulsion.strength = value;
  } else if (sweep == "cycles") {
    cfg.sampler.cycles = static_cast<std::size_t>(value);
  } else if (sweep == "repulsion_batch") {
    cfg.repulsion.probe_batch_size = static_cast<std::size_t>(value);
  } else {
    throw ConfigError("unknown sweep '" + sweep + "'");
  }
  return cfg;
}

std::string sweep_value_tag(const std::string& sweep, double value) {
  if (sweep == "xi") return "xi_" + g17(value);
  return sweep + "_" + std::to_string(static_cast<std::size_t>(value));
}

json cmd_ablate(const ExperimentConfig& cfg, const fs::path& outdir,
                const std::vector<std::uint64_t>& seeds, int jobs) {
  if (cfg.ablate.sweep.empty()) {
    throw ConfigError("ablate needs an 'ablate' block with sweep and values");
  }
  if (cfg.ablate.sweep == "repulsion_batch" &&
      cfg.repulsion.mode != RepulsionMode::Representation) {
    throw ConfigError("repulsion_batch sweep needs repulsion.mode = 'representation'");
  }
  fs::path root = outdir / "ablate";
  ensure_dir(root);

  bool toy = cfg.task.kind == TaskKind::Toy2d;
  const std::string metric_name = toy ? "coverage" : "holdout_accuracy";

  struct Cell {
    double value;
    std::uint64_t seed;
    double metric;
  };
  std::size_t total = cfg.ablate.values.size() * seeds.size();
  std::vector<Cell> cells(total);

  run_parallel(total, jobs, [&](std::size_t idx) {
    std::size_t vi = idx / seeds.size();
    std::size_t si = idx % seeds.size();
    double value = cfg.ablate.values[vi];
    std::uint64_t seed = seeds[si];
    ExperimentConfig run_cfg = apply_sweep_value(cfg, cfg.ablate.sweep, value);
    fs::path run_dir = root / sweep_value_tag(cfg.ablate.sweep, value) /
                       std::to_string(seed);
    ensure_dir(run_dir);

    TaskBundle bundle = build_task(run_cfg);
    RunResult result = run_sampler(run_cfg, bundle, seed);
    write_file(run_dir / "samples.csv", samples_csv(result.archive));

    double metric = 0.0;
    if (toy) {
      double radius = default_coverage_radius(run_cfg.task.mixture);
      metric = mode_coverage(result.archive.all_samples(), run_cfg.task.mixture,
                             radius)
                   .coverage;
    } else {
      std::vector<ParamVector> samples = result.archive.all_samples();
      Vec weights(samples.size(), 1.0 / static_cast<double>(samples.size()));
      metric = evaluate_ensemble(samples, weights, *bundle.task,
                                 bundle.task->eval)
                   .accuracy;
    }
    cells[idx] = Cell{value, seed, metric};
  });

  std::string csv = "value,seed," + metric_name + "\n";
  for (const Cell& cell : cells) {
    csv += g17(cell.value) + "," + std::to_string(cell.seed) + "," +
           g17(cell.metric) + "\n";
  }
  write_file(root / "results.csv", csv);

  // Seed-averaged metric per sweep value.
  json value_means = json::array();
  for (std::size_t vi = 0; vi < cfg.ablate.values.size(); ++vi) {
    double acc = 0.0;
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      acc += cells[vi * seeds.size() + si].metric;
    }
    value_means.push_back({{"value", cfg.ablate.values[vi]},
                           {"mean_" + metric_name,
                            acc / static_cast<double>(seeds.size())}});
  }

  json report;
  report["experiment"] = "ablate";
  report["sweep"] = cfg.ablate.sweep;
  report["metric"] = metric_name;
  report["seeds"] = seeds;
  report["values"] = cfg.ablate.values;
  report["aggregate"] = value_means;
  report["files"] = {"results.csv"};
  write_file(root / "report.json", report.dump(2) + "\n");
  return report;
}

}  // namespace

std::string run_experiment(const ExperimentConfig& cfg,
                           const std::string& command,
                           const ExperimentOptions& options) {
  std::vector<std::uint64_t> seeds = effective_seeds(cfg, options);
  if (seeds.empty()) throw ConfigError("no seeds given");
  fs::path outdir = effective_outdir(cfg, options);
  int jobs = std::max(options.jobs, 1);

  json report;
  if (command == "toy2d") {
    report = cmd_toy2d(cfg, outdir, seeds, jobs);
  } else if (command == "ablate") {
    report = cmd_ablate(cfg, outdir, seeds, jobs);
  } else if (command == "diversity") {
    report = cmd_diversity(cfg, outdir, seeds, jobs);
  } else if (command == "ensemble-eval") {
    report = cmd_ensemble_eval(cfg, outdir, seeds, jobs);
  } else {
    throw ConfigError("unknown command '" + command + "'");
  }
  return report.dump(2) + "\n";
}

}  // namespace repmc
