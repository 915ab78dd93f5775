#include "lqres/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <future>

#include "lqres/features.hpp"
#include "lqres/opinf.hpp"
#include "lqres/optim.hpp"

namespace lqres {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

json read_json(const fs::path& path, int exit_code) {
  std::ifstream in(path);
  if (!in) throw CommandError(exit_code, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw CommandError(exit_code, path.string() + ": " + e.what());
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
}

std::string numbered(const char* stem, std::size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%03zu%s", stem, i, ext);
  return buf;
}

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

std::vector<std::string> default_names(Eigen::Index n, const char* prefix) {
  std::vector<std::string> names;
  for (Eigen::Index i = 0; i < n; ++i) names.push_back(prefix + std::to_string(i + 1));
  return names;
}

// Provenance excludes locations so that identical runs in different
// directories produce identical model files.
json run_provenance(const RunConfig& config) {
  json j = config_to_json(config);
  j.erase("output_dir");
  j["data"].erase("files");
  j["test"].erase("files");
  return j;
}

}  // namespace

fs::path data_manifest_path(const RunConfig& config) {
  return config.output_dir / "data" / "manifest.json";
}

fs::path model_path(const RunConfig& config) { return config.output_dir / "model" / "model.json"; }

VectorField system_field(const RunConfig& config) {
  switch (config.system) {
    case SystemKind::Fhn: {
      const FhnParams p = config.fhn;
      return [p](const Eigen::VectorXd& x) { return rhs_fhn(x, p); };
    }
    case SystemKind::Glycolysis: {
      const GlyParams p = config.gly;
      return [p](const Eigen::VectorXd& x) { return rhs_glycolysis(x, p); };
    }
    case SystemKind::Custom:
      break;
  }
  throw CommandError(kExitConfig, "custom systems have no governing equations");
}

SimulateOutput cmd_simulate(const RunConfig& config) {
  SimulateOutput out;
  const fs::path dir = config.output_dir / "data";
  ensure_dir(dir);
  out.manifest = dir / "manifest.json";

  json manifest;
  manifest["system"] = to_string(config.system);
  manifest["variable_names"] = config.variable_names;

  if (config.system == SystemKind::Custom) {
    // Externally supplied trajectories are referenced, not copied.
    json files = json::array();
    for (const auto& f : config.data.files) {
      if (!fs::exists(f)) throw CommandError(kExitConfig, "data file not found: " + f.string());
      files.push_back(fs::absolute(f).generic_string());
      out.files.push_back(f);
    }
    manifest["files"] = files;
    write_json(manifest, out.manifest);
    return out;
  }

  const auto ics = sample_initial_conditions(config.data.ic_ranges, config.data.count,
                                             config.seeds.data);
  const VectorField field = system_field(config);
  std::vector<std::future<Trajectory>> jobs;
  for (const auto& x0 : ics)
    jobs.push_back(std::async(std::launch::async, [&field, &config, x0] {
      return integrate(field, x0, config.data.t_span, config.data.num_points);
    }));

  json files = json::array(), initial = json::array();
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    Trajectory traj;
    try {
      traj = jobs[i].get();
    } catch (const SimulationError& e) {
      throw CommandError(kExitTruthFailure,
                         "ground-truth simulation " + std::to_string(i) + " failed: " + e.what());
    } catch (const Error& e) {
      throw CommandError(kExitTruthFailure,
                         "ground-truth simulation " + std::to_string(i) + " failed: " + e.what());
    }
    const std::string name = numbered("traj", i, ".csv");
    write_trajectory_csv(traj, dir / name);
    out.files.push_back(dir / name);
    files.push_back(name);
    initial.push_back(vector_json(ics[i]));
  }
  manifest["params"] = config_to_json(config).value("params", json::object());
  manifest["t_span"] = {config.data.t_span.t0, config.data.t_span.t1};
  manifest["num_points"] = config.data.num_points;
  manifest["seed"] = config.seeds.data;
  manifest["initial_conditions"] = initial;
  manifest["files"] = files;
  write_json(manifest, out.manifest);
  return out;
}

namespace {

std::vector<Trajectory> load_manifest_trajectories(const fs::path& manifest_path,
                                                   std::vector<std::string>* names) {
  const json manifest = read_json(manifest_path, kExitConfig);
  if (!manifest.is_object() || !manifest.contains("files") || !manifest["files"].is_array() ||
      manifest["files"].empty())
    throw CommandError(kExitConfig, manifest_path.string() + ": manifest lists no files");
  if (names && manifest.contains("variable_names") && manifest["variable_names"].is_array())
    *names = manifest["variable_names"].get<std::vector<std::string>>();

  std::vector<Trajectory> trajs;
  for (const auto& f : manifest["files"]) {
    if (!f.is_string()) throw CommandError(kExitConfig, "manifest file entries must be strings");
    fs::path p = f.get<std::string>();
    if (p.is_relative()) p = manifest_path.parent_path() / p;
    try {
      trajs.push_back(read_trajectory_csv(p));
    } catch (const Error& e) {
      throw CommandError(kExitConfig, e.what());
    }
    if (trajs.back().dim() != trajs.front().dim())
      throw CommandError(kExitConfig, p.string() + ": state dimension differs from other files");
  }
  return trajs;
}

}  // namespace

TrainOutput cmd_train(const RunConfig& config, const fs::path& data_manifest) {
  std::vector<std::string> names;
  std::vector<Trajectory> trajs = load_manifest_trajectories(data_manifest, &names);
  const Eigen::Index full_dim = trajs.front().dim();
  if (names.empty()) names = config.variable_names;
  if (names.empty()) names = default_names(full_dim, "x");

  LQModel model;
  model.kind = config.model_kind;

  if (config.pod) {
    Eigen::Index total = 0;
    for (const auto& t : trajs) total += t.size();
    Eigen::MatrixXd snapshots(full_dim, total);
    Eigen::Index col = 0;
    for (const auto& t : trajs) {
      snapshots.middleCols(col, t.size()) = t.states.transpose();
      col += t.size();
    }
    try {
      model.pod = pod_basis(snapshots, config.pod->truncation, config.pod->center);
    } catch (const Error& e) {
      throw CommandError(kExitConfig, e.what());
    }
    for (auto& t : trajs) t.states = project_rows(*model.pod, t.states);
  }
  const Eigen::Index n = trajs.front().dim();
  model.n = n;
  model.variable_names = model.pod ? default_names(n, "z") : names;

  RegressionDataset ds;
  try {
    if (config.model_kind == ModelKind::Continuous) {
      std::vector<DerivativeSamples> samples;
      for (const auto& t : trajs) samples.push_back(stencil_derivatives(t));
      ds = build_dataset(samples, config.seeds.split, config.standardize);
    } else {
      ds = build_discrete_dataset(trajs, config.seeds.split, config.standardize);
    }
  } catch (const Error& e) {
    throw CommandError(kExitConfig, e.what());
  }
  model.standardization = ds.standardization;

  FitOptions fit;
  fit.include_bias = config.include_bias;
  std::vector<LinQuadOps> ops;
  std::vector<GateDecision> gates;
  json gate_report = json::array();
  for (Eigen::Index i = 0; i < n; ++i) {
    try {
      ops.push_back(fit_linquad(ds, i, fit));
    } catch (const Error& e) {
      throw CommandError(kExitTrainFailure,
                         "least-squares fit of component " + std::to_string(i) + ": " + e.what());
    }
    gates.push_back(gate_component(residual_stats(ds, ops.back()), config.gate_threshold));
    json entry = gate_report_entry(i, gates.back());
    entry["name"] = model.variable_names[static_cast<std::size_t>(i)];
    gate_report.push_back(std::move(entry));
  }

  // One trainer per component needing a network; the dataset is shared read-only.
  std::vector<std::future<TrainResult>> jobs(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto si = static_cast<std::size_t>(i);
    if (gates[si].kind != GateKind::NeedsNetwork) continue;
    HyperParams h = config.hyper;
    h.seed = config.seeds.shuffle + static_cast<std::uint64_t>(i);
    const Architecture arch = config.architecture_for(i);
    const std::uint64_t init_seed = config.seeds.init + static_cast<std::uint64_t>(i);
    jobs[si] = std::async(std::launch::async, [&ds, i, arch, h, &ops, &gates, init_seed, si] {
      return train_component(ds, i, arch, h, ops[si], gates[si], init_seed);
    });
  }

  TrainOutput out;
  const fs::path dir = config.output_dir / "model";
  ensure_dir(dir);
  json best_epochs = json::object();
  std::vector<std::pair<std::string, TrainHistory>> histories;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto si = static_cast<std::size_t>(i);
    if (gates[si].kind == GateKind::Analytic) {
      model.components.push_back(ComponentModel{ops[si], gates[si], std::nullopt});
      continue;
    }
    TrainResult r;
    try {
      r = jobs[si].get();
    } catch (const Error& e) {
      throw CommandError(kExitTrainFailure, "training component " + std::to_string(i) + " (" +
                                                model.variable_names[si] + ") failed: " + e.what());
    }
    best_epochs[model.variable_names[si]] = r.history.best_epoch + 1;
    model.components.push_back(std::move(r.model));
    histories.emplace_back(model.variable_names[si], std::move(r.history));
  }

  model.provenance = run_provenance(config);
  model.provenance["gate_report"] = gate_report;
  model.provenance["best_epochs"] = best_epochs;
  model.provenance["snapshot_policy"] = "best_validation";
  model.provenance["physical_variable_names"] = names;

  out.model_path = dir / "model.json";
  out.gate_report_path = dir / "gate_report.json";
  save_model(model, out.model_path);
  write_json(gate_report, out.gate_report_path);
  json listed = json::array({"model.json", "gate_report.json"});
  for (const auto& [name, history] : histories) {
    const fs::path p = dir / ("history_" + name + ".csv");
    write_history_csv(history, p);
    out.history_paths.push_back(p);
    listed.push_back(p.filename().string());
  }
  out.manifest = dir / "manifest.json";
  write_json({{"data_manifest", fs::absolute(data_manifest).lexically_normal().generic_string()},
              {"files", listed}},
             out.manifest);
  out.model = std::move(model);
  out.gate_report = std::move(gate_report);
  return out;
}

namespace {

struct TestCase {
  Eigen::VectorXd x0;
  Trajectory truth;
};

std::vector<TestCase> make_test_cases(const RunConfig& config) {
  std::vector<TestCase> cases;
  if (config.system == SystemKind::Custom) {
    if (config.test.files.empty())
      throw CommandError(kExitConfig, "test.files must list reference trajectories");
    for (const auto& f : config.test.files) {
      TestCase c;
      try {
        c.truth = read_trajectory_csv(f);
      } catch (const Error& e) {
        throw CommandError(kExitConfig, e.what());
      }
      if (c.truth.size() < 2) throw CommandError(kExitConfig, f.string() + ": too few rows");
      c.x0 = c.truth.states.row(0).transpose();
      cases.push_back(std::move(c));
    }
    return cases;
  }
  const VectorField field = system_field(config);
  for (const auto& x0 :
       sample_initial_conditions(config.data.ic_ranges, config.test.count, config.seeds.test)) {
    TestCase c;
    c.x0 = x0;
    try {
      c.truth = integrate(field, x0, config.test.t_span, config.test.num_points);
    } catch (const Error& e) {
      throw CommandError(kExitTruthFailure, std::string("ground-truth test simulation: ") + e.what());
    }
    cases.push_back(std::move(c));
  }
  return cases;
}

void write_comparison_csv(const Trajectory& truth, const Trajectory& pred, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out << 't';
  for (Eigen::Index j = 0; j < truth.dim(); ++j)
    out << ",true_x" << (j + 1) << ",pred_x" << (j + 1);
  out << '\n';
  for (Eigen::Index k = 0; k < pred.size(); ++k) {
    out << format_double(truth.times[k]);
    for (Eigen::Index j = 0; j < truth.dim(); ++j)
      out << ',' << format_double(truth.states(k, j)) << ',' << format_double(pred.states(k, j));
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace

EvaluateOutput cmd_evaluate(const RunConfig& config, const fs::path& model_file) {
  if (!fs::exists(model_file))
    throw CommandError(kExitConfig, "model file not found: " + model_file.string());
  LQModel model;
  try {
    model = load_model(model_file);
  } catch (const Error& e) {
    throw CommandError(kExitConfig, e.what());
  }

  const std::vector<TestCase> cases = make_test_cases(config);
  EvaluateOutput out;
  const fs::path dir = config.output_dir / "eval";
  ensure_dir(dir);

  json tests = json::array();
  json listed = json::array();
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const TestCase& tc = cases[c];
    const Eigen::Index full_dim = tc.truth.dim();
    const Eigen::Index expected_dim = model.pod ? model.pod->v_matrix.rows() : model.n;
    if (full_dim != expected_dim)
      throw CommandError(kExitConfig, "test state dimension " + std::to_string(full_dim) +
                                          " does not match the model");

    Eigen::VectorXd x0 = model.pod ? project(*model.pod, tc.x0) : tc.x0;
    Trajectory pred;
    bool blew_up = false;
    std::size_t blowup_step = 0;
    try {
      if (model.kind == ModelKind::Continuous) {
        const double h = uniform_spacing(tc.truth.times);
        (void)h;
        pred = simulate_model(model, x0,
                              {tc.truth.times[0], tc.truth.times[tc.truth.size() - 1]},
                              static_cast<std::size_t>(tc.truth.size()));
        pred.times = tc.truth.times;
      } else {
        pred = simulate_discrete(model, x0, static_cast<std::size_t>(tc.truth.size() - 1));
        pred.times = tc.truth.times;
      }
    } catch (const SimulationError& e) {
      blew_up = true;
      blowup_step = e.step();
      pred = e.partial();
      pred.times = tc.truth.times.head(pred.size());
    } catch (const Error& e) {
      throw CommandError(kExitConfig, e.what());
    }
    if (model.pod) pred.states = lift_rows(*model.pod, pred.states);

    const std::string csv = numbered("comparison", c, ".csv");
    write_comparison_csv(tc.truth, pred, dir / csv);
    out.comparison_paths.push_back(dir / csv);
    listed.push_back(csv);

    json test;
    test["index"] = c;
    test["x0"] = vector_json(tc.x0);
    test["comparison_csv"] = csv;
    test["status"] = blew_up ? "blew_up" : "ok";
    if (blew_up) test["blowup_step"] = blowup_step;
    test["max_abs_true"] = tc.truth.states.cwiseAbs().maxCoeff();
    test["max_abs_pred"] = pred.size() ? pred.states.cwiseAbs().maxCoeff() : 0.0;

    std::vector<double> horizons = config.test.horizons;
    if (horizons.empty() || config.system == SystemKind::Custom)
      horizons = {tc.truth.times[tc.truth.size() - 1]};
    json per_horizon = json::array();
    for (double hz : horizons) {
      Eigen::Index rows = 0;
      while (rows < tc.truth.size() && tc.truth.times[rows] <= hz + 1e-9 * std::max(1.0, std::abs(hz)))
        ++rows;
      json entry = {{"horizon", hz}};
      if (rows > pred.size()) {
        entry["status"] = "blew_up";
      } else {
        const Metrics m = evaluate(tc.truth.head(rows), pred.head(rows));
        entry["status"] = "ok";
        entry["rel_l2"] = vector_json(m.rel_l2);
        entry["max_abs"] = m.max_abs;
      }
      per_horizon.push_back(std::move(entry));
    }
    test["horizons"] = per_horizon;
    tests.push_back(std::move(test));
    out.blew_up = out.blew_up || blew_up;
  }

  json names = model.provenance.value("physical_variable_names", json::array());
  if (!model.pod && !model.variable_names.empty()) names = model.variable_names;
  out.metrics = {{"model_kind", to_string(model.kind)},
                 {"variable_names", names},
                 {"test_seed", config.seeds.test},
                 {"tests", tests}};
  out.metrics_path = dir / "metrics.json";
  write_json(out.metrics, out.metrics_path);
  listed.push_back("metrics.json");
  out.manifest = dir / "manifest.json";
  write_json({{"files", listed}}, out.manifest);
  return out;
}

DemoOutput cmd_demo(const RunConfig& config) {
  DemoOutput out;
  out.simulate = cmd_simulate(config);
  out.train = cmd_train(config, out.simulate.manifest);
  out.evaluate = cmd_evaluate(config, out.train.model_path);
  return out;
}

}  // namespace lqres
