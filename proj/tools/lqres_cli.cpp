#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lqres/config.hpp"
#include "lqres/pipeline.hpp"

namespace {

struct Overrides {
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--out", out, "Output directory (overrides output_dir)");
    cmd->add_option("--seed", seed, "Base seed; data, split, init, shuffle, test become s..s+4");
    cmd->add_option("--epochs", epochs, "Training epochs");
  }

  void apply(lqres::RunConfig& config) const {
    if (!out.empty()) config.output_dir = out;
    if (seed) lqres::override_seed(config, *seed);
    if (epochs) config.hyper.epochs = *epochs;
    config.validate();
  }
};

void report_gates(const nlohmann::json& report) {
  for (const auto& e : report)
    std::printf("  %-6s rel_rms=%.3e  %s\n", e.value("name", std::string()).c_str(),
                e.at("rel_rms").get<double>(), e.at("decision").get<std::string>().c_str());
}

int report_eval(const lqres::EvaluateOutput& eval) {
  std::printf("metrics: %s\n", eval.metrics_path.string().c_str());
  for (const auto& t : eval.metrics.at("tests")) {
    for (const auto& h : t.at("horizons")) {
      std::printf("  test %zu  t<=%g  ", t.at("index").get<std::size_t>(),
                  h.at("horizon").get<double>());
      if (h.at("status") == "ok") {
        std::printf("rel_l2 =");
        for (const auto& v : h.at("rel_l2")) std::printf(" %.4f", v.get<double>());
        std::printf("\n");
      } else {
        std::printf("blew up\n");
      }
    }
  }
  if (eval.blew_up) {
    std::fprintf(stderr, "error: learned model blew up; partial comparison written\n");
    return lqres::kExitEvalBlowUp;
  }
  return lqres::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn linear-quadratic models with residual networks from trajectory data"};
  app.require_subcommand(1);

  std::string config_path, data_manifest, model_file, demo_system;
  bool desk = false;
  Overrides ov;

  auto* sim = app.add_subcommand("simulate", "Simulate ground-truth training trajectories");
  sim->add_option("--config", config_path, "Run configuration JSON")->required();
  ov.add_to(sim);

  auto* train = app.add_subcommand("train", "Fit, gate and train a model from trajectories");
  train->add_option("--config", config_path, "Run configuration JSON")->required();
  train->add_option("--data", data_manifest, "Data manifest (default <out>/data/manifest.json)");
  ov.add_to(train);

  auto* eval = app.add_subcommand("evaluate", "Compare a learned model with ground truth");
  eval->add_option("--config", config_path, "Run configuration JSON")->required();
  eval->add_option("--model", model_file, "Model file (default <out>/model/model.json)");
  ov.add_to(eval);

  auto* demo = app.add_subcommand("demo", "Run simulate, train and evaluate for a benchmark");
  demo->add_option("system", demo_system, "Benchmark system")
      ->required()
      ->check(CLI::IsMember({"fhn", "glycolysis"}));
  demo->add_option("--config", config_path, "Run configuration JSON (replaces the built-in one)");
  demo->add_flag("--desk", desk, "Use the reduced-scale built-in configuration");
  ov.add_to(demo);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : lqres::kExitConfig;
  }

  try {
    lqres::RunConfig config;
    if (!config_path.empty()) {
      config = lqres::load_config(config_path);
    } else {
      const auto kind =
          demo_system == "fhn" ? lqres::SystemKind::Fhn : lqres::SystemKind::Glycolysis;
      config = desk ? lqres::desk_config(kind) : lqres::paper_config(kind);
    }
    if (demo->parsed() && !config_path.empty() &&
        std::string(lqres::to_string(config.system)) != demo_system)
      throw lqres::CommandError(lqres::kExitConfig,
                                "config system does not match demo " + demo_system);
    ov.apply(config);

    if (sim->parsed()) {
      const auto out = lqres::cmd_simulate(config);
      std::printf("wrote %zu trajectories, manifest %s\n", out.files.size(),
                  out.manifest.string().c_str());
      return lqres::kExitOk;
    }
    if (train->parsed()) {
      const std::filesystem::path manifest =
          data_manifest.empty() ? lqres::data_manifest_path(config) : std::filesystem::path(data_manifest);
      const auto out = lqres::cmd_train(config, manifest);
      std::printf("model: %s\ngate report:\n", out.model_path.string().c_str());
      report_gates(out.gate_report);
      return lqres::kExitOk;
    }
    if (eval->parsed()) {
      const std::filesystem::path model =
          model_file.empty() ? lqres::model_path(config) : std::filesystem::path(model_file);
      return report_eval(lqres::cmd_evaluate(config, model));
    }
    const auto out = lqres::cmd_demo(config);
    std::printf("data: %s\nmodel: %s\ngate report:\n", out.simulate.manifest.string().c_str(),
                out.train.model_path.string().c_str());
    report_gates(out.train.gate_report);
    return report_eval(out.evaluate);
  } catch (const lqres::CommandError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.exit_code();
  } catch (const lqres::Error& e) {
    // Remaining library errors stem from configuration or input files.
    std::fprintf(stderr, "error: %s\n", e.what());
    return lqres::kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
