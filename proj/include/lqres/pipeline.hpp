#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "lqres/config.hpp"
#include "lqres/model.hpp"

namespace lqres {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitTruthFailure = 3,
  kExitTrainFailure = 4,
  kExitEvalBlowUp = 5,
};

/// A failed command together with the exit code it maps to.
class CommandError : public std::runtime_error {
 public:
  CommandError(int exit_code, const std::string& what)
      : std::runtime_error(what), exit_code_(exit_code) {}
  int exit_code() const noexcept { return exit_code_; }

 private:
  int exit_code_;
};

struct SimulateOutput {
  std::filesystem::path manifest;
  std::vector<std::filesystem::path> files;
};

struct TrainOutput {
  std::filesystem::path manifest;
  std::filesystem::path model_path;
  std::filesystem::path gate_report_path;
  std::vector<std::filesystem::path> history_paths;
  LQModel model;
  nlohmann::json gate_report;
};

struct EvaluateOutput {
  std::filesystem::path manifest;
  std::filesystem::path metrics_path;
  std::vector<std::filesystem::path> comparison_paths;
  nlohmann::json metrics;
  bool blew_up = false;
};

/// Ground-truth field of a built-in system.
VectorField system_field(const RunConfig& config);

/// Writes <out>/data/traj_NNN.csv and <out>/data/manifest.json.
SimulateOutput cmd_simulate(const RunConfig& config);

/// Loads the trajectories listed in `data_manifest`, gates every component,
/// trains networks where needed and writes <out>/model/.
TrainOutput cmd_train(const RunConfig& config, const std::filesystem::path& data_manifest);

/// Compares the learned model with ground truth from fresh initial
/// conditions; writes <out>/eval/. A learned blow-up still writes the
/// partial comparison and sets `blew_up`.
EvaluateOutput cmd_evaluate(const RunConfig& config, const std::filesystem::path& model_path);

struct DemoOutput {
  SimulateOutput simulate;
  TrainOutput train;
  EvaluateOutput evaluate;
};

DemoOutput cmd_demo(const RunConfig& config);

/// Manifest file written by cmd_simulate for this config.
std::filesystem::path data_manifest_path(const RunConfig& config);
std::filesystem::path model_path(const RunConfig& config);

}  // namespace lqres
