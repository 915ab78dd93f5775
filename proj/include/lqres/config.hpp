#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lqres/dynsys.hpp"
#include "lqres/model.hpp"
#include "lqres/optim.hpp"
#include "lqres/reduce.hpp"

namespace lqres {

enum class SystemKind { Fhn, Glycolysis, Custom };

std::string_view to_string(SystemKind kind);

struct DataSettings {
  std::vector<Interval> ic_ranges;
  std::size_t count = 10;
  TimeSpan t_span{0.0, 200.0};
  std::size_t num_points = 5000;
  std::vector<std::filesystem::path> files;  // custom systems only
};

struct TestSettings {
  std::size_t count = 1;
  TimeSpan t_span{0.0, 100.0};
  std::size_t num_points = 2500;
  std::vector<double> horizons;  // empty: the whole test span
  std::vector<std::filesystem::path> files;  // custom systems only
};

struct Seeds {
  std::uint64_t data = 1;
  std::uint64_t split = 2;
  std::uint64_t init = 3;
  std::uint64_t shuffle = 4;
  std::uint64_t test = 5;
};

struct PodSettings {
  PodTruncation truncation = PodTruncation::energy_fraction(0.9999);
  bool center = false;
};

/// Everything a run needs. Every seed is explicit.
struct RunConfig {
  SystemKind system = SystemKind::Fhn;
  FhnParams fhn;
  GlyParams gly;
  std::vector<std::string> variable_names;
  DataSettings data;
  TestSettings test;
  ModelKind model_kind = ModelKind::Continuous;
  double gate_threshold = 1e-3;
  bool include_bias = true;
  bool standardize = false;
  std::optional<PodSettings> pod;
  Architecture architecture;
  std::map<Eigen::Index, Architecture> architecture_overrides;
  HyperParams hyper;
  Seeds seeds;
  std::filesystem::path output_dir = "out";

  Eigen::Index state_dim() const;
  Architecture architecture_for(Eigen::Index component) const;
  void validate() const;
};

/// Configuration problems; the message names the offending field.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCode::InvalidArgument, what) {}
};

/// Relative custom-data paths resolve against `base_dir`.
RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const RunConfig& config);

/// Data and training settings as reported for each benchmark.
RunConfig paper_config(SystemKind system);
/// Reduced-scale variants that finish in minutes on one CPU core.
RunConfig desk_config(SystemKind system);

/// Initial-condition box for the glycolysis benchmark.
std::vector<Interval> glycolysis_ic_ranges();

/// Applies `--seed`: data, split, init, shuffle, test become s .. s+4.
void override_seed(RunConfig& config, std::uint64_t seed);

}  // namespace lqres
