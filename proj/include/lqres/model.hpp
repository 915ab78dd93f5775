#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "lqres/dynsys.hpp"
#include "lqres/neural.hpp"
#include "lqres/reduce.hpp"

namespace lqres {

enum class ModelKind { Continuous, Discrete };

std::string_view to_string(ModelKind kind);

/// Assembled per-component model. In continuous mode component i predicts
/// dx_i/dt; in discrete mode it predicts x_i at the next step. When
/// `standardization` is set the components consume standardized states.
/// When `pod` is set, states are reduced coordinates of that basis.
struct LQModel {
  Eigen::Index n = 0;
  ModelKind kind = ModelKind::Continuous;
  std::vector<std::string> variable_names;
  std::vector<ComponentModel> components;
  std::optional<Standardization> standardization;
  std::optional<PODBasis> pod;
  nlohmann::json provenance = nlohmann::json::object();

  void validate() const;
};

/// Stacked component predictions for a physical (or reduced) state.
Eigen::VectorXd predict_all(const LQModel& model, const Eigen::VectorXd& x);

Eigen::VectorXd model_rhs(const LQModel& model, const Eigen::VectorXd& x);

/// RK4 rollout of model_rhs; throws SimulationError with the partial
/// trajectory when the learned field blows up.
Trajectory simulate_model(const LQModel& model, const Eigen::VectorXd& x0, TimeSpan span,
                          std::size_t num_points);

Eigen::VectorXd step_discrete(const LQModel& model, const Eigen::VectorXd& x);

/// steps + 1 rows; times are the step indices 0..steps.
Trajectory simulate_discrete(const LQModel& model, const Eigen::VectorXd& x0, std::size_t steps);

struct Metrics {
  Eigen::VectorXd rel_l2;  // per component
  double max_abs = 0.0;
  double horizon = 0.0;    // last compared time
};

Metrics evaluate(const Trajectory& reference, const Trajectory& predicted);

inline constexpr int kModelSchemaVersion = 1;

nlohmann::json model_to_json(const LQModel& model);
LQModel model_from_json(const nlohmann::json& j);

void save_model(const LQModel& model, const std::filesystem::path& path);
LQModel load_model(const std::filesystem::path& path);

}  // namespace lqres
