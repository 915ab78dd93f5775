#include "lqres/model.hpp"

#include <cmath>

namespace lqres {

std::string_view to_string(ModelKind kind) {
  return kind == ModelKind::Continuous ? "continuous" : "discrete";
}

void LQModel::validate() const {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "model dimension must be >= 1");
  if (static_cast<Eigen::Index>(components.size()) != n)
    throw Error(ErrorCode::DimensionMismatch, "model has " + std::to_string(components.size()) +
                                                  " components for dimension " +
                                                  std::to_string(n));
  if (!variable_names.empty() && static_cast<Eigen::Index>(variable_names.size()) != n)
    throw Error(ErrorCode::DimensionMismatch, "variable_names length differs from n");
  for (std::size_t i = 0; i < components.size(); ++i) {
    const auto& c = components[i];
    if (c.ops.a_row.size() != n || c.ops.q_row.size() != num_quad_features(n))
      throw Error(ErrorCode::DimensionMismatch,
                  "component " + std::to_string(i) + " operators do not match n");
    if (c.net && c.net->input_dim() != n)
      throw Error(ErrorCode::DimensionMismatch,
                  "component " + std::to_string(i) + " network input differs from n");
    if (c.net.has_value() != (c.gate.kind == GateKind::NeedsNetwork))
      throw Error(ErrorCode::InvalidArgument,
                  "component " + std::to_string(i) + " network presence contradicts its gate");
  }
  if (pod && pod->v_matrix.cols() != n)
    throw Error(ErrorCode::DimensionMismatch, "POD rank differs from model dimension");
}

Eigen::VectorXd predict_all(const LQModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.n)
    throw Error(ErrorCode::DimensionMismatch, "state length " + std::to_string(x.size()) +
                                                  " != model dimension " +
                                                  std::to_string(model.n));
  const Eigen::VectorXd input = model.standardization ? model.standardization->apply(x) : x;
  Eigen::VectorXd out(model.n);
  for (Eigen::Index i = 0; i < model.n; ++i)
    out[i] = lqres_predict(model.components[static_cast<std::size_t>(i)], input);
  return out;
}

Eigen::VectorXd model_rhs(const LQModel& model, const Eigen::VectorXd& x) {
  if (model.kind != ModelKind::Continuous)
    throw Error(ErrorCode::InvalidArgument, "model_rhs needs a continuous model");
  return predict_all(model, x);
}

namespace {

// Network evaluation reports NonFinite; the integrator expects NonFiniteOutput.
VectorField field_of(const LQModel& model) {
  return [&model](const Eigen::VectorXd& x) {
    try {
      Eigen::VectorXd dx = model_rhs(model, x);
      if (!dx.allFinite()) throw Error(ErrorCode::NonFiniteOutput, "learned field not finite");
      return dx;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NonFinite) throw Error(ErrorCode::NonFiniteOutput, e.what());
      throw;
    }
  };
}

}  // namespace

Trajectory simulate_model(const LQModel& model, const Eigen::VectorXd& x0, TimeSpan span,
                          std::size_t num_points) {
  if (model.kind != ModelKind::Continuous)
    throw Error(ErrorCode::InvalidArgument, "simulate_model needs a continuous model");
  return integrate(field_of(model), x0, span, num_points);
}

Eigen::VectorXd step_discrete(const LQModel& model, const Eigen::VectorXd& x) {
  if (model.kind != ModelKind::Discrete)
    throw Error(ErrorCode::InvalidArgument, "step_discrete needs a discrete model");
  return predict_all(model, x);
}

Trajectory simulate_discrete(const LQModel& model, const Eigen::VectorXd& x0,
                             std::size_t steps) {
  if (model.kind != ModelKind::Discrete)
    throw Error(ErrorCode::InvalidArgument, "simulate_discrete needs a discrete model");
  const auto rows = static_cast<Eigen::Index>(steps + 1);
  Trajectory traj;
  traj.times = Eigen::VectorXd::LinSpaced(rows, 0.0, static_cast<double>(steps));
  traj.states.resize(rows, x0.size());
  traj.states.row(0) = x0.transpose();
  Eigen::VectorXd x = x0;
  for (Eigen::Index k = 1; k < rows; ++k) {
    try {
      x = step_discrete(model, x);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonFinite) throw;
      throw SimulationError(static_cast<std::size_t>(k), traj.head(k));
    }
    if (!x.allFinite()) throw SimulationError(static_cast<std::size_t>(k), traj.head(k));
    traj.states.row(k) = x.transpose();
  }
  return traj;
}

Metrics evaluate(const Trajectory& reference, const Trajectory& predicted) {
  if (reference.size() != predicted.size() || reference.dim() != predicted.dim())
    throw Error(ErrorCode::GridMismatch, "trajectories differ in shape");
  for (Eigen::Index k = 0; k < reference.size(); ++k) {
    const double a = reference.times[k], b = predicted.times[k];
    if (std::abs(a - b) > 1e-12 * std::max({1.0, std::abs(a), std::abs(b)}))
      throw Error(ErrorCode::GridMismatch, "time grids differ at index " + std::to_string(k));
  }
  Metrics m;
  const Eigen::MatrixXd diff = reference.states - predicted.states;
  m.rel_l2.resize(reference.dim());
  for (Eigen::Index j = 0; j < reference.dim(); ++j)
    m.rel_l2[j] = diff.col(j).norm() / std::max(reference.states.col(j).norm(), 1e-15);
  m.max_abs = diff.size() ? diff.cwiseAbs().maxCoeff() : 0.0;
  m.horizon = reference.size() ? reference.times[reference.size() - 1] : 0.0;
  return m;
}

}  // namespace lqres
