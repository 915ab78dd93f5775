#pragma once

#include <optional>

#include <Eigen/Core>
#include <json.hpp>

#include "lqres/features.hpp"

namespace lqres {

/// Linear-quadratic operator row for one state component:
/// a_row . x + q_row . m(x) + bias, with m the deduplicated monomials.
struct LinQuadOps {
  Eigen::VectorXd a_row;
  Eigen::VectorXd q_row;
  double bias = 0.0;
  bool has_bias = true;
  Eigen::Index component = 0;

  static LinQuadOps zeros(Eigen::Index n, Eigen::Index component, bool has_bias = true);
  double predict(const Eigen::VectorXd& x, const Eigen::VectorXd& monomials) const;
  double predict(const Eigen::VectorXd& x) const;
  // Predictions for every row of (states, quad_feats).
  Eigen::VectorXd predict_rows(const Eigen::MatrixXd& states, const Eigen::MatrixXd& quad) const;
};

struct ResidualReport {
  double rel_rms = 0.0;
  double max_abs = 0.0;
  std::optional<Eigen::VectorXd> per_sample;
};

enum class GateKind { Analytic, NeedsNetwork };

struct GateDecision {
  GateKind kind = GateKind::NeedsNetwork;
  double threshold_used = 0.0;
  double rel_rms = 0.0;
};

struct FitOptions {
  bool include_bias = true;
  // Singular values below cutoff * sigma_max are treated as zero.
  double cutoff = 1e-10;
};

inline constexpr double kDefaultGateThreshold = 1e-3;

/// Minimum-norm least-squares solution of design * coef ~= rhs through a
/// truncated SVD pseudoinverse.
Eigen::VectorXd solve_min_norm(const Eigen::MatrixXd& design, const Eigen::VectorXd& rhs,
                               double cutoff);

/// Decoupled least-squares fit of one component's operators on the train rows.
LinQuadOps fit_linquad(const RegressionDataset& ds, Eigen::Index component,
                       const FitOptions& opts = {});

/// Residual of `ops` over all rows (train and validation).
ResidualReport residual_stats(const RegressionDataset& ds, const LinQuadOps& ops,
                              bool keep_per_sample = false);

GateDecision gate_component(const ResidualReport& report, double threshold);

std::string_view to_string(GateKind kind);
GateKind gate_kind_from_string(std::string_view text);

/// {component, rel_rms, threshold, decision}
nlohmann::json gate_report_entry(Eigen::Index component, const GateDecision& decision);

}  // namespace lqres
