#include "lqres/opinf.hpp"

#include <cmath>

#include <Eigen/SVD>

namespace lqres {

LinQuadOps LinQuadOps::zeros(Eigen::Index n, Eigen::Index component, bool has_bias) {
  LinQuadOps ops;
  ops.a_row = Eigen::VectorXd::Zero(n);
  ops.q_row = Eigen::VectorXd::Zero(num_quad_features(n));
  ops.has_bias = has_bias;
  ops.component = component;
  return ops;
}

double LinQuadOps::predict(const Eigen::VectorXd& x, const Eigen::VectorXd& monomials) const {
  return a_row.dot(x) + q_row.dot(monomials) + bias;
}

double LinQuadOps::predict(const Eigen::VectorXd& x) const {
  return predict(x, quad_monomials(x, QuadIndexMap(x.size())));
}

Eigen::VectorXd LinQuadOps::predict_rows(const Eigen::MatrixXd& states,
                                         const Eigen::MatrixXd& quad) const {
  return (states * a_row + quad * q_row).array() + bias;
}

Eigen::VectorXd solve_min_norm(const Eigen::MatrixXd& design, const Eigen::VectorXd& rhs,
                               double cutoff) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(design.cols());
  if (sigma.size() == 0 || !(sigma[0] > 0.0)) return coef;
  const double floor = cutoff * sigma[0];
  const Eigen::VectorXd utb = svd.matrixU().transpose() * rhs;
  for (Eigen::Index k = 0; k < sigma.size(); ++k) {
    if (sigma[k] <= floor) break;
    coef += (utb[k] / sigma[k]) * svd.matrixV().col(k);
  }
  return coef;
}

namespace {

void check_component(const RegressionDataset& ds, Eigen::Index component) {
  if (component < 0 || component >= ds.targets.cols())
    throw Error(ErrorCode::DimensionMismatch,
                "component " + std::to_string(component) + " outside [0, " +
                    std::to_string(ds.targets.cols()) + ")");
}

}  // namespace

LinQuadOps fit_linquad(const RegressionDataset& ds, Eigen::Index component,
                       const FitOptions& opts) {
  check_component(ds, component);
  const Eigen::Index n = ds.dim();
  const Eigen::Index p = ds.quad_feats.cols();
  const Eigen::Index cols = n + p + (opts.include_bias ? 1 : 0);
  const auto rows = static_cast<Eigen::Index>(ds.train_rows.size());
  if (rows < cols)
    throw Error(ErrorCode::Underdetermined, std::to_string(rows) + " train rows for " +
                                                std::to_string(cols) + " regression columns");

  Eigen::MatrixXd design(rows, cols);
  Eigen::VectorXd rhs(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::Index src = ds.train_rows[static_cast<std::size_t>(r)];
    design.row(r).head(n) = ds.states.row(src);
    design.row(r).segment(n, p) = ds.quad_feats.row(src);
    if (opts.include_bias) design(r, n + p) = 1.0;
    rhs[r] = ds.targets(src, component);
  }
  if (!design.allFinite() || !rhs.allFinite())
    throw Error(ErrorCode::NonFinite, "non-finite entries in regression data");

  const Eigen::VectorXd coef = solve_min_norm(design, rhs, opts.cutoff);
  if (!coef.allFinite()) throw Error(ErrorCode::NonFinite, "least-squares solution not finite");

  LinQuadOps ops;
  ops.component = component;
  ops.a_row = coef.head(n);
  ops.q_row = coef.segment(n, p);
  ops.has_bias = opts.include_bias;
  ops.bias = opts.include_bias ? coef[n + p] : 0.0;
  return ops;
}

ResidualReport residual_stats(const RegressionDataset& ds, const LinQuadOps& ops,
                              bool keep_per_sample) {
  check_component(ds, ops.component);
  if (ops.a_row.size() != ds.dim() || ops.q_row.size() != ds.quad_feats.cols())
    throw Error(ErrorCode::DimensionMismatch, "operator shapes do not match dataset");

  const auto target = ds.targets.col(ops.component);
  const Eigen::VectorXd residual = target - ops.predict_rows(ds.states, ds.quad_feats);

  ResidualReport report;
  report.rel_rms = residual.norm() / std::max(target.norm(), 1e-15);
  report.max_abs = residual.size() ? residual.cwiseAbs().maxCoeff() : 0.0;
  if (keep_per_sample) report.per_sample = residual;
  return report;
}

GateDecision gate_component(const ResidualReport& report, double threshold) {
  if (!(threshold > 0.0)) throw Error(ErrorCode::InvalidArgument, "gate threshold must be > 0");
  GateDecision d;
  d.threshold_used = threshold;
  d.rel_rms = report.rel_rms;
  d.kind = report.rel_rms <= threshold ? GateKind::Analytic : GateKind::NeedsNetwork;
  return d;
}

std::string_view to_string(GateKind kind) {
  return kind == GateKind::Analytic ? "analytic" : "needs_network";
}

GateKind gate_kind_from_string(std::string_view text) {
  if (text == "analytic") return GateKind::Analytic;
  if (text == "needs_network") return GateKind::NeedsNetwork;
  throw Error(ErrorCode::MalformedFile, "unknown gate decision '" + std::string(text) + "'");
}

nlohmann::json gate_report_entry(Eigen::Index component, const GateDecision& decision) {
  return {{"component", component},
          {"rel_rms", decision.rel_rms},
          {"threshold", decision.threshold_used},
          {"decision", to_string(decision.kind)}};
}

}  // namespace lqres
