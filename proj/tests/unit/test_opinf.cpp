#include <doctest.h>

#include "lqres/dynsys.hpp"
#include "lqres/opinf.hpp"
#include "support/testing.hpp"

using namespace lqres;

namespace {

// Dataset whose targets are an exact function of sampled states.
template <class F>
RegressionDataset exact_dataset(Eigen::Index m, Eigen::Index n, F f, std::uint64_t seed) {
  std::mt19937 gen(static_cast<unsigned>(seed));
  Eigen::MatrixXd states = testing::random_matrix(m, n, gen, -1.5, 1.5);
  Eigen::MatrixXd targets(m, n);
  for (Eigen::Index r = 0; r < m; ++r) targets.row(r) = f(states.row(r).transpose()).transpose();
  return make_dataset(states, targets, seed, false);
}

RegressionDataset fhn_dataset() {
  const FhnParams p;
  const std::vector<Interval> box(2, Interval{-1.0, 1.0});
  std::vector<DerivativeSamples> samples;
  for (const auto& x0 : sample_initial_conditions(box, 10, 1))
    samples.push_back(stencil_derivatives(integrate(
        [&](const Eigen::VectorXd& x) { return rhs_fhn(x, p); }, x0, {0.0, 200.0}, 5000)));
  return build_dataset(samples, 2);
}

}  // namespace

TEST_CASE("fit_linquad recovers a pure linear 1-D system") {
  const auto ds = exact_dataset(
      60, 1, [](const Eigen::VectorXd& x) { return Eigen::VectorXd(2.0 * x); }, 4);
  const LinQuadOps ops = fit_linquad(ds, 0);
  CHECK(std::abs(ops.a_row[0] - 2.0) < 1e-10);
  CHECK(std::abs(ops.q_row[0]) < 1e-10);
  CHECK(std::abs(ops.bias) < 1e-10);
}

TEST_CASE("fit_linquad recovers a synthetic quadratic component") {
  const auto f = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd d(2);
    d[0] = -0.5 * x[0] + 0.1 * x[0] * x[1] + 0.3;
    d[1] = x[0] - x[1] * x[1];
    return d;
  };
  const auto ds = exact_dataset(200, 2, f, 6);
  const LinQuadOps ops = fit_linquad(ds, 0);
  CHECK(std::abs(ops.a_row[0] + 0.5) < 1e-8);
  CHECK(std::abs(ops.a_row[1]) < 1e-8);
  CHECK(std::abs(ops.q_row[0]) < 1e-8);
  CHECK(std::abs(ops.q_row[1] - 0.1) < 1e-8);
  CHECK(std::abs(ops.q_row[2]) < 1e-8);
  CHECK(std::abs(ops.bias - 0.3) < 1e-8);

  const LinQuadOps ops1 = fit_linquad(ds, 1);
  CHECK(std::abs(ops1.q_row[2] + 1.0) < 1e-8);
  CHECK(residual_stats(ds, ops1).rel_rms < 1e-12);
}

TEST_CASE("fit_linquad matches an independent QR solve on noisy data") {
  std::mt19937 gen(21);
  Eigen::MatrixXd states = testing::random_matrix(300, 3, gen);
  Eigen::MatrixXd targets = testing::random_matrix(300, 3, gen);
  const RegressionDataset ds = make_dataset(states, targets, 3, false);
  const LinQuadOps ops = fit_linquad(ds, 2);

  Eigen::MatrixXd design(ds.train_rows.size(), 3 + 6 + 1);
  Eigen::VectorXd rhs(design.rows());
  for (Eigen::Index r = 0; r < design.rows(); ++r) {
    const auto src = ds.train_rows[static_cast<std::size_t>(r)];
    design.row(r) << ds.states.row(src), ds.quad_feats.row(src), 1.0;
    rhs[r] = targets(src, 2);
  }
  const Eigen::VectorXd ref = design.colPivHouseholderQr().solve(rhs);
  Eigen::VectorXd got(10);
  got << ops.a_row, ops.q_row, ops.bias;
  CHECK((got - ref).norm() <= 1e-10 * ref.norm());
}

TEST_CASE("fit_linquad without bias and error cases") {
  const auto ds = exact_dataset(
      40, 2, [](const Eigen::VectorXd& x) { return Eigen::VectorXd(x.array() + 1.0); }, 8);
  FitOptions no_bias;
  no_bias.include_bias = false;
  const LinQuadOps ops = fit_linquad(ds, 0, no_bias);
  CHECK_FALSE(ops.has_bias);
  CHECK(ops.bias == 0.0);

  const auto tiny = exact_dataset(
      6, 2, [](const Eigen::VectorXd& x) { return x; }, 8);
  try {
    fit_linquad(tiny, 0);
    FAIL("expected Underdetermined");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Underdetermined);
  }
  CHECK_THROWS_AS(fit_linquad(ds, 5), Error);
}

TEST_CASE("solve_min_norm picks the minimum-norm solution on rank-deficient designs") {
  Eigen::MatrixXd design(4, 2);
  design << 1, 1, 2, 2, 3, 3, 4, 4;
  const Eigen::VectorXd rhs = design.col(0) * 2.0;
  const Eigen::VectorXd c = solve_min_norm(design, rhs, 1e-10);
  CHECK(c[0] == doctest::Approx(1.0));
  CHECK(c[1] == doctest::Approx(1.0));
}

TEST_CASE("residual_stats and gate_component") {
  const auto ds = exact_dataset(
      50, 2, [](const Eigen::VectorXd& x) { return Eigen::VectorXd(3.0 * x); }, 2);
  LinQuadOps ops = LinQuadOps::zeros(2, 1);
  ops.a_row[1] = 3.0;
  const ResidualReport exact = residual_stats(ds, ops, true);
  CHECK(exact.rel_rms == 0.0);
  CHECK(exact.max_abs == 0.0);
  REQUIRE(exact.per_sample.has_value());
  CHECK(exact.per_sample->size() == 50);

  ops.a_row[1] = 0.0;
  CHECK(residual_stats(ds, ops).rel_rms == doctest::Approx(1.0));

  CHECK(gate_component(exact, 1e-12).kind == GateKind::Analytic);
  ResidualReport r;
  r.rel_rms = 2e-3;
  const GateDecision d = gate_component(r, 1e-3);
  CHECK(d.kind == GateKind::NeedsNetwork);
  CHECK(d.threshold_used == 1e-3);
  CHECK(gate_component(r, 2e-3).kind == GateKind::Analytic);
  CHECK_THROWS_AS(gate_component(r, 0.0), Error);

  const auto entry = gate_report_entry(1, d);
  CHECK(entry["decision"] == "needs_network");
  CHECK(entry["component"] == 1);
  CHECK(gate_kind_from_string("analytic") == GateKind::Analytic);
  CHECK_THROWS_AS(gate_kind_from_string("maybe"), Error);
}

TEST_CASE("FHN: w is linear with known coefficients, v is not") {
  const RegressionDataset ds = fhn_dataset();
  const LinQuadOps w = fit_linquad(ds, 1);
  CHECK(std::abs(w.a_row[0] - 0.08) < 1e-3);
  CHECK(std::abs(w.a_row[1] + 0.064) < 1e-3);
  CHECK(std::abs(w.bias - 0.056) < 1e-3);
  CHECK(w.q_row.cwiseAbs().maxCoeff() < 1e-3);
  CHECK(residual_stats(ds, w).rel_rms < 1e-3);

  const LinQuadOps v = fit_linquad(ds, 0);
  CHECK(residual_stats(ds, v).rel_rms > 0.01);
}
