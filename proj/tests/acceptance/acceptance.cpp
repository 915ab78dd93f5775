// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance                 run every criterion
//   acceptance --only <name>   run one criterion
//   acceptance --list          list criterion names

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "lqres/features.hpp"
#include "lqres/opinf.hpp"
#include "lqres/optim.hpp"
#include "lqres/pipeline.hpp"
#include "lqres/reduce.hpp"
#include "support/resnet_oracle.hpp"
#include "support/testing.hpp"

using namespace lqres;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Every network gradient coordinate against central differences (step 1e-6)
// of an independent long double forward pass.
Outcome gradient_oracle() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937 gen(2024);
  struct Cfg {
    Eigen::Index n, width, blocks, batch;
  };
  std::vector<Cfg> cfgs = {{7, 35, 5, 4}};
  std::uniform_int_distribution<int> dn(1, 7), dw(1, 35), db(0, 5), dbatch(1, 8);
  while (cfgs.size() < 5) cfgs.push_back({dn(gen), dw(gen), db(gen), dbatch(gen)});

  double worst = 0.0;
  std::size_t coords = 0;
  for (const Cfg& c : cfgs) {
    ComponentModel m;
    m.ops = LinQuadOps::zeros(c.n, 0);
    m.ops.a_row = testing::random_vector(c.n, gen);
    m.ops.q_row = testing::random_vector(num_quad_features(c.n), gen);
    m.ops.bias = 0.1;
    m.net = init_params(c.n, c.width, c.blocks, gen());
    // Nonzero biases so their gradients are exercised away from init.
    m.net->flat() += 0.1 * testing::random_vector(m.net->num_params(), gen);
    const Eigen::MatrixXd states = testing::random_matrix(c.batch, c.n, gen);
    const Eigen::VectorXd targets = testing::random_vector(c.batch, gen);

    const Eigen::VectorXd g = loss_and_grads(m, states, targets).second.flatten();
    const testing::OracleModel om = testing::oracle_from(m);
    const auto fd = testing::oracle_fd_gradient(om, states, targets, 1e-6);
    for (std::size_t k = 0; k < fd.size(); ++k) {
      const double got = g[static_cast<Eigen::Index>(k)], want = static_cast<double>(fd[k]);
      const double denom = std::max({std::abs(got), std::abs(want), 1e-300});
      worst = std::max(worst, std::abs(got - want) / denom);
    }
    coords += fd.size();
  }
  const double secs = seconds_since(t0);
  o.require(worst < 1e-5, "max relative error " + fmt("%.2e", worst) + " over " +
                              std::to_string(coords) + " coordinates (< 1e-05)");
  o.require(secs < 30.0, "runtime " + fmt("%.1f", secs) + " s (< 30 s)");
  return o;
}

struct RandomLQ {
  Eigen::MatrixXd a;  // n x n
  Eigen::MatrixXd q;  // n x n(n+1)/2
  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const {
    return a * x + q * quad_monomials(x, QuadIndexMap(x.size()));
  }
};

double op_rel_error(const RandomLQ& sys, const RegressionDataset& ds) {
  const Eigen::Index n = sys.a.rows();
  Eigen::MatrixXd truth(n, n + sys.q.cols()), fit(n, n + sys.q.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    FitOptions opts;
    opts.include_bias = false;
    const LinQuadOps ops = fit_linquad(ds, i, opts);
    truth.row(i) << sys.a.row(i), sys.q.row(i);
    fit.row(i) << ops.a_row.transpose(), ops.q_row.transpose();
  }
  return (fit - truth).norm() / truth.norm();
}

// Generate-and-recover on random LQ systems, from exact and from stencil derivatives.
Outcome ls_recovery() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937 gen(77);
  double worst_exact = 0.0, worst_stencil = 0.0;
  for (int s = 0; s < 20; ++s) {
    const Eigen::Index n = 1 + s % 5;
    RandomLQ sys;
    sys.a = 0.5 * testing::random_matrix(n, n, gen) - Eigen::MatrixXd::Identity(n, n);
    sys.q = 0.3 * testing::random_matrix(n, num_quad_features(n), gen);

    const Eigen::MatrixXd states = testing::random_matrix(200, n, gen);
    Eigen::MatrixXd derivs(200, n);
    for (Eigen::Index r = 0; r < 200; ++r) derivs.row(r) = sys(states.row(r).transpose()).transpose();
    worst_exact = std::max(worst_exact, op_rel_error(sys, make_dataset(states, derivs, 1, false)));

    std::vector<DerivativeSamples> samples;
    for (int k = 0; k < 20; ++k) {
      const Trajectory t = integrate(sys, testing::random_vector(n, gen), {0.0, 1.0}, 101);
      samples.push_back(stencil_derivatives(t));
    }
    worst_stencil = std::max(worst_stencil, op_rel_error(sys, build_dataset(samples, 1)));
  }
  const double secs = seconds_since(t0);
  o.require(worst_exact < 1e-8, "exact derivatives: max relative operator error " +
                                    fmt("%.2e", worst_exact) + " (< 1e-08)");
  o.require(worst_stencil < 1e-4, "stencil h=0.01: max relative operator error " +
                                      fmt("%.2e", worst_stencil) + " (< 1e-04)");
  o.require(secs < 60.0, "runtime " + fmt("%.1f", secs) + " s (< 60 s)");
  return o;
}

std::vector<GateKind> benchmark_gates(const RunConfig& c, std::vector<double>& rel) {
  const VectorField field = system_field(c);
  std::vector<DerivativeSamples> samples;
  for (const auto& x0 : sample_initial_conditions(c.data.ic_ranges, c.data.count, c.seeds.data))
    samples.push_back(stencil_derivatives(integrate(field, x0, c.data.t_span, c.data.num_points)));
  const RegressionDataset ds = build_dataset(samples, c.seeds.split);
  std::vector<GateKind> kinds;
  for (Eigen::Index i = 0; i < ds.dim(); ++i) {
    const GateDecision d = gate_component(residual_stats(ds, fit_linquad(ds, i)), 1e-3);
    kinds.push_back(d.kind);
    rel.push_back(d.rel_rms);
  }
  return kinds;
}

// Gate decisions on the benchmark data sets at threshold 1e-3.
Outcome gate_correctness() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto A = GateKind::Analytic, N = GateKind::NeedsNetwork;

  std::vector<double> rel;
  const auto fhn = benchmark_gates(paper_config(SystemKind::Fhn), rel);
  o.require(fhn == std::vector<GateKind>{N, A},
            "FHN v " + std::string(to_string(fhn[0])) + " (rel_rms " + fmt("%.2e", rel[0]) +
                "), w " + std::string(to_string(fhn[1])) + " (rel_rms " + fmt("%.2e", rel[1]) + ")");

  rel.clear();
  const auto go = benchmark_gates(paper_config(SystemKind::Glycolysis), rel);
  std::string summary = "glycolysis";
  for (std::size_t i = 0; i < go.size(); ++i)
    summary += " S" + std::to_string(i + 1) + (go[i] == A ? ":A(" : ":N(") + fmt("%.1e", rel[i]) + ")";
  o.require(go == std::vector<GateKind>{N, N, A, A, A, N, A}, summary);

  const double secs = seconds_since(t0);
  o.require(secs < 120.0, "runtime " + fmt("%.1f", secs) + " s (< 120 s)");
  return o;
}

const json* horizon_entry(const json& test, double horizon) {
  for (const auto& h : test.at("horizons"))
    if (std::abs(h.at("horizon").get<double>() - horizon) < 1e-9) return &h;
  return nullptr;
}

std::string rel_list(const json& rel) {
  std::string s = "[";
  for (std::size_t i = 0; i < rel.size(); ++i)
    s += (i ? ", " : "") + fmt("%.4f", rel[i].get<double>());
  return s + "]";
}

Outcome fhn_desk_end_to_end() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  testing::TempDir dir("acc-fhn");
  RunConfig c = desk_config(SystemKind::Fhn);
  c.output_dir = dir.path();
  const DemoOutput out = cmd_demo(c);
  const double secs = seconds_since(t0);

  const json& test = out.evaluate.metrics.at("tests").at(0);
  const json* h = horizon_entry(test, 100.0);
  const bool ok = h && h->at("status") == "ok";
  o.require(ok, "learned simulation completes over [0, 100]");
  if (ok) {
    double worst = 0.0;
    for (const auto& e : h->at("rel_l2")) worst = std::max(worst, e.get<double>());
    o.require(worst < 0.10, "relative L2 (v, w) " + rel_list(h->at("rel_l2")) + " (< 0.10)");
  }
  o.require(secs < 600.0, "runtime " + fmt("%.1f", secs) + " s (< 600 s)");
  return o;
}

Outcome glycolysis_desk_end_to_end() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  testing::TempDir dir("acc-go");
  RunConfig c = desk_config(SystemKind::Glycolysis);
  c.output_dir = dir.path();
  const DemoOutput out = cmd_demo(c);
  const double secs = seconds_since(t0);

  std::string gates;
  for (const auto& g : out.train.gate_report)
    gates += (gates.empty() ? "" : ",") + g.at("name").get<std::string>() + ":" +
             (g.at("decision") == "analytic" ? "A" : "N");
  o.detail = "gates " + gates;

  const json& test = out.evaluate.metrics.at("tests").at(0);
  const json* h5 = horizon_entry(test, 5.0);
  const bool ok5 = h5 && h5->at("status") == "ok";
  o.require(ok5, "learned simulation completes over [0, 5]");
  if (ok5) {
    double worst = 0.0;
    for (const auto& e : h5->at("rel_l2")) worst = std::max(worst, e.get<double>());
    o.require(worst < 0.25, "relative L2 over [0, 5] " + rel_list(h5->at("rel_l2")) + " (< 0.25)");
  }
  // Bounded: no blow-up and no excursion beyond ten times the true range.
  const double max_pred = test.at("max_abs_pred").get<double>();
  const double max_true = test.at("max_abs_true").get<double>();
  const bool bounded = test.at("status") == "ok" && std::isfinite(max_pred) && max_pred <= 10.0 * max_true;
  o.require(bounded, "bounded over [0, 10]: max |pred| " + fmt("%.3g", max_pred) + " vs max |true| " +
                         fmt("%.3g", max_true));
  o.require(secs < 1800.0, "runtime " + fmt("%.1f", secs) + " s (< 1800 s)");
  return o;
}

Outcome numerical_kernels() {
  Outcome o;
  auto rk4_err = [](double h) {
    const auto n = static_cast<std::size_t>(std::lround(1.0 / h)) + 1;
    const Trajectory t = integrate([](const Eigen::VectorXd& x) { return Eigen::VectorXd(-x); },
                                   Eigen::VectorXd::Ones(1), {0.0, 1.0}, n);
    return std::abs(t.states(t.size() - 1, 0) - std::exp(-1.0));
  };
  const double e1 = rk4_err(0.04), e2 = rk4_err(0.02), e3 = rk4_err(0.01);
  const double p1 = std::log2(e1 / e2), p2 = std::log2(e2 / e3);
  o.require(std::abs(p1 - 4.0) <= 0.2 && std::abs(p2 - 4.0) <= 0.2,
            "RK4 order " + fmt("%.3f", p1) + ", " + fmt("%.3f", p2) + " (4.0 +- 0.2)");

  // Stencil: exact on a random quartic, fourth order on sin.
  std::mt19937 gen(5);
  const Eigen::VectorXd c = testing::random_vector(5, gen, -2.0, 2.0);
  Trajectory poly;
  poly.times = Eigen::VectorXd::LinSpaced(41, -1.0, 1.0);
  poly.states.resize(41, 1);
  for (Eigen::Index k = 0; k < 41; ++k) {
    const double t = poly.times[k];
    poly.states(k, 0) = c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * c[4])));
  }
  const DerivativeSamples dp = stencil_derivatives(poly);
  double poly_err = 0.0;
  for (Eigen::Index k = 0; k < dp.derivs.rows(); ++k) {
    const double t = poly.times[k + 2];
    const double exact = c[1] + t * (2 * c[2] + t * (3 * c[3] + t * 4 * c[4]));
    poly_err = std::max(poly_err, std::abs(dp.derivs(k, 0) - exact));
  }
  o.require(poly_err <= 1e-10, "stencil quartic error " + fmt("%.2e", poly_err) + " (<= 1e-10)");

  auto sin_err = [](double h) {
    Trajectory t;
    const auto n = static_cast<Eigen::Index>(std::lround(2.0 / h)) + 1;
    t.times = Eigen::VectorXd::LinSpaced(n, 0.0, 2.0);
    t.states = t.times.array().sin().matrix();
    const DerivativeSamples d = stencil_derivatives(t);
    return (d.derivs.col(0) - t.times.segment(2, n - 4).array().cos().matrix()).cwiseAbs().maxCoeff();
  };
  const double ratio = sin_err(0.1) / sin_err(0.05);
  o.require(std::abs(std::log2(ratio) - 4.0) <= 0.2,
            "stencil sin error ratio " + fmt("%.2f", ratio) + " under halving (order 4 +- 0.2)");

  const Eigen::MatrixXd x = testing::random_matrix(40, 120, gen);
  double ey = 0.0;
  for (Eigen::Index r : {1, 7, 20, 39}) {
    const PODBasis b = pod_basis(x, PodTruncation::fixed_rank(r));
    const double resid = (x - b.v_matrix * (b.v_matrix.transpose() * x)).squaredNorm();
    const double tail = b.singular_values.tail(b.singular_values.size() - r).squaredNorm();
    ey = std::max(ey, testing::rel_err(resid, tail));
  }
  o.require(ey < 1e-8, "POD Eckart-Young relative mismatch " + fmt("%.2e", ey) + " (< 1e-08)");

  HyperParams h;
  h.learning_rate = 1e-2;
  h.weight_decay = 0.0;
  const Eigen::Vector2d target(0.8, -1.7);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(2);
  OptState s = OptState::zeros(2);
  for (int i = 0; i < 2000; ++i) radam_update(s, p, 2.0 * (p - target), h, Eigen::ArrayXd::Zero(2));
  const double loss = (p - target).squaredNorm();
  o.require(loss < 1e-8, "RAdam quadratic loss after 2000 steps " + fmt("%.2e", loss) + " (< 1e-08)");
  return o;
}

Outcome determinism() {
  Outcome o;
  testing::TempDir dir("acc-det");
  RunConfig a = desk_config(SystemKind::Fhn);
  a.output_dir = dir.path() / "run1";
  RunConfig b = a;
  b.output_dir = dir.path() / "run2";
  const DemoOutput ra = cmd_demo(a);
  const DemoOutput rb = cmd_demo(b);
  o.require(testing::slurp(ra.train.model_path) == testing::slurp(rb.train.model_path),
            "model files byte-identical");
  o.require(testing::slurp(ra.evaluate.metrics_path) == testing::slurp(rb.evaluate.metrics_path),
            "metrics files byte-identical");
  return o;
}

Outcome discrete_oracle() {
  Outcome o;
  std::mt19937 gen(31);
  const Eigen::Index n = 3;
  // A contracting rotation-like map.
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(testing::random_matrix(n, n, gen))
                                .householderQ();
  const Eigen::MatrixXd map = 0.97 * q;

  std::vector<Trajectory> seqs;
  for (int k = 0; k < 8; ++k) {
    Trajectory t;
    t.times = Eigen::VectorXd::LinSpaced(101, 0.0, 100.0);
    t.states.resize(101, n);
    t.states.row(0) = testing::random_vector(n, gen).transpose();
    for (Eigen::Index s = 1; s < 101; ++s) t.states.row(s) = (map * t.states.row(s - 1).transpose()).transpose();
    seqs.push_back(t);
  }
  const RegressionDataset ds = build_discrete_dataset(seqs, 4);

  LQModel model;
  model.n = n;
  model.kind = ModelKind::Discrete;
  Eigen::MatrixXd fit(n, n);
  double nonlinear = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const LinQuadOps ops = fit_linquad(ds, i);
    fit.row(i) = ops.a_row.transpose();
    nonlinear = std::max({nonlinear, ops.q_row.cwiseAbs().maxCoeff(), std::abs(ops.bias)});
    model.components.push_back({ops, gate_component(residual_stats(ds, ops), 1e-3), std::nullopt});
  }
  const double map_err = (fit - map).norm() / map.norm();
  o.require(map_err < 1e-8 && nonlinear < 1e-8,
            "recovered map relative error " + fmt("%.2e", map_err) + ", spurious terms " +
                fmt("%.2e", nonlinear) + " (< 1e-08)");

  const Trajectory sim = simulate_discrete(model, seqs[0].states.row(0).transpose(), 100);
  const double seq_err = (sim.states - seqs[0].states).cwiseAbs().maxCoeff();
  o.require(seq_err < 1e-6, "100-step sequence max error " + fmt("%.2e", seq_err) + " (< 1e-06)");
  return o;
}

struct Criterion {
  const char* name;
  Outcome (*run)();
};

const Criterion kCriteria[] = {
    {"gradient_oracle", gradient_oracle},
    {"ls_recovery", ls_recovery},
    {"gate_correctness", gate_correctness},
    {"fhn_desk_end_to_end", fhn_desk_end_to_end},
    {"glycolysis_desk_end_to_end", glycolysis_desk_end_to_end},
    {"numerical_kernels", numerical_kernels},
    {"determinism", determinism},
    {"discrete_oracle", discrete_oracle},
};

}  // namespace

int main(int argc, char** argv) {
  std::string only;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = argv[++i];
    } else if (std::strcmp(argv[i], "--list") == 0) {
      for (const auto& c : kCriteria) std::printf("%s\n", c.name);
      return 0;
    } else {
      std::fprintf(stderr, "usage: acceptance [--only <criterion>] [--list]\n");
      return 2;
    }
  }

  int failed = 0, ran = 0;
  for (const auto& c : kCriteria) {
    if (!only.empty() && only != c.name) continue;
    ++ran;
    Outcome r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    std::printf("%s %s: %s\n", r.pass ? "PASS" : "FAIL", c.name, r.detail.c_str());
    std::fflush(stdout);
    if (!r.pass) ++failed;
  }
  if (ran == 0) {
    std::fprintf(stderr, "unknown criterion '%s'\n", only.c_str());
    return 2;
  }
  return failed == 0 ? 0 : 1;
}
