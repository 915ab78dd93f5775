#include <doctest.h>

#include "lqres/neural.hpp"
#include "lqres/opinf.hpp"
#include "support/resnet_oracle.hpp"
#include "support/testing.hpp"

using namespace lqres;

namespace {

ComponentModel random_model(Eigen::Index n, Eigen::Index width, Eigen::Index blocks,
                            std::mt19937& gen) {
  ComponentModel m;
  m.ops = LinQuadOps::zeros(n, 0);
  m.ops.a_row = testing::random_vector(n, gen);
  m.ops.q_row = testing::random_vector(num_quad_features(n), gen);
  m.ops.bias = 0.3;
  m.gate.kind = GateKind::NeedsNetwork;
  ResNetParams net(n, width, blocks);
  net.flat() = testing::random_vector(net.num_params(), gen, -0.5, 0.5);
  m.net = net;
  return m;
}

}  // namespace

TEST_CASE("elu values") {
  CHECK(elu(0.0) == 0.0);
  CHECK(elu_prime(0.0) == 1.0);
  CHECK(elu(2.0) == 2.0);
  CHECK(elu(-1.0) == doctest::Approx(std::exp(-1.0) - 1.0).epsilon(1e-15));
  CHECK(elu(-1.0) == doctest::Approx(-0.63212).epsilon(1e-5));
  CHECK(elu_prime(-2.0) == doctest::Approx(std::exp(-2.0)));
  CHECK(elu_prime(1e-300) == 1.0);
}

TEST_CASE("parameter layout") {
  ResNetParams net(3, 4, 2);
  CHECK(net.num_params() == 4 * 3 + 4 + 2 * (2 * (16 + 4)) + 4 + 1);
  const Eigen::ArrayXd mask = net.weight_mask();
  CHECK(mask.sum() == doctest::Approx(12 + 2 * 32 + 4));
  net.entry_bias().setConstant(1.0);
  net.inner_bias(1).setConstant(1.0);
  net.outer_bias(0).setConstant(1.0);
  net.output_bias() = 1.0;
  // Biases never overlap weight-masked slots.
  CHECK((mask * net.flat().array()).abs().sum() == 0.0);
  CHECK(net.flat().sum() == doctest::Approx(4 + 4 + 4 + 1));
}

TEST_CASE("resnet_forward special cases") {
  std::mt19937 gen(1);
  const Eigen::VectorXd x = testing::random_vector(3, gen);

  ResNetParams zero(3, 5, 2);
  CHECK(resnet_forward(zero, x).output == 0.0);

  // No blocks: an affine map of an affine map.
  ResNetParams flat(3, 4, 0);
  flat.flat() = testing::random_vector(flat.num_params(), gen);
  const double want = flat.output_weight().dot(flat.entry_weight() * x + flat.entry_bias()) +
                      flat.output_bias();
  CHECK(resnet_forward(flat, x).output == doctest::Approx(want).epsilon(1e-14));

  // Zero block weights: each block only adds its b2.
  ResNetParams skip(3, 4, 3);
  skip.entry_weight() = testing::random_matrix(4, 3, gen);
  skip.output_weight() = testing::random_vector(4, gen);
  Eigen::VectorXd shift = Eigen::VectorXd::Zero(4);
  for (Eigen::Index b = 0; b < 3; ++b) {
    skip.outer_bias(b) = testing::random_vector(4, gen);
    shift += skip.outer_bias(b);
  }
  const double skip_want = skip.output_weight().dot(skip.entry_weight() * x + shift);
  CHECK(resnet_forward(skip, x).output == doctest::Approx(skip_want).epsilon(1e-14));

  const ForwardResult r = resnet_forward(skip, x);
  CHECK(r.tape.lifted.size() == 4);
  CHECK(r.tape.pre_act.size() == 3);
  CHECK_THROWS_AS(resnet_forward(skip, Eigen::VectorXd::Zero(2)), Error);
}

TEST_CASE("resnet_forward agrees with the long double oracle") {
  std::mt19937 gen(2);
  const ComponentModel m = random_model(4, 6, 3, gen);
  const testing::OracleModel o = testing::oracle_from(m);
  for (int t = 0; t < 20; ++t) {
    const Eigen::VectorXd x = testing::random_vector(4, gen);
    const std::vector<long double> xl(x.data(), x.data() + 4);
    const double want = static_cast<double>(testing::oracle_predict(o, o.theta, xl.data()));
    CHECK(lqres_predict(m, x) == doctest::Approx(want).epsilon(1e-13));
  }
}

TEST_CASE("batched forward is the column-wise single forward") {
  std::mt19937 gen(3);
  const ComponentModel m = random_model(3, 5, 2, gen);
  const Eigen::MatrixXd xs = testing::random_matrix(3, 7, gen);
  const Eigen::RowVectorXd batch = resnet_forward_batch(*m.net, xs, nullptr);
  for (Eigen::Index c = 0; c < 7; ++c)
    CHECK(batch[c] == doctest::Approx(resnet_forward(*m.net, xs.col(c)).output).epsilon(1e-15));
  const Eigen::VectorXd rows = lqres_predict_rows(m, xs.transpose());
  for (Eigen::Index c = 0; c < 7; ++c)
    CHECK(rows[c] == doctest::Approx(lqres_predict(m, xs.col(c))).epsilon(1e-14));
}

TEST_CASE("lqres_predict gate and additivity contracts") {
  std::mt19937 gen(4);
  ComponentModel m = random_model(3, 4, 2, gen);
  for (int t = 0; t < 50; ++t) {
    const Eigen::VectorXd x = testing::random_vector(3, gen);
    const double both = lqres_predict(m, x);
    CHECK(std::abs(both - (m.ops.predict(x) + resnet_forward(*m.net, x).output)) <= 1e-15 * std::max(1.0, std::abs(both)) * 4);
  }

  ComponentModel lq_only = m;
  lq_only.net.reset();
  ComponentModel zeroed = m;
  zeroed.net->flat().setZero();
  for (int t = 0; t < 1000; ++t) {
    const Eigen::VectorXd x = testing::random_vector(3, gen, -3.0, 3.0);
    CHECK(lqres_predict(lq_only, x) == m.ops.predict(x));
    CHECK(std::abs(lqres_predict(zeroed, x) - m.ops.predict(x)) <= 1e-15);
  }
}

TEST_CASE("init_params") {
  const ResNetParams a = init_params(7, 35, 5, 99), b = init_params(7, 35, 5, 99);
  CHECK(a.flat() == b.flat());
  CHECK(a.flat() != init_params(7, 35, 5, 100).flat());

  const Eigen::ArrayXd mask = a.weight_mask();
  CHECK(((1.0 - mask) * a.flat().array()).abs().maxCoeff() == 0.0);
  CHECK(a.entry_weight().cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(7.0));
  CHECK(a.inner_weight(2).cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(35.0));

  std::mt19937 gen(5);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const ResNetParams net = init_params(7, 35, 5, seed);
    Eigen::VectorXd x = testing::random_vector(7, gen);
    x /= std::max(1.0, x.norm());
    worst = std::max(worst, std::abs(resnet_forward(net, x).output));
  }
  CHECK(worst <= 10.0);
}

TEST_CASE("loss_and_grads at the global minimum is zero") {
  std::mt19937 gen(6);
  const ComponentModel m = random_model(3, 4, 2, gen);
  const Eigen::MatrixXd states = testing::random_matrix(10, 3, gen);
  const Eigen::VectorXd targets = lqres_predict_rows(m, states);
  const auto [loss, g] = loss_and_grads(m, states, targets);
  CHECK(loss == 0.0);
  CHECK(g.flatten().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("loss_and_grads closed form for an LQ-only model") {
  ComponentModel m;
  m.ops = LinQuadOps::zeros(2, 0);
  m.ops.a_row << 1.0, -2.0;
  m.ops.q_row << 0.5, 0.0, 1.0;
  m.ops.bias = 0.25;
  Eigen::MatrixXd x(1, 2);
  x << 0.3, -0.7;
  const Eigen::VectorXd target = Eigen::VectorXd::Constant(1, 1.5);
  const double pred = m.ops.predict(x.row(0).transpose());
  const auto [loss, g] = loss_and_grads(m, x, target);
  CHECK(loss == doctest::Approx((pred - 1.5) * (pred - 1.5)));
  CHECK(g.d_a_row[0] == doctest::Approx(2.0 * (pred - 1.5) * 0.3));
  CHECK(g.d_a_row[1] == doctest::Approx(2.0 * (pred - 1.5) * -0.7));
  CHECK(g.d_q_row[1] == doctest::Approx(2.0 * (pred - 1.5) * 0.3 * -0.7));
  CHECK(g.d_bias == doctest::Approx(2.0 * (pred - 1.5)));
  CHECK(g.d_net.size() == 0);
}

TEST_CASE("loss_and_grads matches central differences") {
  std::mt19937 gen(7);
  const struct {
    Eigen::Index n, width, blocks, batch;
  } configs[] = {{2, 3, 1, 5}, {3, 5, 2, 8}, {1, 4, 0, 3}};
  for (const auto& c : configs) {
    const ComponentModel m = random_model(c.n, c.width, c.blocks, gen);
    const Eigen::MatrixXd states = testing::random_matrix(c.batch, c.n, gen);
    const Eigen::VectorXd targets = testing::random_vector(c.batch, gen);
    const auto [loss, g] = loss_and_grads(m, states, targets);
    const testing::OracleModel o = testing::oracle_from(m);
    CHECK(loss == doctest::Approx(static_cast<double>(
                                      testing::oracle_loss(o, o.theta, states, targets)))
                      .epsilon(1e-13));
    const auto fd = testing::oracle_fd_gradient(o, states, targets, 1e-6);
    const Eigen::VectorXd got = g.flatten();
    REQUIRE(static_cast<std::size_t>(got.size()) == fd.size());
    for (std::size_t k = 0; k < fd.size(); ++k) {
      const double want = static_cast<double>(fd[k]);
      const double denom = std::max({std::abs(want), std::abs(got[static_cast<Eigen::Index>(k)]), 1e-300});
      CHECK(std::abs(got[static_cast<Eigen::Index>(k)] - want) / denom < 1e-5);
    }
  }
}

TEST_CASE("deep residual stacks keep first-block gradients alive") {
  std::mt19937 gen(8);
  const Eigen::Index width = 8, blocks = 20;
  ComponentModel m;
  m.ops = LinQuadOps::zeros(3, 0);
  m.net = init_params(3, width, blocks, 17);
  const Eigen::MatrixXd states = testing::random_matrix(32, 3, gen);
  const Eigen::VectorXd targets = testing::random_vector(32, gen);
  const GradientBundle g = loss_and_grads(m, states, targets).second;
  ResNetParams grads(3, width, blocks);
  grads.flat() = g.d_net;
  const double first = grads.inner_weight(0).norm();
  const double last = grads.inner_weight(blocks - 1).norm();
  REQUIRE(first > 0.0);
  REQUIRE(last > 0.0);
  CHECK(std::abs(std::log10(first / last)) < 3.0);
}

TEST_CASE("pack and unpack are inverse") {
  std::mt19937 gen(9);
  ComponentModel m = random_model(3, 4, 1, gen);
  const Eigen::VectorXd flat = pack_params(m);
  ComponentModel other = m;
  other.net->flat().setZero();
  other.ops.a_row.setZero();
  unpack_params(flat, other);
  CHECK(pack_params(other) == flat);
  CHECK_THROWS_AS(unpack_params(flat.head(3), other), Error);
}
