#include "lqres/neural.hpp"

#include <cmath>
#include <string>

#include "lqres/rng.hpp"

namespace lqres {

double elu(double z) { return z > 0.0 ? z : std::expm1(z); }

double elu_prime(double z) { return z > 0.0 ? 1.0 : std::exp(z); }

namespace {

Eigen::ArrayXXd elu_array(const Eigen::MatrixXd& z) {
  const Eigen::ArrayXXd neg = z.array().min(0.0).expm1();
  return (z.array() > 0.0).select(z.array(), neg);
}

Eigen::ArrayXXd elu_prime_array(const Eigen::MatrixXd& z) {
  const Eigen::ArrayXXd neg = z.array().min(0.0).exp();
  return (z.array() > 0.0).select(Eigen::ArrayXXd::Ones(z.rows(), z.cols()), neg);
}

}  // namespace

ResNetParams::ResNetParams(Eigen::Index input_dim, Eigen::Index width, Eigen::Index blocks)
    : input_dim_(input_dim), width_(width), blocks_(blocks) {
  if (input_dim < 1 || width < 1 || blocks < 0)
    throw Error(ErrorCode::InvalidArgument, "network needs input_dim >= 1, width >= 1, blocks >= 0");
  entry_w_ = 0;
  entry_b_ = width * input_dim;
  blocks_start_ = entry_b_ + width;
  output_w_ = blocks_start_ + blocks * block_size();
  flat_ = Eigen::VectorXd::Zero(output_w_ + width + 1);
}

Eigen::ArrayXd ResNetParams::weight_mask() const {
  Eigen::ArrayXd mask = Eigen::ArrayXd::Zero(flat_.size());
  mask.segment(entry_w_, width_ * input_dim_) = 1.0;
  for (Eigen::Index b = 0; b < blocks_; ++b) {
    mask.segment(block_offset(b), width_ * width_) = 1.0;
    mask.segment(outer_offset(b), width_ * width_) = 1.0;
  }
  mask.segment(output_w_, width_) = 1.0;
  return mask;
}

Eigen::RowVectorXd resnet_forward_batch(const ResNetParams& net, const Eigen::MatrixXd& inputs,
                                        ForwardTape* tape) {
  if (inputs.rows() != net.input_dim())
    throw Error(ErrorCode::DimensionMismatch, "network input has " +
                                                  std::to_string(inputs.rows()) + " rows, expected " +
                                                  std::to_string(net.input_dim()));
  Eigen::MatrixXd u = (net.entry_weight() * inputs).colwise() + net.entry_bias();
  if (tape) {
    tape->input = inputs;
    tape->lifted.clear();
    tape->pre_act.clear();
    tape->lifted.push_back(u);
  }
  for (Eigen::Index b = 0; b < net.blocks(); ++b) {
    Eigen::MatrixXd z = (net.inner_weight(b) * u).colwise() + net.inner_bias(b);
    const Eigen::MatrixXd s = elu_array(z).matrix();
    u += (net.outer_weight(b) * s).colwise() + net.outer_bias(b);
    if (!u.allFinite())
      throw Error(ErrorCode::NonFinite, "non-finite activation in block " + std::to_string(b));
    if (tape) {
      tape->pre_act.push_back(std::move(z));
      tape->lifted.push_back(u);
    }
  }
  Eigen::RowVectorXd out = (net.output_weight().transpose() * u).array() + net.output_bias();
  if (!out.allFinite())
    throw Error(ErrorCode::NonFinite, "non-finite network output at layer " +
                                          std::to_string(net.blocks() + 1));
  return out;
}

ForwardResult resnet_forward(const ResNetParams& net, const Eigen::VectorXd& x) {
  ForwardResult r;
  r.output = resnet_forward_batch(net, x, &r.tape)[0];
  return r;
}

ResNetParams init_params(Eigen::Index n, Eigen::Index width, Eigen::Index blocks,
                         std::uint64_t seed) {
  ResNetParams net(n, width, blocks);
  Rng rng(seed);
  auto fill = [&rng](auto&& m, Eigen::Index fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-bound, bound);
  };
  fill(net.entry_weight(), n);
  for (Eigen::Index b = 0; b < blocks; ++b) {
    fill(net.inner_weight(b), width);
    fill(net.outer_weight(b), width);
  }
  fill(net.output_weight(), width);
  return net;
}

double lqres_predict(const ComponentModel& m, const Eigen::VectorXd& x) {
  double y = m.ops.predict(x);
  if (m.net) y += resnet_forward_batch(*m.net, x, nullptr)[0];
  return y;
}

Eigen::VectorXd lqres_predict_rows(const ComponentModel& m, const Eigen::MatrixXd& states) {
  const QuadIndexMap map(states.cols());
  Eigen::VectorXd y = m.ops.predict_rows(states, quad_monomials_rows(states, map));
  if (m.net) y += resnet_forward_batch(*m.net, states.transpose(), nullptr).transpose();
  return y;
}

Eigen::VectorXd GradientBundle::flatten() const {
  Eigen::VectorXd out(d_a_row.size() + d_q_row.size() + 1 + d_net.size());
  out << d_a_row, d_q_row, d_bias, d_net;
  return out;
}

std::pair<double, GradientBundle> loss_and_grads(const ComponentModel& m,
                                                 const Eigen::MatrixXd& states,
                                                 const Eigen::VectorXd& targets) {
  const Eigen::Index batch = states.rows();
  if (batch == 0) throw Error(ErrorCode::EmptyInput, "empty batch");
  if (targets.size() != batch)
    throw Error(ErrorCode::DimensionMismatch, "targets and states differ in row count");

  const QuadIndexMap map(states.cols());
  const Eigen::MatrixXd quad = quad_monomials_rows(states, map);
  Eigen::VectorXd pred = m.ops.predict_rows(states, quad);

  ForwardTape tape;
  if (m.net) pred += resnet_forward_batch(*m.net, states.transpose(), &tape).transpose();

  const Eigen::VectorXd err = pred - targets;
  const double loss = err.squaredNorm() / static_cast<double>(batch);
  if (!std::isfinite(loss)) throw Error(ErrorCode::NonFinite, "loss is not finite");

  // d loss / d prediction
  const Eigen::VectorXd d_out = (2.0 / static_cast<double>(batch)) * err;

  GradientBundle g;
  g.d_a_row = states.transpose() * d_out;
  g.d_q_row = quad.transpose() * d_out;
  g.d_bias = m.ops.has_bias ? d_out.sum() : 0.0;

  if (m.net) {
    const ResNetParams& net = *m.net;
    ResNetParams grad(net.input_dim(), net.width(), net.blocks());
    const Eigen::RowVectorXd d_out_row = d_out.transpose();
    const Eigen::MatrixXd& top = tape.lifted.back();

    grad.output_weight() = top * d_out;
    grad.output_bias() = d_out.sum();
    Eigen::MatrixXd d_u = net.output_weight() * d_out_row;

    for (Eigen::Index b = net.blocks() - 1; b >= 0; --b) {
      const auto bi = static_cast<std::size_t>(b);
      const Eigen::MatrixXd& z = tape.pre_act[bi];
      const Eigen::MatrixXd& u_in = tape.lifted[bi];
      const Eigen::MatrixXd s = elu_array(z).matrix();

      grad.outer_weight(b) = d_u * s.transpose();
      grad.outer_bias(b) = d_u.rowwise().sum();
      const Eigen::MatrixXd d_z =
          ((net.outer_weight(b).transpose() * d_u).array() * elu_prime_array(z)).matrix();
      grad.inner_weight(b) = d_z * u_in.transpose();
      grad.inner_bias(b) = d_z.rowwise().sum();
      d_u += net.inner_weight(b).transpose() * d_z;
    }
    grad.entry_weight() = d_u * tape.input.transpose();
    grad.entry_bias() = d_u.rowwise().sum();
    g.d_net = std::move(grad.flat());
  }
  return {loss, std::move(g)};
}

Eigen::VectorXd pack_params(const ComponentModel& m) {
  const Eigen::Index n = m.ops.a_row.size();
  const Eigen::Index p = m.ops.q_row.size();
  const Eigen::Index k = m.net ? m.net->num_params() : 0;
  Eigen::VectorXd flat(n + p + 1 + k);
  flat.head(n) = m.ops.a_row;
  flat.segment(n, p) = m.ops.q_row;
  flat[n + p] = m.ops.bias;
  if (m.net) flat.tail(k) = m.net->flat();
  return flat;
}

void unpack_params(const Eigen::VectorXd& flat, ComponentModel& m) {
  const Eigen::Index n = m.ops.a_row.size();
  const Eigen::Index p = m.ops.q_row.size();
  const Eigen::Index k = m.net ? m.net->num_params() : 0;
  if (flat.size() != n + p + 1 + k)
    throw Error(ErrorCode::DimensionMismatch, "flat parameter vector has wrong length");
  m.ops.a_row = flat.head(n);
  m.ops.q_row = flat.segment(n, p);
  m.ops.bias = m.ops.has_bias ? flat[n + p] : 0.0;
  if (m.net) m.net->flat() = flat.tail(k);
}

}  // namespace lqres
