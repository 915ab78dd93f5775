#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "lqres/opinf.hpp"

namespace lqres {

double elu(double z);
double elu_prime(double z);

/// Residual network x -> scalar:
///   u_0 = E x + e
///   u_{l+1} = u_l + W2_l elu(W1_l u_l + b1_l) + b2_l,  l < blocks
///   out = w . u_blocks + c
/// All parameters live in one flat vector; the accessors are views into it.
class ResNetParams {
 public:
  using MatMap = Eigen::Map<Eigen::MatrixXd>;
  using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;
  using VecMap = Eigen::Map<Eigen::VectorXd>;
  using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

  ResNetParams() = default;
  // Zero-initialized network.
  ResNetParams(Eigen::Index input_dim, Eigen::Index width, Eigen::Index blocks);

  Eigen::Index input_dim() const { return input_dim_; }
  Eigen::Index width() const { return width_; }
  Eigen::Index blocks() const { return blocks_; }
  Eigen::Index num_params() const { return flat_.size(); }

  Eigen::VectorXd& flat() { return flat_; }
  const Eigen::VectorXd& flat() const { return flat_; }

  MatMap entry_weight() { return mat(entry_w_, width_, input_dim_); }
  ConstMatMap entry_weight() const { return mat(entry_w_, width_, input_dim_); }
  VecMap entry_bias() { return vec(entry_b_, width_); }
  ConstVecMap entry_bias() const { return vec(entry_b_, width_); }

  MatMap inner_weight(Eigen::Index b) { return mat(block_offset(b), width_, width_); }
  ConstMatMap inner_weight(Eigen::Index b) const { return mat(block_offset(b), width_, width_); }
  VecMap inner_bias(Eigen::Index b) { return vec(block_offset(b) + width_ * width_, width_); }
  ConstVecMap inner_bias(Eigen::Index b) const {
    return vec(block_offset(b) + width_ * width_, width_);
  }
  MatMap outer_weight(Eigen::Index b) { return mat(outer_offset(b), width_, width_); }
  ConstMatMap outer_weight(Eigen::Index b) const { return mat(outer_offset(b), width_, width_); }
  VecMap outer_bias(Eigen::Index b) { return vec(outer_offset(b) + width_ * width_, width_); }
  ConstVecMap outer_bias(Eigen::Index b) const {
    return vec(outer_offset(b) + width_ * width_, width_);
  }

  VecMap output_weight() { return vec(output_w_, width_); }
  ConstVecMap output_weight() const { return vec(output_w_, width_); }
  double& output_bias() { return flat_[output_w_ + width_]; }
  double output_bias() const { return flat_[output_w_ + width_]; }

  /// 1 on entries that belong to weight matrices, 0 on biases.
  Eigen::ArrayXd weight_mask() const;

 private:
  Eigen::Index block_offset(Eigen::Index b) const { return blocks_start_ + b * block_size(); }
  Eigen::Index outer_offset(Eigen::Index b) const {
    return block_offset(b) + width_ * width_ + width_;
  }
  Eigen::Index block_size() const { return 2 * (width_ * width_ + width_); }

  MatMap mat(Eigen::Index off, Eigen::Index r, Eigen::Index c) {
    return MatMap(flat_.data() + off, r, c);
  }
  ConstMatMap mat(Eigen::Index off, Eigen::Index r, Eigen::Index c) const {
    return ConstMatMap(flat_.data() + off, r, c);
  }
  VecMap vec(Eigen::Index off, Eigen::Index len) { return VecMap(flat_.data() + off, len); }
  ConstVecMap vec(Eigen::Index off, Eigen::Index len) const {
    return ConstVecMap(flat_.data() + off, len);
  }

  Eigen::Index input_dim_ = 0;
  Eigen::Index width_ = 0;
  Eigen::Index blocks_ = 0;
  Eigen::Index entry_w_ = 0;
  Eigen::Index entry_b_ = 0;
  Eigen::Index blocks_start_ = 0;
  Eigen::Index output_w_ = 0;
  Eigen::VectorXd flat_;
};

/// Activations of a batched forward pass, columns are samples.
struct ForwardTape {
  Eigen::MatrixXd input;                 // n x B
  std::vector<Eigen::MatrixXd> lifted;   // blocks + 1 entries, width x B
  std::vector<Eigen::MatrixXd> pre_act;  // blocks entries, W1 u + b1
};

struct ForwardResult {
  double output = 0.0;
  ForwardTape tape;
};

ForwardResult resnet_forward(const ResNetParams& net, const Eigen::VectorXd& x);

/// Batched forward; `inputs` is n x B. Returns the B outputs and fills `tape`.
Eigen::RowVectorXd resnet_forward_batch(const ResNetParams& net, const Eigen::MatrixXd& inputs,
                                        ForwardTape* tape);

/// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
ResNetParams init_params(Eigen::Index n, Eigen::Index width, Eigen::Index blocks,
                         std::uint64_t seed);

/// One component of the learned model. `net` is present iff the gate
/// decided the linear-quadratic part alone is insufficient.
struct ComponentModel {
  LinQuadOps ops;
  GateDecision gate;
  std::optional<ResNetParams> net;
};

double lqres_predict(const ComponentModel& m, const Eigen::VectorXd& x);

/// Predictions for every row of `states` (rows x n).
Eigen::VectorXd lqres_predict_rows(const ComponentModel& m, const Eigen::MatrixXd& states);

struct GradientBundle {
  Eigen::VectorXd d_a_row;
  Eigen::VectorXd d_q_row;
  double d_bias = 0.0;
  Eigen::VectorXd d_net;  // aligned with ResNetParams::flat()

  /// [d_a_row, d_q_row, d_bias, d_net]
  Eigen::VectorXd flatten() const;
};

/// Mean squared error over the batch and its exact gradient with respect to
/// every trainable parameter. `states` is rows x n.
std::pair<double, GradientBundle> loss_and_grads(const ComponentModel& m,
                                                 const Eigen::MatrixXd& states,
                                                 const Eigen::VectorXd& targets);

/// Flat trainable vector [a_row, q_row, bias, net] and its inverse.
Eigen::VectorXd pack_params(const ComponentModel& m);
void unpack_params(const Eigen::VectorXd& flat, ComponentModel& m);

}  // namespace lqres
