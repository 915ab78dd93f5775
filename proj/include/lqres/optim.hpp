#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "lqres/neural.hpp"

namespace lqres {

struct HyperParams {
  int epochs = 500;
  double learning_rate = 5e-4;
  int batch_size = 512;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct OptState {
  long step = 0;
  Eigen::VectorXd m;
  Eigen::VectorXd v;

  static OptState zeros(Eigen::Index size);
};

/// Length of the approximated simple moving average at step t.
double radam_rho(long t, double beta2);

/// One rectified-Adam step, in place. `decay_mask` selects the entries that
/// receive decoupled weight decay (params *= 1 - lr * wd before the step).
void radam_update(OptState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grads,
                  const HyperParams& h, const Eigen::ArrayXd& decay_mask);

struct TrainHistory {
  std::vector<double> train_mse;
  std::vector<double> val_mse;
  double seconds = 0.0;
  int best_epoch = -1;
};

struct Architecture {
  Eigen::Index width = 10;
  Eigen::Index blocks = 2;
};

struct TrainResult {
  ComponentModel model;
  TrainHistory history;
};

/// Joint mini-batch training of the operators and the residual network of
/// one component. Starts from `warm_ops`; returns the best-validation snapshot.
/// `init_seed` seeds the network weights, `h.seed` the epoch shuffles.
TrainResult train_component(const RegressionDataset& ds, Eigen::Index component,
                            const Architecture& arch, const HyperParams& h,
                            const LinQuadOps& warm_ops, const GateDecision& gate,
                            std::uint64_t init_seed);

/// Mean squared error of a component model over the given rows.
double component_mse(const ComponentModel& m, const RegressionDataset& ds,
                     const std::vector<Eigen::Index>& rows);

// `epoch,train_mse,val_mse`
void write_history_csv(const TrainHistory& history, const std::filesystem::path& path);

}  // namespace lqres
