#include "lqres/optim.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "lqres/rng.hpp"

namespace lqres {

void HyperParams::validate() const {
  if (epochs < 0) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 0");
  if (!(learning_rate >= 0.0)) throw Error(ErrorCode::InvalidArgument, "learning_rate must be >= 0");
  if (batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch_size must be >= 1");
  if (!(weight_decay >= 0.0)) throw Error(ErrorCode::InvalidArgument, "weight_decay must be >= 0");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
    throw Error(ErrorCode::InvalidArgument, "beta1 and beta2 must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be > 0");
}

OptState OptState::zeros(Eigen::Index size) {
  return OptState{0, Eigen::VectorXd::Zero(size), Eigen::VectorXd::Zero(size)};
}

double radam_rho(long t, double beta2) {
  const double rho_inf = 2.0 / (1.0 - beta2) - 1.0;
  const double bt = std::pow(beta2, static_cast<double>(t));
  return rho_inf - 2.0 * static_cast<double>(t) * bt / (1.0 - bt);
}

void radam_update(OptState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grads,
                  const HyperParams& h, const Eigen::ArrayXd& decay_mask) {
  const Eigen::Index size = params.size();
  if (grads.size() != size || state.m.size() != size || state.v.size() != size ||
      decay_mask.size() != size)
    throw Error(ErrorCode::DimensionMismatch, "optimizer state does not match parameters");

  const long t = ++state.step;
  const double lr = h.learning_rate;
  if (h.weight_decay > 0.0)
    params.array() *= 1.0 - lr * h.weight_decay * decay_mask;

  state.m = h.beta1 * state.m + (1.0 - h.beta1) * grads;
  state.v = h.beta2 * state.v + (1.0 - h.beta2) * grads.cwiseAbs2();

  const double bias1 = 1.0 - std::pow(h.beta1, static_cast<double>(t));
  const double bias2 = 1.0 - std::pow(h.beta2, static_cast<double>(t));
  const double rho_inf = 2.0 / (1.0 - h.beta2) - 1.0;
  const double rho = radam_rho(t, h.beta2);

  if (rho > 4.0) {
    const double rect = std::sqrt(((rho - 4.0) * (rho - 2.0) * rho_inf) /
                                  ((rho_inf - 4.0) * (rho_inf - 2.0) * rho));
    const Eigen::ArrayXd denom = (state.v.array() / bias2).sqrt() + h.epsilon;
    params.array() -= (lr * rect / bias1) * state.m.array() / denom;
  } else {
    params -= (lr / bias1) * state.m;
  }
  if (!params.allFinite())
    throw Error(ErrorCode::NonFinite, "non-finite parameter after step " + std::to_string(t));
}

namespace {

struct RowBlock {
  Eigen::MatrixXd states;
  Eigen::VectorXd targets;
};

RowBlock gather(const RegressionDataset& ds, Eigen::Index component,
                const std::vector<Eigen::Index>& rows, std::size_t begin, std::size_t end) {
  RowBlock b;
  const auto count = static_cast<Eigen::Index>(end - begin);
  b.states.resize(count, ds.dim());
  b.targets.resize(count);
  for (Eigen::Index r = 0; r < count; ++r) {
    const Eigen::Index src = rows[begin + static_cast<std::size_t>(r)];
    b.states.row(r) = ds.states.row(src);
    b.targets[r] = ds.targets(src, component);
  }
  return b;
}

double block_mse(const ComponentModel& m, const RowBlock& b) {
  if (b.targets.size() == 0) return 0.0;
  return (lqres_predict_rows(m, b.states) - b.targets).squaredNorm() /
         static_cast<double>(b.targets.size());
}

}  // namespace

double component_mse(const ComponentModel& m, const RegressionDataset& ds,
                     const std::vector<Eigen::Index>& rows) {
  return block_mse(m, gather(ds, m.ops.component, rows, 0, rows.size()));
}

TrainResult train_component(const RegressionDataset& ds, Eigen::Index component,
                            const Architecture& arch, const HyperParams& h,
                            const LinQuadOps& warm_ops, const GateDecision& gate,
                            std::uint64_t init_seed) {
  h.validate();
  if (ds.train_rows.empty()) throw Error(ErrorCode::EmptyInput, "no training rows");
  const auto started = std::chrono::steady_clock::now();

  TrainResult result;
  ComponentModel& model = result.model;
  model.ops = warm_ops;
  model.ops.component = component;
  model.gate = gate;
  model.net = init_params(ds.dim(), arch.width, arch.blocks, init_seed);

  Eigen::VectorXd params = pack_params(model);
  const Eigen::Index lq_size = params.size() - model.net->num_params();
  Eigen::ArrayXd decay_mask(params.size());
  decay_mask << Eigen::ArrayXd::Zero(lq_size), model.net->weight_mask();
  OptState state = OptState::zeros(params.size());

  const RowBlock train_all = gather(ds, component, ds.train_rows, 0, ds.train_rows.size());
  const RowBlock val_all = gather(ds, component, ds.val_rows, 0, ds.val_rows.size());
  const bool has_val = !ds.val_rows.empty();

  std::vector<Eigen::Index> order = ds.train_rows;
  Rng rng(h.seed);
  const auto batch = static_cast<std::size_t>(h.batch_size);

  ComponentModel best = model;
  double best_val = INFINITY;
  auto diverged = [component](const std::string& why) {
    return Error(ErrorCode::Diverged, "component " + std::to_string(component) + ": " + why);
  };

  for (int epoch = 0; epoch < h.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      const std::size_t end = std::min(order.size(), begin + batch);
      const RowBlock b = gather(ds, component, order, begin, end);
      Eigen::VectorXd grads;
      try {
        grads = loss_and_grads(model, b.states, b.targets).second.flatten();
        radam_update(state, params, grads, h, decay_mask);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NonFinite) throw;
        throw diverged(e.what());
      }
      unpack_params(params, model);
    }

    double train_mse = 0.0, val_mse = 0.0;
    try {
      train_mse = block_mse(model, train_all);
      val_mse = has_val ? block_mse(model, val_all) : train_mse;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonFinite) throw;
      throw diverged(e.what());
    }
    if (!std::isfinite(train_mse)) throw diverged("train loss is not finite at epoch " +
                                                  std::to_string(epoch));
    result.history.train_mse.push_back(train_mse);
    result.history.val_mse.push_back(val_mse);
    if (val_mse < best_val) {
      best_val = val_mse;
      best = model;
      result.history.best_epoch = epoch;
    }
  }

  model = std::move(best);
  result.history.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

void write_history_csv(const TrainHistory& history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out << "epoch,train_mse,val_mse\n";
  for (std::size_t e = 0; e < history.train_mse.size(); ++e)
    out << (e + 1) << ',' << format_double(history.train_mse[e]) << ','
        << format_double(history.val_mse[e]) << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace lqres
