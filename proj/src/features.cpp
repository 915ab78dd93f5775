#include "lqres/features.hpp"

#include <numeric>

#include "lqres/rng.hpp"

namespace lqres {

QuadIndexMap::QuadIndexMap(Eigen::Index n) : n_(n) {
  if (n < 0) throw Error(ErrorCode::InvalidArgument, "negative state dimension");
  pairs_.reserve(static_cast<std::size_t>(num_quad_features(n)));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) pairs_.emplace_back(i, j);
}

Eigen::Index QuadIndexMap::index_of(Eigen::Index i, Eigen::Index j) const {
  if (i > j) std::swap(i, j);
  // Rows 0..i-1 of the triangle hold n + (n-1) + ... + (n-i+1) entries.
  return i * n_ - i * (i - 1) / 2 + (j - i);
}

Eigen::VectorXd kron_square(const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd out(n * n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) out[i * n + j] = x[i] * x[j];
  return out;
}

Eigen::VectorXd quad_monomials(const Eigen::VectorXd& x, const QuadIndexMap& map) {
  if (x.size() != map.n())
    throw Error(ErrorCode::DimensionMismatch, "state length " + std::to_string(x.size()) +
                                                  " != map dimension " + std::to_string(map.n()));
  Eigen::VectorXd out(map.size());
  Eigen::Index k = 0;
  for (const auto& [i, j] : map.pairs()) out[k++] = x[i] * x[j];
  return out;
}

Eigen::MatrixXd quad_monomials_rows(const Eigen::MatrixXd& states, const QuadIndexMap& map) {
  if (states.cols() != map.n())
    throw Error(ErrorCode::DimensionMismatch, "state columns do not match map dimension");
  Eigen::MatrixXd out(states.rows(), map.size());
  Eigen::Index k = 0;
  for (const auto& [i, j] : map.pairs()) out.col(k++) = states.col(i).cwiseProduct(states.col(j));
  return out;
}

Eigen::VectorXd expand_q_row(const Eigen::VectorXd& q_dedup, const QuadIndexMap& map) {
  if (q_dedup.size() != map.size())
    throw Error(ErrorCode::DimensionMismatch, "deduplicated row has wrong length");
  const Eigen::Index n = map.n();
  Eigen::VectorXd full = Eigen::VectorXd::Zero(n * n);
  Eigen::Index k = 0;
  for (const auto& [i, j] : map.pairs()) {
    if (i == j) {
      full[i * n + i] = q_dedup[k];
    } else {
      full[i * n + j] = 0.5 * q_dedup[k];
      full[j * n + i] = 0.5 * q_dedup[k];
    }
    ++k;
  }
  return full;
}

Eigen::VectorXd Standardization::apply(const Eigen::VectorXd& x) const {
  return (x - offset).cwiseQuotient(scale);
}

Eigen::MatrixXd Standardization::apply_rows(const Eigen::MatrixXd& rows) const {
  return (rows.rowwise() - offset.transpose()).array().rowwise() / scale.transpose().array();
}

Standardization Standardization::fit(const Eigen::MatrixXd& rows) {
  Standardization s;
  s.offset = rows.colwise().mean().transpose();
  const Eigen::MatrixXd centered = rows.rowwise() - s.offset.transpose();
  const double denom = std::max<double>(1.0, static_cast<double>(rows.rows() - 1));
  s.scale = (centered.colwise().squaredNorm() / denom).cwiseSqrt().transpose();
  for (Eigen::Index j = 0; j < s.scale.size(); ++j)
    if (!(s.scale[j] > 0.0)) s.scale[j] = 1.0;
  return s;
}

RegressionDataset make_dataset(Eigen::MatrixXd states, Eigen::MatrixXd targets,
                               std::uint64_t split_seed, bool standardize) {
  if (states.rows() == 0) throw Error(ErrorCode::EmptyInput, "dataset has no rows");
  if (states.rows() != targets.rows() || states.cols() != targets.cols())
    throw Error(ErrorCode::DimensionMismatch, "states and targets differ in shape");

  RegressionDataset ds;
  ds.seed = split_seed;
  if (standardize) {
    ds.standardization = Standardization::fit(states);
    states = ds.standardization->apply_rows(states);
  }
  const QuadIndexMap map(states.cols());
  ds.quad_feats = quad_monomials_rows(states, map);
  ds.states = std::move(states);
  ds.targets = std::move(targets);

  const Eigen::Index m = ds.states.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(split_seed);
  rng.shuffle(order.begin(), order.end());

  const auto n_train = static_cast<std::size_t>((4 * m) / 5);
  ds.split_assignment.assign(static_cast<std::size_t>(m), Split::Val);
  ds.train_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  ds.val_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  for (auto r : ds.train_rows) ds.split_assignment[static_cast<std::size_t>(r)] = Split::Train;
  return ds;
}

RegressionDataset build_dataset(std::span<const DerivativeSamples> samples,
                                std::uint64_t split_seed, bool standardize) {
  if (samples.empty()) throw Error(ErrorCode::EmptyInput, "no derivative samples");
  const Eigen::Index n = samples.front().states.cols();
  Eigen::Index total = 0;
  for (const auto& s : samples) {
    if (s.states.cols() != n || s.derivs.cols() != n || s.derivs.rows() != s.states.rows())
      throw Error(ErrorCode::DimensionMismatch, "sample blocks disagree on state dimension");
    total += s.states.rows();
  }
  Eigen::MatrixXd states(total, n), targets(total, n);
  Eigen::Index row = 0;
  for (const auto& s : samples) {
    states.middleRows(row, s.states.rows()) = s.states;
    targets.middleRows(row, s.states.rows()) = s.derivs;
    row += s.states.rows();
  }
  return make_dataset(std::move(states), std::move(targets), split_seed, standardize);
}

RegressionDataset build_discrete_dataset(std::span<const Trajectory> trajectories,
                                         std::uint64_t split_seed, bool standardize) {
  if (trajectories.empty()) throw Error(ErrorCode::EmptyInput, "no trajectories");
  const Eigen::Index n = trajectories.front().dim();
  Eigen::Index total = 0;
  for (const auto& t : trajectories) {
    if (t.dim() != n)
      throw Error(ErrorCode::DimensionMismatch, "trajectories disagree on state dimension");
    total += std::max<Eigen::Index>(0, t.size() - 1);
  }
  Eigen::MatrixXd states(total, n), targets(total, n);
  Eigen::Index row = 0;
  for (const auto& t : trajectories) {
    const Eigen::Index pairs = t.size() - 1;
    if (pairs <= 0) continue;
    states.middleRows(row, pairs) = t.states.topRows(pairs);
    targets.middleRows(row, pairs) = t.states.bottomRows(pairs);
    row += pairs;
  }
  return make_dataset(std::move(states), std::move(targets), split_seed, standardize);
}

}  // namespace lqres
