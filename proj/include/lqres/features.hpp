#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "lqres/dynsys.hpp"

namespace lqres {

/// Upper-triangular index pairs (i <= j) in lexicographic order; position k
/// of the deduplicated quadratic feature vector holds x_i x_j for pairs()[k].
class QuadIndexMap {
 public:
  explicit QuadIndexMap(Eigen::Index n);

  Eigen::Index n() const { return n_; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(pairs_.size()); }
  const std::vector<std::pair<Eigen::Index, Eigen::Index>>& pairs() const { return pairs_; }
  Eigen::Index index_of(Eigen::Index i, Eigen::Index j) const;

 private:
  Eigen::Index n_;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs_;
};

inline Eigen::Index num_quad_features(Eigen::Index n) { return n * (n + 1) / 2; }

/// x (x) x with entry i*n + j equal to x_i x_j.
Eigen::VectorXd kron_square(const Eigen::VectorXd& x);

Eigen::VectorXd quad_monomials(const Eigen::VectorXd& x, const QuadIndexMap& map);

/// Row-wise quad_monomials for a (rows x n) state matrix.
Eigen::MatrixXd quad_monomials_rows(const Eigen::MatrixXd& states, const QuadIndexMap& map);

/// Full n^2 coefficient row equivalent to a deduplicated one; cross-term
/// weights are split equally between (i, j) and (j, i).
Eigen::VectorXd expand_q_row(const Eigen::VectorXd& q_dedup, const QuadIndexMap& map);

/// Per-coordinate affine map x -> (x - offset) / scale.
struct Standardization {
  Eigen::VectorXd offset;
  Eigen::VectorXd scale;

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& rows) const;
  static Standardization fit(const Eigen::MatrixXd& rows);
};

enum class Split : std::uint8_t { Train, Val };

/// Pooled regression samples. `states` are the model inputs (standardized
/// when `standardization` is set); `quad_feats` are built from them.
struct RegressionDataset {
  Eigen::MatrixXd states;
  Eigen::MatrixXd quad_feats;
  Eigen::MatrixXd targets;
  std::vector<Split> split_assignment;
  std::vector<Eigen::Index> train_rows;
  std::vector<Eigen::Index> val_rows;
  std::uint64_t seed = 0;
  std::optional<Standardization> standardization;

  Eigen::Index rows() const { return states.rows(); }
  Eigen::Index dim() const { return states.cols(); }
};

/// Pools derivative samples, shuffles rows with `split_seed` and tags the
/// first floor(0.8 M) as train.
RegressionDataset build_dataset(std::span<const DerivativeSamples> samples,
                                std::uint64_t split_seed, bool standardize = false);

/// Pairs (x_k, x_{k+1}) from each trajectory, for discrete-time models.
RegressionDataset build_discrete_dataset(std::span<const Trajectory> trajectories,
                                         std::uint64_t split_seed, bool standardize = false);

/// Dataset from raw pooled arrays; used by both builders.
RegressionDataset make_dataset(Eigen::MatrixXd states, Eigen::MatrixXd targets,
                               std::uint64_t split_seed, bool standardize);

}  // namespace lqres
