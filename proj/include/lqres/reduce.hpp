#pragma once

#include <optional>

#include <Eigen/Core>

#include "lqres/error.hpp"

namespace lqres {

/// Orthonormal POD basis of a snapshot matrix.
struct PODBasis {
  Eigen::MatrixXd v_matrix;         // n x r
  Eigen::VectorXd singular_values;  // full spectrum, descending
  Eigen::Index rank = 0;
  double energy_captured = 0.0;
  std::optional<Eigen::VectorXd> center;  // set when snapshots were mean-centered
};

/// Either a fixed rank or the smallest rank reaching an energy fraction.
struct PodTruncation {
  std::optional<Eigen::Index> rank;
  double energy = 0.9999;

  static PodTruncation fixed_rank(Eigen::Index r) { return {r, 1.0}; }
  static PodTruncation energy_fraction(double eta) { return {std::nullopt, eta}; }
};

/// Thin SVD of `snapshots` (n x M, one snapshot per column). Each basis
/// vector's largest-magnitude entry is made positive.
PODBasis pod_basis(const Eigen::MatrixXd& snapshots, const PodTruncation& truncation,
                   bool center = false);

Eigen::VectorXd project(const PODBasis& basis, const Eigen::VectorXd& x);
Eigen::VectorXd lift(const PODBasis& basis, const Eigen::VectorXd& reduced);

/// Row-wise versions for (rows x n) / (rows x r) matrices. Derivative rows
/// must use `center_rows = false`.
Eigen::MatrixXd project_rows(const PODBasis& basis, const Eigen::MatrixXd& rows,
                             bool center_rows = true);
Eigen::MatrixXd lift_rows(const PODBasis& basis, const Eigen::MatrixXd& rows);

}  // namespace lqres
