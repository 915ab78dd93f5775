#include "lqres/reduce.hpp"

#include <Eigen/SVD>

namespace lqres {

PODBasis pod_basis(const Eigen::MatrixXd& snapshots, const PodTruncation& truncation,
                   bool center) {
  const Eigen::Index n = snapshots.rows();
  const Eigen::Index m = snapshots.cols();
  if (m < 1 || n < 1) throw Error(ErrorCode::EmptyInput, "snapshot matrix is empty");
  if (!truncation.rank && !(truncation.energy > 0.0 && truncation.energy <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "energy fraction must lie in (0, 1]");
  if (truncation.rank && (*truncation.rank > std::min(n, m) || *truncation.rank < 1))
    throw Error(ErrorCode::RankTooLarge, "rank " + std::to_string(*truncation.rank) +
                                             " outside [1, " + std::to_string(std::min(n, m)) +
                                             "]");

  PODBasis basis;
  Eigen::MatrixXd data = snapshots;
  if (center) {
    basis.center = snapshots.rowwise().mean();
    data.colwise() -= *basis.center;
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(data, Eigen::ComputeThinU);
  basis.singular_values = svd.singularValues();
  const Eigen::VectorXd energy = basis.singular_values.cwiseAbs2();
  const double total = energy.sum();

  Eigen::Index r = 0;
  if (truncation.rank) {
    r = *truncation.rank;
  } else if (total == 0.0) {
    r = 1;
  } else {
    double acc = 0.0;
    while (r < energy.size()) {
      acc += energy[r++];
      if (acc >= truncation.energy * total) break;
    }
  }
  basis.rank = r;
  basis.energy_captured = total > 0.0 ? energy.head(r).sum() / total : 1.0;
  basis.v_matrix = svd.matrixU().leftCols(r);
  for (Eigen::Index k = 0; k < r; ++k) {
    Eigen::Index idx = 0;
    basis.v_matrix.col(k).cwiseAbs().maxCoeff(&idx);
    if (basis.v_matrix(idx, k) < 0.0) basis.v_matrix.col(k) *= -1.0;
  }
  return basis;
}

namespace {

void check_full(const PODBasis& basis, Eigen::Index n) {
  if (n != basis.v_matrix.rows())
    throw Error(ErrorCode::DimensionMismatch, "state length " + std::to_string(n) +
                                                  " != basis rows " +
                                                  std::to_string(basis.v_matrix.rows()));
}

void check_reduced(const PODBasis& basis, Eigen::Index r) {
  if (r != basis.v_matrix.cols())
    throw Error(ErrorCode::DimensionMismatch, "reduced length " + std::to_string(r) +
                                                  " != basis rank " +
                                                  std::to_string(basis.v_matrix.cols()));
}

}  // namespace

Eigen::VectorXd project(const PODBasis& basis, const Eigen::VectorXd& x) {
  check_full(basis, x.size());
  if (basis.center) return basis.v_matrix.transpose() * (x - *basis.center);
  return basis.v_matrix.transpose() * x;
}

Eigen::VectorXd lift(const PODBasis& basis, const Eigen::VectorXd& reduced) {
  check_reduced(basis, reduced.size());
  Eigen::VectorXd x = basis.v_matrix * reduced;
  if (basis.center) x += *basis.center;
  return x;
}

Eigen::MatrixXd project_rows(const PODBasis& basis, const Eigen::MatrixXd& rows,
                             bool center_rows) {
  check_full(basis, rows.cols());
  if (basis.center && center_rows)
    return (rows.rowwise() - basis.center->transpose()) * basis.v_matrix;
  return rows * basis.v_matrix;
}

Eigen::MatrixXd lift_rows(const PODBasis& basis, const Eigen::MatrixXd& rows) {
  check_reduced(basis, rows.cols());
  Eigen::MatrixXd out = rows * basis.v_matrix.transpose();
  if (basis.center) out.rowwise() += basis.center->transpose();
  return out;
}

}  // namespace lqres
