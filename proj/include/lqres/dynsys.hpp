#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lqres/error.hpp"

namespace lqres {

/// One rollout on a uniform time grid. Row k of `states` is the state at times[k].
struct Trajectory {
  Eigen::VectorXd times;
  Eigen::MatrixXd states;  // num_points x n

  Eigen::Index size() const { return times.size(); }
  Eigen::Index dim() const { return states.cols(); }
  // First `count` samples.
  Trajectory head(Eigen::Index count) const;
};

/// Five-point-stencil output: states and matching derivative estimates.
struct DerivativeSamples {
  Eigen::MatrixXd states;  // M x n
  Eigen::MatrixXd derivs;  // M x n
  double spacing = 0.0;
};

struct TimeSpan {
  double t0 = 0.0;
  double t1 = 1.0;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// FitzHugh-Nagumo parameters: dv = v - v^3/3 - w + i_ext, dw = (v + a - b w) / tau.
struct FhnParams {
  double a = 0.7;
  double b = 0.8;
  double tau = 12.5;
  double i_ext = 0.5;
};

/// Yeast glycolysis oscillator parameters. `K1` is the saturation constant
/// of the inhibited flux, kept separate from the rate constant `k1`.
struct GlyParams {
  double j0 = 2.5;
  double k1 = 100.0;
  double k2 = 6.0;
  double k3 = 16.0;
  double k4 = 100.0;
  double k5 = 1.28;
  double k6 = 12.0;
  double K1 = 0.52;
  double q = 4.0;
  double N_tot = 1.0;
  double A_tot = 4.0;
  double kappa = 13.0;
  double psi = 0.1;
};

void validate(const FhnParams& p);
void validate(const GlyParams& p);

Eigen::VectorXd rhs_fhn(const Eigen::VectorXd& state, const FhnParams& p);

/// Seven-species glycolysis right-hand side. Throws NonFiniteOutput when the
/// saturating denominator overflows.
Eigen::VectorXd rhs_glycolysis(const Eigen::VectorXd& state, const GlyParams& p);

using VectorField = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Thrown when a rollout produces a non-finite state. Carries the trajectory
/// up to (not including) the failing step.
class SimulationError : public Error {
 public:
  SimulationError(std::size_t step, Trajectory partial)
      : Error(ErrorCode::NonFiniteState,
              "non-finite state at step " + std::to_string(step)),
        step_(step),
        partial_(std::move(partial)) {}

  std::size_t step() const noexcept { return step_; }
  const Trajectory& partial() const noexcept { return partial_; }

 private:
  std::size_t step_;
  Trajectory partial_;
};

/// Uniform time grid t_k = t0 + k h, h = (t1 - t0) / (num_points - 1).
Eigen::VectorXd uniform_grid(TimeSpan span, std::size_t num_points);

/// Classical fixed-step RK4. The first row equals x0.
Trajectory integrate(const VectorField& rhs, const Eigen::VectorXd& x0,
                     TimeSpan span, std::size_t num_points);

/// Fourth-order central differences on interior points; the two samples at
/// each end are dropped.
DerivativeSamples stencil_derivatives(const Trajectory& traj);

/// Grid spacing, verified uniform to 1e-12 relative (plus representation
/// rounding of the time stamps themselves).
double uniform_spacing(const Eigen::VectorXd& times);

std::vector<Eigen::VectorXd> sample_initial_conditions(
    std::span<const Interval> ranges, std::size_t count, std::uint64_t seed);

// Trajectory CSV: header `t,x1,...,xn`, 17 significant digits.
void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path);
Trajectory read_trajectory_csv(const std::filesystem::path& path);

/// `%.17g` text; parses back to the identical double.
std::string format_double(double value);

}  // namespace lqres
