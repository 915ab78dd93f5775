#include "lqres/dynsys.hpp"

#include <cmath>
#include <limits>

#include "lqres/rng.hpp"

namespace lqres {

Trajectory Trajectory::head(Eigen::Index count) const {
  Trajectory out;
  out.times = times.head(count);
  out.states = states.topRows(count);
  return out;
}

void validate(const FhnParams& p) {
  if (!(p.tau > 0.0))
    throw Error(ErrorCode::InvalidArgument, "FitzHugh-Nagumo tau must be positive");
}

void validate(const GlyParams& p) {
  const double values[] = {p.j0, p.k1, p.k2, p.k3, p.k4, p.k5, p.k6,
                           p.K1, p.q,  p.N_tot, p.A_tot, p.kappa, p.psi};
  for (double v : values)
    if (!(v > 0.0))
      throw Error(ErrorCode::InvalidArgument, "glycolysis parameters must be positive");
  if (p.q < 1.0) throw Error(ErrorCode::InvalidArgument, "glycolysis q must be >= 1");
}

Eigen::VectorXd rhs_fhn(const Eigen::VectorXd& state, const FhnParams& p) {
  const double v = state[0];
  const double w = state[1];
  Eigen::VectorXd out(2);
  out[0] = v - v * v * v / 3.0 - w + p.i_ext;
  out[1] = (v + p.a - p.b * w) / p.tau;
  return out;
}

Eigen::VectorXd rhs_glycolysis(const Eigen::VectorXd& s, const GlyParams& p) {
  const double S1 = s[0], S2 = s[1], S3 = s[2], S4 = s[3], S5 = s[4], S6 = s[5],
               S7 = s[6];
  const double denom = 1.0 + std::pow(S6 / p.K1, p.q);
  if (!std::isfinite(denom) || denom == 0.0)
    throw Error(ErrorCode::NonFiniteOutput, "glycolysis flux denominator is not finite");
  const double flux = p.k1 * S1 * S6 / denom;
  const double nadh = p.k2 * S2 * (p.N_tot - S5);
  const double atp = p.k3 * S3 * (p.A_tot - S6);
  const double exchange = p.kappa * (S4 - S7);

  Eigen::VectorXd out(7);
  out[0] = p.j0 - flux;
  out[1] = 2.0 * flux - nadh - p.k6 * S2 * S5;
  out[2] = nadh - atp;
  out[3] = atp - p.k4 * S4 * S5 - exchange;
  out[4] = nadh - p.k4 * S4 * S5 - p.k6 * S2 * S5;
  out[5] = -2.0 * flux + 2.0 * atp - p.k5 * S6;
  out[6] = p.psi * exchange - p.kappa * S7;
  if (!out.allFinite())
    throw Error(ErrorCode::NonFiniteOutput, "glycolysis right-hand side overflowed");
  return out;
}

Eigen::VectorXd uniform_grid(TimeSpan span, std::size_t num_points) {
  if (num_points < 2)
    throw Error(ErrorCode::InvalidArgument, "num_points must be >= 2");
  if (!(span.t1 > span.t0))
    throw Error(ErrorCode::InvalidArgument, "t_span must satisfy t1 > t0");
  const double h = (span.t1 - span.t0) / static_cast<double>(num_points - 1);
  Eigen::VectorXd t(static_cast<Eigen::Index>(num_points));
  for (Eigen::Index k = 0; k < t.size(); ++k) t[k] = span.t0 + static_cast<double>(k) * h;
  return t;
}

Trajectory integrate(const VectorField& rhs, const Eigen::VectorXd& x0,
                     TimeSpan span, std::size_t num_points) {
  Trajectory traj;
  traj.times = uniform_grid(span, num_points);
  const double h = (span.t1 - span.t0) / static_cast<double>(num_points - 1);
  traj.states.resize(traj.times.size(), x0.size());
  traj.states.row(0) = x0.transpose();
  if (!x0.allFinite()) throw SimulationError(0, traj.head(0));

  Eigen::VectorXd x = x0;
  for (Eigen::Index k = 1; k < traj.times.size(); ++k) {
    Eigen::VectorXd k1, k2, k3, k4;
    try {
      k1 = rhs(x);
      k2 = rhs(x + 0.5 * h * k1);
      k3 = rhs(x + 0.5 * h * k2);
      k4 = rhs(x + h * k3);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonFiniteOutput) throw;
      throw SimulationError(static_cast<std::size_t>(k), traj.head(k));
    }
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite()) throw SimulationError(static_cast<std::size_t>(k), traj.head(k));
    traj.states.row(k) = x.transpose();
  }
  return traj;
}

double uniform_spacing(const Eigen::VectorXd& times) {
  const Eigen::Index n = times.size();
  if (n < 2) throw Error(ErrorCode::TooFewPoints, "need at least two time stamps");
  const double h = (times[n - 1] - times[0]) / static_cast<double>(n - 1);
  if (!(h > 0.0)) throw Error(ErrorCode::NonUniformGrid, "time stamps must increase");
  const double scale = std::max(std::abs(times[0]), std::abs(times[n - 1]));
  const double tol = 1e-12 * h + 4.0 * std::numeric_limits<double>::epsilon() * scale;
  for (Eigen::Index k = 1; k < n; ++k) {
    if (std::abs((times[k] - times[k - 1]) - h) > tol)
      throw Error(ErrorCode::NonUniformGrid,
                  "spacing at index " + std::to_string(k) + " deviates from " + format_double(h));
  }
  return h;
}

DerivativeSamples stencil_derivatives(const Trajectory& traj) {
  const Eigen::Index n = traj.size();
  if (n < 5)
    throw Error(ErrorCode::TooFewPoints,
                "stencil needs >= 5 points, got " + std::to_string(n));
  const double h = uniform_spacing(traj.times);
  const Eigen::Index m = n - 4;
  const auto& x = traj.states;

  DerivativeSamples out;
  out.spacing = h;
  out.states = x.middleRows(2, m);
  out.derivs = (-x.middleRows(4, m) + 8.0 * x.middleRows(3, m) - 8.0 * x.middleRows(1, m) +
                x.middleRows(0, m)) /
               (12.0 * h);
  return out;
}

std::vector<Eigen::VectorXd> sample_initial_conditions(std::span<const Interval> ranges,
                                                       std::size_t count,
                                                       std::uint64_t seed) {
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "count must be >= 1");
  for (std::size_t i = 0; i < ranges.size(); ++i)
    if (ranges[i].lo > ranges[i].hi)
      throw Error(ErrorCode::EmptyRange, "range " + std::to_string(i) + " has lo > hi");

  Rng rng(seed);
  std::vector<Eigen::VectorXd> out;
  out.reserve(count);
  for (std::size_t c = 0; c < count; ++c) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(ranges.size()));
    for (std::size_t i = 0; i < ranges.size(); ++i) {
      // Clamp guards the hi endpoint against rounding in lo + (hi - lo) u.
      x[static_cast<Eigen::Index>(i)] =
          std::min(ranges[i].hi, rng.uniform(ranges[i].lo, ranges[i].hi));
    }
    out.push_back(std::move(x));
  }
  return out;
}

}  // namespace lqres
