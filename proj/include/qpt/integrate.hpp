#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "qpt/errors.hpp"

namespace qpt {

/// Number of equal-time windows over which the running envelope is recorded.
/// The classifier's final-window test uses the last one (last 5% of horizon).
inline constexpr std::size_t kEnvelopeWindows = 20;

/**
 * @brief Fixed-step integration plan.
 *
 * If (t_end - t0) is not an integer multiple of h, the final step is
 * shortened so the trajectory lands exactly on t_end.
 */
struct IntegrationPlan {
  double t0 = 0.0;
  double t_end = 0.0;
  double h = 0.0;
  std::size_t record_stride = 1;  // store every k-th sample
  bool envelope_only = false;     // store only envelope data and final state
  double bailout = 1e6;           // early stop once max_abs exceeds this

  void validate() const {
    detail::require(std::isfinite(t0) && std::isfinite(t_end) && t_end > t0,
                    "plan: t_end must be finite and > t0");
    detail::require(std::isfinite(h) && h > 0.0, "plan: h must be finite and > 0");
    detail::require((t_end - t0) / h >= 1.0 - 1e-12, "plan: need at least one step");
    detail::require(record_stride >= 1, "plan: record_stride must be >= 1");
    detail::require(bailout > 0.0, "plan: bailout must be > 0");
  }
};

enum class TrajectoryStatus {
  Completed,  // reached t_end
  BailedOut,  // max_abs exceeded plan.bailout
  NonFinite,  // a component became NaN/Inf; data up to that step is kept
};

template <std::size_t N>
struct Trajectory {
  std::vector<double> times;                       // sampled time points
  std::vector<std::array<double, N>> states;       // sampled states
  std::vector<double> running_max;                 // envelope at each sample
  double max_abs = 0.0;                            // max-norm over all steps
  std::array<double, N> final_state{};
  double final_time = 0.0;
  TrajectoryStatus status = TrajectoryStatus::Completed;
  std::size_t event_step = 0;                      // step index of bail/non-finite
  std::size_t steps_taken = 0;
  double t0 = 0.0;
  double t_end = 0.0;                              // planned horizon
  std::array<double, kEnvelopeWindows> window_max{};  // per-window envelope
};

namespace detail {

template <std::size_t N>
[[nodiscard]] inline bool finite_state(const std::array<double, N>& y) {
  for (double v : y) {
    if (!std::isfinite(v)) {
      return false;
    }
  }
  return true;
}

template <std::size_t N>
[[nodiscard]] inline double max_norm(const std::array<double, N>& y) {
  double m = 0.0;
  for (double v : y) {
    m = std::max(m, std::abs(v));
  }
  return m;
}

}  // namespace detail

/**
 * @brief Classical fixed-step 4th-order Runge-Kutta on dy/dt = rhs(t, y).
 *
 * Deterministic: identical inputs produce bit-identical trajectories.
 * Early termination on plan.bailout is recorded as BailedOut; a NaN/Inf
 * component stops integration with NonFinite and the trajectory up to the
 * last finite step is returned.
 */
template <std::size_t N, class Rhs>
[[nodiscard]] Trajectory<N> rk4_integrate(const Rhs& rhs, const std::array<double, N>& y0,
                                          const IntegrationPlan& plan) {
  plan.validate();
  const double span = plan.t_end - plan.t0;
  const auto n_steps =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span / plan.h - 1e-9)));

  Trajectory<N> traj;
  traj.t0 = plan.t0;
  traj.t_end = plan.t_end;
  traj.max_abs = detail::max_norm(y0);
  traj.window_max[0] = traj.max_abs;
  traj.final_state = y0;
  traj.final_time = plan.t0;

  if (!plan.envelope_only) {
    traj.times.push_back(plan.t0);
    traj.states.push_back(y0);
    traj.running_max.push_back(traj.max_abs);
  }

  std::array<double, N> y = y0;
  std::array<double, N> k1{};
  std::array<double, N> k2{};
  std::array<double, N> k3{};
  std::array<double, N> k4{};
  std::array<double, N> tmp{};

  for (std::size_t i = 0; i < n_steps; ++i) {
    const double t = plan.t0 + static_cast<double>(i) * plan.h;
    const bool last = (i + 1 == n_steps);
    const double t_next = last ? plan.t_end : plan.t0 + static_cast<double>(i + 1) * plan.h;
    const double dt = t_next - t;

    k1 = rhs(t, y);
    for (std::size_t j = 0; j < N; ++j) {
      tmp[j] = y[j] + 0.5 * dt * k1[j];
    }
    k2 = rhs(t + 0.5 * dt, tmp);
    for (std::size_t j = 0; j < N; ++j) {
      tmp[j] = y[j] + 0.5 * dt * k2[j];
    }
    k3 = rhs(t + 0.5 * dt, tmp);
    for (std::size_t j = 0; j < N; ++j) {
      tmp[j] = y[j] + dt * k3[j];
    }
    k4 = rhs(t_next, tmp);
    for (std::size_t j = 0; j < N; ++j) {
      y[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }

    if (!detail::finite_state(y)) {
      traj.status = TrajectoryStatus::NonFinite;
      traj.event_step = i;
      return traj;  // final_state/final_time still hold the last finite step
    }

    traj.steps_taken = i + 1;
    traj.final_state = y;
    traj.final_time = t_next;

    const double norm = detail::max_norm(y);
    traj.max_abs = std::max(traj.max_abs, norm);
    const auto w = std::min<std::size_t>(
        kEnvelopeWindows - 1,
        static_cast<std::size_t>((t_next - plan.t0) / span * kEnvelopeWindows));
    traj.window_max[w] = std::max(traj.window_max[w], norm);

    const bool bail = traj.max_abs > plan.bailout;
    if (!plan.envelope_only && ((i + 1) % plan.record_stride == 0 || last || bail)) {
      traj.times.push_back(t_next);
      traj.states.push_back(y);
      traj.running_max.push_back(traj.max_abs);
    }
    if (bail) {
      traj.status = TrajectoryStatus::BailedOut;
      traj.event_step = i;
      return traj;
    }
  }
  return traj;
}

/**
 * @brief State-transition matrix Phi(t_end, t0) of a linear system.
 *
 * Integrates the n canonical basis vectors and assembles the columns;
 * phi[i][j] is component i of the solution started from e_j. The bail-out
 * bound is disabled (a truncated run would not be a fundamental matrix).
 * Throws NonFiniteState if any run blows up to NaN/Inf.
 */
template <std::size_t N, class Rhs>
[[nodiscard]] std::array<std::array<double, N>, N> fundamental_matrix(
    const Rhs& rhs, const IntegrationPlan& plan) {
  IntegrationPlan basis_plan = plan;
  basis_plan.envelope_only = true;
  basis_plan.bailout = std::numeric_limits<double>::infinity();

  std::array<std::array<double, N>, N> phi{};
  for (std::size_t j = 0; j < N; ++j) {
    std::array<double, N> e{};
    e[j] = 1.0;
    const auto traj = rk4_integrate<N>(rhs, e, basis_plan);
    if (traj.status == TrajectoryStatus::NonFinite) {
      throw NonFiniteState("fundamental_matrix: basis run " + std::to_string(j) +
                           " became non-finite at step " + std::to_string(traj.event_step));
    }
    for (std::size_t i = 0; i < N; ++i) {
      phi[i][j] = traj.final_state[i];
    }
  }
  return phi;
}

}  // namespace qpt
