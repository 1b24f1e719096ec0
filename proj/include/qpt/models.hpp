#pragma once

#include <array>
#include <cstddef>
#include <string_view>

#include "qpt/core.hpp"
#include "qpt/errors.hpp"

namespace qpt {

// --- Full equations ----------------------------------------------------------

/// Mean dynamics: x' = v, v' = -omega^2 (1 + eps f(t)) x.
/// This is literally the classical quasi-periodic Mathieu right-hand side;
/// the quantum mean shares it because the Hamiltonian is quadratic.
[[nodiscard]] inline MeanState rhs_mean(const OscillatorConfig& cfg, double t,
                                        const MeanState& s) {
  const double f = forcing_value(cfg.modulation, t);
  const double w2 = cfg.omega * cfg.omega;
  return {s.v, -w2 * (1.0 + cfg.modulation.epsilon * f) * s.x};
}

/// Variance dynamics: V''' = -4 omega^2 (1 + eps f) V' - 2 omega^2 eps fdot V.
[[nodiscard]] inline VarianceState rhs_variance(const OscillatorConfig& cfg, double t,
                                                const VarianceState& s) {
  const Forcing fo = forcing(cfg.modulation, t);
  const double w2 = cfg.omega * cfg.omega;
  const double eps = cfg.modulation.epsilon;
  return {s.dvar, s.ddvar,
          -4.0 * w2 * (1.0 + eps * fo.f) * s.dvar - 2.0 * w2 * eps * fo.fdot * s.var};
}

/// Second-moment dynamics; closes without hbar.
[[nodiscard]] inline MomentsState rhs_moments(const OscillatorConfig& cfg, double t,
                                              const MomentsState& s) {
  const double f = forcing_value(cfg.modulation, t);
  const double stiffness = cfg.mass * cfg.omega * cfg.omega *
                           (1.0 + cfg.modulation.epsilon * f);
  return {s.xp / cfg.mass, -stiffness * s.xp,
          2.0 * s.pp / cfg.mass - 2.0 * stiffness * s.xx};
}

/// Map second moments to (V, V', V'') assuming mean-zero data, so V = <x^2>.
[[nodiscard]] inline VarianceState moments_to_variance(const OscillatorConfig& cfg, double t,
                                                       const MomentsState& s) {
  const double f = forcing_value(cfg.modulation, t);
  const double m = cfg.mass;
  const double w2 = cfg.omega * cfg.omega;
  return {s.xx, s.xp / m,
          2.0 * s.pp / (m * m) - 2.0 * w2 * (1.0 + cfg.modulation.epsilon * f) * s.xx};
}

/// Inverse of moments_to_variance at time t: solve for xx, xp, pp.
[[nodiscard]] inline MomentsState moments_from_variance(const OscillatorConfig& cfg, double t,
                                                        const VarianceState& s) {
  const double f = forcing_value(cfg.modulation, t);
  const double m = cfg.mass;
  const double w2 = cfg.omega * cfg.omega;
  const double pp =
      0.5 * m * m * (s.ddvar + 2.0 * w2 * (1.0 + cfg.modulation.epsilon * f) * s.var);
  return {s.var, pp, m * s.dvar};
}

/// d<E>/dt for the instantaneous energy <p^2>/2m + (m omega^2/2)(1+eps f)<x^2>.
/// Only the explicit time dependence survives: +(1/2) m omega^2 eps <x^2> fdot.
[[nodiscard]] inline double energy_drift(const OscillatorConfig& cfg, double t, double xx) {
  const double fdot = forcing(cfg.modulation, t).fdot;
  return 0.5 * cfg.mass * cfg.omega * cfg.omega * cfg.modulation.epsilon * xx * fdot;
}

/// Direct evaluation of <E> from the second moments.
[[nodiscard]] inline double mean_energy(const OscillatorConfig& cfg, double t,
                                        const MomentsState& s) {
  const double f = forcing_value(cfg.modulation, t);
  return s.pp / (2.0 * cfg.mass) +
         0.5 * cfg.mass * cfg.omega * cfg.omega * (1.0 + cfg.modulation.epsilon * f) * s.xx;
}

// --- Slow flows near omega = Omega/2 -----------------------------------------

/**
 * @brief Dimensionless parameter group of the half-resonance slow flows.
 *
 * The flows evolve in slow time tau = eps*Delta*Omega*t and depend only on
 * delta1/Omega, mu and Delta.
 */
struct SlowFlowParams {
  double delta1_over_omega = 0.0;
  double mu = 0.0;
  double delta_cap = 0.0;  // Delta; must be nonzero

  void validate() const {
    detail::require(std::isfinite(delta1_over_omega), "slow_flow.delta1_over_omega: not finite");
    detail::require(std::isfinite(mu) && mu >= 0.0, "slow_flow.mu: must be finite and >= 0");
    detail::require(std::isfinite(delta_cap), "slow_flow.delta_cap: not finite");
    if (delta_cap == 0.0) {
      throw DegenerateSlowTime("slow flow: Delta = 0 collapses the slow time scale");
    }
  }

  [[nodiscard]] static SlowFlowParams make(double delta1_over_omega, double mu,
                                           double delta_cap) {
    SlowFlowParams p{delta1_over_omega, mu, delta_cap};
    p.validate();
    return p;
  }

  /// Convert from physical parameters via delta1 = delta/eps.
  [[nodiscard]] static SlowFlowParams from_physical(double delta, double epsilon,
                                                    double omega_drive, double mu,
                                                    double delta_cap) {
    if (epsilon == 0.0) {
      throw DegenerateSlowTime("slow flow: eps = 0 collapses the slow time scale");
    }
    detail::require(std::isfinite(omega_drive) && omega_drive > 0.0,
                    "slow_flow.omega_drive: must be > 0");
    return make(delta / (epsilon * omega_drive), mu, delta_cap);
  }
};

/// Mean slow flow:
///   Delta A' = (d - 1/8) B - (mu/8)(A sin tau + B cos tau)
///   Delta B' = -(d + 1/8) A - (mu/8)(A cos tau - B sin tau)
/// with d = delta1/Omega.
[[nodiscard]] inline SlowFlowMean rhs_slowflow_mean(const SlowFlowParams& p, double tau,
                                                    const SlowFlowMean& s) {
  if (p.delta_cap == 0.0) {
    throw DegenerateSlowTime("rhs_slowflow_mean: Delta = 0");
  }
  const double d = p.delta1_over_omega;
  const double st = std::sin(tau);
  const double ct = std::cos(tau);
  const double mu8 = p.mu / 8.0;
  return {((d - 0.125) * s.b - mu8 * (s.a * st + s.b * ct)) / p.delta_cap,
          (-(d + 0.125) * s.a - mu8 * (s.a * ct - s.b * st)) / p.delta_cap};
}

/// Variance slow flow:
///   Delta C' = -B/4 - (mu/4)(A sin tau + B cos tau)
///   Delta A' = 2 d B - (mu C/4) sin tau
///   Delta B' = -2 d A - (mu C/4) cos tau - C/4
[[nodiscard]] inline SlowFlowVariance rhs_slowflow_variance(const SlowFlowParams& p, double tau,
                                                            const SlowFlowVariance& s) {
  if (p.delta_cap == 0.0) {
    throw DegenerateSlowTime("rhs_slowflow_variance: Delta = 0");
  }
  const double d = p.delta1_over_omega;
  const double st = std::sin(tau);
  const double ct = std::cos(tau);
  const double mu4 = p.mu / 4.0;
  return {(2.0 * d * s.b - mu4 * s.c * st) / p.delta_cap,
          (-2.0 * d * s.a - mu4 * s.c * ct - 0.25 * s.c) / p.delta_cap,
          (-0.25 * s.b - mu4 * (s.a * st + s.b * ct)) / p.delta_cap};
}

// --- Slow flow near omega = Omega/4 -------------------------------------------

/// Quarter-resonance flow runs in real time, not slow time.
struct QuarterParams {
  double delta1 = 0.0;
  double epsilon = 0.0;

  void validate() const {
    detail::require(std::isfinite(delta1), "quarter.delta1: not finite");
    detail::require(std::isfinite(epsilon) && epsilon >= 0.0,
                    "quarter.epsilon: must be finite and >= 0");
  }

  [[nodiscard]] static QuarterParams make(double delta1, double epsilon) {
    QuarterParams p{delta1, epsilon};
    p.validate();
    return p;
  }
};

/// A0' = 0, A' = 2 delta1 eps B, B' = -2 delta1 eps A: a pure rotation, so
/// A^2 + B^2 is conserved and no instability zone opens at this order.
[[nodiscard]] inline SlowFlowQuarter rhs_slowflow_quarter(const QuarterParams& p, double /*t*/,
                                                          const SlowFlowQuarter& s) {
  const double rate = 2.0 * p.delta1 * p.epsilon;
  return {0.0, rate * s.b, -rate * s.a};
}

// --- Model catalog -------------------------------------------------------------

enum class ModelKind {
  MeanFull,
  VarianceFull,
  MomentsOracle,
  SlowFlowMeanHalf,
  SlowFlowVarianceHalf,
  SlowFlowQuarterRes,
};

[[nodiscard]] constexpr std::size_t model_dimension(ModelKind kind) {
  switch (kind) {
    case ModelKind::MeanFull:
    case ModelKind::SlowFlowMeanHalf:
      return 2;
    case ModelKind::VarianceFull:
    case ModelKind::MomentsOracle:
    case ModelKind::SlowFlowVarianceHalf:
    case ModelKind::SlowFlowQuarterRes:
      return 3;
  }
  return 0;
}

/// True for the models that evolve in slow time tau = eps*Delta*Omega*t.
[[nodiscard]] constexpr bool is_slow_flow(ModelKind kind) {
  return kind == ModelKind::SlowFlowMeanHalf || kind == ModelKind::SlowFlowVarianceHalf;
}

[[nodiscard]] constexpr std::string_view model_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::MeanFull:
      return "mean";
    case ModelKind::VarianceFull:
      return "variance";
    case ModelKind::MomentsOracle:
      return "moments";
    case ModelKind::SlowFlowMeanHalf:
      return "slow-mean";
    case ModelKind::SlowFlowVarianceHalf:
      return "slow-variance";
    case ModelKind::SlowFlowQuarterRes:
      return "slow-quarter";
  }
  return "";
}

[[nodiscard]] inline ModelKind model_from_name(std::string_view name) {
  if (name == "mean") return ModelKind::MeanFull;
  if (name == "variance") return ModelKind::VarianceFull;
  if (name == "moments") return ModelKind::MomentsOracle;
  if (name == "slow-mean") return ModelKind::SlowFlowMeanHalf;
  if (name == "slow-variance") return ModelKind::SlowFlowVarianceHalf;
  if (name == "slow-quarter") return ModelKind::SlowFlowQuarterRes;
  throw ConfigError("model: unknown name '" + std::string(name) +
                    "' (expected mean|variance|moments|slow-mean|slow-variance|slow-quarter)");
}

// --- Integrator-facing wrappers -------------------------------------------------

struct MeanSystem {
  static constexpr std::size_t dim = 2;
  OscillatorConfig cfg;
  [[nodiscard]] std::array<double, 2> operator()(double t, const std::array<double, 2>& y) const {
    return rhs_mean(cfg, t, MeanState::from_array(y)).as_array();
  }
};

struct VarianceSystem {
  static constexpr std::size_t dim = 3;
  OscillatorConfig cfg;
  [[nodiscard]] std::array<double, 3> operator()(double t, const std::array<double, 3>& y) const {
    return rhs_variance(cfg, t, VarianceState::from_array(y)).as_array();
  }
};

struct MomentsSystem {
  static constexpr std::size_t dim = 3;
  OscillatorConfig cfg;
  [[nodiscard]] std::array<double, 3> operator()(double t, const std::array<double, 3>& y) const {
    return rhs_moments(cfg, t, MomentsState::from_array(y)).as_array();
  }
};

struct SlowFlowMeanSystem {
  static constexpr std::size_t dim = 2;
  SlowFlowParams params;
  [[nodiscard]] std::array<double, 2> operator()(double tau,
                                                 const std::array<double, 2>& y) const {
    return rhs_slowflow_mean(params, tau, SlowFlowMean::from_array(y)).as_array();
  }
};

struct SlowFlowVarianceSystem {
  static constexpr std::size_t dim = 3;
  SlowFlowParams params;
  [[nodiscard]] std::array<double, 3> operator()(double tau,
                                                 const std::array<double, 3>& y) const {
    return rhs_slowflow_variance(params, tau, SlowFlowVariance::from_array(y)).as_array();
  }
};

struct SlowFlowQuarterSystem {
  static constexpr std::size_t dim = 3;
  QuarterParams params;
  [[nodiscard]] std::array<double, 3> operator()(double t, const std::array<double, 3>& y) const {
    return rhs_slowflow_quarter(params, t, SlowFlowQuarter::from_array(y)).as_array();
  }
};

}  // namespace qpt
