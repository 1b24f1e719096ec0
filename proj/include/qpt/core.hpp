#pragma once

#include <array>
#include <cmath>
#include <string>

#include "qpt/errors.hpp"

namespace qpt {

/// How the second drive frequency is specified.
///   EpsilonScaled: Omega2 = Omega * (1 + eps*Delta)
///   FixedRatio:    Omega2 = Omega * (1 + alpha)
enum class DetuningMode { EpsilonScaled, FixedRatio };

/**
 * @brief The quasi-periodic drive f(t) = cos(Omega t) + mu cos(Omega2 t).
 *
 * Both detuning modes resolve to a single second frequency, so everything
 * downstream is mode-agnostic.
 */
struct ModulationSpec {
  double omega_drive = 0.0;  // Omega, rad/time, > 0
  double epsilon = 0.0;      // drive amplitude, >= 0
  double mu = 0.0;           // relative second-drive amplitude, >= 0
  DetuningMode mode = DetuningMode::EpsilonScaled;
  double detuning = 0.0;     // Delta (EpsilonScaled) or alpha (FixedRatio)

  void validate() const {
    detail::require(std::isfinite(omega_drive) && omega_drive > 0.0,
                    "modulation.omega_drive: must be finite and > 0");
    detail::require(std::isfinite(epsilon) && epsilon >= 0.0,
                    "modulation.epsilon: must be finite and >= 0");
    detail::require(std::isfinite(mu) && mu >= 0.0,
                    "modulation.mu: must be finite and >= 0");
    detail::require(std::isfinite(detuning), "modulation.detuning: must be finite");
    if (mode == DetuningMode::FixedRatio) {
      detail::require(detuning >= 0.0, "modulation.alpha: must be >= 0");
    }
  }

  [[nodiscard]] static ModulationSpec epsilon_scaled(double omega_drive, double epsilon,
                                                     double mu, double delta_cap) {
    ModulationSpec spec{omega_drive, epsilon, mu, DetuningMode::EpsilonScaled, delta_cap};
    spec.validate();
    return spec;
  }

  [[nodiscard]] static ModulationSpec fixed_ratio(double omega_drive, double epsilon,
                                                  double mu, double alpha) {
    ModulationSpec spec{omega_drive, epsilon, mu, DetuningMode::FixedRatio, alpha};
    spec.validate();
    return spec;
  }
};

/// Second drive frequency Omega2 for either detuning mode.
[[nodiscard]] inline double second_frequency(const ModulationSpec& spec) {
  const double shift =
      spec.mode == DetuningMode::EpsilonScaled ? spec.epsilon * spec.detuning : spec.detuning;
  return spec.omega_drive * (1.0 + shift);
}

struct Forcing {
  double f;     // dimensionless
  double fdot;  // 1/time
};

/// f(t) alone; cheaper than forcing() where the derivative is not needed.
[[nodiscard]] inline double forcing_value(const ModulationSpec& spec, double t) {
  return std::cos(spec.omega_drive * t) + spec.mu * std::cos(second_frequency(spec) * t);
}

/// f(t) and df/dt.
[[nodiscard]] inline Forcing forcing(const ModulationSpec& spec, double t) {
  const double w1 = spec.omega_drive;
  const double w2 = second_frequency(spec);
  const double p1 = w1 * t;
  const double p2 = w2 * t;
  return {std::cos(p1) + spec.mu * std::cos(p2),
          -w1 * std::sin(p1) - spec.mu * w2 * std::sin(p2)};
}

/**
 * @brief A full problem instance: natural frequency, mass, and drive.
 *
 * Convenience constructors accept resonance-relative detunings
 * (omega = Omega/2 + delta or Omega/4 + delta).
 */
struct OscillatorConfig {
  double omega = 0.0;  // natural frequency, > 0
  double mass = 1.0;   // > 0; only the energy operations use it
  ModulationSpec modulation{};

  void validate() const {
    detail::require(std::isfinite(omega) && omega > 0.0, "omega: must be finite and > 0");
    detail::require(std::isfinite(mass) && mass > 0.0, "mass: must be finite and > 0");
    modulation.validate();
  }

  [[nodiscard]] static OscillatorConfig at_frequency(double omega, ModulationSpec modulation,
                                                     double mass = 1.0) {
    OscillatorConfig cfg{omega, mass, modulation};
    cfg.validate();
    return cfg;
  }

  /// omega = Omega/2 + delta
  [[nodiscard]] static OscillatorConfig near_half_resonance(double delta,
                                                            ModulationSpec modulation,
                                                            double mass = 1.0) {
    return at_frequency(modulation.omega_drive / 2.0 + delta, modulation, mass);
  }

  /// omega = Omega/4 + delta
  [[nodiscard]] static OscillatorConfig near_quarter_resonance(double delta,
                                                               ModulationSpec modulation,
                                                               double mass = 1.0) {
    return at_frequency(modulation.omega_drive / 4.0 + delta, modulation, mass);
  }

  [[nodiscard]] double half_resonance_detuning() const {
    return omega - modulation.omega_drive / 2.0;
  }

  [[nodiscard]] double quarter_resonance_detuning() const {
    return omega - modulation.omega_drive / 4.0;
  }
};

// --- State vectors ---------------------------------------------------------

/// Mean position and its time derivative (<p>/m).
struct MeanState {
  double x = 0.0;
  double v = 0.0;

  [[nodiscard]] std::array<double, 2> as_array() const { return {x, v}; }
  [[nodiscard]] static MeanState from_array(const std::array<double, 2>& a) {
    return {a[0], a[1]};
  }
  [[nodiscard]] bool finite() const { return std::isfinite(x) && std::isfinite(v); }
};

/// Variance V and its first two derivatives. V < 0 is permitted: the
/// all-0.001 protocol initial condition is a formal solution of the linear
/// ODE, not a physical wave packet.
struct VarianceState {
  double var = 0.0;
  double dvar = 0.0;
  double ddvar = 0.0;

  [[nodiscard]] std::array<double, 3> as_array() const { return {var, dvar, ddvar}; }
  [[nodiscard]] static VarianceState from_array(const std::array<double, 3>& a) {
    return {a[0], a[1], a[2]};
  }
  [[nodiscard]] bool finite() const {
    return std::isfinite(var) && std::isfinite(dvar) && std::isfinite(ddvar);
  }
};

/// Second moments <x^2>, <p^2>, <xp+px>.
struct MomentsState {
  double xx = 0.0;
  double pp = 0.0;
  double xp = 0.0;

  [[nodiscard]] std::array<double, 3> as_array() const { return {xx, pp, xp}; }
  [[nodiscard]] static MomentsState from_array(const std::array<double, 3>& a) {
    return {a[0], a[1], a[2]};
  }
  [[nodiscard]] bool finite() const {
    return std::isfinite(xx) && std::isfinite(pp) && std::isfinite(xp);
  }
};

/// Slowly varying amplitudes of the mean near omega = Omega/2.
struct SlowFlowMean {
  double a = 0.0;
  double b = 0.0;

  [[nodiscard]] std::array<double, 2> as_array() const { return {a, b}; }
  [[nodiscard]] static SlowFlowMean from_array(const std::array<double, 2>& v) {
    return {v[0], v[1]};
  }
  [[nodiscard]] bool finite() const { return std::isfinite(a) && std::isfinite(b); }
};

/// Slowly varying amplitudes of the variance near omega = Omega/2.
struct SlowFlowVariance {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  [[nodiscard]] std::array<double, 3> as_array() const { return {a, b, c}; }
  [[nodiscard]] static SlowFlowVariance from_array(const std::array<double, 3>& v) {
    return {v[0], v[1], v[2]};
  }
  [[nodiscard]] bool finite() const {
    return std::isfinite(a) && std::isfinite(b) && std::isfinite(c);
  }
};

/// Slowly varying amplitudes of the variance near omega = Omega/4.
struct SlowFlowQuarter {
  double a0 = 0.0;
  double a = 0.0;
  double b = 0.0;

  [[nodiscard]] std::array<double, 3> as_array() const { return {a0, a, b}; }
  [[nodiscard]] static SlowFlowQuarter from_array(const std::array<double, 3>& v) {
    return {v[0], v[1], v[2]};
  }
  [[nodiscard]] bool finite() const {
    return std::isfinite(a0) && std::isfinite(a) && std::isfinite(b);
  }
};

}  // namespace qpt
