#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "qpt/errors.hpp"

namespace qpt {

using Mat3 = std::array<std::array<double, 3>, 3>;
using Mat4 = std::array<std::array<double, 4>, 4>;

/**
 * @brief The four closed-form stability-boundary branches of the mean slow
 * flow, as values of delta1/Omega. Ordered as the four cases of the closed
 * form: -(1/16)[sqrt((mu-8D)^2+4)+mu], +(1/16)[sqrt((mu-8D)^2+4)-mu],
 * -(1/16)[sqrt((mu+8D)^2+4)-mu], +(1/16)[sqrt((mu+8D)^2+4)+mu].
 *
 * Valid for small mu; the curves mark the thin resonance tongues of the slow
 * flow (they coincide with the primary band edge only as Delta -> 0).
 */
struct BoundaryBranch {
  double branch1;
  double branch2;
  double branch3;
  double branch4;

  [[nodiscard]] std::array<double, 4> as_array() const {
    return {branch1, branch2, branch3, branch4};
  }
};

[[nodiscard]] inline BoundaryBranch mean_boundaries(double mu, double delta_cap) {
  detail::require(std::isfinite(mu) && mu >= 0.0, "mean_boundaries: mu must be >= 0");
  detail::require(std::isfinite(delta_cap), "mean_boundaries: delta_cap must be finite");
  const double m = mu - 8.0 * delta_cap;
  const double p = mu + 8.0 * delta_cap;
  const double sm = std::sqrt(m * m + 4.0);
  const double sp = std::sqrt(p * p + 4.0);
  return {-(sm + mu) / 16.0, (sm - mu) / 16.0, -(sp - mu) / 16.0, (sp + mu) / 16.0};
}

/**
 * @brief Coefficient matrix of the slowly varying quadrature amplitudes
 * (alpha1, beta1, alpha2, beta2) of the mean slow flow, before dividing by
 * Delta (the homogeneous-balance form). Its determinant vanishes exactly on
 * the mean_boundaries branches.
 */
[[nodiscard]] inline Mat4 mean_slowflow_matrix_unscaled(double mu, double delta_cap,
                                                        double delta1_over_omega) {
  const double p = delta_cap / 2.0 + mu / 16.0;
  const double q = delta_cap / 2.0 - mu / 16.0;
  const double d = delta1_over_omega;
  const double m16 = mu / 16.0;
  return {{{0.0, -p, d - 0.125 - m16, 0.0},
           {q, 0.0, 0.0, d - 0.125 + m16},
           {-(d + 0.125 + m16), 0.0, 0.0, -q},
           {0.0, -(d + 0.125 - m16), p, 0.0}}};
}

/// Same matrix scaled so the system reads X' = A X in slow time; with
/// Delta = 0 the unscaled homogeneous-balance matrix is returned.
[[nodiscard]] inline Mat4 mean_slowflow_matrix(double mu, double delta_cap,
                                               double delta1_over_omega) {
  Mat4 m = mean_slowflow_matrix_unscaled(mu, delta_cap, delta1_over_omega);
  if (delta_cap != 0.0) {
    for (auto& row : m) {
      for (double& v : row) {
        v /= delta_cap;
      }
    }
  }
  return m;
}

/// mu = 0 variance slow flow in state order (A, B, C), unscaled by Delta.
[[nodiscard]] inline Mat3 variance_slowflow_matrix_mu0_unscaled(double delta1_over_omega) {
  const double d = delta1_over_omega;
  return {{{0.0, 2.0 * d, 0.0}, {-2.0 * d, 0.0, -0.25}, {0.0, -0.25, 0.0}}};
}

[[nodiscard]] inline Mat3 variance_slowflow_matrix_mu0(double delta1_over_omega,
                                                       double delta_cap) {
  Mat3 m = variance_slowflow_matrix_mu0_unscaled(delta1_over_omega);
  if (delta_cap != 0.0) {
    for (auto& row : m) {
      for (double& v : row) {
        v /= delta_cap;
      }
    }
  }
  return m;
}

/**
 * @brief Eigenvalue products Delta*lambda of the mu=0 variance slow flow:
 * {0, +sqrt(1/16 - 4 d^2), -sqrt(1/16 - 4 d^2)} with d = delta1/Omega.
 * The pair is real (instability) for |d| < 1/8 and purely imaginary outside.
 */
[[nodiscard]] inline std::array<std::complex<double>, 3> variance_eigen_mu0(
    double delta1_over_omega, double delta_cap) {
  detail::require(std::isfinite(delta1_over_omega) && std::isfinite(delta_cap),
                  "variance_eigen_mu0: arguments must be finite");
  const double r = 1.0 / 16.0 - 4.0 * delta1_over_omega * delta1_over_omega;
  if (r >= 0.0) {
    const double s = std::sqrt(r);
    return {std::complex<double>(0.0, 0.0), std::complex<double>(s, 0.0),
            std::complex<double>(-s, 0.0)};
  }
  const double s = std::sqrt(-r);
  return {std::complex<double>(0.0, 0.0), std::complex<double>(0.0, s),
          std::complex<double>(0.0, -s)};
}

/// delta of the quarter-resonance periodic-orbit curve, as an offset of
/// omega^2 from Omega^2/16: delta = -eps^2/Omega^2.
[[nodiscard]] inline double quarter_resonance_delta(double epsilon, double omega_drive) {
  detail::require(std::isfinite(epsilon) && epsilon >= 0.0,
                  "quarter_resonance_delta: epsilon must be >= 0");
  detail::require(std::isfinite(omega_drive) && omega_drive > 0.0,
                  "quarter_resonance_delta: omega_drive must be > 0");
  return -(epsilon * epsilon) / (omega_drive * omega_drive);
}

/// The natural frequency on that curve, omega = sqrt(Omega^2/16 + delta).
[[nodiscard]] inline double quarter_resonance_omega(double epsilon, double omega_drive) {
  const double delta = quarter_resonance_delta(epsilon, omega_drive);
  const double radicand = omega_drive * omega_drive / 16.0 + delta;
  if (radicand < 0.0) {
    throw InvalidDomain("quarter_resonance_omega: Omega^2/16 + delta < 0");
  }
  return std::sqrt(radicand);
}

/// Reduced fraction p/q with q > 0.
struct Rational {
  std::int64_t p = 0;
  std::int64_t q = 1;

  friend bool operator==(const Rational&, const Rational&) = default;
};

/**
 * @brief First n continued-fraction convergents of alpha in (0,1), skipping
 * the integer-denominator prefix (0/1, 1/1), so the first convergent is the
 * first p/q with q >= 2, the first rational drive approximant with a period
 * longer than the base drive's.
 *
 * Throws PrecisionExhausted once further partial quotients would be noise of
 * the 64-bit representation (near-rational input), rather than fabricating
 * terms.
 */
[[nodiscard]] inline std::vector<Rational> cf_approximants(double alpha, int count) {
  detail::require(count >= 1 && count <= 20, "cf_approximants: count must be in [1, 20]");
  detail::require(std::isfinite(alpha) && alpha > 0.0 && alpha < 1.0,
                  "cf_approximants: alpha must be in (0, 1)");

  // Denominators beyond ~1/sqrt(eps) cannot be justified by a double input:
  // |alpha - p/q| < 1/q^2 would be below one ulp of alpha.
  constexpr double kMaxDenominator = 6.7e7;
  constexpr double kResidualFloor = 1e-12;

  std::vector<Rational> out;
  out.reserve(static_cast<std::size_t>(count));

  double x = alpha;
  std::int64_t p_prev = 1, q_prev = 0;  // h_{-1}/k_{-1}
  std::int64_t p_curr = 0, q_curr = 1;  // a0 = 0 for alpha in (0,1)
  for (int iter = 0; iter < 64 && static_cast<int>(out.size()) < count; ++iter) {
    if (x <= kResidualFloor) {
      throw PrecisionExhausted("cf_approximants: expansion terminated after " +
                               std::to_string(out.size()) + " reliable convergents");
    }
    const double inv = 1.0 / x;
    const double af = std::floor(inv);
    if (af > kMaxDenominator) {
      throw PrecisionExhausted("cf_approximants: partial quotient exceeds 64-bit reliability "
                               "after " +
                               std::to_string(out.size()) + " convergents");
    }
    const auto a = static_cast<std::int64_t>(af);
    const std::int64_t p_next = a * p_curr + p_prev;
    const std::int64_t q_next = a * q_curr + q_prev;
    if (static_cast<double>(q_next) > kMaxDenominator) {
      throw PrecisionExhausted("cf_approximants: denominator exceeds input precision after " +
                               std::to_string(out.size()) + " convergents");
    }
    p_prev = p_curr;
    q_prev = q_curr;
    p_curr = p_next;
    q_curr = q_next;
    x = inv - af;
    if (q_curr >= 2) {
      out.push_back(Rational{p_curr, q_curr});
    }
  }
  if (static_cast<int>(out.size()) < count) {
    throw PrecisionExhausted("cf_approximants: expansion unreliable before " +
                             std::to_string(count) + " convergents");
  }
  return out;
}

/// Fundamental period of f(t) for the rational approximant alpha = p/q,
/// in units of pi/Omega (the period is 2*pi*q/Omega).
[[nodiscard]] inline std::int64_t approximant_period_pi_over_omega(const Rational& r) {
  detail::require(r.q > 0, "approximant period: q must be positive");
  return 2 * r.q;
}

}  // namespace qpt
