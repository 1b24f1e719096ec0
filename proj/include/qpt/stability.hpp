#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "qpt/core.hpp"
#include "qpt/errors.hpp"
#include "qpt/integrate.hpp"
#include "qpt/models.hpp"

namespace qpt {

/**
 * @brief Thresholds and protocol of the divergence classifier.
 *
 * horizon/step are the resolved integration settings for the model at hand
 * (slow flows run in slow time tau, everything else in real time).
 */
struct ClassifierPolicy {
  double divergence_threshold = 10.0;  // max-abs marking divergence
  double stable_threshold = 1.0;       // final-window envelope bound for Stable
  double initial_value = 0.001;        // per state component
  double horizon = 7000.0;
  double step = 0.001;
  double bailout = 1e6;

  void validate() const {
    detail::require(std::isfinite(divergence_threshold) && std::isfinite(stable_threshold) &&
                        std::isfinite(initial_value),
                    "policy: thresholds must be finite");
    detail::require(divergence_threshold > stable_threshold &&
                        stable_threshold > initial_value && initial_value > 0.0,
                    "policy: need divergence_threshold > stable_threshold > initial_value > 0");
    detail::require(std::isfinite(horizon) && horizon > 0.0, "policy: horizon must be > 0");
    detail::require(std::isfinite(step) && step > 0.0 && step < horizon,
                    "policy: step must be in (0, horizon)");
    detail::require(bailout >= divergence_threshold,
                    "policy: bailout must be >= divergence_threshold");
  }

  /// Published single-run protocol: tau = 7000 for the half-resonance slow
  /// flows, t = 5000 for everything else, step 0.001.
  [[nodiscard]] static ClassifierPolicy paper_exact(ModelKind model) {
    ClassifierPolicy p;
    p.horizon = is_slow_flow(model) ? 7000.0 : 5000.0;
    p.step = 0.001;
    return p;
  }

  /// Relaxed settings for grid sweeps; verdicts are insensitive to this
  /// (checked by the step-halving test in the suite).
  [[nodiscard]] static ClassifierPolicy desk_scale(ModelKind /*model*/) {
    ClassifierPolicy p;
    p.horizon = 2000.0;
    p.step = 0.01;
    return p;
  }
};

enum class VerdictKind { Stable, Divergent, Ambiguous };

[[nodiscard]] constexpr std::string_view verdict_name(VerdictKind kind) {
  switch (kind) {
    case VerdictKind::Stable:
      return "stable";
    case VerdictKind::Divergent:
      return "divergent";
    case VerdictKind::Ambiguous:
      return "ambiguous";
  }
  return "";
}

[[nodiscard]] inline VerdictKind verdict_from_name(std::string_view name) {
  if (name == "stable") return VerdictKind::Stable;
  if (name == "divergent") return VerdictKind::Divergent;
  if (name == "ambiguous") return VerdictKind::Ambiguous;
  throw ConfigError("verdict: unknown name '" + std::string(name) + "'");
}

struct StabilityVerdict {
  VerdictKind kind = VerdictKind::Ambiguous;
  double max_abs = 0.0;
  std::optional<double> growth_rate;  // present for Divergent/Ambiguous
  std::string note;                   // set for degenerate/error-annotated cells

  friend bool operator==(const StabilityVerdict&, const StabilityVerdict&) = default;
};

/// Ambiguous cells growing faster than this (per unit model time) carry a
/// "divergent-leaning" annotation; the verdict itself stays Ambiguous.
inline constexpr double kDivergentLeaningRate = 1e-3;

template <std::size_t N>
[[nodiscard]] double estimate_growth_rate(const Trajectory<N>& traj,
                                          const ClassifierPolicy& policy) {
  const double span = traj.t_end - traj.t0;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int n = 0;
  for (std::size_t w = 0; w < kEnvelopeWindows; ++w) {
    if (traj.window_max[w] > 0.0) {
      const double tw = traj.t0 + (static_cast<double>(w) + 0.5) * span / kEnvelopeWindows;
      const double lw = std::log(traj.window_max[w]);
      sx += tw;
      sy += lw;
      sxx += tw * tw;
      sxy += tw * lw;
      ++n;
    }
  }
  const double denom = n * sxx - sx * sx;
  if (n >= 2 && denom > 0.0) {
    return (n * sxy - sx * sy) / denom;
  }
  if (traj.final_time > traj.t0 && traj.max_abs > 0.0) {
    return std::log(traj.max_abs / policy.initial_value) / (traj.final_time - traj.t0);
  }
  return 0.0;
}

/**
 * @brief Classify a trajectory: Divergent once the envelope reached the
 * divergence threshold (or the state went non-finite), Stable when the run
 * completed with the last-5%-of-horizon envelope within the stable bound,
 * Ambiguous otherwise (with a fitted growth rate).
 */
template <std::size_t N>
[[nodiscard]] StabilityVerdict classify(const Trajectory<N>& traj,
                                        const ClassifierPolicy& policy) {
  policy.validate();
  if (traj.steps_taken == 0 && traj.status != TrajectoryStatus::NonFinite) {
    throw EmptyTrajectory("classify: trajectory has no integrated steps");
  }
  StabilityVerdict v;
  v.max_abs = traj.max_abs;
  if (traj.status == TrajectoryStatus::NonFinite ||
      traj.max_abs >= policy.divergence_threshold) {
    v.kind = VerdictKind::Divergent;
    v.growth_rate = estimate_growth_rate(traj, policy);
    if (traj.status == TrajectoryStatus::NonFinite) {
      v.note = "non-finite state at step " + std::to_string(traj.event_step);
    }
    return v;
  }
  if (traj.status == TrajectoryStatus::Completed &&
      traj.window_max[kEnvelopeWindows - 1] <= policy.stable_threshold) {
    v.kind = VerdictKind::Stable;
    return v;
  }
  v.kind = VerdictKind::Ambiguous;
  v.growth_rate = estimate_growth_rate(traj, policy);
  if (*v.growth_rate > kDivergentLeaningRate) {
    v.note = "divergent-leaning";
  }
  return v;
}

// --- Parameter-plane sweeps --------------------------------------------------

/// DeltaDelta1: x = delta1 (detuning coefficient, omega = Omega/2 + eps*delta1),
/// y = Delta. EpsilonOmega: x = eps, y = omega.
enum class GridPlane { DeltaDelta1, EpsilonOmega };

[[nodiscard]] constexpr std::string_view plane_name(GridPlane plane) {
  return plane == GridPlane::DeltaDelta1 ? "delta-delta1" : "epsilon-omega";
}

[[nodiscard]] inline GridPlane plane_from_name(std::string_view name) {
  if (name == "delta-delta1") return GridPlane::DeltaDelta1;
  if (name == "epsilon-omega") return GridPlane::EpsilonOmega;
  throw ConfigError("plane: unknown name '" + std::string(name) +
                    "' (expected delta-delta1|epsilon-omega)");
}

/// Parameters not spanned by the lattice axes.
struct GridFixed {
  double mu = 0.0;
  double omega_drive = 0.0;
  std::optional<double> epsilon;    // delta-delta1 plane
  std::optional<double> delta_cap;  // epsilon-omega plane, eps-scaled detuning
  std::optional<double> alpha;      // epsilon-omega plane, fixed-ratio detuning

  friend bool operator==(const GridFixed&, const GridFixed&) = default;
};

struct GridSpec {
  GridPlane plane = GridPlane::DeltaDelta1;
  double x_min = 0.0, x_max = 0.0;
  int nx = 0;
  double y_min = 0.0, y_max = 0.0;
  int ny = 0;
  GridFixed fixed;
  ModelKind model = ModelKind::SlowFlowMeanHalf;

  void validate() const {
    detail::require(std::isfinite(x_min) && std::isfinite(x_max) && x_min <= x_max,
                    "grid.x: range must be finite with x_min <= x_max");
    detail::require(std::isfinite(y_min) && std::isfinite(y_max) && y_min <= y_max,
                    "grid.y: range must be finite with y_min <= y_max");
    detail::require(nx >= 2 && ny >= 2, "grid: nx and ny must be >= 2");
    detail::require(std::isfinite(fixed.mu) && fixed.mu >= 0.0, "fixed.mu: must be >= 0");
    detail::require(std::isfinite(fixed.omega_drive) && fixed.omega_drive > 0.0,
                    "fixed.omega_drive: must be > 0");
    if (plane == GridPlane::DeltaDelta1) {
      detail::require(fixed.epsilon.has_value() && std::isfinite(*fixed.epsilon) &&
                          *fixed.epsilon >= 0.0,
                      "fixed.epsilon: required (>= 0) for the delta-delta1 plane");
      detail::require(!fixed.alpha.has_value() && !fixed.delta_cap.has_value(),
                      "fixed: delta_cap/alpha are axis-driven on the delta-delta1 plane");
    } else {
      detail::require(fixed.delta_cap.has_value() != fixed.alpha.has_value(),
                      "fixed: the epsilon-omega plane needs exactly one of delta_cap|alpha");
      if (fixed.alpha) {
        detail::require(std::isfinite(*fixed.alpha) && *fixed.alpha >= 0.0,
                        "fixed.alpha: must be >= 0");
      }
      if (fixed.delta_cap) {
        detail::require(std::isfinite(*fixed.delta_cap), "fixed.delta_cap: must be finite");
      }
      detail::require(!fixed.epsilon.has_value(),
                      "fixed.epsilon: epsilon is axis-driven on the epsilon-omega plane");
    }
  }

  [[nodiscard]] double x_at(int ix) const {
    return nx < 2 ? x_min : x_min + (x_max - x_min) * static_cast<double>(ix) / (nx - 1);
  }
  [[nodiscard]] double y_at(int iy) const {
    return ny < 2 ? y_min : y_min + (y_max - y_min) * static_cast<double>(iy) / (ny - 1);
  }

  [[nodiscard]] bool axes_equal(const GridSpec& other) const {
    return plane == other.plane && nx == other.nx && ny == other.ny && x_min == other.x_min &&
           x_max == other.x_max && y_min == other.y_min && y_max == other.y_max;
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct GridResult {
  GridSpec spec;
  ClassifierPolicy policy;
  std::vector<StabilityVerdict> verdicts;  // row-major by (iy, ix)
  std::string code_version = kVersion;
  std::string created_at;  // UTC timestamp; lives in the JSON sidecar only
  int workers = 1;

  [[nodiscard]] const StabilityVerdict& at(int ix, int iy) const {
    return verdicts[static_cast<std::size_t>(iy) * spec.nx + ix];
  }
};

namespace detail {

template <class System>
[[nodiscard]] StabilityVerdict run_and_classify(const System& sys,
                                                const ClassifierPolicy& policy) {
  std::array<double, System::dim> y0;
  y0.fill(policy.initial_value);
  const IntegrationPlan plan{.t0 = 0.0, .t_end = policy.horizon, .h = policy.step,
                             .record_stride = 1, .envelope_only = true,
                             .bailout = policy.bailout};
  return classify(rk4_integrate<System::dim>(sys, y0, plan), policy);
}

}  // namespace detail

/**
 * @brief Evaluate a single lattice cell. Throws (DegenerateSlowTime,
 * InvalidSpec) for cells whose parameter mapping is undefined; sweep()
 * converts those into annotated Ambiguous verdicts.
 */
[[nodiscard]] inline StabilityVerdict evaluate_cell(const GridSpec& spec,
                                                    const ClassifierPolicy& policy, int ix,
                                                    int iy) {
  const double x = spec.x_at(ix);
  const double y = spec.y_at(iy);
  const double om = spec.fixed.omega_drive;
  const double mu = spec.fixed.mu;

  double epsilon = 0.0;
  double omega = 0.0;   // natural frequency for the full models
  double delta1 = 0.0;  // detuning coefficient
  ModulationSpec mod;
  if (spec.plane == GridPlane::DeltaDelta1) {
    epsilon = *spec.fixed.epsilon;
    delta1 = x;
    mod = ModulationSpec::epsilon_scaled(om, epsilon, mu, y);
    const bool quarter = spec.model == ModelKind::SlowFlowQuarterRes;
    omega = (quarter ? om / 4.0 : om / 2.0) + epsilon * delta1;
  } else {
    epsilon = x;
    omega = y;
    mod = spec.fixed.delta_cap ? ModulationSpec::epsilon_scaled(om, epsilon, mu,
                                                                *spec.fixed.delta_cap)
                               : ModulationSpec::fixed_ratio(om, epsilon, mu,
                                                             *spec.fixed.alpha);
    if (is_slow_flow(spec.model) || spec.model == ModelKind::SlowFlowQuarterRes) {
      if (epsilon == 0.0) {
        throw DegenerateSlowTime("cell: eps = 0 has no slow-flow reduction");
      }
      const bool quarter = spec.model == ModelKind::SlowFlowQuarterRes;
      delta1 = (omega - (quarter ? om / 4.0 : om / 2.0)) / epsilon;
    }
  }

  switch (spec.model) {
    case ModelKind::MeanFull:
      return detail::run_and_classify(MeanSystem{OscillatorConfig::at_frequency(omega, mod)},
                                      policy);
    case ModelKind::VarianceFull:
      return detail::run_and_classify(
          VarianceSystem{OscillatorConfig::at_frequency(omega, mod)}, policy);
    case ModelKind::MomentsOracle:
      return detail::run_and_classify(
          MomentsSystem{OscillatorConfig::at_frequency(omega, mod)}, policy);
    case ModelKind::SlowFlowMeanHalf: {
      const double delta_cap = spec.plane == GridPlane::DeltaDelta1
                                   ? y
                                   : (spec.fixed.delta_cap ? *spec.fixed.delta_cap
                                                           : *spec.fixed.alpha / epsilon);
      return detail::run_and_classify(
          SlowFlowMeanSystem{SlowFlowParams::make(delta1 / om, mu, delta_cap)}, policy);
    }
    case ModelKind::SlowFlowVarianceHalf: {
      const double delta_cap = spec.plane == GridPlane::DeltaDelta1
                                   ? y
                                   : (spec.fixed.delta_cap ? *spec.fixed.delta_cap
                                                           : *spec.fixed.alpha / epsilon);
      return detail::run_and_classify(
          SlowFlowVarianceSystem{SlowFlowParams::make(delta1 / om, mu, delta_cap)}, policy);
    }
    case ModelKind::SlowFlowQuarterRes:
      return detail::run_and_classify(
          SlowFlowQuarterSystem{QuarterParams::make(delta1, epsilon)}, policy);
  }
  throw InvalidSpec("evaluate_cell: unknown model");
}

/**
 * @brief Sweep the lattice, one verdict per cell. Deterministic and
 * independent of the worker count: every cell is a pure computation written
 * to its own slot. Per-cell parameter errors become annotated Ambiguous
 * verdicts; the grid itself always completes.
 */
[[nodiscard]] inline GridResult sweep(const GridSpec& spec, const ClassifierPolicy& policy,
                                      int workers = 1) {
  spec.validate();
  policy.validate();
  workers = std::max(1, workers);

  GridResult result;
  result.spec = spec;
  result.policy = policy;
  result.workers = workers;
  const std::size_t total = static_cast<std::size_t>(spec.nx) * spec.ny;
  result.verdicts.assign(total, StabilityVerdict{});

  auto run_cell = [&](std::size_t i) {
    const int iy = static_cast<int>(i) / spec.nx;
    const int ix = static_cast<int>(i) % spec.nx;
    try {
      result.verdicts[i] = evaluate_cell(spec, policy, ix, iy);
    } catch (const Error& e) {
      result.verdicts[i] = StabilityVerdict{VerdictKind::Ambiguous, 0.0, std::nullopt,
                                            std::string("not integrated: ") + e.what()};
    }
  };

  if (workers == 1) {
    for (std::size_t i = 0; i < total; ++i) {
      run_cell(i);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= total) {
            return;
          }
          run_cell(i);
        }
      });
    }
    for (auto& t : pool) {
      t.join();
    }
  }
  return result;
}

struct Disagreement {
  int ix = 0;
  int iy = 0;
  double x = 0.0;
  double y = 0.0;
  VerdictKind in_a = VerdictKind::Ambiguous;
  VerdictKind in_b = VerdictKind::Ambiguous;
};

struct ZoneComparison {
  double agreement = 1.0;       // over cells where both verdicts are non-Ambiguous
  std::size_t compared = 0;
  std::vector<Disagreement> disagreements;
};

/// Compare Stable/Divergent patterns of two grids on identical axes (models
/// and fixed parameters may differ). Ambiguous cells are skipped.
[[nodiscard]] inline ZoneComparison compare_zones(const GridResult& a, const GridResult& b) {
  if (!a.spec.axes_equal(b.spec)) {
    throw SpecMismatch("compare_zones: grid axes/resolution differ");
  }
  ZoneComparison out;
  std::size_t matched = 0;
  for (int iy = 0; iy < a.spec.ny; ++iy) {
    for (int ix = 0; ix < a.spec.nx; ++ix) {
      const VerdictKind ka = a.at(ix, iy).kind;
      const VerdictKind kb = b.at(ix, iy).kind;
      if (ka == VerdictKind::Ambiguous || kb == VerdictKind::Ambiguous) {
        continue;
      }
      ++out.compared;
      if (ka == kb) {
        ++matched;
      } else {
        out.disagreements.push_back(
            {ix, iy, a.spec.x_at(ix), a.spec.y_at(iy), ka, kb});
      }
    }
  }
  out.agreement = out.compared == 0 ? 1.0 : static_cast<double>(matched) / out.compared;
  return out;
}

struct GridPoint {
  double x = 0.0;
  double y = 0.0;
};

/// Midpoints between horizontally/vertically adjacent cells with opposite
/// non-Ambiguous verdicts; empty for a uniform grid.
[[nodiscard]] inline std::vector<GridPoint> extract_boundary(const GridResult& grid) {
  std::vector<GridPoint> points;
  const auto opposite = [](VerdictKind a, VerdictKind b) {
    return (a == VerdictKind::Stable && b == VerdictKind::Divergent) ||
           (a == VerdictKind::Divergent && b == VerdictKind::Stable);
  };
  for (int iy = 0; iy < grid.spec.ny; ++iy) {
    for (int ix = 0; ix + 1 < grid.spec.nx; ++ix) {
      if (opposite(grid.at(ix, iy).kind, grid.at(ix + 1, iy).kind)) {
        points.push_back(
            {(grid.spec.x_at(ix) + grid.spec.x_at(ix + 1)) / 2.0, grid.spec.y_at(iy)});
      }
    }
  }
  for (int iy = 0; iy + 1 < grid.spec.ny; ++iy) {
    for (int ix = 0; ix < grid.spec.nx; ++ix) {
      if (opposite(grid.at(ix, iy).kind, grid.at(ix, iy + 1).kind)) {
        points.push_back(
            {grid.spec.x_at(ix), (grid.spec.y_at(iy) + grid.spec.y_at(iy + 1)) / 2.0});
      }
    }
  }
  return points;
}

}  // namespace qpt
