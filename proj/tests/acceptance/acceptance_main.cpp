// Acceptance suite: one pass/fail line per criterion, run with no arguments
// for the full set or with criterion numbers to select a subset.
//
// Known-red sub-checks are implemented exactly as specified and left to fail;
// the printed context lines give the measured behaviour (see the test output
// and README for the analysis).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qpt/qpt.hpp"

using namespace qpt;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

int g_checks_failed = 0;
std::vector<std::string> g_context;

void check(bool ok, const std::string& what) {
  if (!ok) {
    ++g_checks_failed;
  }
  g_context.push_back(std::string(ok ? "    ok   " : "    FAIL ") + what);
}

void context(const std::string& line) { g_context.push_back("    note " + line); }

struct CriterionTimer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

template <class System>
StabilityVerdict run_point(const System& sys, const ClassifierPolicy& policy) {
  std::array<double, System::dim> y0;
  y0.fill(policy.initial_value);
  const IntegrationPlan plan{.t0 = 0.0, .t_end = policy.horizon, .h = policy.step,
                             .record_stride = 1, .envelope_only = true,
                             .bailout = policy.bailout};
  return classify(rk4_integrate<System::dim>(sys, y0, plan), policy);
}

std::string verdict_line(const char* label, const StabilityVerdict& v) {
  std::string s = std::string(label) + " -> " + std::string(verdict_name(v.kind)) +
                  " (max_abs=" + format_double(v.max_abs);
  if (v.growth_rate) {
    s += ", rate=" + format_double(*v.growth_rate);
  }
  return s + ")";
}

GridSpec criterion3_spec(ModelKind model, double mu, int n) {
  GridSpec spec;
  spec.plane = GridPlane::DeltaDelta1;
  spec.x_min = -1.5;
  spec.x_max = 1.5;
  spec.nx = n;
  spec.y_min = 0.05;
  spec.y_max = 3.0;
  spec.ny = n;
  spec.fixed = {mu, kTwoPi, 0.1, {}, {}};
  spec.model = model;
  return spec;
}

// ---------------------------------------------------------------------------
// 1. Slow-flow threshold reproduction at the published knife edge
//    (mu=1, eps=0.1, Omega=2pi, Delta=1.51, all-0.001 start, h=0.001,
//    tau=7000): Divergent at delta1=0.7155, Stable at delta1=0.7156 for both
//    slow flows.
bool criterion1() {
  const double mu = 1.0;
  const double delta_cap = 1.51;
  ClassifierPolicy policy = ClassifierPolicy::paper_exact(ModelKind::SlowFlowMeanHalf);
  const auto run_pair = [&](double delta1) {
    const auto p = SlowFlowParams::make(delta1 / kTwoPi, mu, delta_cap);
    return std::pair{run_point(SlowFlowMeanSystem{p}, policy),
                     run_point(SlowFlowVarianceSystem{p}, policy)};
  };
  const auto [mean_lo, var_lo] = run_pair(0.7155);
  const auto [mean_hi, var_hi] = run_pair(0.7156);
  check(mean_lo.kind == VerdictKind::Divergent, verdict_line("slow-mean @0.7155 divergent", mean_lo));
  check(var_lo.kind == VerdictKind::Divergent, verdict_line("slow-var  @0.7155 divergent", var_lo));
  check(mean_hi.kind == VerdictKind::Stable, verdict_line("slow-mean @0.7156 stable", mean_hi));
  check(var_hi.kind == VerdictKind::Stable, verdict_line("slow-var  @0.7156 stable", var_hi));
  if (var_hi.kind != VerdictKind::Stable) {
    context("the @0.7156 variance run is a bounded beat (peak " +
            format_double(var_hi.max_abs) +
            ", value ~1.2 at tau=7000); it exceeds the pinned thresholds while "
            "remaining oscillatory");
  }
  return g_checks_failed == 0;
}

// ---------------------------------------------------------------------------
// 2. Full-equation threshold reproduction (mu=1, eps=0.1, Omega=2pi,
//    Delta=sqrt(2)+0.1, h=0.001, t_end=5000): Divergent at delta1=0.7476 and
//    Stable at delta1=0.7477 for the exact mean and variance equations.
bool criterion2() {
  const double delta_cap = std::sqrt(2.0) + 0.1;
  const auto mod = ModulationSpec::epsilon_scaled(kTwoPi, 0.1, 1.0, delta_cap);
  const ClassifierPolicy policy = ClassifierPolicy::paper_exact(ModelKind::MeanFull);
  const auto run_pair = [&](double delta1) {
    const auto cfg = OscillatorConfig::near_half_resonance(0.1 * delta1, mod);
    return std::pair{run_point(MeanSystem{cfg}, policy),
                     run_point(VarianceSystem{cfg}, policy)};
  };
  const auto [mean_lo, var_lo] = run_pair(0.7476);
  const auto [mean_hi, var_hi] = run_pair(0.7477);
  check(mean_lo.kind == VerdictKind::Divergent, verdict_line("mean @0.7476 divergent", mean_lo));
  check(var_lo.kind == VerdictKind::Divergent, verdict_line("var  @0.7476 divergent", var_lo));
  check(mean_hi.kind == VerdictKind::Stable, verdict_line("mean @0.7477 stable", mean_hi));
  check(var_hi.kind == VerdictKind::Stable, verdict_line("var  @0.7477 stable", var_hi));
  if (mean_lo.kind != VerdictKind::Divergent) {
    context("the exact-equation edge sits at delta1 = 0.739-0.740 under "
            "omega = Omega/2 + eps*delta1 (and at 0.7477-0.7480 under the "
            "omega^2-offset parametrization); the published pair matches "
            "neither for the exact equations");
  }
  return g_checks_failed == 0;
}

// ---------------------------------------------------------------------------
// 3. Zone identity on desk-scale grids: slow-mean vs slow-variance for
//    mu in {0.1, 0.5, 1} on 51x51, and full mean vs variance at mu=0.5 on
//    41x41, agreement >= 0.98. Grids are kept for criterion 10.
std::vector<GridResult> g_c3_grids;

const std::vector<GridResult>& c3_grids() {
  if (g_c3_grids.empty()) {
    for (const double mu : {0.1, 0.5, 1.0}) {
      const auto policy = ClassifierPolicy::desk_scale(ModelKind::SlowFlowMeanHalf);
      g_c3_grids.push_back(sweep(criterion3_spec(ModelKind::SlowFlowMeanHalf, mu, 51),
                                 policy, 8));
      g_c3_grids.push_back(sweep(criterion3_spec(ModelKind::SlowFlowVarianceHalf, mu, 51),
                                 policy, 8));
    }
    const auto policy = ClassifierPolicy::desk_scale(ModelKind::MeanFull);
    g_c3_grids.push_back(sweep(criterion3_spec(ModelKind::MeanFull, 0.5, 41), policy, 8));
    g_c3_grids.push_back(sweep(criterion3_spec(ModelKind::VarianceFull, 0.5, 41), policy, 8));
  }
  return g_c3_grids;
}

bool criterion3() {
  const auto& grids = c3_grids();
  for (int pair = 0; pair < 3; ++pair) {
    const auto cmp = compare_zones(grids[2 * pair], grids[2 * pair + 1]);
    check(cmp.agreement >= 0.98,
          "slow-flow zone agreement mu=" +
              format_double(grids[2 * pair].spec.fixed.mu) + ": " +
              format_double(cmp.agreement) + " over " + std::to_string(cmp.compared) +
              " cells (need >= 0.98)");
  }
  const auto cmp = compare_zones(grids[6], grids[7]);
  check(cmp.agreement >= 0.98,
        "full-equation zone agreement mu=0.5: " + format_double(cmp.agreement) + " over " +
            std::to_string(cmp.compared) + " cells (need >= 0.98)");
  return g_checks_failed == 0;
}

// ---------------------------------------------------------------------------
// 4. Closed-form boundary match at mu=0.1: every extracted boundary point of
//    the slow-flow mean sweep lies within 2 grid cells of one of the four
//    branches. Window isolates the resonance tongue the branches describe.
bool criterion4() {
  GridSpec spec;
  spec.plane = GridPlane::DeltaDelta1;
  spec.x_min = 0.9;
  spec.x_max = 2.7;
  spec.nx = 41;
  spec.y_min = 0.25;
  spec.y_max = 0.75;
  spec.ny = 41;
  spec.fixed = {0.1, kTwoPi, 0.1, {}, {}};
  spec.model = ModelKind::SlowFlowMeanHalf;
  ClassifierPolicy policy = ClassifierPolicy::desk_scale(spec.model);
  policy.horizon = 7000.0;  // the mu=0.1 tongue grows too slowly for tau=2000
  const auto grid = sweep(spec, policy, 8);
  const auto points = extract_boundary(grid);
  const double cell_x = (spec.x_max - spec.x_min) / (spec.nx - 1);
  double worst = 0.0;
  for (const auto& pt : points) {
    const auto branches = mean_boundaries(spec.fixed.mu, pt.y);
    double best = 1e300;
    for (const double b : branches.as_array()) {
      best = std::min(best, std::abs(pt.x - b * kTwoPi) / cell_x);
    }
    worst = std::max(worst, best);
  }
  check(!points.empty(), "boundary extraction found " + std::to_string(points.size()) +
                             " points in the tongue window");
  check(worst <= 2.0, "max deviation from the closed-form branches: " +
                          format_double(worst) + " cells (need <= 2)");
  return g_checks_failed == 0;
}

// ---------------------------------------------------------------------------
// 5. mu=0 band: a 101-point scan of the variance slow flow over
//    delta1/Omega in [-0.25, 0.25] finds the divergent interval endpoints
//    within one cell of +-1/8.
bool criterion5() {
  GridSpec spec;
  spec.plane = GridPlane::DeltaDelta1;
  spec.x_min = -0.25 * kTwoPi;
  spec.x_max = 0.25 * kTwoPi;
  spec.nx = 101;
  spec.y_min = 1.0;
  spec.y_max = 1.5;
  spec.ny = 2;
  spec.fixed = {0.0, kTwoPi, 0.1, {}, {}};
  spec.model = ModelKind::SlowFlowVarianceHalf;
  const auto grid = sweep(spec, ClassifierPolicy::desk_scale(spec.model), 8);
  int first = -1;
  int last = -1;
  for (int ix = 0; ix < spec.nx; ++ix) {
    if (grid.at(ix, 0).kind == VerdictKind::Divergent) {
      if (first < 0) {
        first = ix;
      }
      last = ix;
    }
  }
  check(first >= 0, "divergent interval detected");
  if (first >= 0) {
    const double cell = (spec.x_max - spec.x_min) / (spec.nx - 1);
    const double lo = grid.spec.x_at(first) / kTwoPi;   // delta1/Omega units
    const double hi = grid.spec.x_at(last) / kTwoPi;
    const double tol = (cell / kTwoPi) * (1.0 + 1e-9);
    check(std::abs(lo - (-0.125)) <= tol,
          "left endpoint " + format_double(lo) + " within one cell of -1/8");
    check(std::abs(hi - 0.125) <= tol,
          "right endpoint " + format_double(hi) + " within one cell of +1/8");
  }
  return g_checks_failed == 0;
}

// ---------------------------------------------------------------------------
// 6. No quarter-resonance instability: full variance runs on the
//    quarter-resonance curve stay Stable for eps in {0.05, 0.1, 0.2, 0.3}
//    (mu=0.5, Delta=1), and A^2+B^2 of the quarter flow is conserved to
//    1e-10 over t in [0, 1000].
bool criterion6() {
  for (const double eps : {0.05, 0.1, 0.2, 0.3}) {
    const auto mod = ModulationSpec::epsilon_scaled(kTwoPi, eps, 0.5, 1.0);
    const auto cfg = OscillatorConfig::at_frequency(quarter_resonance_omega(eps, kTwoPi), mod);
    const auto v = run_point(VarianceSystem{cfg},
                             ClassifierPolicy::paper_exact(ModelKind::VarianceFull));
    check(v.kind == VerdictKind::Stable,
          verdict_line(("variance on the quarter curve, eps=" + format_double(eps)).c_str(),
                       v));
  }
  {
    const auto params = QuarterParams::make(0.5, 0.1);
    const IntegrationPlan plan{.t0 = 0.0, .t_end = 1000.0, .h = 0.001,
                               .record_stride = 1000};
    const std::array<double, 3> y0{0.001, 0.001, 0.001};
    const auto traj = rk4_integrate<3>(SlowFlowQuarterSystem{params}, y0, plan);
    const double r0 = y0[1] * y0[1] + y0[2] * y0[2];
    double worst = 0.0;
    for (const auto& s : traj.states) {
      worst = std::max(worst, std::abs(s[1] * s[1] + s[2] * s[2] - r0));
    }
    check(worst < 1e-10,
          "quarter-flow A^2+B^2 drift over t in [0,1000]: " + format_double(worst));
  }
  return g_checks_failed == 0;
}

// ---------------------------------------------------------------------------
// 7. Volume conservation: state-transition determinants of the mean (2x2)
//    and variance (3x3) companion systems stay within 1e-6 of 1 over
//    t in [0,100] at h=0.001 for 10 random draws with eps <= 0.3.
//
//    det Phi(100,0) is accumulated as the product of unit-subinterval
//    determinants (equal by det(AB) = det A det B): inside an instability
//    tongue |Phi| reaches ~e^30, where evaluating the determinant of the
//    full-span matrix directly is catastrophically ill-conditioned even
//    though its exact value is 1.
template <std::size_t N, class Sys>
double det_accumulated(const Sys& sys) {
  double det = 1.0;
  for (int k = 0; k < 100; ++k) {
    const IntegrationPlan chunk{.t0 = static_cast<double>(k),
                                .t_end = static_cast<double>(k + 1), .h = 0.001};
    const auto phi = fundamental_matrix<N>(sys, chunk);
    Eigen::Matrix<double, N, N> m;
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t j = 0; j < N; ++j) {
        m(static_cast<int>(i), static_cast<int>(j)) = phi[i][j];
      }
    }
    det *= m.determinant();
  }
  return det;
}

bool criterion7() {
  std::mt19937 rng(20260810);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst2 = 0.0;
  double worst3 = 0.0;
  for (int k = 0; k < 10; ++k) {
    const double eps = 0.3 * u(rng);
    const double mu = u(rng);
    const double delta_cap = 4.0 * u(rng) - 2.0;
    const double omega = 0.5 + 2.5 * u(rng);
    const double omega_drive = 2.0 + 6.0 * u(rng);
    const auto cfg = OscillatorConfig::at_frequency(
        omega, ModulationSpec::epsilon_scaled(omega_drive, eps, mu, delta_cap));
    worst2 = std::max(worst2, std::abs(det_accumulated<2>(MeanSystem{cfg}) - 1.0));
    worst3 = std::max(worst3, std::abs(det_accumulated<3>(VarianceSystem{cfg}) - 1.0));
  }
  check(worst2 < 1e-6,
        "mean companion |det Phi(100,0) - 1| worst over 10 draws: " + format_double(worst2));
  check(worst3 < 1e-6, "variance companion |det Phi(100,0) - 1| worst over 10 draws: " +
                           format_double(worst3));
  return g_checks_failed == 0;
}

// ---------------------------------------------------------------------------
// 8. Oracle equivalence: integrating the second-moment system and the
//    variance equation from consistently mapped all-0.001 data agrees in V
//    to 1e-6 relative over t in [0, 50] for 10 random draws.
bool criterion8() {
  std::mt19937 rng(8261954);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const IntegrationPlan plan{.t0 = 0.0, .t_end = 50.0, .h = 0.001, .record_stride = 10};
  double worst_rel = 0.0;
  for (int k = 0; k < 10; ++k) {
    const auto cfg = OscillatorConfig::at_frequency(
        0.5 + 2.5 * u(rng),
        ModulationSpec::epsilon_scaled(2.0 + 6.0 * u(rng), 0.2 * u(rng), u(rng),
                                       4.0 * u(rng) - 2.0),
        0.5 + 1.5 * u(rng));
    const std::array<double, 3> v0{0.001, 0.001, 0.001};
    const auto vtraj = rk4_integrate<3>(VarianceSystem{cfg}, v0, plan);
    const auto m0 = moments_from_variance(cfg, 0.0, VarianceState::from_array(v0));
    const auto mtraj = rk4_integrate<3>(MomentsSystem{cfg}, m0.as_array(), plan);
    double dev = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < vtraj.times.size(); ++i) {
      dev = std::max(dev, std::abs(vtraj.states[i][0] - mtraj.states[i][0]));
      scale = std::max(scale, std::abs(mtraj.states[i][0]));
    }
    worst_rel = std::max(worst_rel, dev / scale);
  }
  check(worst_rel < 1e-6,
        "moments-vs-variance max relative deviation of V: " + format_double(worst_rel));
  return g_checks_failed == 0;
}

// ---------------------------------------------------------------------------
// 9. Rational-approximant charts: eps-omega sweeps at alpha=1/2 and 8/13
//    (mu=0.5, 41x41) show divergent tongues reaching the small-eps rows near
//    omega = Omega/2 and 3*Omega/4, no tongue near the low edge (the
//    quarter-resonance side), and the two charts' agreement is reported.
bool criterion9() {
  std::vector<GridResult> grids;
  for (const double alpha : {0.5, 8.0 / 13.0}) {
    GridSpec spec;
    spec.plane = GridPlane::EpsilonOmega;
    spec.x_min = 0.0;
    spec.x_max = 0.3;
    spec.nx = 41;
    spec.y_min = 0.3 * kTwoPi;
    spec.y_max = 0.9 * kTwoPi;
    spec.ny = 41;
    spec.fixed = {0.5, kTwoPi, {}, {}, alpha};
    spec.model = ModelKind::MeanFull;
    grids.push_back(sweep(spec, ClassifierPolicy::desk_scale(spec.model), 8));
  }
  for (std::size_t g = 0; g < grids.size(); ++g) {
    const auto& grid = grids[g];
    const auto& spec = grid.spec;
    const double alpha = *spec.fixed.alpha;
    const double cell_y = (spec.y_max - spec.y_min) / (spec.ny - 1);
    // Smallest eps with a divergent cell within 2 omega-cells of the tongue
    // root. The grid cannot see a tongue narrower than its column offset
    // (half-width ~ eps*omega/4 vs up to cell/2), so the onset floor for the
    // base tongue is eps ~ 0.05; require presence from eps <= 0.06 on.
    const auto tongue_onset = [&](double omega_root) {
      for (int ix = 1; ix < spec.nx; ++ix) {
        for (int iy = 0; iy < spec.ny; ++iy) {
          if (grid.at(ix, iy).kind == VerdictKind::Divergent &&
              std::abs(spec.y_at(iy) - omega_root) <= 2.0 * cell_y) {
            return spec.x_at(ix);
          }
        }
      }
      return 1e300;
    };
    const std::string tag = g == 0 ? "alpha=1/2" : "alpha=8/13";
    const double base_onset = tongue_onset(kTwoPi / 2.0);
    check(base_onset <= 0.06, tag + ": tongue rooted at Omega/2 present from eps=" +
                                  format_double(base_onset));
    const double second_root = kTwoPi * (1.0 + alpha) / 2.0;  // 3*Omega/4 for alpha=1/2
    const double second_onset = tongue_onset(second_root);
    check(second_onset <= 0.06, tag + ": tongue rooted at (1+alpha)*Omega/2 = " +
                                    format_double(second_root / kTwoPi) +
                                    "*Omega present from eps=" + format_double(second_onset));
    // nothing in the low-omega band (toward Omega/4) at small eps
    bool low_band_clear = true;
    for (int ix = 0; ix < spec.nx && spec.x_at(ix) <= 0.15; ++ix) {
      for (int iy = 0; iy < spec.ny && spec.y_at(iy) <= 0.4 * kTwoPi; ++iy) {
        low_band_clear = low_band_clear && grid.at(ix, iy).kind != VerdictKind::Divergent;
      }
    }
    check(low_band_clear, tag + ": no tongue toward Omega/4 (omega <= 0.4*Omega, eps <= 0.15)");
    // eps=0 column is entirely stable
    bool base_stable = true;
    for (int iy = 0; iy < spec.ny; ++iy) {
      base_stable = base_stable && grid.at(0, iy).kind == VerdictKind::Stable;
    }
    check(base_stable, tag + ": eps=0 column stable");
  }
  const auto cmp = compare_zones(grids[0], grids[1]);
  context("alpha=1/2 vs alpha=8/13 agreement: " + format_double(cmp.agreement) + " over " +
          std::to_string(cmp.compared) + " cells (reported, no fixed threshold)");
  return g_checks_failed == 0;
}

// ---------------------------------------------------------------------------
// 10. Determinism: every criterion-3 grid rerun with workers=1 and workers=8
//     serializes to byte-identical CSV.
bool criterion10() {
  int identical = 0;
  for (const auto& grid : c3_grids()) {
    const auto serial = sweep(grid.spec, grid.policy, 1);
    identical += grid_csv_string(grid) == grid_csv_string(serial);
  }
  check(identical == static_cast<int>(c3_grids().size()),
        "workers=1 and workers=8 grid CSVs byte-identical for " + std::to_string(identical) +
            "/" + std::to_string(c3_grids().size()) + " criterion-3 grids");
  return g_checks_failed == 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) {
    selected.insert(std::atoi(argv[i]));
  }
  const auto want = [&](int n) { return selected.empty() || selected.count(n) > 0; };

  struct Criterion {
    int number;
    const char* label;
    bool (*run)();
  };
  const std::vector<Criterion> criteria = {
      {1, "slow-flow knife edge (tau=7000, h=0.001)", criterion1},
      {2, "full-equation knife edge (t=5000, h=0.001)", criterion2},
      {3, "mean/variance zone identity on desk-scale grids", criterion3},
      {4, "closed-form boundary match at mu=0.1", criterion4},
      {5, "mu=0 band endpoints at +-1/8", criterion5},
      {6, "no quarter-resonance instability", criterion6},
      {7, "companion-system volume conservation", criterion7},
      {8, "second-moment oracle equivalence", criterion8},
      {9, "rational-approximant chart structure", criterion9},
      {10, "worker-count determinism of criterion-3 grids", criterion10},
  };

  int passed = 0;
  int failed = 0;
  for (const auto& c : criteria) {
    if (!want(c.number)) {
      continue;
    }
    g_checks_failed = 0;
    g_context.clear();
    const CriterionTimer timer;
    const bool ok = c.run();
    std::printf("[criterion %02d] %s  %s  (%.1fs)\n", c.number, ok ? "PASS" : "FAIL", c.label,
                timer.seconds());
    for (const auto& line : g_context) {
      std::printf("%s\n", line.c_str());
    }
    std::fflush(stdout);
    ok ? ++passed : ++failed;
  }
  std::printf("ACCEPTANCE: %d passed, %d failed\n", passed, failed);
  return failed == 0 ? 0 : 1;
}
