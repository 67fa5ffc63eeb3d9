#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "bcms/grid.hpp"
#include "bcms/model.hpp"
#include "bcms/occupancy.hpp"
#include "bcms/scenario.hpp"

namespace bcms {

struct SolveOptions {
  /// Zero the other-cause death intensities from the disease states
  /// (mu14, mu24, mu34), leaving mu04 untouched. Used by the adjusted
  /// survival measure; only meaningful for start states 1-3.
  bool zero_dead_other_after_onset = false;
};

namespace detail {

/// Rates of one (band, parameter set) combination with the scenario overlay
/// attached. Scenario multipliers are looked up per calendar time.
struct Rates {
  double mu_star = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double mu04 = 0.0;
  double mu35 = 0.0;
  int group = 0;
  DurationHazard hazard13 = DurationHazard::constant(kConstantMetastasisRate);
  const ScenarioOverlay* overlay = nullptr;

  static Rates resolve(AgeBand band, const ParameterSet& params,
                       const ScenarioOverlay& scenario) {
    params.validate();
    const IntensityRow& row = params.table.row(band);
    Rates r;
    r.mu_star = onset_decomposition(params.alpha, row.onset_observed).mu_star;
    r.alpha = params.alpha;
    r.beta = params.beta;
    r.mu04 = row.dead_other;
    r.mu35 = row.cancer_death * params.mu35_scale;
    r.group = overlay_group(band);
    r.hazard13 = params.metastasis_hazard();
    r.overlay = &scenario;
    if (!std::isfinite(r.mu_star) || !std::isfinite(r.mu35))
      throw std::runtime_error("non-finite transition intensity");
    return r;
  }

  double mortality_multiplier(double t) const {
    return overlay->mortality_multiplier(group, t);
  }
  double diagnosis_multiplier(double t) const {
    return overlay->diagnosis_multiplier(t);
  }
  double mortality_integral(double t) const {
    return overlay->mortality_integral(group, t);
  }
};

using StateVector = std::array<double, kNumStates>;

/// One classic RK4 step of the forward equations over [t, t+h]. The overlay
/// multipliers are constant across the step (the grid never lets a step
/// straddle a segment boundary), so they are sampled once at the step
/// midpoint; the duration hazard is genuinely time-varying and is evaluated
/// at the stage times.
inline void rk4_step(StateVector& p, double t, double h, const Rates& r,
                     bool dead_other_from_disease) {
  const double m = r.mu04 * r.mortality_multiplier(t + 0.5 * h);
  const double mu01 = r.alpha * r.diagnosis_multiplier(t + 0.5 * h) * r.mu_star;
  const double mu02 = r.mu_star - mu01;
  const double md = dead_other_from_disease ? m : 0.0;

  auto deriv = [&](double s, const StateVector& q, StateVector& dq) {
    const double h13 = r.hazard13.rate(s);
    const double h23 = h13 / r.beta;
    dq[0] = -(r.mu_star + m) * q[0];
    dq[1] = mu01 * q[0] - (h13 + md) * q[1];
    dq[2] = mu02 * q[0] - (h23 + md) * q[2];
    dq[3] = h13 * q[1] + h23 * q[2] - (md + r.mu35) * q[3];
    dq[4] = m * q[0] + md * (q[1] + q[2] + q[3]);
    dq[5] = r.mu35 * q[3];
  };

  StateVector k1, k2, k3, k4, q;
  deriv(t, p, k1);
  for (int i = 0; i < kNumStates; ++i) q[i] = p[i] + 0.5 * h * k1[i];
  deriv(t + 0.5 * h, q, k2);
  for (int i = 0; i < kNumStates; ++i) q[i] = p[i] + 0.5 * h * k2[i];
  deriv(t + 0.5 * h, q, k3);
  for (int i = 0; i < kNumStates; ++i) q[i] = p[i] + h * k3[i];
  deriv(t + h, q, k4);
  for (int i = 0; i < kNumStates; ++i)
    p[i] += h / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
}

inline OccupancyCurve rk4_solve(State start, AgeBand band, const ParameterSet& params,
                                const ScenarioOverlay& scenario, const TimeGrid& grid,
                                SolveOptions opts) {
  if (is_absorbing(start))
    throw std::domain_error("start state must not be absorbing");
  if (opts.zero_dead_other_after_onset && start == State::NoCancer)
    throw std::domain_error("adjusted solve requires a disease start state");
  const Rates r = Rates::resolve(band, params, scenario);

  OccupancyCurve curve;
  curve.start = start;
  curve.band = band;
  curve.scenario_id = scenario.id();
  curve.kind = params.kind;
  curve.times = grid.times();
  curve.prob.resize(grid.size());

  StateVector p{};
  p[static_cast<int>(start)] = 1.0;
  curve.prob[0] = p;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    rk4_step(p, grid.time(i), grid.time(i + 1) - grid.time(i), r,
             !opts.zero_dead_other_after_onset);
    curve.prob[i + 1] = p;
  }

  // independent survival check for select starts: the occupied-state
  // probability has an exact antiderivative form
  if (start == State::PreMetObserved || start == State::PreMetUnobserved) {
    const int s = static_cast<int>(start);
    const double T = grid.time(grid.size() - 1);
    const double hh = r.hazard13.cumulative(T) / (s == 2 ? r.beta : 1.0);
    const double m_int = opts.zero_dead_other_after_onset
                             ? 0.0
                             : r.mu04 * r.mortality_integral(T);
    const double exact = std::exp(-hh - m_int);
    if (std::abs(curve.prob.back()[s] - exact) > 1e-6)
      throw std::runtime_error("select survival check failed: step too coarse");
  }
  return curve;
}

}  // namespace detail

/// Forward-equation solve when every intensity is duration-free: classic
/// RK4 on the linear system with scenario-varying coefficients.
inline OccupancyCurve solve_markov(State start, AgeBand band, const ParameterSet& params,
                                   const ScenarioOverlay& scenario, const TimeGrid& grid,
                                   SolveOptions opts = {}) {
  if (params.kind != ModelKind::Markov)
    throw std::domain_error("solve_markov requires the Markov model kind");
  return detail::rk4_solve(start, band, params, scenario, grid, opts);
}

inline OccupancyCurve solve_markov(State start, AgeBand band, const ParameterSet& params,
                                   const ScenarioOverlay& scenario, const GridConfig& cfg,
                                   SolveOptions opts = {}) {
  return solve_markov(start, band, params, scenario,
                      TimeGrid::build(cfg, scenario.breakpoints()), opts);
}

/// Select solve from a pre-metastatic state with duration zero at t = 0:
/// duration and elapsed time coincide, so the system is an ordinary ODE in
/// t with the duration hazard evaluated at z = t.
inline OccupancyCurve solve_semimarkov_select(State start, AgeBand band,
                                              const ParameterSet& params,
                                              const ScenarioOverlay& scenario,
                                              const TimeGrid& grid, SolveOptions opts = {}) {
  if (start != State::PreMetObserved && start != State::PreMetUnobserved)
    throw std::domain_error("select solve starts from state 1 or 2");
  return detail::rk4_solve(start, band, params, scenario, grid, opts);
}

inline OccupancyCurve solve_semimarkov_select(State start, AgeBand band,
                                              const ParameterSet& params,
                                              const ScenarioOverlay& scenario,
                                              const GridConfig& cfg, SolveOptions opts = {}) {
  return solve_semimarkov_select(start, band, params, scenario,
                                 TimeGrid::build(cfg, scenario.breakpoints()), opts);
}

/// Semi-Markov solve from the cancer-free state.
///
/// Instead of discretising the integro-differential system directly, each
/// entrant cohort carries an exact duration-survival factor:
///
///   p01(t) = integral over u in [0,t] of p00(u) mu01(u) S1(u, t-u) du
///
/// with S1(u, w) = exp(-I13(w)) * H(u+w)/H(u), where I13 is the exact
/// antiderivative of the duration hazard and H(t) = exp(-mu04 * M(t)) with
/// M the exact integral of the mortality multiplier. The same structure
/// yields the unobserved route and the arrival density into the metastatic
/// state; metastatic exits are duration-free, so exponential kernels close
/// the system and the final death split needs no duration tracking. Outer
/// integrals use the configured quadrature, applied piece by piece so
/// diagnosis-multiplier jumps never sit inside a panel.
inline OccupancyCurve solve_semimarkov_from_onset(AgeBand band, const ParameterSet& params,
                                                  const ScenarioOverlay& scenario,
                                                  const TimeGrid& grid,
                                                  SolveOptions opts = {}) {
  if (opts.zero_dead_other_after_onset)
    throw std::domain_error("adjusted solve requires a disease start state");
  const detail::Rates r = detail::Rates::resolve(band, params, scenario);
  const std::size_t n_pts = grid.size();
  const double beta = r.beta;

  std::vector<double> t(n_pts), mort_int(n_pts), decay(n_pts), surv_h(n_pts), g3(n_pts);
  for (std::size_t i = 0; i < n_pts; ++i) {
    t[i] = grid.time(i);
    mort_int[i] = r.mu04 * r.mortality_integral(t[i]);
    decay[i] = std::exp(-r.mu_star * t[i]);          // p00 / H
    surv_h[i] = std::exp(-mort_int[i]);              // H: other-cause survival factor
    g3[i] = std::exp(-r.mu35 * t[i] - mort_int[i]);  // metastatic-state kernel
  }

  // per-piece diagnosis multiplier; constant inside a piece by construction
  std::vector<double> mu01_piece(grid.piece_count());
  for (std::size_t p = 0; p < grid.piece_count(); ++p)
    mu01_piece[p] = r.alpha * r.diagnosis_multiplier(grid.piece_midpoint(p)) * r.mu_star;

  // f1/f2: entrant-cohort kernels for the treated/untreated routes;
  // a1/a2: the same kernels weighted by the exit hazard into metastasis
  std::vector<double> p01(n_pts, 0.0), p02(n_pts, 0.0), arrival(n_pts, 0.0);
  std::vector<double> f1(n_pts), f2(n_pts), a1(n_pts), a2(n_pts);
  for (std::size_t n = 1; n < n_pts; ++n) {
    for (std::size_t j = 0; j <= n; ++j) {
      const double w = t[n] - t[j];
      const double cum = r.hazard13.cumulative(w);
      const double h13 = r.hazard13.rate(w);
      f1[j] = decay[j] * std::exp(-cum);
      f2[j] = decay[j] * std::exp(-cum / beta);
      a1[j] = f1[j] * h13;
      a2[j] = f2[j] * h13 / beta;
    }
    double occ1 = 0.0, occ2 = 0.0, arr = 0.0;
    for (std::size_t p = 0; p < grid.piece_count(); ++p) {
      const std::size_t lo = grid.piece_begin(p);
      if (lo >= n) break;
      const std::size_t hi = std::min(grid.piece_end(p), n);
      const double mu01 = mu01_piece[p];
      const double mu02 = r.mu_star - mu01;
      occ1 += mu01 * grid.integrate_run(f1, lo, hi);
      occ2 += mu02 * grid.integrate_run(f2, lo, hi);
      arr += mu01 * grid.integrate_run(a1, lo, hi) +
             mu02 * grid.integrate_run(a2, lo, hi);
      if (hi == n) break;
    }
    p01[n] = surv_h[n] * occ1;
    p02[n] = surv_h[n] * occ2;
    arrival[n] = surv_h[n] * arr;
  }

  // metastatic occupancy and cancer deaths through exponential kernels
  std::vector<double> q(n_pts, 0.0), p03(n_pts, 0.0), p05(n_pts, 0.0);
  for (std::size_t i = 0; i < n_pts; ++i) q[i] = arrival[i] / g3[i];
  for (std::size_t n = 1; n < n_pts; ++n) p03[n] = g3[n] * grid.integrate_prefix(q, n);
  for (std::size_t n = 1; n < n_pts; ++n) p05[n] = r.mu35 * grid.integrate_prefix(p03, n);

  OccupancyCurve curve;
  curve.start = State::NoCancer;
  curve.band = band;
  curve.scenario_id = scenario.id();
  curve.kind = params.kind;
  curve.times = grid.times();
  curve.prob.resize(n_pts);
  for (std::size_t i = 0; i < n_pts; ++i) {
    const double p00 = decay[i] * surv_h[i];
    const double p04 = 1.0 - p00 - p01[i] - p02[i] - p03[i] - p05[i];
    curve.prob[i] = {p00, p01[i], p02[i], p03[i], p04, p05[i]};
  }
  return curve;
}

inline OccupancyCurve solve_semimarkov_from_onset(AgeBand band, const ParameterSet& params,
                                                  const ScenarioOverlay& scenario,
                                                  const GridConfig& cfg,
                                                  SolveOptions opts = {}) {
  return solve_semimarkov_from_onset(band, params, scenario,
                                     TimeGrid::build(cfg, scenario.breakpoints()), opts);
}

/// Dispatch on model kind and start state.
inline OccupancyCurve solve(State start, AgeBand band, const ParameterSet& params,
                            const ScenarioOverlay& scenario, const TimeGrid& grid,
                            SolveOptions opts = {}) {
  if (is_absorbing(start))
    throw std::domain_error("start state must not be absorbing");
  if (params.kind == ModelKind::Markov)
    return solve_markov(start, band, params, scenario, grid, opts);
  switch (start) {
    case State::NoCancer:
      return solve_semimarkov_from_onset(band, params, scenario, grid, opts);
    case State::PreMetObserved:
    case State::PreMetUnobserved:
      return solve_semimarkov_select(start, band, params, scenario, grid, opts);
    default:
      // metastatic exits carry no duration dependence
      return detail::rk4_solve(start, band, params, scenario, grid, opts);
  }
}

inline OccupancyCurve solve(State start, AgeBand band, const ParameterSet& params,
                            const ScenarioOverlay& scenario, const GridConfig& cfg,
                            SolveOptions opts = {}) {
  return solve(start, band, params, scenario,
               TimeGrid::build(cfg, scenario.breakpoints()), opts);
}

}  // namespace bcms
