#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <future>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bcms/model.hpp"
#include "bcms/occupancy.hpp"
#include "bcms/scenario.hpp"
#include "bcms/solver.hpp"

namespace bcms {

/// Net cancer survival at horizon t, in percent: survivors divided by those
/// not removed by other causes, (1 - p_i4 - p_i5) / (1 - p_i4). Treats the
/// cancer as the only cause of death without re-solving the model.
inline double ons_survival(const OccupancyCurve& curve, double horizon) {
  if (curve.start == State::NoCancer || is_absorbing(curve.start))
    throw std::domain_error("net survival needs a disease start state");
  const auto& p = curve.at(horizon);
  const double p4 = p[static_cast<int>(State::DeadOther)];
  const double p5 = p[static_cast<int>(State::DeadCancer)];
  const double denom = 1.0 - p4;
  if (!(denom > 1e-12))
    throw std::runtime_error("net survival undefined: everyone dead from other causes");
  return 100.0 * (1.0 - p4 - p5) / denom;
}

/// Adjusted cancer survival: re-solves with the other-cause death
/// intensities from the disease states set to zero, so the cancer is the
/// only exit; returns 100 * (1 - p_i5(t)).
inline double adjusted_survival(State start, AgeBand band, const ParameterSet& params,
                                const ScenarioOverlay& scenario, const GridConfig& cfg,
                                double horizon) {
  if (horizon == 0.0) return 100.0;
  SolveOptions opts;
  opts.zero_dead_other_after_onset = true;
  const OccupancyCurve curve =
      solve(start, band, params, scenario, cfg.with_horizon(horizon), opts);
  return 100.0 * (1.0 - curve.probability(State::DeadCancer, horizon));
}

/// Excess deaths per 100,000 from the given cause at horizon t: the
/// scenario-minus-baseline difference of the death-state occupancy.
/// Returned unrounded; display rounding happens at the reporting edge.
inline double excess_deaths(const OccupancyCurve& baseline, const OccupancyCurve& scenario,
                            State cause, double horizon = 5.0) {
  if (cause != State::DeadOther && cause != State::DeadCancer)
    throw std::domain_error("cause must be a death state");
  if (baseline.start != State::NoCancer || scenario.start != State::NoCancer)
    throw std::domain_error("excess deaths are defined from the cancer-free state");
  if (baseline.band != scenario.band || baseline.kind != scenario.kind)
    throw std::domain_error("curves must share band and model kind");
  return 1e5 * (scenario.probability(cause, horizon) - baseline.probability(cause, horizon));
}

/// Years of life lost per 100,000: unrounded excess deaths times the
/// residual life expectancy of the band.
inline double years_of_life_lost(double excess_unrounded, AgeBand band,
                                 const LifeTable& life = standard_life_table()) {
  return excess_unrounded * life.years_remaining(band);
}

/// All-age total: sum of band-level YLL (band-aligned excess values).
inline double total_years_of_life_lost(std::span<const double> excess_by_band,
                                       const LifeTable& life = standard_life_table()) {
  if (excess_by_band.size() != kNumBands)
    throw std::domain_error("expected one excess value per band");
  double total = 0.0;
  for (int b = 0; b < kNumBands; ++b)
    total += excess_by_band[b] * life.expectancy[b];
  return total;
}

/// Unweighted least-squares polynomial fit, coefficients lowest order
/// first. Degrees follow the published comparison set.
inline std::vector<double> fit_duration_polynomial(std::span<const DurationRatePoint> points,
                                                   int degree) {
  if (degree != 3 && degree != 4 && degree != 6 && degree != 7)
    throw std::domain_error("supported fit degrees are 3, 4, 6 and 7");
  if (points.size() < static_cast<std::size_t>(degree) + 1)
    throw std::domain_error("underdetermined fit: need at least degree+1 points");
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd vandermonde(n, degree + 1);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double pow = 1.0;
    for (int k = 0; k <= degree; ++k) {
      vandermonde(i, k) = pow;
      pow *= points[static_cast<std::size_t>(i)].duration;
    }
    y(i) = points[static_cast<std::size_t>(i)].rate;
  }
  const Eigen::VectorXd c = vandermonde.colPivHouseholderQr().solve(y);
  return {c.data(), c.data() + c.size()};
}

inline double polynomial_value(std::span<const double> coeffs, double z) {
  double acc = 0.0;
  for (std::size_t k = coeffs.size(); k-- > 0;) acc = acc * z + coeffs[k];
  return acc;
}

inline double fit_rmse(std::span<const double> coeffs,
                       std::span<const DurationRatePoint> points) {
  double ss = 0.0;
  for (const auto& p : points) {
    const double e = polynomial_value(coeffs, p.duration) - p.rate;
    ss += e * e;
  }
  return std::sqrt(ss / static_cast<double>(points.size()));
}

// ---------------------------------------------------------------------------
// Sensitivity sweep
// ---------------------------------------------------------------------------

struct OccupancyRow {
  std::string param_set;
  std::string scenario;
  ModelKind kind = ModelKind::Markov;
  AgeBand band = AgeBand::A65_69;
  State start = State::NoCancer;
  double horizon = 5.0;
  std::array<double, kNumStates> prob{};
  bool failed = false;
  std::string error;
};

struct SurvivalRow {
  std::string param_set;
  std::string scenario;
  std::string method;  // "ons" or "adjusted"
  ModelKind kind = ModelKind::Markov;
  AgeBand band = AgeBand::A65_69;
  State start = State::PreMetObserved;
  double horizon = 5.0;
  double survival_pct = 0.0;
  bool failed = false;
  std::string error;
};

struct ExcessRow {
  std::string param_set;
  std::string scenario;
  ModelKind kind = ModelKind::Markov;
  AgeBand band = AgeBand::A65_69;
  State cause = State::DeadOther;
  double excess_per_100k = 0.0;  // unrounded
  double yll_per_100k = 0.0;     // unrounded
  bool failed = false;
  std::string error;
};

struct OutcomeReport {
  std::vector<OccupancyRow> occupancy;
  std::vector<SurvivalRow> survival;
  std::vector<ExcessRow> excess;

  void append(OutcomeReport&& other) {
    occupancy.insert(occupancy.end(), other.occupancy.begin(), other.occupancy.end());
    survival.insert(survival.end(), other.survival.begin(), other.survival.end());
    excess.insert(excess.end(), other.excess.begin(), other.excess.end());
  }
};

struct SweepRequest {
  std::vector<ParameterSet> parameter_sets;
  std::vector<ScenarioOverlay> scenarios;
  std::vector<AgeBand> bands;
  std::vector<ModelKind> kinds{ModelKind::Markov, ModelKind::SemiMarkov};
  std::vector<double> occupancy_horizons{1.0, 5.0};
  std::vector<double> survival_horizons{1.0, 5.0, 10.0};
  GridConfig grid{};
  bool with_survival = true;
  bool with_excess = true;
};

namespace detail {

inline OutcomeReport sweep_cell(const ParameterSet& base, const ScenarioOverlay& scenario,
                                ModelKind kind, const SweepRequest& req) {
  OutcomeReport rep;
  const ParameterSet params = base.with_kind(kind);
  const double occ_horizon =
      *std::max_element(req.occupancy_horizons.begin(), req.occupancy_horizons.end());
  const double surv_horizon =
      req.with_survival
          ? *std::max_element(req.survival_horizons.begin(), req.survival_horizons.end())
          : occ_horizon;

  for (AgeBand band : req.bands) {
    // occupancy from the cancer-free and disease start states
    for (State start : {State::NoCancer, State::PreMetObserved, State::MetObserved}) {
      OccupancyRow row;
      row.param_set = base.id;
      row.scenario = scenario.id();
      row.kind = kind;
      row.band = band;
      row.start = start;
      try {
        const OccupancyCurve curve =
            solve(start, band, params, scenario, req.grid.with_horizon(occ_horizon));
        for (double h : req.occupancy_horizons) {
          row.horizon = h;
          row.prob = curve.at(h);
          rep.occupancy.push_back(row);
        }
      } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
        rep.occupancy.push_back(row);
      }
    }
    if (req.with_survival) {
      for (State start :
           {State::PreMetObserved, State::PreMetUnobserved, State::MetObserved}) {
        SurvivalRow row;
        row.param_set = base.id;
        row.scenario = scenario.id();
        row.kind = kind;
        row.band = band;
        row.start = start;
        try {
          const OccupancyCurve curve =
              solve(start, band, params, scenario, req.grid.with_horizon(surv_horizon));
          SolveOptions adj;
          adj.zero_dead_other_after_onset = true;
          const OccupancyCurve curve_adj =
              solve(start, band, params, scenario, req.grid.with_horizon(surv_horizon), adj);
          for (double h : req.survival_horizons) {
            row.horizon = h;
            row.method = "ons";
            row.survival_pct = ons_survival(curve, h);
            rep.survival.push_back(row);
            row.method = "adjusted";
            row.survival_pct = 100.0 * (1.0 - curve_adj.probability(State::DeadCancer, h));
            rep.survival.push_back(row);
          }
        } catch (const std::exception& e) {
          row.failed = true;
          row.error = e.what();
          rep.survival.push_back(row);
        }
      }
    }
    if (req.with_excess) {
      ExcessRow row;
      row.param_set = base.id;
      row.scenario = scenario.id();
      row.kind = kind;
      row.band = band;
      try {
        const ScenarioOverlay baseline = builtin_overlay(ScenarioId::PrePandemic);
        const OccupancyCurve pre =
            solve(State::NoCancer, band, params, baseline, req.grid.with_horizon(5.0));
        const OccupancyCurve scn =
            solve(State::NoCancer, band, params, scenario, req.grid.with_horizon(5.0));
        for (State cause : {State::DeadOther, State::DeadCancer}) {
          row.cause = cause;
          row.excess_per_100k = excess_deaths(pre, scn, cause, 5.0);
          row.yll_per_100k = years_of_life_lost(row.excess_per_100k, band);
          rep.excess.push_back(row);
        }
      } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
        rep.excess.push_back(row);
      }
    }
  }
  return rep;
}

}  // namespace detail

/// Full cross-product sweep. Cells are independent pure solves, run
/// concurrently per (parameter set, scenario, kind) and merged in a fixed
/// order; a failing cell yields a flagged row instead of aborting.
inline OutcomeReport sensitivity_sweep(const SweepRequest& req) {
  if (req.parameter_sets.empty()) throw std::domain_error("sweep needs parameter sets");
  std::vector<std::future<OutcomeReport>> jobs;
  for (const auto& pset : req.parameter_sets)
    for (const auto& scenario : req.scenarios)
      for (ModelKind kind : req.kinds)
        jobs.push_back(std::async(std::launch::async, [&pset, &scenario, kind, &req] {
          return detail::sweep_cell(pset, scenario, kind, req);
        }));
  OutcomeReport report;
  for (auto& job : jobs) report.append(job.get());
  return report;
}

}  // namespace bcms
