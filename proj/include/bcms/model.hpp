#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bcms {

/// States of the six-state progression model.
///
/// Women start free of cancer (NoCancer) or with a diagnosis (one of the
/// observed states). Pre-metastatic disease may be observed (diagnosed,
/// treated) or unobserved (undiagnosed, untreated); metastatic disease is
/// always observed. Death states are absorbing, and death from the cancer
/// is reachable only through the metastatic state.
enum class State : int {
  NoCancer = 0,
  PreMetObserved = 1,
  PreMetUnobserved = 2,
  MetObserved = 3,
  DeadOther = 4,
  DeadCancer = 5,
};

inline constexpr int kNumStates = 6;

constexpr bool is_absorbing(State s) {
  return s == State::DeadOther || s == State::DeadCancer;
}

/// Directed edges of the model graph. Everything else is forbidden.
constexpr bool is_edge(State from, State to) {
  const int i = static_cast<int>(from), j = static_cast<int>(to);
  switch (i) {
    case 0: return j == 1 || j == 2 || j == 4;
    case 1: return j == 3 || j == 4;
    case 2: return j == 3 || j == 4;
    case 3: return j == 4 || j == 5;
    default: return false;
  }
}

inline std::string_view state_name(State s) {
  switch (s) {
    case State::NoCancer: return "no_cancer";
    case State::PreMetObserved: return "premet_observed";
    case State::PreMetUnobserved: return "premet_unobserved";
    case State::MetObserved: return "met_observed";
    case State::DeadOther: return "dead_other";
    case State::DeadCancer: return "dead_cancer";
  }
  return "?";
}

/// Five-year age bands 65-69 .. 85-89. Intensities are held constant over
/// each band for the whole projection window; a cohort never moves across
/// bands during a solve.
enum class AgeBand : int { A65_69 = 0, A70_74, A75_79, A80_84, A85_89 };

inline constexpr int kNumBands = 5;

inline constexpr std::array<AgeBand, kNumBands> all_bands() {
  return {AgeBand::A65_69, AgeBand::A70_74, AgeBand::A75_79, AgeBand::A80_84,
          AgeBand::A85_89};
}

inline std::string_view band_label(AgeBand b) {
  constexpr std::string_view labels[] = {"65-69", "70-74", "75-79", "80-84",
                                         "85-89"};
  return labels[static_cast<int>(b)];
}

inline AgeBand band_from_label(std::string_view label) {
  for (AgeBand b : all_bands())
    if (band_label(b) == label) return b;
  throw std::domain_error("unknown age band: " + std::string(label));
}

/// Overlay group for pandemic mortality multipliers: 0 covers 65-84,
/// 1 covers 85-89.
constexpr int overlay_group(AgeBand b) {
  return b == AgeBand::A85_89 ? 1 : 0;
}

/// Baseline transition intensities per age band, in events per person-year.
/// dead_other is shared by every live state (mu14 = mu24 = mu34 = mu04).
struct IntensityRow {
  double onset_observed;  // mu01: onset immediately diagnosed
  double dead_other;      // mu04: death from other causes, any live state
  double cancer_death;    // mu35: death from the cancer, metastatic state
};

struct IntensityTable {
  std::array<IntensityRow, kNumBands> rows;

  const IntensityRow& row(AgeBand b) const { return rows[static_cast<int>(b)]; }

  void validate() const {
    for (const auto& r : rows) {
      for (double v : {r.onset_observed, r.dead_other, r.cancer_death})
        if (!(v > 0.0) || !std::isfinite(v))
          throw std::domain_error("intensity table entries must be positive and finite");
    }
  }
};

/// Built-in calibration of the baseline intensities.
inline IntensityTable baseline_intensities() {
  return IntensityTable{{{
      {0.00333, 0.00878, 0.28060},
      {0.00286, 0.01521, 0.36002},
      {0.00324, 0.02693, 0.40000},
      {0.00355, 0.05142, 0.49711},
      {0.00377, 0.09684, 0.50000},
  }}};
}

enum class ModelKind { Markov, SemiMarkov };

inline std::string_view kind_label(ModelKind k) {
  return k == ModelKind::Markov ? "markov" : "semimarkov";
}

/// Constant hazard used when duration dependence is switched off
/// (average rate of first distant metastasis).
inline constexpr double kConstantMetastasisRate = 0.01954;

/// Hazard of progression to metastatic disease as a function of duration z
/// (years since entering the pre-metastatic state).
///
/// The polynomial form is valid on [0, 10] only: evaluations beyond z = 10
/// are clamped to the z = 10 value and negative evaluations are floored at
/// zero. cumulative() integrates the raw polynomial exactly (degree-5
/// antiderivative); the built-in polynomial is strictly positive in-domain,
/// which construction verifies, so flooring never changes the integral.
class DurationHazard {
 public:
  static constexpr double kMaxDuration = 10.0;

  static DurationHazard constant(double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate))
      throw std::domain_error("constant duration hazard must be positive");
    DurationHazard h;
    h.constant_rate_ = rate;
    return h;
  }

  static DurationHazard polynomial(const std::array<double, 5>& coeffs) {
    DurationHazard h;
    h.coeffs_ = coeffs;
    h.is_constant_ = false;
    // in-domain positivity scan; cumulative() relies on it
    for (double z = 0.0; z <= kMaxDuration; z += 1e-3)
      if (h.raw(z) < -1e-12)
        throw std::domain_error("duration polynomial is negative inside [0,10]");
    return h;
  }

  bool is_constant() const { return is_constant_; }

  double rate(double z) const {
    if (z < 0.0) throw std::domain_error("duration must be non-negative");
    if (is_constant_) return constant_rate_;
    return std::max(raw(std::min(z, kMaxDuration)), 0.0);
  }

  /// Exact integral of the hazard over [0, w]; rate is held at its z = 10
  /// value beyond the polynomial domain.
  double cumulative(double w) const {
    if (w < 0.0) throw std::domain_error("duration must be non-negative");
    if (is_constant_) return constant_rate_ * w;
    const double v = std::min(w, kMaxDuration);
    const auto& c = coeffs_;
    double acc = v * (c[0] + v * (c[1] / 2 + v * (c[2] / 3 + v * (c[3] / 4 + v * c[4] / 5))));
    if (w > kMaxDuration) acc += (w - kMaxDuration) * rate(kMaxDuration);
    return acc;
  }

  /// Largest hazard value on the duration domain (1e-3 grid scan); the
  /// Monte Carlo thinning bound is built from this.
  double max_rate() const {
    if (is_constant_) return constant_rate_;
    double m = 0.0;
    for (double z = 0.0; z <= kMaxDuration; z += 1e-3) m = std::max(m, rate(z));
    return m;
  }

 private:
  DurationHazard() = default;
  double raw(double z) const {
    const auto& c = coeffs_;
    return c[0] + z * (c[1] + z * (c[2] + z * (c[3] + z * c[4])));
  }

  bool is_constant_ = true;
  double constant_rate_ = kConstantMetastasisRate;
  std::array<double, 5> coeffs_{};
};

/// Duration-dependent metastasis hazard fitted to published progression
/// rates (see duration_rate_points()).
inline DurationHazard metastasis_duration_hazard() {
  return DurationHazard::polynomial(
      {0.00088644, 0.04191138, -0.01574062, 0.00207282, -0.00008998});
}

/// Observed rates of progression to metastatic disease by duration in the
/// treated state, the data behind the degree-4 polynomial.
struct DurationRatePoint {
  double duration;
  double rate;
};

inline std::array<DurationRatePoint, 9> duration_rate_points() {
  return {{{0, 0.0}, {1, 0.03}, {2, 0.04}, {3, 0.03}, {4, 0.024},
           {5, 0.021}, {6, 0.02}, {8, 0.0194}, {10, 0.0194}}};
}

/// Split of the total onset intensity mu* into observed and unobserved
/// components. mu_star + 0 == onset_observed + onset_unobserved exactly.
struct OnsetSplit {
  double mu_star;          // total onset, scenario-invariant
  double onset_unobserved; // mu02
};

/// alpha is the fraction of onset that is immediately diagnosed; the
/// unobserved component absorbs the complement so that the total is exact.
inline OnsetSplit onset_decomposition(double alpha, double mu01) {
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw std::domain_error("alpha must lie strictly inside (0,1)");
  if (!(mu01 > 0.0) || !std::isfinite(mu01))
    throw std::domain_error("mu01 must be positive and finite");
  // building mu* as the sum makes the decomposition identity exact in
  // floating point, not just to rounding
  const double unobserved = mu01 * (1.0 - alpha) / alpha;
  return {mu01 + unobserved, unobserved};
}

/// Full parameterisation of one model variant.
struct ParameterSet {
  std::string id = "baseline";
  double alpha = 0.6;        // diagnosed fraction of onset, in (0,1)
  double beta = 1.0 / 7.0;   // treated/untreated progression ratio, in (0,1)
  double mu35_scale = 1.0;   // multiplier on the metastatic death rate
  ModelKind kind = ModelKind::SemiMarkov;
  IntensityTable table = baseline_intensities();

  void validate() const {
    if (!(alpha > 0.0) || !(alpha < 1.0))
      throw std::domain_error("alpha must lie strictly inside (0,1)");
    if (!(beta > 0.0) || !(beta < 1.0))
      throw std::domain_error("beta must lie strictly inside (0,1)");
    if (!(mu35_scale > 0.0) || !std::isfinite(mu35_scale))
      throw std::domain_error("mu35_scale must be positive");
    table.validate();
  }

  ParameterSet with_kind(ModelKind k) const {
    ParameterSet p = *this;
    p.kind = k;
    return p;
  }

  /// Hazard of the 1 -> 3 transition as a function of duration; the
  /// untreated 2 -> 3 hazard is this divided by beta.
  DurationHazard metastasis_hazard() const {
    return kind == ModelKind::Markov
               ? DurationHazard::constant(kConstantMetastasisRate)
               : metastasis_duration_hazard();
  }
};

/// Parameter variants exercised by the sensitivity sweep; ids match the
/// param_set keys of the embedded reference tables.
inline std::vector<ParameterSet> sensitivity_parameter_sets() {
  std::vector<ParameterSet> sets;
  auto add = [&](std::string id, double a, double b, double s) {
    ParameterSet p;
    p.id = std::move(id);
    p.alpha = a;
    p.beta = b;
    p.mu35_scale = s;
    sets.push_back(std::move(p));
  };
  add("baseline", 0.6, 1.0 / 7.0, 1.0);
  add("alpha08", 0.8, 1.0 / 7.0, 1.0);
  add("alpha04", 0.4, 1.0 / 7.0, 1.0);
  add("beta5", 0.6, 1.0 / 5.0, 1.0);
  add("beta10", 0.6, 1.0 / 10.0, 1.0);
  add("mu35lo", 0.6, 1.0 / 7.0, 0.8);
  add("mu35hi", 0.6, 1.0 / 7.0, 1.2);
  return sets;
}

/// Residual life expectancy e_x by age band, used to convert excess deaths
/// into years of life lost.
struct LifeTable {
  std::array<double, kNumBands> expectancy;

  double years_remaining(AgeBand b) const {
    return expectancy[static_cast<int>(b)];
  }
};

inline LifeTable standard_life_table() {
  return LifeTable{{19.31, 15.31, 11.63, 8.44, 5.84}};
}

}  // namespace bcms
