#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "bcms/model.hpp"

namespace bcms {

/// Calendar time in years since 2020-01-01; month boundaries are exact
/// twelfths on this axis.
inline double month_to_time(int year, int month) {
  if (year < 2020) throw std::domain_error("year must be >= 2020");
  if (month < 1 || month > 12) throw std::domain_error("month must be in 1..12");
  return (year - 2020) + (month - 1) / 12.0;
}

/// Piecewise-constant multiplier on the other-cause death intensity over a
/// half-open calendar interval, one factor per overlay group.
struct MortalitySegment {
  double begin = 0.0;
  double end = 0.0;
  std::array<double, 2> factor{1.0, 1.0};  // groups 65-84, 85-89
};

/// Piecewise-constant multiplier on the diagnosed-onset intensity mu01.
/// The unobserved component absorbs the complement so the total onset
/// intensity mu* never changes.
struct DiagnosisSegment {
  double begin = 0.0;
  double end = 0.0;
  double factor = 1.0;
};

enum class ScenarioId { PrePandemic, S1, S2 };

inline std::string_view scenario_label(ScenarioId id) {
  switch (id) {
    case ScenarioId::PrePandemic: return "pre";
    case ScenarioId::S1: return "s1";
    case ScenarioId::S2: return "s2";
  }
  return "?";
}

/// A calendar-time overlay: step-function multipliers applied on top of the
/// baseline intensities. Uncovered time uses multiplier 1. Immutable once
/// built; lookups are pure.
class ScenarioOverlay {
 public:
  ScenarioOverlay() : id_("pre") {}

  ScenarioOverlay(std::string id, std::vector<MortalitySegment> mortality,
                  std::vector<DiagnosisSegment> diagnosis)
      : id_(std::move(id)),
        mortality_(std::move(mortality)),
        diagnosis_(std::move(diagnosis)) {
    sort_and_check();
  }

  const std::string& id() const { return id_; }
  const std::vector<MortalitySegment>& mortality_segments() const { return mortality_; }
  const std::vector<DiagnosisSegment>& diagnosis_segments() const { return diagnosis_; }

  double mortality_multiplier(int group, double t) const {
    check_time(t);
    for (const auto& s : mortality_)
      if (s.begin <= t && t < s.end) return s.factor[group];
    return 1.0;
  }

  double diagnosis_multiplier(double t) const {
    check_time(t);
    for (const auto& s : diagnosis_)
      if (s.begin <= t && t < s.end) return s.factor;
    return 1.0;
  }

  /// Exact integral of the mortality multiplier over [0, t] (the step
  /// function integrates to a piecewise-linear ramp).
  double mortality_integral(int group, double t) const {
    check_time(t);
    double covered = 0.0, acc = 0.0;
    for (const auto& s : mortality_) {
      const double lo = std::max(s.begin, 0.0), hi = std::min(s.end, t);
      if (hi > lo) {
        acc += s.factor[group] * (hi - lo);
        covered += hi - lo;
      }
    }
    return acc + (t - covered);
  }

  /// Times where any multiplier changes value; solvers align their grids to
  /// these so no integration step straddles a jump.
  std::vector<double> breakpoints() const {
    std::vector<double> b;
    for (const auto& s : mortality_) {
      b.push_back(s.begin);
      b.push_back(s.end);
    }
    for (const auto& s : diagnosis_) {
      b.push_back(s.begin);
      b.push_back(s.end);
    }
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
  }

 private:
  static void check_time(double t) {
    if (t < 0.0 || !std::isfinite(t))
      throw std::domain_error("calendar time must be non-negative");
  }

  void sort_and_check() {
    auto by_begin = [](const auto& a, const auto& b) { return a.begin < b.begin; };
    std::sort(mortality_.begin(), mortality_.end(), by_begin);
    std::sort(diagnosis_.begin(), diagnosis_.end(), by_begin);
    auto check = [](const auto& segs) {
      double prev_end = 0.0;
      for (const auto& s : segs) {
        if (!(s.end > s.begin)) throw std::domain_error("overlay segment must have end > begin");
        if (s.begin < prev_end) throw std::domain_error("overlay segments overlap");
        prev_end = s.end;
      }
    };
    check(mortality_);
    check(diagnosis_);
    for (const auto& s : mortality_)
      for (double f : s.factor)
        if (!(f > 0.0)) throw std::domain_error("mortality multiplier must be positive");
    for (const auto& s : diagnosis_)
      if (!(s.factor > 0.0)) throw std::domain_error("diagnosis multiplier must be positive");
  }

  std::string id_;
  std::vector<MortalitySegment> mortality_;
  std::vector<DiagnosisSegment> diagnosis_;
};

/// Pandemic mortality schedule shared by S1 and S2. The elevated factors
/// run from April 2020; the first step lasts until the start of November
/// 2021, then decays in annual steps through the end of 2024.
inline std::vector<MortalitySegment> pandemic_mortality_segments() {
  const double apr20 = month_to_time(2020, 4);
  const double nov21 = month_to_time(2021, 11);
  return {
      {apr20, nov21, {1.13, 1.12}},
      {nov21, month_to_time(2023, 1), {1.10, 1.09}},
      {month_to_time(2023, 1), month_to_time(2024, 1), {1.07, 1.06}},
      {month_to_time(2024, 1), month_to_time(2025, 1), {1.04, 1.03}},
  };
}

/// S2's diagnosis dip: mu01 reduced by 20% from April 2020 through the end
/// of December 2020 by default. The window is configurable because the
/// published end point is ambiguous by a month.
inline ScenarioOverlay make_s2_overlay(double window_begin = month_to_time(2020, 4),
                                       double window_end = month_to_time(2021, 1),
                                       double factor = 0.8) {
  return ScenarioOverlay("s2", pandemic_mortality_segments(),
                         {{window_begin, window_end, factor}});
}

inline ScenarioOverlay builtin_overlay(ScenarioId id) {
  switch (id) {
    case ScenarioId::PrePandemic:
      return ScenarioOverlay("pre", {}, {});
    case ScenarioId::S1:
      return ScenarioOverlay("s1", pandemic_mortality_segments(), {});
    case ScenarioId::S2:
      return make_s2_overlay();
  }
  throw std::domain_error("unknown scenario id");
}

inline ScenarioOverlay builtin_overlay(std::string_view name) {
  if (name == "pre") return builtin_overlay(ScenarioId::PrePandemic);
  if (name == "s1") return builtin_overlay(ScenarioId::S1);
  if (name == "s2") return builtin_overlay(ScenarioId::S2);
  throw std::domain_error("unknown scenario: " + std::string(name));
}

}  // namespace bcms
