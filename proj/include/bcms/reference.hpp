#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bcms/model.hpp"
#include "bcms/outcomes.hpp"
#include "bcms/scenario.hpp"
#include "bcms/solver.hpp"

// CSV text of data/reference_tables.csv, embedded at build time.
#include "bcms_reference_csv.hpp"

namespace bcms {

/// One reference value: a published estimate this build must reproduce
/// within its tolerance. Occupancy and survival quantities are percentages;
/// excess and YLL quantities are counts per 100,000.
struct ReferenceCell {
  std::string table;
  std::string param_set;
  std::string scenario;
  ModelKind kind = ModelKind::Markov;
  AgeBand band = AgeBand::A65_69;
  State start = State::NoCancer;
  std::string quantity;
  double horizon = 5.0;
  double value = 0.0;
};

inline std::vector<ReferenceCell> load_reference_cells(std::string_view csv = kReferenceTablesCsv) {
  std::vector<ReferenceCell> cells;
  std::istringstream in{std::string(csv)};
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    ReferenceCell c;
    std::getline(row, c.table, ',');
    std::getline(row, c.param_set, ',');
    std::getline(row, c.scenario, ',');
    std::getline(row, field, ',');
    c.kind = field == "m" ? ModelKind::Markov : ModelKind::SemiMarkov;
    std::getline(row, field, ',');
    c.band = band_from_label(field);
    std::getline(row, field, ',');
    c.start = static_cast<State>(std::stoi(field));
    std::getline(row, c.quantity, ',');
    std::getline(row, field, ',');
    c.horizon = std::stod(field);
    std::getline(row, field, ',');
    c.value = std::stod(field);
    cells.push_back(std::move(c));
  }
  if (cells.empty()) throw std::runtime_error("embedded reference tables are empty");
  return cells;
}

/// Comparison tolerances, pinned here once for both the validate command
/// and the acceptance suite. Occupancy and survival tolerances are in
/// percentage points and depend on the model kind (the semi-Markov solver
/// behind the published values carries more numerical noise); excess-death
/// tolerances are per 100,000, and YLL inherits the excess tolerance scaled
/// by the band's life expectancy (YLL = excess * e_x is an exact identity),
/// floored at 5.
struct Tolerances {
  double occupancy_markov = 0.02;
  double occupancy_semimarkov = 0.05;
  double survival_markov = 0.05;
  double survival_semimarkov = 0.10;
  double excess_other = 5.0;
  double excess_cancer = 1.0;
  double yll_floor = 5.0;

  double for_cell(const ReferenceCell& c) const {
    const bool markov = c.kind == ModelKind::Markov;
    if (c.quantity == "ons" || c.quantity == "adj")
      return markov ? survival_markov : survival_semimarkov;
    if (c.quantity == "exc_other") return excess_other;
    if (c.quantity == "exc_bc") return excess_cancer;
    if (c.quantity == "yll_other" || c.quantity == "yll_bc") {
      const double per_death = c.quantity == "yll_other" ? excess_other : excess_cancer;
      const double ex = standard_life_table().years_remaining(c.band);
      return std::max(yll_floor, per_death * ex);
    }
    return markov ? occupancy_markov : occupancy_semimarkov;
  }
};

struct CellResult {
  ReferenceCell cell;
  double computed = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct TableSummary {
  int passed = 0;
  int total = 0;
};

struct ValidationReport {
  std::vector<CellResult> results;
  std::map<std::string, TableSummary> by_table;
  int passed = 0;
  int total = 0;

  bool ok() const { return passed == total; }

  void print(std::ostream& os, bool verbose_failures = true) const {
    for (const auto& [table, s] : by_table)
      os << table << ": " << s.passed << "/" << s.total
         << (s.passed == s.total ? " pass" : " FAIL") << "\n";
    os << "total: " << passed << "/" << total << (ok() ? " pass" : " FAIL") << "\n";
    if (verbose_failures)
      for (const auto& r : results)
        if (!r.passed)
          os << "  mismatch " << r.cell.table << " " << r.cell.param_set << " "
             << r.cell.scenario << " " << kind_label(r.cell.kind) << " "
             << band_label(r.cell.band) << " start=" << static_cast<int>(r.cell.start)
             << " " << r.cell.quantity << "@" << r.cell.horizon << ": computed "
             << r.computed << " vs " << r.cell.value << " (tol " << r.tolerance << ")\n";
  }
};

struct ValidationOptions {
  GridConfig grid{};
  Tolerances tolerances{};
  /// Extra multiplier on the baseline metastatic death rate; exists so the
  /// suite can demonstrate that validation actually detects perturbations.
  double mu35_table_perturbation = 1.0;
};

namespace detail {

/// Lazily solved curve cache shared across reference cells.
class CurveCache {
 public:
  CurveCache(const ValidationOptions& opts) : opts_(opts) {
    for (ParameterSet& p : sets_or_default())
      sets_[p.id] = p;
  }

  const OccupancyCurve& curve(const std::string& param_set, const std::string& scenario,
                              ModelKind kind, AgeBand band, State start, bool adjusted) {
    const std::string key = param_set + "|" + scenario + "|" +
                            std::string(kind_label(kind)) + "|" +
                            std::string(band_label(band)) + "|" +
                            std::to_string(static_cast<int>(start)) +
                            (adjusted ? "|adj" : "");
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;

    const ParameterSet params = sets_.at(param_set).with_kind(kind);
    const ScenarioOverlay overlay = builtin_overlay(scenario);
    // disease starts feed the 10-year survival tables; the cancer-free
    // start is only ever reported to 5 years
    const double horizon = start == State::NoCancer ? 5.0 : 10.0;
    SolveOptions so;
    so.zero_dead_other_after_onset = adjusted;
    OccupancyCurve c =
        solve(start, band, params, overlay, opts_.grid.with_horizon(horizon), so);
    return cache_.emplace(key, std::move(c)).first->second;
  }

 private:
  std::vector<ParameterSet> sets_or_default() {
    std::vector<ParameterSet> sets = sensitivity_parameter_sets();
    for (ParameterSet& p : sets)
      for (IntensityRow& row : p.table.rows)
        row.cancer_death *= opts_.mu35_table_perturbation;
    return sets;
  }

  ValidationOptions opts_;
  std::map<std::string, ParameterSet> sets_;
  std::map<std::string, OccupancyCurve> cache_;
};

}  // namespace detail

/// Recompute every embedded reference cell and compare within tolerance.
inline ValidationReport run_validation(const ValidationOptions& opts = {}) {
  const std::vector<ReferenceCell> cells = load_reference_cells();
  detail::CurveCache cache(opts);

  ValidationReport report;
  for (const ReferenceCell& cell : cells) {
    double computed = 0.0;
    if (cell.quantity.rfind("exc_", 0) == 0 || cell.quantity.rfind("yll_", 0) == 0) {
      const State cause =
          cell.quantity.ends_with("other") ? State::DeadOther : State::DeadCancer;
      const OccupancyCurve& pre =
          cache.curve(cell.param_set, "pre", cell.kind, cell.band, State::NoCancer, false);
      const OccupancyCurve& scn = cache.curve(cell.param_set, cell.scenario, cell.kind,
                                              cell.band, State::NoCancer, false);
      computed = excess_deaths(pre, scn, cause, cell.horizon);
      if (cell.quantity.rfind("yll_", 0) == 0)
        computed = years_of_life_lost(computed, cell.band);
    } else if (cell.quantity == "ons") {
      computed = ons_survival(cache.curve(cell.param_set, cell.scenario, cell.kind,
                                          cell.band, cell.start, false),
                              cell.horizon);
    } else if (cell.quantity == "adj") {
      const OccupancyCurve& c =
          cache.curve(cell.param_set, cell.scenario, cell.kind, cell.band, cell.start, true);
      computed = 100.0 * (1.0 - c.probability(State::DeadCancer, cell.horizon));
    } else if (cell.quantity == "pdead") {
      const OccupancyCurve& c =
          cache.curve(cell.param_set, cell.scenario, cell.kind, cell.band, cell.start, false);
      computed = 100.0 * (c.probability(State::DeadOther, cell.horizon) +
                          c.probability(State::DeadCancer, cell.horizon));
    } else {
      const int j = cell.quantity.at(1) - '0';
      if (cell.quantity.size() != 2 || cell.quantity[0] != 'p' || j < 0 || j >= kNumStates)
        throw std::runtime_error("unknown reference quantity: " + cell.quantity);
      const OccupancyCurve& c =
          cache.curve(cell.param_set, cell.scenario, cell.kind, cell.band, cell.start, false);
      computed = 100.0 * c.probability(static_cast<State>(j), cell.horizon);
    }

    CellResult r;
    r.cell = cell;
    r.computed = computed;
    r.tolerance = opts.tolerances.for_cell(cell);
    r.passed = std::abs(computed - cell.value) <= r.tolerance;
    report.by_table[cell.table].total += 1;
    report.by_table[cell.table].passed += r.passed ? 1 : 0;
    report.total += 1;
    report.passed += r.passed ? 1 : 0;
    report.results.push_back(std::move(r));
  }
  return report;
}

}  // namespace bcms
