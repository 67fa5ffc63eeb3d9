#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bcms/grid.hpp"
#include "bcms/model.hpp"
#include "bcms/outcomes.hpp"
#include "bcms/scenario.hpp"

namespace bcms {

// ---------------------------------------------------------------------------
// Display rounding and formatting. Tables round half away from zero;
// probabilities are emitted with 10 significant digits.
// ---------------------------------------------------------------------------

inline double round_half_away(double x, int decimals) {
  double scale = 1.0;
  for (int i = 0; i < decimals; ++i) scale *= 10.0;
  return std::round(x * scale) / scale;
}

inline long long round_count(double x) { return std::llround(x); }

inline std::string format_decimal(double x, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, round_half_away(x, decimals));
  return buf;
}

inline std::string format_significant(double x, int digits = 10) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

// ---------------------------------------------------------------------------
// Run configuration: flat key = value text, '#' comments, optional [section]
// headers that are tolerated and ignored. Every key has a default; the
// defaults reproduce the headline configuration.
// ---------------------------------------------------------------------------

inline std::vector<AgeBand> default_bands() {
  const auto bands = all_bands();
  return {bands.begin(), bands.end()};
}

struct RunConfig {
  std::vector<std::string> scenarios{"pre", "s1", "s2"};
  std::vector<ModelKind> kinds{ModelKind::Markov, ModelKind::SemiMarkov};
  double alpha = 0.6;
  double beta = 1.0 / 7.0;
  double mu35_scale = 1.0;
  std::vector<AgeBand> bands = default_bands();
  std::vector<double> horizons{1.0, 5.0};
  double step = 0.01;
  double horizon = 5.0;
  std::string out_dir;
  std::uint64_t seed = 1;
  long long paths = 100000;
  std::vector<State> start_states{State::NoCancer};
  bool report_full_grid = false;
  std::optional<std::pair<double, double>> s2_diagnosis_window;
  std::vector<MortalitySegment> custom_mortality;
  std::vector<DiagnosisSegment> custom_diagnosis;

  GridConfig grid() const {
    GridConfig g;
    g.step = step;
    g.horizon = horizon;
    return g;
  }

  ParameterSet parameters(ModelKind kind) const {
    ParameterSet p;
    p.alpha = alpha;
    p.beta = beta;
    p.mu35_scale = mu35_scale;
    p.kind = kind;
    p.validate();
    return p;
  }

  /// Builtin overlay by name, honouring the configurable S2 diagnosis
  /// window; "custom" assembles an overlay from the configured segments.
  ScenarioOverlay overlay(const std::string& name) const {
    if (name == "custom") {
      if (custom_mortality.empty() && custom_diagnosis.empty())
        throw std::invalid_argument("custom scenario requires overlay segments");
      return ScenarioOverlay("custom", custom_mortality, custom_diagnosis);
    }
    if (name == "s2" && s2_diagnosis_window)
      return make_s2_overlay(s2_diagnosis_window->first, s2_diagnosis_window->second);
    return builtin_overlay(name);
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline double parse_number(const std::string& tok) {
  // accepts plain decimals and simple fractions such as 1/7
  const auto slash = tok.find('/');
  std::size_t used = 0;
  if (slash == std::string::npos) {
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument("bad number: " + tok);
    return v;
  }
  const double num = std::stod(tok.substr(0, slash), &used);
  if (used != slash) throw std::invalid_argument("bad number: " + tok);
  const double den = std::stod(tok.substr(slash + 1), &used);
  if (used != tok.size() - slash - 1 || den == 0.0)
    throw std::invalid_argument("bad number: " + tok);
  return num / den;
}

inline double parse_month(const std::string& tok) {
  // YYYY-MM
  if (tok.size() != 7 || tok[4] != '-')
    throw std::invalid_argument("expected YYYY-MM month: " + tok);
  return month_to_time(std::stoi(tok.substr(0, 4)), std::stoi(tok.substr(5, 2)));
}

inline ModelKind parse_kind(const std::string& tok) {
  if (tok == "markov" || tok == "m") return ModelKind::Markov;
  if (tok == "semimarkov" || tok == "sm") return ModelKind::SemiMarkov;
  throw std::invalid_argument("unknown model kind: " + tok);
}

}  // namespace detail

inline RunConfig parse_run_config(std::istream& in) {
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') continue;  // section header
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    try {
      if (key == "scenario" || key == "scenarios") {
        cfg.scenarios = detail::split_list(value);
        for (const auto& s : cfg.scenarios)
          if (s != "pre" && s != "s1" && s != "s2" && s != "custom")
            throw std::invalid_argument("unknown scenario: " + s);
      } else if (key == "model") {
        if (value == "both")
          cfg.kinds = {ModelKind::Markov, ModelKind::SemiMarkov};
        else
          cfg.kinds = {detail::parse_kind(value)};
      } else if (key == "alpha") {
        cfg.alpha = detail::parse_number(value);
      } else if (key == "beta") {
        cfg.beta = detail::parse_number(value);
      } else if (key == "mu35_scale") {
        cfg.mu35_scale = detail::parse_number(value);
      } else if (key == "bands") {
        cfg.bands.clear();
        if (value == "all")
          cfg.bands = default_bands();
        else
          for (const auto& tok : detail::split_list(value))
            cfg.bands.push_back(band_from_label(tok));
      } else if (key == "horizons") {
        cfg.horizons.clear();
        for (const auto& tok : detail::split_list(value))
          cfg.horizons.push_back(detail::parse_number(tok));
      } else if (key == "step") {
        cfg.step = detail::parse_number(value);
      } else if (key == "horizon") {
        cfg.horizon = detail::parse_number(value);
      } else if (key == "out_dir") {
        cfg.out_dir = value;
      } else if (key == "seed") {
        cfg.seed = std::stoull(value);
      } else if (key == "paths") {
        cfg.paths = std::stoll(value);
      } else if (key == "start_states") {
        cfg.start_states.clear();
        for (const auto& tok : detail::split_list(value)) {
          const int s = std::stoi(tok);
          if (s < 0 || s > 3) throw std::invalid_argument("start state must be 0..3");
          cfg.start_states.push_back(static_cast<State>(s));
        }
      } else if (key == "report_times") {
        if (value == "grid")
          cfg.report_full_grid = true;
        else if (value == "horizons")
          cfg.report_full_grid = false;
        else
          throw std::invalid_argument("report_times is 'horizons' or 'grid'");
      } else if (key == "s2_diagnosis_window") {
        const auto toks = detail::split_list(value);
        if (toks.size() != 2)
          throw std::invalid_argument("s2_diagnosis_window wants two YYYY-MM months");
        cfg.s2_diagnosis_window = {detail::parse_month(toks[0]), detail::parse_month(toks[1])};
      } else if (key == "mortality_segment") {
        const auto toks = detail::split_list(value);
        if (toks.size() != 4)
          throw std::invalid_argument("mortality_segment: start end factor65_84 factor85_89");
        cfg.custom_mortality.push_back({detail::parse_month(toks[0]),
                                        detail::parse_month(toks[1]),
                                        {detail::parse_number(toks[2]),
                                         detail::parse_number(toks[3])}});
      } else if (key == "diagnosis_segment") {
        const auto toks = detail::split_list(value);
        if (toks.size() != 3)
          throw std::invalid_argument("diagnosis_segment: start end factor");
        cfg.custom_diagnosis.push_back({detail::parse_month(toks[0]),
                                        detail::parse_month(toks[1]),
                                        detail::parse_number(toks[2])});
      } else {
        throw std::invalid_argument("unknown key: " + key);
      }
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception& e) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file: " + path);
  return parse_run_config(in);
}

// ---------------------------------------------------------------------------
// CSV emission. Dot decimal separator, LF line endings, no quoting.
// ---------------------------------------------------------------------------

inline std::string occupancy_csv(const std::vector<OccupancyRow>& rows,
                                 bool with_param_set = false) {
  std::string out = with_param_set ? "param_set," : "";
  out += "scenario,model,age_band,start_state,t_years,p0,p1,p2,p3,p4,p5\n";
  for (const auto& r : rows) {
    if (r.failed) continue;
    if (with_param_set) out += r.param_set + ",";
    out += r.scenario + "," + std::string(kind_label(r.kind)) + "," +
           std::string(band_label(r.band)) + "," + std::to_string(static_cast<int>(r.start)) +
           "," + format_significant(r.horizon);
    for (double p : r.prob) out += "," + format_significant(p);
    out += "\n";
  }
  return out;
}

inline std::string survival_csv(const std::vector<SurvivalRow>& rows,
                                bool with_param_set = false) {
  std::string out = with_param_set ? "param_set," : "";
  out += "method,model,age_band,start_state,horizon_years,survival_pct\n";
  for (const auto& r : rows) {
    if (r.failed) continue;
    if (with_param_set) out += r.param_set + ",";
    out += r.method + "," + std::string(kind_label(r.kind)) + "," +
           std::string(band_label(r.band)) + "," + std::to_string(static_cast<int>(r.start)) +
           "," + format_significant(r.horizon) + "," + format_decimal(r.survival_pct, 2) + "\n";
  }
  return out;
}

inline std::string excess_csv(const std::vector<ExcessRow>& rows,
                              bool with_param_set = false) {
  std::string out = with_param_set ? "param_set," : "";
  out += "scenario,model,age_band,cause,excess_per_100k,yll_per_100k\n";
  for (const auto& r : rows) {
    if (r.failed) continue;
    if (with_param_set) out += r.param_set + ",";
    out += r.scenario + "," + std::string(kind_label(r.kind)) + "," +
           std::string(band_label(r.band)) + "," +
           (r.cause == State::DeadOther ? "other" : "bc") + "," +
           std::to_string(round_count(r.excess_per_100k)) + "," +
           std::to_string(round_count(r.yll_per_100k)) + "\n";
  }
  return out;
}

}  // namespace bcms
