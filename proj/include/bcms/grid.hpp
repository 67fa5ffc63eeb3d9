#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace bcms {

enum class Quadrature { Trapezoid, Simpson };

/// Solver discretisation. The horizon is capped at 10 years because the
/// duration hazard's polynomial domain ends there.
struct GridConfig {
  double step = 0.01;    // years
  double horizon = 5.0;  // years
  Quadrature quadrature = Quadrature::Simpson;

  void validate() const {
    if (!(step > 0.0)) throw std::domain_error("grid step must be positive");
    if (!(horizon > 0.0) || horizon > 10.0 + 1e-12)
      throw std::domain_error("horizon must lie in (0, 10] years");
    const double ratio = horizon / step;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio))
      throw std::domain_error("horizon must be an integer multiple of the step");
  }

  GridConfig with_horizon(double h) const {
    GridConfig g = *this;
    g.horizon = h;
    return g;
  }
};

/// Time grid from 0 to the horizon: a uniform grid of the requested step
/// with every breakpoint (overlay jump, whole year) inserted as an explicit
/// grid point. Each inter-breakpoint piece is subdivided uniformly, so the
/// grid is piecewise-uniform and no panel straddles a coefficient jump.
class TimeGrid {
 public:
  static TimeGrid build(const GridConfig& cfg, std::span<const double> breakpoints = {}) {
    cfg.validate();
    std::vector<double> edges{0.0, cfg.horizon};
    for (double b : breakpoints)
      if (b > 1e-12 && b < cfg.horizon - 1e-12) edges.push_back(b);
    for (int y = 1; y < static_cast<int>(std::ceil(cfg.horizon)); ++y)
      edges.push_back(static_cast<double>(y));
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end(),
                            [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                edges.end());

    TimeGrid g;
    g.quadrature_ = cfg.quadrature;
    g.times_.push_back(0.0);
    g.piece_first_.push_back(0);
    for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
      const double len = edges[e + 1] - edges[e];
      const auto panels = static_cast<std::size_t>(std::ceil(len / cfg.step - 1e-9));
      for (std::size_t k = 1; k <= panels; ++k)
        g.times_.push_back(edges[e] + len * static_cast<double>(k) / static_cast<double>(panels));
      g.times_.back() = edges[e + 1];  // exact edge, no accumulated rounding
      g.piece_first_.push_back(g.times_.size() - 1);
    }
    return g;
  }

  /// Midpoint-refined copy: every panel split in two. The refined grid
  /// contains every point of this grid, which is what step-halving
  /// convergence probes need.
  TimeGrid refined() const {
    TimeGrid g;
    g.quadrature_ = quadrature_;
    g.times_.push_back(times_.front());
    g.piece_first_.push_back(0);
    std::size_t next_piece = 1;
    for (std::size_t i = 0; i + 1 < times_.size(); ++i) {
      g.times_.push_back(0.5 * (times_[i] + times_[i + 1]));
      g.times_.push_back(times_[i + 1]);
      if (next_piece < piece_first_.size() && i + 1 == piece_first_[next_piece]) {
        g.piece_first_.push_back(g.times_.size() - 1);
        ++next_piece;
      }
    }
    return g;
  }

  std::size_t size() const { return times_.size(); }
  double time(std::size_t i) const { return times_[i]; }
  const std::vector<double>& times() const { return times_; }
  Quadrature quadrature() const { return quadrature_; }

  /// Index of an exact grid time; throws when t is not on the grid.
  std::size_t index_of(double t) const {
    auto it = std::lower_bound(times_.begin(), times_.end(), t - 1e-9);
    if (it == times_.end() || std::abs(*it - t) > 1e-9)
      throw std::domain_error("time is not a grid point");
    return static_cast<std::size_t>(it - times_.begin());
  }

  std::size_t piece_count() const { return piece_first_.size() - 1; }
  std::size_t piece_begin(std::size_t p) const { return piece_first_[p]; }
  std::size_t piece_end(std::size_t p) const { return piece_first_[p + 1]; }
  double piece_midpoint(std::size_t p) const {
    return 0.5 * (times_[piece_first_[p]] + times_[piece_first_[p + 1]]);
  }

  /// Integral of grid-sampled values over the uniform run [lo, hi]; both
  /// indices must lie within one piece.
  double integrate_run(std::span<const double> f, std::size_t lo, std::size_t hi) const {
    if (hi <= lo) return 0.0;
    return integrate_run_impl(f, lo, hi);
  }

  /// Integral over [0, time(n)] of grid-sampled values, composed piecewise:
  /// composite Simpson within each uniform piece (trailing 3/8 rule for an
  /// odd panel count, trapezoid when a piece contributes a single panel).
  double integrate_prefix(std::span<const double> f, std::size_t n) const {
    double total = 0.0;
    for (std::size_t p = 0; p + 1 < piece_first_.size(); ++p) {
      const std::size_t lo = piece_first_[p];
      if (lo >= n) break;
      const std::size_t hi = std::min(piece_first_[p + 1], n);
      total += integrate_run_impl(f, lo, hi);
      if (hi == n) break;
    }
    return total;
  }

  /// Running integral at every grid point.
  std::vector<double> cumulative(std::span<const double> f) const {
    std::vector<double> out(times_.size(), 0.0);
    for (std::size_t n = 1; n < times_.size(); ++n) out[n] = integrate_prefix(f, n);
    return out;
  }

 private:
  double integrate_run_impl(std::span<const double> f, std::size_t lo, std::size_t hi) const {
    const double h = times_[lo + 1] - times_[lo];
    std::size_t m = hi - lo;  // panel count, uniform step h
    if (quadrature_ == Quadrature::Trapezoid) {
      double acc = 0.0;
      for (std::size_t j = lo; j < hi; ++j) acc += 0.5 * h * (f[j] + f[j + 1]);
      return acc;
    }
    double acc = 0.0;
    std::size_t j = lo;
    if (m % 2 == 1) {
      // a lone panel gets the trapezoid (only ever the first panel of a
      // piece, where the local O(h^3) defect is far below the solver
      // tolerances); odd counts >= 3 end with the 3/8 rule
      if (m == 1) return 0.5 * h * (f[lo] + f[lo + 1]);
      m -= 3;
    }
    for (; m >= 2; m -= 2, j += 2) acc += h / 3.0 * (f[j] + 4.0 * f[j + 1] + f[j + 2]);
    if (j < hi) acc += 3.0 * h / 8.0 * (f[j] + 3.0 * f[j + 1] + 3.0 * f[j + 2] + f[j + 3]);
    return acc;
  }

  std::vector<double> times_;
  std::vector<std::size_t> piece_first_;  // grid index of each piece edge
  Quadrature quadrature_ = Quadrature::Simpson;
};

}  // namespace bcms
