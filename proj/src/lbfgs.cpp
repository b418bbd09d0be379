// SPDX-License-Identifier: Apache-2.0

#include "mixlaw/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace mixlaw {

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kCurvature = 0.9;
constexpr double kRelFtol = 1e-12;  // relative decrease below which we stop
constexpr int kMaxLineSearchEvals = 50;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_abs(std::span<const double> v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

struct Pair {
  std::vector<double> s;
  std::vector<double> y;
  double rho;
};

class Projector {
 public:
  explicit Projector(const std::vector<std::optional<Bound>>& bounds) : bounds_(bounds) {}

  void clamp(std::span<double> x) const {
    for (std::size_t i = 0; i < bounds_.size() && i < x.size(); ++i)
      if (bounds_[i]) x[i] = std::clamp(x[i], bounds_[i]->lo, bounds_[i]->hi);
  }

  // Zeroes gradient components that point outward at an active bound, so the
  // convergence test sees the feasible descent directions only.
  void project_gradient(std::span<const double> x, std::span<double> g) const {
    for (std::size_t i = 0; i < bounds_.size() && i < x.size(); ++i) {
      if (!bounds_[i]) continue;
      if (x[i] <= bounds_[i]->lo && g[i] > 0) g[i] = 0;
      if (x[i] >= bounds_[i]->hi && g[i] < 0) g[i] = 0;
    }
  }

 private:
  const std::vector<std::optional<Bound>>& bounds_;
};

struct Evaluation {
  std::vector<double> x;
  std::vector<double> g;
  double f = std::numeric_limits<double>::infinity();
};

}  // namespace

LbfgsResult lbfgs_minimize(const ObjectiveFn& objective, std::vector<double> x0,
                           const LbfgsOptions& options) {
  const std::size_t dim = x0.size();
  Projector proj(options.bounds);
  proj.clamp(x0);

  auto eval_at = [&](std::vector<double> x, Evaluation& out) {
    proj.clamp(x);
    out.g.assign(dim, 0.0);
    out.f = objective(x, out.g);
    out.x = std::move(x);
    if (!std::isfinite(out.f)) out.f = std::numeric_limits<double>::infinity();
  };

  Evaluation cur;
  eval_at(std::move(x0), cur);
  LbfgsResult result;
  result.x = cur.x;
  result.f = cur.f;
  if (!std::isfinite(cur.f)) return result;  // infeasible start

  std::deque<Pair> pairs;
  std::vector<double> dir(dim), pg(dim);
  int small_decreases = 0;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    pg = cur.g;
    proj.project_gradient(cur.x, pg);
    if (max_abs(pg) <= options.gradient_tolerance) {
      result.converged = true;
      break;
    }

    // Two-loop recursion for dir = -H * g.
    dir = cur.g;
    std::vector<double> alpha(pairs.size());
    for (std::size_t i = pairs.size(); i-- > 0;) {
      alpha[i] = pairs[i].rho * dot(pairs[i].s, dir);
      for (std::size_t j = 0; j < dim; ++j) dir[j] -= alpha[i] * pairs[i].y[j];
    }
    if (!pairs.empty()) {
      const Pair& last = pairs.back();
      const double scale = dot(last.s, last.y) / dot(last.y, last.y);
      for (double& v : dir) v *= scale;
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const double beta = pairs[i].rho * dot(pairs[i].y, dir);
      for (std::size_t j = 0; j < dim; ++j) dir[j] += (alpha[i] - beta) * pairs[i].s[j];
    }
    for (double& v : dir) v = -v;

    double slope = dot(dir, cur.g);
    if (!(slope < 0)) {
      // Not a descent direction; fall back to steepest descent.
      pairs.clear();
      for (std::size_t j = 0; j < dim; ++j) dir[j] = -cur.g[j];
      slope = dot(dir, cur.g);
      if (!(slope < 0)) break;  // zero gradient after projection
    }

    // Strong-Wolfe line search (bracket + zoom, bisection-based).
    const double f0 = cur.f;
    double step = 1.0;
    if (iter == 0) {
      const double gmax = max_abs(cur.g);
      if (gmax > 1.0) step = 1.0 / gmax;
    }
    Evaluation trial;
    Evaluation best;  // best sufficient-decrease point seen during the search
    bool have_best = false;

    auto try_step = [&](double t, Evaluation& out) {
      std::vector<double> x(dim);
      for (std::size_t j = 0; j < dim; ++j) x[j] = cur.x[j] + t * dir[j];
      eval_at(std::move(x), out);
      return out.f;
    };

    double lo = 0.0, hi = std::numeric_limits<double>::quiet_NaN();
    double f_lo = f0;
    int evals = 0;
    bool accepted = false;

    // Bracketing phase.
    double prev_t = 0.0, prev_f = f0;
    double t = step;
    while (evals < kMaxLineSearchEvals) {
      const double ft = try_step(t, trial);
      ++evals;
      if (!std::isfinite(ft) || ft > f0 + kArmijo * t * slope || (evals > 1 && ft >= prev_f)) {
        lo = prev_t;
        f_lo = prev_f;
        hi = t;
        break;
      }
      best = trial;
      have_best = true;
      const double slope_t = dot(trial.g, dir);
      if (std::abs(slope_t) <= -kCurvature * slope) {
        accepted = true;
        break;
      }
      if (slope_t >= 0) {
        lo = t;
        f_lo = ft;
        hi = prev_t;
        break;
      }
      prev_t = t;
      prev_f = ft;
      t *= 2.0;
      if (t > 1e6) break;
    }

    // Zoom phase.
    if (!accepted && std::isfinite(hi)) {
      while (evals < kMaxLineSearchEvals) {
        const double mid = 0.5 * (lo + hi);
        if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo))) break;
        const double fm = try_step(mid, trial);
        ++evals;
        if (!std::isfinite(fm) || fm > f0 + kArmijo * mid * slope || fm >= f_lo) {
          hi = mid;
          continue;
        }
        best = trial;
        have_best = true;
        const double slope_m = dot(trial.g, dir);
        if (std::abs(slope_m) <= -kCurvature * slope) {
          accepted = true;
          break;
        }
        if (slope_m * (hi - lo) >= 0) hi = lo;
        lo = mid;
        f_lo = fm;
      }
    }

    if (!have_best || best.f >= f0) {
      // Line search failed to improve. Retry once from a fresh steepest
      // descent memory; if that also fails we stop at the current iterate.
      if (!pairs.empty()) {
        pairs.clear();
        continue;
      }
      result.iterations = iter + 1;
      result.x = cur.x;
      result.f = cur.f;
      return result;
    }

    // Curvature update with the projected step actually taken.
    Pair pair;
    pair.s.resize(dim);
    pair.y.resize(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      pair.s[j] = best.x[j] - cur.x[j];
      pair.y[j] = best.g[j] - cur.g[j];
    }
    const double sy = dot(pair.s, pair.y);
    if (sy > 1e-12 * std::sqrt(dot(pair.s, pair.s)) * std::sqrt(dot(pair.y, pair.y))) {
      pair.rho = 1.0 / sy;
      pairs.push_back(std::move(pair));
      if (static_cast<int>(pairs.size()) > options.memory) pairs.pop_front();
    }

    const double decrease = f0 - best.f;
    cur = std::move(best);
    result.iterations = iter + 1;
    if (decrease <= kRelFtol * std::max(1.0, std::abs(cur.f))) {
      if (++small_decreases >= 2) break;
    } else {
      small_decreases = 0;
    }
  }

  if (!result.converged) {
    pg = cur.g;
    proj.project_gradient(cur.x, pg);
    if (max_abs(pg) <= options.gradient_tolerance) result.converged = true;
  }
  result.x = cur.x;
  result.f = cur.f;
  return result;
}

}  // namespace mixlaw
