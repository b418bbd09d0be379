// SPDX-License-Identifier: Apache-2.0

#include "mixlaw/fitter.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <set>
#include <thread>
#include <tuple>

#include "mixlaw/detail/lse_objective.hpp"
#include "mixlaw/dlc_features.hpp"
#include "mixlaw/errors.hpp"
#include "mixlaw/lbfgs.hpp"

namespace mixlaw {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

const char* to_string(LawId id) {
  switch (id) {
    case LawId::Chinchilla: return "chinchilla";
    case LawId::OpenAi: return "openai";
    case LawId::L1: return "L1";
    case LawId::L2: return "L2";
    case LawId::L3: return "L3";
    case LawId::L4: return "L4";
    case LawId::L5: return "L5";
    case LawId::CrossDomain: return "cross_domain";
  }
  return "?";
}

LawId law_id_from_string(const std::string& name) {
  for (LawId id : {LawId::Chinchilla, LawId::OpenAi, LawId::L1, LawId::L2, LawId::L3, LawId::L4,
                   LawId::L5, LawId::CrossDomain})
    if (name == to_string(id)) return id;
  throw std::invalid_argument("unknown law id: " + name);
}

InitGrid default_init_grid() {
  InitGrid grid;
  grid.e = {-1.0, -0.5, 0.0, 0.5, 1.0};
  grid.a = {-1.0, 0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
  grid.b = grid.a;
  grid.c = grid.a;
  grid.alpha = {-0.5, 0.0, 0.5};
  grid.beta = grid.alpha;
  grid.gamma = grid.alpha;
  grid.eta1 = grid.alpha;
  grid.epsilon = {0.0, 0.5};
  grid.f = {-1.0, 0.0, 1.0};
  grid.mu = {0.5, 1.0};
  grid.w = {1.0};
  return grid;
}

double huber(double residual, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("huber: delta must be > 0");
  const double abs_r = std::abs(residual);
  if (abs_r <= delta) return 0.5 * residual * residual;
  return delta * (abs_r - 0.5 * delta);
}

DcptParams decode(const ReparamVector& v, double d_min) {
  DcptParams p;
  p.variant = DcptVariant::L3;
  p.E = std::exp(v.e);
  p.A = std::exp(v.a);
  p.B = std::exp(v.b);
  p.alpha = v.alpha;
  p.beta = v.beta;
  p.gamma = std::exp(v.g);
  p.eta = 1.0 + std::exp(v.eta1);
  p.epsilon = std::clamp(v.eps_raw, kEpsilonFloor, 1.0);
  p.C = 0.0;  // placeholder so c0_bound sees a complete record
  p.C = c0_bound(p, d_min) + std::exp(v.c1);
  return p;
}

namespace detail {

int LseSpec::weight_count() const {
  if (!cross_term) return 0;
  switch (k_repr) {
    case KRepr::K1: return 1;
    case KRepr::K2: return 1;
    case KRepr::K3: return 2;
    case KRepr::K4: return 3;
  }
  return 0;
}

int LseSpec::dim() const { return (l3_terms ? 9 : 5) + (cross_term ? 2 + weight_count() : 0); }

PreparedData prepare_points(std::span<const DataPoint> points, std::span<const int> domain_idx) {
  PreparedData data;
  const std::size_t count = points.size();
  data.r.reserve(count);
  data.ln_n.reserve(count);
  data.ln_d.reserve(count);
  data.ln_r.reserve(count);
  data.ln_loss.reserve(count);
  data.has_r_term.reserve(count);
  double d_min = kInf;
  for (std::size_t i = 0; i < count; ++i) {
    const DataPoint& p = points[i];
    validate(p);
    data.r.push_back(p.r);
    data.ln_n.push_back(std::log(p.n));
    data.ln_d.push_back(std::log(p.d));
    data.ln_r.push_back(p.r > 0.0 ? std::log(p.r) : 0.0);
    data.has_r_term.push_back(p.r > 0.0 ? 1 : 0);
    data.ln_loss.push_back(std::log(p.loss));
    d_min = std::min(d_min, p.d);
  }
  if (!domain_idx.empty()) data.domain.assign(domain_idx.begin(), domain_idx.end());
  data.d_min = d_min;
  data.ln_dmin = std::log(d_min);
  return data;
}

double k_from_weights(KRepr repr, double w1, double w2, double w3, const DlcFeatures& f) {
  switch (repr) {
    case KRepr::K1: return w1 / f.k1;
    case KRepr::K2: return w2 * f.k2;
    case KRepr::K3: return w1 / f.k1 + w2 * f.k2;
    case KRepr::K4: return w1 / f.k1 + w2 * f.k2 + w3 / f.k3;
  }
  return 0.0;
}

namespace {

// Unpacks K weights from the tail of the coordinate vector; unused slots are 0.
void unpack_weights(const LseSpec& spec, std::span<const double> x, double& w1, double& w2,
                    double& w3) {
  const int base = 11;  // after [.. 9 core ..][f, mu]
  w1 = w2 = w3 = 0.0;
  switch (spec.k_repr) {
    case KRepr::K1: w1 = x[base]; break;
    case KRepr::K2: w2 = x[base]; break;
    case KRepr::K3: w1 = x[base]; w2 = x[base + 1]; break;
    case KRepr::K4: w1 = x[base]; w2 = x[base + 1]; w3 = x[base + 2]; break;
  }
}

}  // namespace

double lse_objective(const LseSpec& spec, const PreparedData& data,
                     std::span<const DlcFeatures> features, double delta,
                     std::span<const double> x, std::span<double> grad) {
  const std::size_t count = data.ln_loss.size();
  const bool want_grad = !grad.empty();
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);

  const double e = x[0], a = x[1], b = x[2];
  double c1 = 0, alpha = 0, beta = 0, g = 0, eta1 = 0, eps = 0;
  if (spec.l3_terms) {
    c1 = x[3];
    alpha = x[4];
    beta = x[5];
    g = x[6];
    eta1 = x[7];
    eps = std::clamp(x[kEpsCoord], kEpsilonFloor, 1.0);
  } else {
    alpha = x[3];
    beta = x[4];
  }

  double gamma = 0, eta1e = 0, eta = 0, softplus_eta1 = 0, c0 = 0, ln1pe = 0;
  if (spec.l3_terms) {
    if (g > 250.0 || eta1 > 250.0) return kInf;
    gamma = std::exp(g);
    eta1e = std::exp(eta1);
    eta = 1.0 + eta1e;
    softplus_eta1 = eta1 > 30.0 ? eta1 : std::log1p(eta1e);
    ln1pe = std::log1p(eps);
    c0 = b + softplus_eta1 + (gamma + 1.0) * ln1pe - g - beta * data.ln_dmin;
    if (!std::isfinite(c0)) return kInf;
  }

  // Per-domain K for the cross term.
  double fcoef = 0, mu = 0, w1 = 0, w2 = 0, w3 = 0;
  std::vector<double> k_dom, ln_k_dom;
  if (spec.cross_term) {
    fcoef = x[9];
    mu = x[10];
    unpack_weights(spec, x, w1, w2, w3);
    k_dom.resize(features.size());
    ln_k_dom.resize(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
      k_dom[i] = k_from_weights(spec.k_repr, w1, w2, w3, features[i]);
      if (!(k_dom[i] > 0.0) || !std::isfinite(k_dom[i])) return kInf;
      ln_k_dom[i] = std::log(k_dom[i]);
    }
  }

  const double sigmoid_eta1 = 1.0 / (1.0 + std::exp(-eta1));
  double total = 0.0;
  double t[6];
  double p[6];

  for (std::size_t i = 0; i < count; ++i) {
    int terms = 0;
    t[terms++] = e;
    t[terms++] = a - alpha * data.ln_n[i];
    int idx_r = -1, idx_c1 = -1, idx_c0 = -1, idx_k = -1;
    double lrp = 0.0, rpe = 0.0;
    if (spec.l3_terms) {
      if (data.has_r_term[i]) {
        idx_r = terms;
        t[terms++] = b + eta * data.ln_r[i] - beta * data.ln_d[i];
      }
      rpe = data.r[i] + eps;
      lrp = std::log(rpe);
      idx_c1 = terms;
      t[terms++] = c1 - gamma * lrp;
      idx_c0 = terms;
      t[terms++] = c0 - gamma * lrp;
    } else {
      idx_r = terms;
      t[terms++] = b - beta * data.ln_d[i];
    }
    if (spec.cross_term) {
      idx_k = terms;
      t[terms++] = fcoef - mu * ln_k_dom[data.domain[i]];
    }

    double tmax = t[0];
    for (int j = 1; j < terms; ++j) tmax = std::max(tmax, t[j]);
    if (!std::isfinite(tmax)) return kInf;
    double sum = 0.0;
    for (int j = 0; j < terms; ++j) {
      p[j] = std::exp(t[j] - tmax);
      sum += p[j];
    }
    const double lse = tmax + std::log(sum);
    const double u = lse - data.ln_loss[i];
    const double abs_u = std::abs(u);
    total += abs_u <= delta ? 0.5 * u * u : delta * (abs_u - 0.5 * delta);
    if (!want_grad) continue;

    const double hprime = abs_u <= delta ? u : (u > 0 ? delta : -delta);
    const double w = hprime / static_cast<double>(count);
    for (int j = 0; j < terms; ++j) p[j] /= sum;

    grad[0] += w * p[0];  // e
    grad[1] += w * p[1];  // a
    if (spec.l3_terms) {
      const double p_r = idx_r >= 0 ? p[idx_r] : 0.0;
      const double p_c1 = p[idx_c1];
      const double p_c0 = p[idx_c0];
      grad[2] += w * (p_r + p_c0);                                   // b
      grad[3] += w * p_c1;                                           // c1
      grad[4] += w * (-p[1] * data.ln_n[i]);                         // alpha
      grad[5] += w * (-p_r * data.ln_d[i] - p_c0 * data.ln_dmin);    // beta
      grad[6] += w * (-p_c1 * gamma * lrp +
                      p_c0 * (gamma * ln1pe - 1.0 - gamma * lrp));   // g
      double d_eta1 = p_c0 * sigmoid_eta1;
      if (idx_r >= 0 && data.ln_r[i] != 0.0) d_eta1 += p_r * eta1e * data.ln_r[i];
      grad[7] += w * d_eta1;                                         // eta1
      grad[kEpsCoord] += w * (-p_c1 * gamma / rpe +
                              p_c0 * ((gamma + 1.0) / (1.0 + eps) - gamma / rpe));
    } else {
      grad[2] += w * p[idx_r];                                       // b
      grad[3] += w * (-p[1] * data.ln_n[i]);                         // alpha
      grad[4] += w * (-p[idx_r] * data.ln_d[i]);                     // beta
    }
    if (spec.cross_term) {
      const double p_k = p[idx_k];
      const int dom = data.domain[i];
      grad[9] += w * p_k;                   // f
      grad[10] += w * (-p_k * ln_k_dom[dom]);  // mu
      const double common = -w * p_k * mu / k_dom[dom];
      const int base = 11;
      switch (spec.k_repr) {
        case KRepr::K1:
          grad[base] += common / features[dom].k1;
          break;
        case KRepr::K2:
          grad[base] += common * features[dom].k2;
          break;
        case KRepr::K3:
          grad[base] += common / features[dom].k1;
          grad[base + 1] += common * features[dom].k2;
          break;
        case KRepr::K4:
          grad[base] += common / features[dom].k1;
          grad[base + 1] += common * features[dom].k2;
          grad[base + 2] += common / features[dom].k3;
          break;
      }
    }
  }
  return total / static_cast<double>(count);
}

namespace {

struct GridAxes {
  std::vector<std::vector<double>> axes;
  long total = 1;
};

std::vector<double> dedupe(std::vector<double> values) {
  std::vector<double> out;
  for (double v : values)
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  return out;
}

GridAxes build_axes(const LseSpec& spec, const InitGrid& grid) {
  GridAxes out;
  auto push = [&](std::vector<double> axis, const char* name) {
    axis = dedupe(std::move(axis));
    if (axis.empty())
      throw std::invalid_argument(std::string("FitConfig: empty init grid for ") + name);
    out.total *= static_cast<long>(axis.size());
    out.axes.push_back(std::move(axis));
  };
  push(grid.e, "e");
  push(grid.a, "a");
  push(grid.b, "b");
  if (spec.l3_terms) {
    push(grid.c, "c");
    push(grid.alpha, "alpha");
    push(grid.beta, "beta");
    std::vector<double> g_axis;
    for (double v : grid.gamma) g_axis.push_back(v > 0.0 ? std::log(v) : std::log(0.5));
    push(std::move(g_axis), "gamma");
    push(grid.eta1, "eta1");
    std::vector<double> eps_axis;
    for (double v : grid.epsilon) eps_axis.push_back(std::clamp(v, kEpsilonFloor, 1.0));
    push(std::move(eps_axis), "epsilon");
  } else {
    push(grid.alpha, "alpha");
    push(grid.beta, "beta");
  }
  if (spec.cross_term) {
    push(grid.f, "f");
    push(grid.mu, "mu");
    for (int i = 0; i < spec.weight_count(); ++i) push(grid.w, "w");
  }
  return out;
}

std::vector<double> grid_point(const GridAxes& axes, long index) {
  std::vector<double> x(axes.axes.size());
  long rem = index;
  for (std::size_t i = axes.axes.size(); i-- > 0;) {
    const long size = static_cast<long>(axes.axes[i].size());
    x[i] = axes.axes[i][rem % size];
    rem /= size;
  }
  return x;
}

struct StartOutcome {
  double objective = kInf;
  std::vector<double> x;
  int iterations = 0;
  bool converged = false;
  bool admissible = false;
};

}  // namespace

FitResult run_multistart(const LseSpec& spec, const PreparedData& data,
                         std::span<const DlcFeatures> features,
                         std::span<const DataPoint> fit_points, const FitConfig& cfg,
                         FitReport* report, std::vector<double>* best_x_out) {
  const int dim = spec.dim();
  if (static_cast<long>(fit_points.size()) < dim)
    throw std::invalid_argument("fit: need at least " + std::to_string(dim) +
                                " points after the r_floor filter, got " +
                                std::to_string(fit_points.size()));
  {
    std::set<std::tuple<double, double, double>> distinct;
    for (const DataPoint& p : fit_points) distinct.insert({p.n, p.d, p.r});
    if (static_cast<long>(distinct.size()) < dim)
      throw FitError("fit: degenerate design, only " + std::to_string(distinct.size()) +
                     " distinct (n, d, r) observations for " + std::to_string(dim) +
                     " free parameters");
  }

  GridAxes axes = build_axes(spec, cfg.init_grid);
  std::vector<long> selected;
  if (cfg.max_grid_candidates && *cfg.max_grid_candidates < axes.total) {
    const long cap = std::max(1L, *cfg.max_grid_candidates);
    selected.reserve(cap);
    for (long k = 0; k < cap; ++k)
      selected.push_back(static_cast<long>((static_cast<long long>(k) * axes.total) / cap));
  } else {
    selected.resize(axes.total);
    for (long k = 0; k < axes.total; ++k) selected[k] = k;
  }

  LbfgsOptions opts;
  opts.memory = 10;
  opts.max_iterations = cfg.max_iterations;
  opts.gradient_tolerance = cfg.gradient_tolerance;
  if (spec.l3_terms) {
    opts.bounds.resize(dim);
    opts.bounds[kEpsCoord] = Bound{kEpsilonFloor, 1.0};
  }

  auto is_admissible = [&](std::span<const double> x) {
    const int alpha_idx = spec.l3_terms ? 4 : 3;
    const int beta_idx = spec.l3_terms ? 5 : 4;
    if (!(x[alpha_idx] > 0.0) || !(x[beta_idx] > 0.0)) return false;
    if (spec.cross_term) {
      if (!(x[10] > 0.0)) return false;  // mu
      double w1, w2, w3;
      unpack_weights(spec, x, w1, w2, w3);
      for (const DlcFeatures& f : features)
        if (!(k_from_weights(spec.k_repr, w1, w2, w3, f) > 0.0)) return false;
    }
    return true;
  };

  const ObjectiveFn objective_fn = [&](std::span<const double> x, std::span<double> grad) {
    return lse_objective(spec, data, features, cfg.delta, x, grad);
  };

  std::vector<StartOutcome> outcomes(selected.size());
  std::atomic<std::size_t> next{0};
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned jobs =
      std::min<std::size_t>(cfg.jobs > 0 ? static_cast<unsigned>(cfg.jobs) : hw, selected.size());
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= selected.size()) break;
      LbfgsResult r = lbfgs_minimize(objective_fn, grid_point(axes, selected[i]), opts);
      StartOutcome& out = outcomes[i];
      out.objective = r.f;
      out.iterations = r.iterations;
      out.converged = r.converged;
      out.admissible = std::isfinite(r.f) && is_admissible(r.x);
      out.x = std::move(r.x);
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  long best = -1;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!outcomes[i].admissible) continue;
    if (best < 0 || outcomes[i].objective < outcomes[best].objective) best = static_cast<long>(i);
  }
  if (report) {
    report->grid_indices = selected;
    report->objectives.reserve(outcomes.size());
    report->admissible.reserve(outcomes.size());
    for (const StartOutcome& o : outcomes) {
      report->objectives.push_back(o.objective);
      report->admissible.push_back(o.admissible);
    }
  }
  if (best < 0)
    throw FitError("fit: no candidate with positive alpha and beta survived; the data may not "
                   "follow the law's trends");

  const StartOutcome& win = outcomes[best];
  FitResult result;
  result.objective = win.objective;
  result.init_index = static_cast<int>(best);
  result.grid_index = selected[best];
  result.grid_total = axes.total;
  result.iterations = win.iterations;
  result.converged = win.converged;
  result.d_min = data.d_min;
  result.points_used = static_cast<long>(fit_points.size());
  if (best_x_out) *best_x_out = win.x;

  if (spec.l3_terms) {
    ReparamVector v{win.x[0], win.x[1], win.x[2], win.x[3], win.x[4],
                    win.x[5], win.x[6], win.x[7], win.x[8]};
    DcptParams l3 = decode(v, data.d_min);
    result.constraints = check_constraints(l3, data.d_min);
    if (spec.cross_term) {
      CrossDomainParams cross;
      cross.base = l3;
      cross.F = std::exp(win.x[9]);
      cross.mu = win.x[10];
      cross.k_repr = spec.k_repr;
      double w1, w2, w3;
      unpack_weights(spec, win.x, w1, w2, w3);
      cross.w1 = w1;
      cross.w2 = w2;
      if (spec.k_repr == KRepr::K4) cross.w3 = w3;
      result.params = cross;
    } else {
      result.params = l3;
    }
  } else {
    ChinchillaParams ch;
    ch.E = std::exp(win.x[0]);
    ch.A = std::exp(win.x[1]);
    ch.B = std::exp(win.x[2]);
    ch.alpha = win.x[3];
    ch.beta = win.x[4];
    result.params = ch;
  }
  return result;
}

}  // namespace detail

namespace {

std::vector<double> pack(const ReparamVector& v) {
  return {v.e, v.a, v.b, v.c1, v.alpha, v.beta, v.g, v.eta1, v.eps_raw};
}

}  // namespace

double objective(const ReparamVector& v, std::span<const DataPoint> points, double d_min,
                 const FitConfig& cfg) {
  if (points.empty()) throw std::invalid_argument("objective: points must be non-empty");
  detail::PreparedData data = detail::prepare_points(points, {});
  data.d_min = d_min;
  data.ln_dmin = std::log(d_min);
  detail::LseSpec spec;
  spec.l3_terms = true;
  auto x = pack(v);
  return detail::lse_objective(spec, data, {}, cfg.delta, x, {});
}

ReparamVector gradient(const ReparamVector& v, std::span<const DataPoint> points, double d_min,
                       const FitConfig& cfg) {
  if (points.empty()) throw std::invalid_argument("gradient: points must be non-empty");
  detail::PreparedData data = detail::prepare_points(points, {});
  data.d_min = d_min;
  data.ln_dmin = std::log(d_min);
  detail::LseSpec spec;
  spec.l3_terms = true;
  auto x = pack(v);
  std::vector<double> grad(9, 0.0);
  detail::lse_objective(spec, data, {}, cfg.delta, x, grad);
  return ReparamVector{grad[0], grad[1], grad[2], grad[3], grad[4],
                       grad[5], grad[6], grad[7], grad[8]};
}

FitResult fit(LawId law, std::span<const DataPoint> points, const FitConfig& cfg,
              FitReport* report) {
  if (law != LawId::L3 && law != LawId::Chinchilla)
    throw std::invalid_argument(std::string("fit: unsupported law id '") + to_string(law) +
                                "' (supported: L3, chinchilla; use fit_cross_domain for the "
                                "cross-domain law)");
  std::vector<DataPoint> kept;
  kept.reserve(points.size());
  for (const DataPoint& p : points) {
    validate(p);
    if (p.r >= cfg.r_floor) kept.push_back(p);
  }
  if (kept.empty()) throw std::invalid_argument("fit: no points at or above the r_floor");

  detail::LseSpec spec;
  spec.l3_terms = law == LawId::L3;
  detail::PreparedData data = detail::prepare_points(kept, {});
  FitResult result = detail::run_multistart(spec, data, {}, kept, cfg, report, nullptr);
  result.metrics = metrics(result.params, kept, cfg.delta);
  return result;
}

FitMetrics metrics(const LawParams& params, std::span<const DataPoint> points, double delta) {
  if (points.empty()) throw std::invalid_argument("metrics: points must be non-empty");
  if (std::holds_alternative<CrossDomainParams>(params))
    throw std::invalid_argument("metrics: derive a per-domain law from cross-domain params first");
  double huber_sum = 0.0;
  double mean_obs = 0.0;
  for (const DataPoint& p : points) mean_obs += p.loss;
  mean_obs /= static_cast<double>(points.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (const DataPoint& p : points) {
    const double pred = evaluate(params, p.n, p.d, p.r);
    huber_sum += huber(std::log(pred) - std::log(p.loss), delta);
    ss_res += (p.loss - pred) * (p.loss - pred);
    ss_tot += (p.loss - mean_obs) * (p.loss - mean_obs);
  }
  if (ss_tot == 0.0)
    throw std::domain_error("metrics: R^2 undefined, all observed losses are identical");
  FitMetrics out;
  out.huber = huber_sum / static_cast<double>(points.size());
  out.r2 = 1.0 - ss_res / ss_tot;
  return out;
}

}  // namespace mixlaw
