// SPDX-License-Identifier: Apache-2.0

#include "mixlaw/laws.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace mixlaw {

namespace {

using nlohmann::json;

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

void require_present(const std::optional<double>& field, const char* msg) {
  require(field.has_value() && std::isfinite(*field), msg);
}

void require_absent(const std::optional<double>& field, const char* msg) {
  require(!field.has_value(), msg);
}

void validate_point(double n, double d, double r) {
  validate(DataPoint{n, d, r, 1.0});
}

// r^eta with the registry convention 0^eta = 0 for eta > 0.
double ratio_pow(double r, double eta) {
  if (r == 0.0) {
    if (eta > 0.0) return 0.0;
    throw std::domain_error("evaluate: r = 0 requires eta > 0");
  }
  return std::pow(r, eta);
}

}  // namespace

const char* to_string(KRepr repr) {
  switch (repr) {
    case KRepr::K1: return "K1";
    case KRepr::K2: return "K2";
    case KRepr::K3: return "K3";
    case KRepr::K4: return "K4";
  }
  return "K?";
}

KRepr k_repr_from_string(const std::string& name) {
  if (name == "K1") return KRepr::K1;
  if (name == "K2") return KRepr::K2;
  if (name == "K3") return KRepr::K3;
  if (name == "K4") return KRepr::K4;
  throw std::invalid_argument("unknown K representation: " + name);
}

void validate(const ChinchillaParams& p) {
  require(p.E >= 0.0 && p.A >= 0.0 && p.B >= 0.0, "ChinchillaParams: E, A, B must be >= 0");
  require(p.alpha > 0.0 && p.beta > 0.0, "ChinchillaParams: alpha, beta must be > 0");
}

void validate(const OpenAiParams& p) {
  require(p.n_c > 0.0 && p.d_c > 0.0 && p.alpha_n > 0.0 && p.alpha_d > 0.0,
          "OpenAiParams: all fields must be > 0");
}

void validate(const DcptParams& p) {
  switch (p.variant) {
    case DcptVariant::L1:
      require_present(p.C, "L1: C required");
      require_present(p.gamma, "L1: gamma required");
      require_present(p.epsilon, "L1: epsilon required");
      require_absent(p.eta, "L1: eta not a parameter");
      require_absent(p.b_base, "L1: b_base not a parameter");
      require_absent(p.c_base, "L1: c_base not a parameter");
      require_absent(p.sigma, "L1: sigma not a parameter");
      break;
    case DcptVariant::L2:
    case DcptVariant::L3:
      require_present(p.C, "L2/L3: C required");
      require_present(p.gamma, "L2/L3: gamma required");
      require_present(p.eta, "L2/L3: eta required");
      require_present(p.epsilon, "L2/L3: epsilon required");
      require_absent(p.b_base, "L2/L3: b_base not a parameter");
      require_absent(p.c_base, "L2/L3: c_base not a parameter");
      require_absent(p.sigma, "L2/L3: sigma not a parameter");
      break;
    case DcptVariant::L4:
      require_present(p.C, "L4: C required");
      require_present(p.b_base, "L4: b_base required");
      require_present(p.c_base, "L4: c_base required");
      require(*p.b_base > 0.0 && *p.c_base > 0.0, "L4: bases must be > 0");
      require_absent(p.gamma, "L4: gamma not a parameter");
      require_absent(p.eta, "L4: eta not a parameter");
      require_absent(p.epsilon, "L4: epsilon not a parameter");
      require_absent(p.sigma, "L4: sigma not a parameter");
      break;
    case DcptVariant::L5:
      require_present(p.sigma, "L5: sigma required");
      require(*p.sigma > 0.0, "L5: sigma must be > 0");
      require_absent(p.C, "L5: C not a parameter");
      require_absent(p.gamma, "L5: gamma not a parameter");
      require_absent(p.eta, "L5: eta not a parameter");
      require_absent(p.epsilon, "L5: epsilon not a parameter");
      require_absent(p.b_base, "L5: b_base not a parameter");
      require_absent(p.c_base, "L5: c_base not a parameter");
      break;
  }
  if (p.epsilon) require(*p.epsilon >= kEpsilonFloor && *p.epsilon <= 1.0,
                         "DcptParams: epsilon must be in [1e-4, 1]");
}

void validate(const CrossDomainParams& p) {
  require(p.base.variant == DcptVariant::L3, "CrossDomainParams: base must be L3");
  validate(p.base);
  require(std::isfinite(p.F) && p.F > 0.0, "CrossDomainParams: F must be > 0");
  require(std::isfinite(p.mu) && p.mu > 0.0, "CrossDomainParams: mu must be > 0");
  require(std::isfinite(p.w1) && std::isfinite(p.w2), "CrossDomainParams: weights must be finite");
  if (p.k_repr == KRepr::K4)
    require_present(p.w3, "CrossDomainParams: K4 requires w3");
  else
    require_absent(p.w3, "CrossDomainParams: w3 only valid for K4");
}

int free_parameter_count(const LawParams& params) {
  struct Counter {
    int operator()(const ChinchillaParams&) const { return 5; }
    int operator()(const OpenAiParams&) const { return 4; }
    int operator()(const DcptParams& p) const {
      switch (p.variant) {
        case DcptVariant::L1: return 8;
        case DcptVariant::L2: return 9;
        case DcptVariant::L3: return 9;
        case DcptVariant::L4: return 8;
        case DcptVariant::L5: return 6;
      }
      return 0;
    }
    int operator()(const CrossDomainParams& p) const {
      int weights = 0;
      switch (p.k_repr) {
        case KRepr::K1: weights = 1; break;
        case KRepr::K2: weights = 1; break;
        case KRepr::K3: weights = 2; break;
        case KRepr::K4: weights = 3; break;
      }
      return 9 + 2 + weights;  // base + F, mu + K weights
    }
  };
  return std::visit(Counter{}, params);
}

double evaluate(const ChinchillaParams& p, double n, double d) {
  validate_point(n, d, 0.0);
  // Summation order mirrors the L3 fixed-ratio reduction so the consistency
  // identity holds bit-for-bit.
  return (p.E + p.A / std::pow(n, p.alpha)) + p.B / std::pow(d, p.beta);
}

double evaluate(const OpenAiParams& p, double n, double d) {
  validate_point(n, d, 0.0);
  return std::pow(std::pow(p.n_c / n, p.alpha_n / p.alpha_d) + p.d_c / d, p.alpha_d);
}

double evaluate(const DcptParams& p, double n, double d, double r) {
  validate(p);
  validate_point(n, d, r);
  const double a_term = p.A / std::pow(n, p.alpha);
  switch (p.variant) {
    case DcptVariant::L1: {
      const double rp = r + *p.epsilon;
      if (!(rp > 0.0)) throw std::domain_error("evaluate: r + epsilon must be > 0");
      return ((p.E + *p.C / std::pow(rp, *p.gamma)) + a_term) + p.B / std::pow(d, p.beta);
    }
    case DcptVariant::L2: {
      const double rp = r + *p.epsilon;
      if (!(rp > 0.0)) throw std::domain_error("evaluate: r + epsilon must be > 0");
      const double inner = p.B / std::pow(d, p.beta) + *p.C / std::pow(rp, *p.gamma);
      return (p.E + a_term) + std::pow(inner, *p.eta);
    }
    case DcptVariant::L3: {
      const double rp = r + *p.epsilon;
      if (!(rp > 0.0)) throw std::domain_error("evaluate: r + epsilon must be > 0");
      return ((p.E + *p.C / std::pow(rp, *p.gamma)) + a_term) +
             (p.B * ratio_pow(r, *p.eta)) / std::pow(d, p.beta);
    }
    case DcptVariant::L4:
      return ((p.E + *p.C / std::pow(*p.c_base, r)) + a_term) +
             (p.B * std::pow(*p.b_base, r)) / std::pow(d, p.beta);
    case DcptVariant::L5: {
      const double denom = r * d + (1.0 - r) * *p.sigma;
      if (!(denom > 0.0)) throw std::domain_error("evaluate: L5 denominator must be > 0");
      return (p.E + a_term) + p.B / std::pow(denom, p.beta);
    }
  }
  throw std::logic_error("evaluate: unreachable variant");
}

double evaluate(const CrossDomainParams& p, double n, double d, double r, double k) {
  validate(p);
  if (!(k > 0.0)) throw std::domain_error("evaluate: K must be > 0");
  const DcptParams& b = p.base;
  validate_point(n, d, r);
  const double rp = r + *b.epsilon;
  if (!(rp > 0.0)) throw std::domain_error("evaluate: r + epsilon must be > 0");
  return (((b.E + p.F / std::pow(k, p.mu)) + *b.C / std::pow(rp, *b.gamma)) +
          b.A / std::pow(n, b.alpha)) +
         (b.B * ratio_pow(r, *b.eta)) / std::pow(d, b.beta);
}

double evaluate(const LawParams& params, double n, double d, double r, std::optional<double> k) {
  struct Eval {
    double n, d, r;
    std::optional<double> k;
    double operator()(const ChinchillaParams& p) const {
      if (k) throw std::invalid_argument("evaluate: k only valid for cross-domain laws");
      return evaluate(p, n, d);
    }
    double operator()(const OpenAiParams& p) const {
      if (k) throw std::invalid_argument("evaluate: k only valid for cross-domain laws");
      return evaluate(p, n, d);
    }
    double operator()(const DcptParams& p) const {
      if (k) throw std::invalid_argument("evaluate: k only valid for cross-domain laws");
      return evaluate(p, n, d, r);
    }
    double operator()(const CrossDomainParams& p) const {
      if (!k) throw std::invalid_argument("evaluate: cross-domain law requires k");
      return evaluate(p, n, d, r, *k);
    }
  };
  return std::visit(Eval{n, d, r, k}, params);
}

namespace {

const DcptParams& require_l3(const DcptParams& p, const char* who) {
  if (p.variant != DcptVariant::L3)
    throw std::invalid_argument(std::string(who) + ": requires an L3 record");
  validate(p);
  return p;
}

}  // namespace

L3Partials partials(const DcptParams& l3, double n, double d, double r) {
  require_l3(l3, "partials");
  validate_point(n, d, r);
  const double eta = *l3.eta, gamma = *l3.gamma, eps = *l3.epsilon, C = *l3.C;
  const double rp = r + eps;
  L3Partials out;
  out.dn = -l3.alpha * l3.A / std::pow(n, l3.alpha + 1.0);
  out.dd = -l3.beta * l3.B * ratio_pow(r, eta) / std::pow(d, l3.beta + 1.0);
  out.dr = l3.B * eta * ratio_pow(r, eta - 1.0) / std::pow(d, l3.beta) -
           gamma * C / std::pow(rp, gamma + 1.0);
  return out;
}

double mixed_partial_dr_dd(const DcptParams& l3, double n, double d, double r) {
  require_l3(l3, "mixed_partial_dr_dd");
  validate_point(n, d, r);
  return -*l3.eta * l3.beta * l3.B * ratio_pow(r, *l3.eta - 1.0) / std::pow(d, l3.beta + 1.0);
}

double c0_bound(const DcptParams& l3, double d_min) {
  require_l3(l3, "c0_bound");
  if (!(*l3.gamma > 0.0)) throw std::domain_error("c0_bound: gamma must be > 0");
  if (!(d_min > 0.0)) throw std::invalid_argument("c0_bound: d_min must be > 0");
  return l3.B * *l3.eta * std::pow(1.0 + *l3.epsilon, *l3.gamma + 1.0) /
         (*l3.gamma * std::pow(d_min, l3.beta));
}

ConstraintReport check_constraints(const DcptParams& l3, double d_min) {
  require_l3(l3, "check_constraints");
  ConstraintReport report;
  report.eta_ok = *l3.eta > 1.0;
  report.positivity_ok = l3.alpha > 0.0 && l3.beta > 0.0 && *l3.gamma > 0.0;
  if (*l3.gamma > 0.0 && d_min > 0.0) {
    report.c0 = c0_bound(l3, d_min);
    report.c_ok = *l3.C > report.c0;
  } else {
    report.c0 = std::numeric_limits<double>::quiet_NaN();
    report.c_ok = false;
  }
  return report;
}

ChinchillaParams reduce_to_chinchilla(const DcptParams& l3, double r0) {
  require_l3(l3, "reduce_to_chinchilla");
  if (!(r0 >= 0.0 && r0 <= 1.0))
    throw std::invalid_argument("reduce_to_chinchilla: r0 must be in [0, 1]");
  ChinchillaParams out;
  out.E = l3.E + *l3.C / std::pow(r0 + *l3.epsilon, *l3.gamma);
  out.B = l3.B * ratio_pow(r0, *l3.eta);
  out.A = l3.A;
  out.alpha = l3.alpha;
  out.beta = l3.beta;
  return out;
}

DcptParams derive_domain_law(const CrossDomainParams& cross, double k0) {
  validate(cross);
  if (!(k0 > 0.0)) throw std::domain_error("derive_domain_law: k0 must be > 0");
  DcptParams out = cross.base;
  out.E = cross.base.E + cross.F / std::pow(k0, cross.mu);
  return out;
}

// --- artifact document ------------------------------------------------------

const char* law_id(const LawParams& params) {
  struct Id {
    const char* operator()(const ChinchillaParams&) const { return "chinchilla"; }
    const char* operator()(const OpenAiParams&) const { return "openai"; }
    const char* operator()(const DcptParams& p) const {
      switch (p.variant) {
        case DcptVariant::L1: return "L1";
        case DcptVariant::L2: return "L2";
        case DcptVariant::L3: return "L3";
        case DcptVariant::L4: return "L4";
        case DcptVariant::L5: return "L5";
      }
      return "L?";
    }
    const char* operator()(const CrossDomainParams&) const { return "cross_domain"; }
  };
  return std::visit(Id{}, params);
}

namespace {

json params_to_json(const LawParams& params) {
  json out = json::object();
  struct Fill {
    json& out;
    void operator()(const ChinchillaParams& p) const {
      out["E"] = p.E;
      out["A"] = p.A;
      out["B"] = p.B;
      out["alpha"] = p.alpha;
      out["beta"] = p.beta;
    }
    void operator()(const OpenAiParams& p) const {
      out["n_c"] = p.n_c;
      out["d_c"] = p.d_c;
      out["alpha_n"] = p.alpha_n;
      out["alpha_d"] = p.alpha_d;
    }
    void operator()(const DcptParams& p) const {
      out["E"] = p.E;
      out["A"] = p.A;
      out["B"] = p.B;
      out["alpha"] = p.alpha;
      out["beta"] = p.beta;
      if (p.C) out["C"] = *p.C;
      if (p.gamma) out["gamma"] = *p.gamma;
      if (p.eta) out["eta"] = *p.eta;
      if (p.epsilon) out["epsilon"] = *p.epsilon;
      if (p.b_base) out["b_base"] = *p.b_base;
      if (p.c_base) out["c_base"] = *p.c_base;
      if (p.sigma) out["sigma"] = *p.sigma;
    }
    void operator()(const CrossDomainParams& p) const {
      (*this)(p.base);
      out["F"] = p.F;
      out["mu"] = p.mu;
      out["w1"] = p.w1;
      out["w2"] = p.w2;
      if (p.w3) out["w3"] = *p.w3;
    }
  };
  std::visit(Fill{out}, params);
  return out;
}

double field(const json& obj, const char* name) {
  if (!obj.contains(name) || !obj[name].is_number())
    throw std::invalid_argument(std::string("law artifact: missing numeric field '") + name + "'");
  return obj[name].get<double>();
}

std::optional<double> opt_field(const json& obj, const char* name) {
  if (!obj.contains(name)) return std::nullopt;
  return obj[name].get<double>();
}

DcptParams dcpt_from_json(DcptVariant variant, const json& p) {
  DcptParams out;
  out.variant = variant;
  out.E = field(p, "E");
  out.A = field(p, "A");
  out.B = field(p, "B");
  out.alpha = field(p, "alpha");
  out.beta = field(p, "beta");
  out.C = opt_field(p, "C");
  out.gamma = opt_field(p, "gamma");
  out.eta = opt_field(p, "eta");
  out.epsilon = opt_field(p, "epsilon");
  out.b_base = opt_field(p, "b_base");
  out.c_base = opt_field(p, "c_base");
  out.sigma = opt_field(p, "sigma");
  validate(out);
  return out;
}

LawParams params_from_json(const std::string& id, const json& p, const json& doc) {
  if (id == "chinchilla") {
    ChinchillaParams out{field(p, "E"), field(p, "A"), field(p, "B"), field(p, "alpha"),
                         field(p, "beta")};
    validate(out);
    return out;
  }
  if (id == "openai") {
    OpenAiParams out{field(p, "n_c"), field(p, "d_c"), field(p, "alpha_n"), field(p, "alpha_d")};
    validate(out);
    return out;
  }
  if (id == "L1") return dcpt_from_json(DcptVariant::L1, p);
  if (id == "L2") return dcpt_from_json(DcptVariant::L2, p);
  if (id == "L3") return dcpt_from_json(DcptVariant::L3, p);
  if (id == "L4") return dcpt_from_json(DcptVariant::L4, p);
  if (id == "L5") return dcpt_from_json(DcptVariant::L5, p);
  if (id == "cross_domain") {
    CrossDomainParams out;
    json base = p;
    base.erase("F");
    base.erase("mu");
    base.erase("w1");
    base.erase("w2");
    base.erase("w3");
    out.base = dcpt_from_json(DcptVariant::L3, base);
    out.F = field(p, "F");
    out.mu = field(p, "mu");
    out.w1 = field(p, "w1");
    out.w2 = field(p, "w2");
    out.w3 = opt_field(p, "w3");
    if (!doc.contains("k_repr") || !doc["k_repr"].is_string())
      throw std::invalid_argument("law artifact: cross_domain requires string field 'k_repr'");
    out.k_repr = k_repr_from_string(doc["k_repr"].get<std::string>());
    validate(out);
    return out;
  }
  throw std::invalid_argument("law artifact: unknown law_id '" + id + "'");
}

}  // namespace

std::string to_artifact_json(const LawArtifact& artifact) {
  json doc;
  doc["law_id"] = law_id(artifact.params);
  doc["params"] = params_to_json(artifact.params);
  doc["d_min"] = artifact.d_min;
  if (const auto* cross = std::get_if<CrossDomainParams>(&artifact.params))
    doc["k_repr"] = to_string(cross->k_repr);
  if (artifact.metric_huber || artifact.metric_r2) {
    json metrics = json::object();
    if (artifact.metric_huber) metrics["huber"] = *artifact.metric_huber;
    if (artifact.metric_r2) metrics["r2"] = *artifact.metric_r2;
    metrics["residual_space"] = "log";
    doc["metrics"] = metrics;
  }
  if (!artifact.fit_metadata_json.empty())
    doc["fit_metadata"] = json::parse(artifact.fit_metadata_json);
  return doc.dump(2) + "\n";
}

LawArtifact artifact_from_json(const std::string& text) {
  json doc = json::parse(text);
  if (!doc.contains("law_id") || !doc["law_id"].is_string())
    throw std::invalid_argument("law artifact: missing string field 'law_id'");
  if (!doc.contains("params") || !doc["params"].is_object())
    throw std::invalid_argument("law artifact: missing object field 'params'");
  LawArtifact out;
  out.params = params_from_json(doc["law_id"].get<std::string>(), doc["params"], doc);
  out.d_min = doc.value("d_min", 0.0);
  if (doc.contains("metrics")) {
    const json& metrics = doc["metrics"];
    if (metrics.contains("huber")) out.metric_huber = metrics["huber"].get<double>();
    if (metrics.contains("r2")) out.metric_r2 = metrics["r2"].get<double>();
  }
  if (doc.contains("fit_metadata")) out.fit_metadata_json = doc["fit_metadata"].dump();
  return out;
}

}  // namespace mixlaw
