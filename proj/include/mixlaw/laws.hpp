// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <variant>

#include "mixlaw/model.hpp"

namespace mixlaw {

/// L = E + A/N^alpha + B/D^beta
struct ChinchillaParams {
  double E = 0, A = 0, B = 0;
  double alpha = 0, beta = 0;
};

/// L = [(n_c/N)^(alpha_n/alpha_d) + d_c/D]^alpha_d
struct OpenAiParams {
  double n_c = 0, d_c = 0;
  double alpha_n = 0, alpha_d = 0;
};

enum class DcptVariant { L1, L2, L3, L4, L5 };

/// The five mixture-ratio parameterizations, one record with per-variant
/// field presence:
///   L1: E + A/N^a + B/D^b + C/(r+eps)^g
///   L2: E + A/N^a + (B/D^b + C/(r+eps)^g)^eta
///   L3: E + A/N^a + B r^eta / D^b + C/(r+eps)^g
///   L4: E + A/N^a + B b_base^r / D^b + C / c_base^r
///   L5: E + A/N^a + B / (r D + (1-r) sigma)^b
struct DcptParams {
  DcptVariant variant = DcptVariant::L3;
  double E = 0, A = 0, B = 0;
  double alpha = 0, beta = 0;
  std::optional<double> C;        // L1-L4
  std::optional<double> gamma;    // L1-L3
  std::optional<double> eta;      // L2 (outer exponent), L3 (ratio exponent)
  std::optional<double> epsilon;  // L1-L3, in [1e-4, 1]
  std::optional<double> b_base;   // L4
  std::optional<double> c_base;   // L4
  std::optional<double> sigma;    // L5, B-tokens
};

/// Minimum admissible ratio offset; keeps r + epsilon > 0 over r in [0, 1].
inline constexpr double kEpsilonFloor = 1e-4;

enum class KRepr { K1, K2, K3, K4 };

const char* to_string(KRepr repr);
KRepr k_repr_from_string(const std::string& name);

/// L3 extended with a per-domain learnability term F / K^mu.
struct CrossDomainParams {
  DcptParams base;  // L3 shape
  double F = 0;
  double mu = 0;
  KRepr k_repr = KRepr::K3;
  double w1 = 0, w2 = 0;
  std::optional<double> w3;  // K4 only
};

struct ConstraintReport {
  bool eta_ok = false;
  bool c_ok = false;
  bool positivity_ok = false;
  double c0 = 0;  // NaN when gamma <= 0 makes the bound undefined
};

using LawParams = std::variant<ChinchillaParams, OpenAiParams, DcptParams, CrossDomainParams>;

void validate(const ChinchillaParams& p);
void validate(const OpenAiParams& p);
void validate(const DcptParams& p);
void validate(const CrossDomainParams& p);

/// Number of fitted parameters of the given record (drives the minimum
/// observation count for fitting).
int free_parameter_count(const LawParams& params);

double evaluate(const ChinchillaParams& p, double n, double d);
double evaluate(const OpenAiParams& p, double n, double d);
double evaluate(const DcptParams& p, double n, double d, double r);
double evaluate(const CrossDomainParams& p, double n, double d, double r, double k);

/// Dispatch over the registry. k is required exactly when params holds
/// CrossDomainParams (k > 0), and rejected otherwise.
double evaluate(const LawParams& params, double n, double d, double r,
                std::optional<double> k = std::nullopt);

struct L3Partials {
  double dn = 0;
  double dd = 0;
  double dr = 0;
};

/// Closed-form partial derivatives of the L3 surface in (N, D, r).
L3Partials partials(const DcptParams& l3, double n, double d, double r);

/// d2L/(dD dr) = -eta*beta*B*r^(eta-1)/D^(beta+1).
double mixed_partial_dr_dd(const DcptParams& l3, double n, double d, double r);

/// C0 = B*eta*(1+eps)^(gamma+1) / (gamma * d_min^beta). The dL/dr < 0 trend
/// holds for d >= d_min whenever eta > 1 and C > C0.
double c0_bound(const DcptParams& l3, double d_min);

ConstraintReport check_constraints(const DcptParams& l3, double d_min);

/// Fixes r = r0: E0 = E + C/(r0+eps)^gamma, B0 = B*r0^eta, A/alpha/beta kept.
/// Evaluations of the result match the L3 surface at r = r0 bit-for-bit.
ChinchillaParams reduce_to_chinchilla(const DcptParams& l3, double r0);

/// Fixes K = k0: the base law with E replaced by E + F/k0^mu. Evaluations
/// match the cross-domain surface at K = k0 bit-for-bit.
DcptParams derive_domain_law(const CrossDomainParams& cross, double k0);

// --- fitted-law artifact document -----------------------------------------

const char* law_id(const LawParams& params);

struct LawArtifact {
  LawParams params;
  double d_min = 0;
  std::optional<double> metric_huber;
  std::optional<double> metric_r2;
  std::string fit_metadata_json;  // optional JSON object, verbatim
};

/// Serializes to the artifact JSON document: {law_id, params, d_min, metrics,
/// fit_metadata}. Numbers survive a round-trip losslessly.
std::string to_artifact_json(const LawArtifact& artifact);

LawArtifact artifact_from_json(const std::string& text);

}  // namespace mixlaw
