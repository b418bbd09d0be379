// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "mixlaw/laws.hpp"
#include "mixlaw/model.hpp"

namespace mixlaw {

enum class RunLogFormat { JsonLines, Csv };

/// Evaluation grid for synthetic curve generation. Losses are drawn from a
/// known generator law, optionally perturbed by multiplicative Gaussian noise
/// (relative std noise_rel_std, truncated at +-4 sigma, deterministic in
/// seed).
struct SynthDesign {
  std::vector<double> model_sizes;          // B-params
  std::vector<double> domain_ratios;        // r_domain values in [0, 1]
  std::vector<std::int64_t> eval_steps;     // strictly increasing
  double noise_rel_std = 0.0;
  std::uint64_t seed = 0;
};

void validate(const SynthDesign& design);

/// Parses a run log into curves grouped by (domain, n, r_domain), samples
/// sorted by step. Duplicate (group, step) records raise ConflictError;
/// malformed lines raise ParseError; invariant violations raise SchemaError.
std::vector<LossCurve> parse_run_log(std::istream& input, RunLogFormat format);

/// Inverse of parse_run_log: emits one record per sample in canonical order
/// (curves sorted by group key, samples by step). parse(serialize(x)) == x.
void serialize_run_log(std::ostream& output, std::span<const LossCurve> curves,
                       RunLogFormat format);

/// Generates one curve per (model size, domain ratio) pair. The domain loss
/// comes from gen_domain at r = r_domain, the general loss from gen_general
/// at r = 1 - r_domain. Both generators must be D-CPT records defined at
/// every design point. Output is deterministic in (inputs, seed).
std::vector<LossCurve> synthesize_curves(const LawParams& gen_general, const LawParams& gen_domain,
                                         const SynthDesign& design, const TrainConfig& cfg = {},
                                         const std::string& domain_name = "synthetic");

namespace detail {
/// Standard normal draw keyed by (seed, side, n, r_domain, step); truncated
/// at +-4 by deterministic re-draw. Exposed for the noise-distribution tests.
double noise_draw(std::uint64_t seed, CorpusSide side, double n, double r_domain,
                  std::int64_t step);
}  // namespace detail

}  // namespace mixlaw
