// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace mixlaw {

/// Objective callback: returns f(x) and fills grad (same length as x).
/// Non-finite returns are treated as out-of-domain and rejected by the line
/// search.
using ObjectiveFn = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct Bound {
  double lo;
  double hi;
};

struct LbfgsOptions {
  int memory = 10;
  int max_iterations = 1000;
  double gradient_tolerance = 1e-8;  // on the max-norm of the projected gradient
  // Per-coordinate box constraints, enforced by clamp projection inside the
  // line search. Empty means unconstrained.
  std::vector<std::optional<Bound>> bounds;
};

struct LbfgsResult {
  std::vector<double> x;
  double f = 0;
  int iterations = 0;
  bool converged = false;  // projected gradient max-norm <= tolerance
};

/// Limited-memory BFGS with strong-Wolfe line search and optional box
/// projection. Deterministic: no randomness, fixed evaluation order.
LbfgsResult lbfgs_minimize(const ObjectiveFn& objective, std::vector<double> x0,
                           const LbfgsOptions& options);

}  // namespace mixlaw
