// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace mixlaw {

/// Early-curve learnability features of one domain:
///   k1: validation loss after 1000 steps (nats)
///   k2: loss drop over the first 5000 steps, L(0) - L(5000)
///   k3: mean second difference of the per-1000-step loss deltas over the
///       first 10 intervals (negative for convex-decreasing curves)
struct DlcFeatures {
  double k1 = 0;
  double k2 = 0;
  double k3 = 0;
};

}  // namespace mixlaw
