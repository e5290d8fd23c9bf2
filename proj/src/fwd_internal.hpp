#pragma once

#include <chrono>

#include "flexmkt/forwarding.hpp"

namespace flexmkt::fwd::detail {

using Clock = std::chrono::steady_clock;

inline double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

/// Sum of Layer-1 volumes.
std::vector<double> layer1_volumes(const market::MarketCase& c, const std::vector<clearing::ClearingResult>& l1);

/// Layer 1 for every DSO; records solves. Returns false (and sets the status)
/// if some DSO market has no solution.
bool run_layer1(const market::MarketCase& c, Outcome& out);

/// Fills volumes, j_tot and the safety verdict from the layers present.
void finalize(const market::MarketCase& c, Outcome& out, Clock::time_point t0);

}  // namespace flexmkt::fwd::detail
