#pragma once

#include <span>
#include <vector>

namespace urcd::detail {

/// Balanced transportation problem: ship `supply` (size k) to `demand`
/// (size m) at unit costs `cost` (row-major k x m). Both sides must be
/// strictly positive and have equal totals. Returns the optimal flow matrix.
std::vector<double> solve_transportation(std::span<const double> supply,
                                         std::span<const double> demand,
                                         std::span<const double> cost);

/// Bumps the counter behind diagnostics::transport_evaluations().
void count_transport_evaluation() noexcept;

}  // namespace urcd::detail
