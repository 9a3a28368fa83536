#pragma once

#include <cstdint>
#include <string_view>

#include "pipemaint/env/deterioration.hpp"
#include "pipemaint/rng.hpp"

namespace pipemaint::baselines {

/// Non-learning comparison policies. Random and NoIntervention are extras
/// used for dataset generation and as the no-maintenance reference.
enum class BaselineKind : std::uint8_t { Maintain5, Maintain10, Corrective, Greedy, Random, NoIntervention };

/// What the preventive schedules count: the planning calendar year
/// (t + 1, so years 5, 10, ..., 100) or the pipe's own age.
enum class ScheduleAnchor : std::uint8_t { Calendar, Age };

inline constexpr double kCorrectiveThreshold = 0.95;
inline constexpr double kGreedyThreshold = 0.80;

/// CLI spelling: maintain-5, maintain-10, corrective, greedy, random, none.
std::string_view baseline_name(BaselineKind kind);
/// Throws UsageError for unknown names.
BaselineKind parse_baseline(std::string_view name);

/// Stateless decision rule. Only Random reads from `rng`.
env::Action baseline_action(BaselineKind kind, const env::PipeState& state, Rng& rng,
                            ScheduleAnchor anchor = ScheduleAnchor::Calendar);

}  // namespace pipemaint::baselines
