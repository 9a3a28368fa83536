#include "pipemaint/baselines/baselines.hpp"

#include <string>

#include "pipemaint/error.hpp"

namespace pipemaint::baselines {

namespace {

env::Action scheduled(int period, const env::PipeState& state, ScheduleAnchor anchor) {
  const int clock = anchor == ScheduleAnchor::Calendar ? state.t() + 1 : state.age();
  return clock > 0 && clock % period == 0 ? env::Action::Maintain : env::Action::DoNothing;
}

}  // namespace

std::string_view baseline_name(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::Maintain5: return "maintain-5";
    case BaselineKind::Maintain10: return "maintain-10";
    case BaselineKind::Corrective: return "corrective";
    case BaselineKind::Greedy: return "greedy";
    case BaselineKind::Random: return "random";
    case BaselineKind::NoIntervention: return "none";
  }
  return "none";
}

BaselineKind parse_baseline(std::string_view name) {
  for (const auto kind : {BaselineKind::Maintain5, BaselineKind::Maintain10, BaselineKind::Corrective,
                          BaselineKind::Greedy, BaselineKind::Random, BaselineKind::NoIntervention}) {
    if (baseline_name(kind) == name) return kind;
  }
  throw UsageError("unknown strategy '" + std::string(name) +
                   "' (maintain-5|maintain-10|corrective|greedy|random|none)");
}

env::Action baseline_action(BaselineKind kind, const env::PipeState& state, Rng& rng, ScheduleAnchor anchor) {
  switch (kind) {
    case BaselineKind::Maintain5: return scheduled(5, state, anchor);
    case BaselineKind::Maintain10: return scheduled(10, state, anchor);
    case BaselineKind::Corrective:
      return state.pf() >= kCorrectiveThreshold ? env::Action::Replace : env::Action::DoNothing;
    // Greedy never replaces on its own; only sudden failures force one.
    case BaselineKind::Greedy:
      return state.pf() >= kGreedyThreshold ? env::Action::Maintain : env::Action::DoNothing;
    case BaselineKind::Random: return static_cast<env::Action>(rng.below(env::kActionCount));
    case BaselineKind::NoIntervention: return env::Action::DoNothing;
  }
  return env::Action::DoNothing;
}

}  // namespace pipemaint::baselines
