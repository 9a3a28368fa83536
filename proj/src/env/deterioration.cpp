#include "pipemaint/env/deterioration.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pipemaint/error.hpp"

namespace pipemaint::env {

namespace {

thread_local std::uint64_t g_thread_steps = 0;

}  // namespace

double base_failure_rate(Material material) {
  switch (material) {
    case Material::AsbestosCement: return 0.06;
    case Material::DuctileIron: return 0.02;
    case Material::GrayCastIron: return 0.07;
    case Material::PVC: return 0.015;
  }
  throw DomainError("unknown material");
}

std::string_view material_name(Material material) {
  switch (material) {
    case Material::AsbestosCement: return "asbestos_cement";
    case Material::DuctileIron: return "ductile_iron";
    case Material::GrayCastIron: return "gray_cast_iron";
    case Material::PVC: return "pvc";
  }
  throw DomainError("unknown material");
}

Material parse_material(std::string_view name) {
  for (const auto m : {Material::AsbestosCement, Material::DuctileIron, Material::GrayCastIron,
                       Material::PVC}) {
    if (material_name(m) == name) return m;
  }
  throw ParseError("unknown material '" + std::string(name) + "'");
}

std::string_view action_name(Action action) {
  switch (action) {
    case Action::DoNothing: return "do_nothing";
    case Action::Maintain: return "maintain";
    case Action::Replace: return "replace";
  }
  throw UsageError("unknown action");
}

Action action_from_code(int code) {
  if (code < 0 || code > 2) throw UsageError("action code " + std::to_string(code) + " not in {0,1,2}");
  return static_cast<Action>(code);
}

double failure_probability(double lambda_eff, double age) {
  if (!std::isfinite(lambda_eff) || !std::isfinite(age) || lambda_eff < 0.0 || age < 0.0) {
    throw DomainError("failure_probability requires finite lambda >= 0 and age >= 0");
  }
  return -std::expm1(-lambda_eff * age);
}

PipeState::PipeState(int age, Material material, double lambda_eff, int t)
    : age_(age), material_(material), lambda_eff_(lambda_eff), t_(t) {
  if (age < 0) throw DomainError("pipe age must be non-negative");
  if (!(lambda_eff > 0.0) || !std::isfinite(lambda_eff)) {
    throw DomainError("effective failure rate must be positive and finite");
  }
  if (t < 0 || t > kHorizon) throw DomainError("timestep outside [0, 100]");
  pf_ = failure_probability(lambda_eff, age);
}

void EnvConfig::validate() const {
  if (!(sudden_failure_prob >= 0.0 && sudden_failure_prob <= 1.0)) {
    throw ConfigError("env.sudden_failure_prob must lie in [0, 1]");
  }
  if (maintain_min_years < 0 || maintain_max_years < maintain_min_years) {
    throw ConfigError("env.maintain_min_years/maintain_max_years must satisfy 0 <= min <= max");
  }
}

double maintenance_cost(Action action, double pf) {
  switch (action) {
    // The near-failure penalty wins over the free do-nothing case.
    case Action::DoNothing: return pf > 0.9 ? -1.0 : 0.0;
    case Action::Maintain: return pf > 0.5 ? -0.5 : -1.0;
    case Action::Replace: return pf > 0.5 ? -0.8 : -1.0;
  }
  throw UsageError("unknown action");
}

Reward reward(Action action, double pf) {
  const double mc = maintenance_cost(action, pf);
  return {mc + (-pf), mc};
}

StepOutcome step(const PipeState& state, Action action, const EnvConfig& config, Rng& rng) {
  if (state.t() >= kHorizon) throw UsageError("step called on a finished episode");
  ++g_thread_steps;

  StepOutcome out;
  out.sudden_failure = rng.uniform() < config.sudden_failure_prob;
  out.executed_action = out.sudden_failure ? Action::Replace : action;

  const double observed_pf = out.sudden_failure ? 1.0 : state.pf();
  const Reward r = reward(out.executed_action, observed_pf);
  out.reward = r.total;
  out.mc = r.mc;
  out.pf_penalty = -observed_pf;

  int next_age = state.age();
  switch (out.executed_action) {
    case Action::DoNothing: next_age = state.age() + 1; break;
    case Action::Maintain: {
      const int improvement = rng.between(config.maintain_min_years, config.maintain_max_years);
      next_age = std::max(1, state.age() - improvement);
      break;
    }
    case Action::Replace: next_age = 1; break;
  }

  out.next_state = PipeState(next_age, state.material(), state.lambda_eff(), state.t() + 1);
  out.done = out.next_state.t() == kHorizon;
  return out;
}

PipeState reset(const PipeSpec& spec) {
  return PipeState(spec.age0, spec.material, spec.lambda_eff(), 0);
}

EncodedState encode_state(const PipeState& state) {
  EncodedState x{};
  x[0] = state.age() / 100.0;
  x[1 + static_cast<std::size_t>(state.material())] = 1.0;
  x[5] = state.lambda_eff();
  x[6] = state.pf();
  return x;
}

std::uint64_t thread_step_count() { return g_thread_steps; }

Environment::Environment(EnvConfig config, std::uint64_t seed) : config_(config), rng_(seed) {
  config_.validate();
}

const PipeState& Environment::reset(const PipeSpec& spec) {
  state_ = env::reset(spec);
  started_ = true;
  return state_;
}

const PipeState& Environment::reset(const PipeState& state) {
  state_ = PipeState(state.age(), state.material(), state.lambda_eff(), 0);
  started_ = true;
  return state_;
}

StepOutcome Environment::step(Action action) {
  if (!started_) throw UsageError("Environment::step called before reset");
  StepOutcome out = env::step(state_, action, config_, rng_);
  state_ = out.next_state;
  ++steps_taken_;
  return out;
}

}  // namespace pipemaint::env
