#pragma once

// Single-pipe deterioration simulator.
//
// A pipe ages one year per step, its failure probability follows the
// exponential lifetime law pf = 1 - exp(-lambda * age), and each year the
// planner chooses between doing nothing, maintaining (rolls the age back by a
// random number of years) or replacing (age back to 1). Every step also
// carries a small exogenous chance of sudden failure that forces a replace.

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>

#include "pipemaint/rng.hpp"

namespace pipemaint::env {

/// Steps per episode; one step is one year.
inline constexpr int kHorizon = 100;

enum class Material : std::uint8_t { AsbestosCement = 0, DuctileIron = 1, GrayCastIron = 2, PVC = 3 };
inline constexpr std::size_t kMaterialCount = 4;

/// Failures per km per year.
double base_failure_rate(Material material);
std::string_view material_name(Material material);
/// Inverse of material_name. Throws ParseError for anything else.
Material parse_material(std::string_view name);

/// Integer codes are part of the dataset file format.
enum class Action : std::uint8_t { DoNothing = 0, Maintain = 1, Replace = 2 };
inline constexpr std::size_t kActionCount = 3;

std::string_view action_name(Action action);
/// Throws UsageError for codes outside {0, 1, 2}.
Action action_from_code(int code);
constexpr int action_code(Action action) { return static_cast<int>(action); }

/// Static attributes of one pipe in the roster.
struct PipeSpec {
  int id = 0;
  int age0 = 0;
  Material material = Material::PVC;
  double length_m = 1.0;

  /// Failures per year for the whole pipe: rate per km times length in km.
  double lambda_eff() const { return base_failure_rate(material) * length_m / 1000.0; }

  bool operator==(const PipeSpec&) const = default;
};

/// pf = 1 - exp(-lambda * age). Throws DomainError for negative or
/// non-finite arguments.
double failure_probability(double lambda_eff, double age);

/// Dynamic MDP state. pf is derived from (lambda, age) on construction and
/// cannot be set independently.
class PipeState {
 public:
  PipeState() = default;
  PipeState(int age, Material material, double lambda_eff, int t);

  int age() const { return age_; }
  Material material() const { return material_; }
  double lambda_eff() const { return lambda_eff_; }
  double pf() const { return pf_; }
  int t() const { return t_; }

  bool operator==(const PipeState&) const = default;

 private:
  int age_ = 0;
  Material material_ = Material::PVC;
  double lambda_eff_ = 0.0;
  double pf_ = 0.0;
  int t_ = 0;
};

/// Tunable dynamics. Defaults are the values used throughout the project.
struct EnvConfig {
  double sudden_failure_prob = 0.05;
  int maintain_min_years = 5;
  int maintain_max_years = 10;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// Intervention cost component of the reward (non-positive).
///
/// Do-nothing is free unless the pipe is near failure; maintain and replace
/// are cheaper once the pipe is visibly degraded and cost a flat -1 when the
/// intervention is premature.
double maintenance_cost(Action action, double pf);

struct Reward {
  double total = 0.0;
  double mc = 0.0;
};

/// total = maintenance_cost(action, pf) - pf.
Reward reward(Action action, double pf);

struct StepOutcome {
  PipeState next_state;
  double reward = 0.0;
  double mc = 0.0;
  /// -pf as charged (so reward = mc + pf_penalty).
  double pf_penalty = 0.0;
  bool sudden_failure = false;
  Action executed_action = Action::DoNothing;
  bool done = false;
};

/// Advances one year. Draws the sudden-failure variate first (always exactly
/// one draw), then a maintenance improvement if a maintain is executed.
/// The reward is charged on the pf the agent observed (1.0 on sudden failure).
/// Throws UsageError if the state is already at the horizon.
StepOutcome step(const PipeState& state, Action action, const EnvConfig& config, Rng& rng);

/// Initial state for a roster entry.
PipeState reset(const PipeSpec& spec);

inline constexpr std::size_t kStateDim = 7;
using EncodedState = std::array<double, kStateDim>;

/// Network input: [age/100, one-hot material (AC, DI, GCI, PVC), lambda_eff, pf].
EncodedState encode_state(const PipeState& state);

/// Number of env::step calls made on the calling thread since it started.
/// Used to prove that offline training never touches the simulator.
std::uint64_t thread_step_count();

/// Stateful wrapper owning its random stream; one instance per thread.
class Environment {
 public:
  explicit Environment(EnvConfig config, std::uint64_t seed);

  const PipeState& reset(const PipeSpec& spec);
  /// Restarts from an arbitrary state (used to replay logged initial states).
  const PipeState& reset(const PipeState& state);
  StepOutcome step(Action action);

  const PipeState& state() const { return state_; }
  bool done() const { return state_.t() >= kHorizon; }
  const EnvConfig& config() const { return config_; }
  std::uint64_t steps_taken() const { return steps_taken_; }

 private:
  EnvConfig config_;
  Rng rng_;
  PipeState state_;
  bool started_ = false;
  std::uint64_t steps_taken_ = 0;
};

}  // namespace pipemaint::env
