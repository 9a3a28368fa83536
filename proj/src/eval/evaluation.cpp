#include "pipemaint/eval/evaluation.hpp"

#include <filesystem>

#include "pipemaint/error.hpp"
#include "pipemaint/format.hpp"
#include "pipemaint/greedy.hpp"

namespace pipemaint::eval {

namespace {

constexpr std::uint64_t kPolicyStream = 1;

double action_price(env::Action a) {
  switch (a) {
    case env::Action::DoNothing: return 0.0;
    case env::Action::Maintain: return 0.5;
    case env::Action::Replace: return 0.8;
  }
  return 0.0;
}

PipeReport summarize_pipe(int pipe_id, std::span<const EpisodeTrace> traces) {
  PipeReport report;
  report.pipe_id = pipe_id;
  report.episodes = traces.size();
  double cost = 0.0;
  double pf = 0.0;
  std::size_t steps = 0;
  for (const auto& trace : traces) {
    cost += intervention_cost(trace);
    for (const auto& s : trace.steps) {
      pf += s.state.pf();
      report.counts.add(s.executed);
      ++steps;
    }
  }
  report.avg_cost = traces.empty() ? 0.0 : cost / static_cast<double>(traces.size());
  report.avg_pf = steps == 0 ? 0.0 : pf / static_cast<double>(steps);
  return report;
}

PolicyReport finalize(std::string name, std::size_t episodes_per_pipe, std::vector<PipeReport> per_pipe) {
  PolicyReport report;
  report.policy = std::move(name);
  report.pipes = per_pipe.size();
  report.episodes_per_pipe = episodes_per_pipe;
  double cost = 0.0;
  double pf = 0.0;
  for (const auto& p : per_pipe) {
    cost += p.avg_cost;
    pf += p.avg_pf;
    report.counts.do_nothing += p.counts.do_nothing;
    report.counts.maintain += p.counts.maintain;
    report.counts.replace += p.counts.replace;
  }
  if (!per_pipe.empty()) {
    const double n = static_cast<double>(per_pipe.size());
    report.avg_intervention_cost = cost / n;
    report.avg_pf = pf / n;
    report.replace_per_pipe = static_cast<double>(report.counts.replace) / (n * static_cast<double>(episodes_per_pipe));
  }
  if (report.avg_intervention_cost > 0.0) {
    report.cost_effectiveness = (1.0 - report.avg_pf) / report.avg_intervention_cost;
  }
  report.per_pipe = std::move(per_pipe);
  return report;
}

void check_episodes(std::size_t episodes_per_pipe) {
  if (episodes_per_pipe == 0) throw UsageError("episodes_per_pipe must be at least 1");
}

}  // namespace

std::string BaselinePolicy::name() const { return std::string(baselines::baseline_name(kind_)); }

void BaselinePolicy::act(std::span<const env::PipeState> states, std::span<Rng> rngs,
                         std::span<env::Action> actions) const {
  for (std::size_t i = 0; i < states.size(); ++i) {
    actions[i] = baselines::baseline_action(kind_, states[i], rngs[i], anchor_);
  }
}

void GreedyModelPolicy::act(std::span<const env::PipeState> states, std::span<Rng> /*rngs*/,
                            std::span<env::Action> actions) const {
  const auto chosen = greedy_actions(params_, states);
  std::copy(chosen.begin(), chosen.end(), actions.begin());
}

double EpisodeTrace::total_reward() const {
  double sum = 0.0;
  for (const auto& s : steps) sum += s.reward;
  return sum;
}

std::uint64_t rollout_seed(std::uint64_t master_seed, int pipe_id, std::size_t episode) {
  return derive_seed(derive_seed(master_seed, static_cast<std::uint64_t>(pipe_id)), episode);
}

std::vector<EpisodeTrace> rollout_lockstep(const Policy& policy, std::span<const env::PipeState> initial_states,
                                           std::span<const int> pipe_ids, const env::EnvConfig& env_config,
                                           std::span<const std::uint64_t> seeds) {
  const std::size_t n = initial_states.size();
  if (pipe_ids.size() != n || seeds.size() != n) throw UsageError("rollout_lockstep inputs differ in length");
  env_config.validate();

  std::vector<env::PipeState> states;
  std::vector<Rng> env_rngs;
  std::vector<Rng> policy_rngs;
  std::vector<EpisodeTrace> traces(n);
  states.reserve(n);
  env_rngs.reserve(n);
  policy_rngs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = initial_states[i];
    states.emplace_back(s.age(), s.material(), s.lambda_eff(), 0);
    env_rngs.emplace_back(seeds[i]);
    policy_rngs.emplace_back(derive_seed(seeds[i], kPolicyStream));
    traces[i].pipe_id = pipe_ids[i];
    traces[i].steps.reserve(env::kHorizon);
  }

  std::vector<env::Action> actions(n);
  for (int t = 0; t < env::kHorizon; ++t) {
    policy.act(states, policy_rngs, actions);
    for (std::size_t i = 0; i < n; ++i) {
      const env::StepOutcome out = env::step(states[i], actions[i], env_config, env_rngs[i]);
      traces[i].steps.push_back(
          {states[i], actions[i], out.executed_action, out.reward, out.mc, out.pf_penalty, out.sudden_failure});
      states[i] = out.next_state;
    }
  }
  return traces;
}

EpisodeTrace rollout(const Policy& policy, const env::PipeSpec& spec, const env::EnvConfig& env_config,
                     std::uint64_t seed) {
  const env::PipeState initial = env::reset(spec);
  return rollout_lockstep(policy, std::span(&initial, 1), std::span(&spec.id, 1), env_config, std::span(&seed, 1))
      .front();
}

double intervention_cost(const EpisodeTrace& trace) {
  double cost = 0.0;
  for (const auto& s : trace.steps) cost += action_price(s.executed);
  return cost;
}

void ActionCounts::add(env::Action a) {
  switch (a) {
    case env::Action::DoNothing: ++do_nothing; break;
    case env::Action::Maintain: ++maintain; break;
    case env::Action::Replace: ++replace; break;
  }
}

PolicyReport evaluate_policy(const Policy& policy, std::span<const env::PipeSpec> roster,
                             std::size_t episodes_per_pipe, const env::EnvConfig& env_config,
                             std::uint64_t seed) {
  check_episodes(episodes_per_pipe);
  std::vector<PipeReport> per_pipe(roster.size());
  const auto n_pipes = static_cast<std::ptrdiff_t>(roster.size());

  // Exceptions must not escape an OpenMP region; park the first one here.
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t sp = 0; sp < n_pipes; ++sp) {
    try {
      const auto& spec = roster[static_cast<std::size_t>(sp)];
      const std::vector<env::PipeState> initial(episodes_per_pipe, env::reset(spec));
      const std::vector<int> ids(episodes_per_pipe, spec.id);
      std::vector<std::uint64_t> seeds(episodes_per_pipe);
      for (std::size_t e = 0; e < episodes_per_pipe; ++e) seeds[e] = rollout_seed(seed, spec.id, e);
      const auto traces = rollout_lockstep(policy, initial, ids, env_config, seeds);
      per_pipe[static_cast<std::size_t>(sp)] = summarize_pipe(spec.id, traces);
    } catch (...) {
#pragma omp critical(pipemaint_eval_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return finalize(policy.name(), episodes_per_pipe, std::move(per_pipe));
}

PolicyReport evaluate_policy_serial(const Policy& policy, std::span<const env::PipeSpec> roster,
                                    std::size_t episodes_per_pipe, const env::EnvConfig& env_config,
                                    std::uint64_t seed) {
  check_episodes(episodes_per_pipe);
  std::vector<PipeReport> per_pipe;
  per_pipe.reserve(roster.size());
  for (const auto& spec : roster) {
    std::vector<EpisodeTrace> traces;
    traces.reserve(episodes_per_pipe);
    for (std::size_t e = 0; e < episodes_per_pipe; ++e) {
      traces.push_back(rollout(policy, spec, env_config, rollout_seed(seed, spec.id, e)));
    }
    per_pipe.push_back(summarize_pipe(spec.id, traces));
  }
  return finalize(policy.name(), episodes_per_pipe, std::move(per_pipe));
}

Comparison compare(std::span<const PolicyReport> reports) {
  if (reports.size() < 2) throw UsageError("comparison needs at least two policy reports");
  return render_reports(reports);
}

Comparison render_reports(std::span<const PolicyReport> reports) {
  Comparison c;
  c.metrics_csv = "policy,avg_cost,avg_pf,n_do_nothing,n_maintain,n_replace,replace_per_pipe,cost_effectiveness\n";
  c.perpipe_csv = "policy,pipe_id,episodes,avg_cost,avg_pf,n_do_nothing,n_maintain,n_replace\n";
  c.plotdata_csv = "series,policy,x,y\n";
  for (const auto& r : reports) {
    c.metrics_csv += csv_row({r.policy, format_double(r.avg_intervention_cost), format_double(r.avg_pf),
                              std::to_string(r.counts.do_nothing), std::to_string(r.counts.maintain),
                              std::to_string(r.counts.replace), format_double(r.replace_per_pipe),
                              format_optional(r.cost_effectiveness)});
    for (const auto& p : r.per_pipe) {
      c.perpipe_csv += csv_row({r.policy, std::to_string(p.pipe_id), std::to_string(p.episodes),
                                format_double(p.avg_cost), format_double(p.avg_pf),
                                std::to_string(p.counts.do_nothing), std::to_string(p.counts.maintain),
                                std::to_string(p.counts.replace)});
    }
  }
  for (const auto& r : reports) {
    c.plotdata_csv += csv_row({"cost_vs_pf", r.policy, format_double(r.avg_intervention_cost), format_double(r.avg_pf)});
  }
  for (std::size_t i = 0; i < reports.size(); ++i) {
    c.plotdata_csv += csv_row({"cost_effectiveness", reports[i].policy, std::to_string(i),
                               format_optional(reports[i].cost_effectiveness)});
  }
  return c;
}

void write_comparison(const Comparison& comparison, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  write_text_file((dir / "metrics.csv").string(), comparison.metrics_csv);
  write_text_file((dir / "perpipe.csv").string(), comparison.perpipe_csv);
  write_text_file((dir / "plotdata.csv").string(), comparison.plotdata_csv);
}

}  // namespace pipemaint::eval
