// pipemaint: train, collect, evaluate and compare pipe rehabilitation policies.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pipemaint/config/run_config.hpp"
#include "pipemaint/cql/cql.hpp"
#include "pipemaint/data/dataset.hpp"
#include "pipemaint/dqn/dqn.hpp"
#include "pipemaint/env/roster.hpp"
#include "pipemaint/error.hpp"
#include "pipemaint/eval/evaluation.hpp"
#include "pipemaint/format.hpp"
#include "pipemaint/nn/model_io.hpp"

namespace fs = std::filesystem;
using namespace pipemaint;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::map<std::string, std::string> overrides;
};

config::RunConfig resolve_config(const Globals& g, const std::map<std::string, std::string>& aliases) {
  config::RunConfig cfg;
  if (!g.config_path.empty()) config::apply_toml(cfg, config::parse_toml_file(g.config_path));
  for (const auto& [key, text] : g.overrides) config::apply_text(cfg, key, text);
  for (const auto& [key, text] : aliases) config::apply_text(cfg, key, text);
  if (g.seed) cfg.seed = *g.seed;
  cfg.validate();
  return cfg;
}

std::string out_path(const Globals& g, const std::string& name) {
  std::error_code ec;
  fs::create_directories(g.out_dir, ec);
  if (ec) throw UsageError("cannot create output directory '" + g.out_dir + "': " + ec.message());
  return (fs::path(g.out_dir) / name).string();
}

data::DatasetHeader header_for(data::SourcePolicy source, std::size_t episodes, std::uint64_t seed,
                               std::span<const env::PipeSpec> roster) {
  data::DatasetHeader h;
  h.source_policy = source;
  h.episodes = episodes;
  h.seed = seed;
  h.roster_checksum = env::roster_checksum(roster);
  return h;
}

int cmd_train_dqn(const Globals& g, const std::map<std::string, std::string>& aliases) {
  const config::RunConfig cfg = resolve_config(g, aliases);
  const auto roster = env::load_pipes(cfg.roster);
  const dqn::DqnConfig dcfg = cfg.dqn_config();

  const std::string dataset_path = out_path(g, "near_expert.jsonl");
  data::DatasetWriter writer(dataset_path,
                             header_for(data::SourcePolicy::NearExpert, dcfg.episodes, cfg.seed, roster));
  const auto result =
      dqn::train(roster, dcfg, cfg.env, [&writer](const data::TransitionRecord& r) { writer.append(r); });
  writer.close();

  nn::save_model(result.params, out_path(g, "dqn_model.json"));
  nn::save_json(dqn::config_to_json(dcfg), out_path(g, "dqn_model.config.json"));
  write_text_file(out_path(g, "dqn_log.csv"), dqn::training_log_csv(result.log));

  const double last = result.log.empty() ? 0.0 : result.log.back().rolling_mean;
  std::cout << "trained dqn: " << result.log.size() << " episodes, " << result.gradient_steps
            << " updates, final rolling mean " << format_double(last) << "\n"
            << "dataset: " << dataset_path << " (" << writer.written() << " records)\n";
  return 0;
}

int cmd_collect(const Globals& g, const std::map<std::string, std::string>& aliases, const std::string& policy,
                const std::string& model_path) {
  const config::RunConfig cfg = resolve_config(g, aliases);
  const data::SourcePolicy source = data::parse_source_policy(policy);
  if (source == data::SourcePolicy::NearExpert) {
    throw UsageError("near-expert datasets are written by train-dqn");
  }
  if (source == data::SourcePolicy::Expert && model_path.empty()) {
    throw UsageError("--policy expert needs --model");
  }
  std::optional<nn::MlpParams> model;
  if (!model_path.empty()) model = nn::load_model(model_path);
  const auto roster = env::load_pipes(cfg.roster);
  const data::Dataset ds =
      data::collect(source, model ? &*model : nullptr, roster, cfg.collect.episodes, cfg.env, cfg.seed);
  const std::string path = out_path(g, std::string(data::source_policy_name(source)) + ".jsonl");
  data::write_dataset(ds, path);
  std::cout << "collected " << ds.records.size() << " records into " << path << "\n";
  return 0;
}

int cmd_train_cql(const Globals& g, const std::map<std::string, std::string>& aliases,
                  const std::string& dataset_path) {
  const config::RunConfig cfg = resolve_config(g, aliases);
  const data::Dataset ds = data::read_dataset(dataset_path);
  const cql::CqlConfig ccfg = cfg.cql_config();
  const auto result = cql::train_offline(ds, ccfg, cfg.env);

  nn::save_model(result.params, out_path(g, "cql_model.json"));
  nn::save_json(cql::config_to_json(ccfg), out_path(g, "cql_model.config.json"));
  write_text_file(out_path(g, "cql_log.csv"), cql::epoch_log_csv(result.log));

  std::cout << "trained cql: " << result.log.size() << " epochs, " << result.gradient_steps << " updates";
  if (!result.log.empty()) std::cout << ", final held-out return " << format_double(result.log.back().eval_return_mean);
  std::cout << "\n";
  return 0;
}

// "name=path" or a bare path, named after the file ("dqn_model.json" -> "dqn").
std::pair<std::string, std::string> model_entry(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq != std::string::npos && eq > 0) return {arg.substr(0, eq), arg.substr(eq + 1)};
  std::string name = fs::path(arg).stem().string();
  if (name.size() > 6 && name.ends_with("_model")) name.resize(name.size() - 6);
  return {name, arg};
}

int cmd_evaluate(const Globals& g, const std::vector<std::string>& models, const std::vector<std::string>& strategies) {
  if (models.empty() && strategies.empty()) throw UsageError("evaluate needs at least one --model or --strategy");
  const config::RunConfig cfg = resolve_config(g, {});
  const auto roster = env::load_pipes(cfg.roster);

  std::vector<std::unique_ptr<eval::Policy>> policies;
  for (const auto& m : models) {
    auto [name, path] = model_entry(m);
    policies.push_back(std::make_unique<eval::GreedyModelPolicy>(name, nn::load_model(path)));
  }
  for (const auto& s : strategies) {
    policies.push_back(std::make_unique<eval::BaselinePolicy>(baselines::parse_baseline(s), cfg.eval.schedule_anchor));
  }

  std::vector<eval::PolicyReport> reports;
  for (const auto& p : policies) {
    reports.push_back(eval::evaluate_policy(*p, roster, cfg.eval.episodes_per_pipe, cfg.env, cfg.seed));
  }
  const eval::Comparison cmp = reports.size() >= 2 ? eval::compare(reports) : eval::render_reports(reports);
  write_comparison(cmp, out_path(g, ""));

  for (const auto& r : reports) {
    std::cout << r.policy << ": cost " << format_double(r.avg_intervention_cost) << ", pf "
              << format_double(r.avg_pf) << ", cost-effectiveness " << format_optional(r.cost_effectiveness)
              << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Water pipe rehabilitation planning with online and offline deep RL"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Print help for every subcommand");

  Globals g;
  app.add_option("--config", g.config_path, "TOML run file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Master seed for every stage")->default_str("0");
  app.add_option("--out-dir", g.out_dir, "Directory for outputs")->capture_default_str();

  const config::RunConfig defaults;
  for (const auto& key : config::config_keys()) {
    if (key.name == "seed") continue;  // --seed above
    app.add_option_function<std::string>(
           "--" + key.name, [&g, name = key.name](const std::string& v) { g.overrides[name] = v; }, key.help)
        ->default_str(key.show(defaults))
        ->group("Config keys");
  }

  std::map<std::string, std::string> aliases;
  auto alias = [&aliases](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
    sub->add_option_function<std::string>(flag, [&aliases, key](const std::string& v) { aliases[key] = v; }, help);
  };

  auto* train_dqn = app.add_subcommand("train-dqn", "Train the online agent and log the near-expert dataset");
  alias(train_dqn, "--episodes", "dqn.episodes", "Same as --dqn.episodes");

  std::string policy;
  std::string collect_model;
  auto* collect = app.add_subcommand("collect", "Collect a dataset with a random or expert policy");
  collect->add_option("--policy", policy, "random or expert")->required();
  collect->add_option("--model", collect_model, "Q-network acting as the expert");
  alias(collect, "--episodes", "collect.episodes", "Same as --collect.episodes");

  std::string dataset_path;
  auto* train_cql = app.add_subcommand("train-cql", "Train the offline agent on a dataset");
  train_cql->add_option("--dataset", dataset_path, "Dataset JSONL")->required();
  alias(train_cql, "--epochs", "cql.epochs", "Same as --cql.epochs");

  std::vector<std::string> models;
  std::vector<std::string> strategies;
  auto* evaluate = app.add_subcommand("evaluate", "Compare trained models and baseline strategies");
  evaluate->add_option("--model", models, "Trained model, as path or name=path (repeatable)");
  evaluate->add_option("--strategy", strategies, "maintain-5|maintain-10|corrective|greedy|random|none (repeatable)");

  for (auto* sub : {train_dqn, collect, train_cql, evaluate}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train_dqn) return cmd_train_dqn(g, aliases);
    if (*collect) return cmd_collect(g, aliases, policy, collect_model);
    if (*train_cql) return cmd_train_cql(g, aliases, dataset_path);
    if (*evaluate) return cmd_evaluate(g, models, strategies);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const LoadError& e) {
    std::cerr << "load error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
