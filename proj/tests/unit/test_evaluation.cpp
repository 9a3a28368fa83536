#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <omp.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "case_study.hpp"
#include "pipemaint/env/roster.hpp"
#include "pipemaint/error.hpp"
#include "pipemaint/eval/evaluation.hpp"
#include "pipemaint/format.hpp"

using namespace pipemaint;
using namespace pipemaint::eval;
using baselines::BaselineKind;

namespace {

std::vector<env::PipeSpec> roster() { return env::load_pipes(casestudy::source_path("data/pipes.csv")); }

env::EnvConfig no_sudden() {
  env::EnvConfig c;
  c.sudden_failure_prob = 0.0;
  return c;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

// Row for pipe 16 in the case-study table.
const casestudy::Row& youngest() {
  for (const auto& r : casestudy::kRows) {
    if (r.id == 16) return r;
  }
  throw std::logic_error("pipe 16 missing");
}

}  // namespace

TEST_CASE("no intervention follows the closed-form pf curve") {
  const auto pipes = roster();
  const auto& spec = pipes.back();
  REQUIRE(spec.id == 16);
  const double lambda = casestudy::oracle_lambda(youngest());
  const BaselinePolicy none(BaselineKind::NoIntervention);
  const EpisodeTrace trace = rollout(none, spec, no_sudden(), 1);
  REQUIRE(trace.steps.size() == 100);
  double mean = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto& s = trace.steps[static_cast<std::size_t>(t)];
    CHECK(s.state.age() == 2 + t);
    CHECK(s.state.t() == t);
    const double want = casestudy::oracle_pf(lambda, 2.0 + t);
    CHECK(s.state.pf() == doctest::Approx(want).epsilon(1e-12));
    mean += want;
  }
  mean /= 100.0;
  CHECK(intervention_cost(trace) == 0.0);

  const PolicyReport r = evaluate_policy(none, std::span(&spec, 1), 5, no_sudden(), 3);
  CHECK(r.avg_intervention_cost == 0.0);
  CHECK_FALSE(r.cost_effectiveness.has_value());
  CHECK(r.avg_pf == doctest::Approx(mean).epsilon(1e-12));
  CHECK(r.counts.do_nothing == 500);
}

TEST_CASE("intervention cost prices executed actions") {
  EpisodeTrace t;
  t.steps.resize(100);
  t.steps[3].executed = env::Action::Maintain;
  t.steps[40].executed = env::Action::Maintain;
  t.steps[77].executed = env::Action::Replace;
  t.steps[77].chosen = env::Action::DoNothing;  // forced by a sudden failure
  CHECK(intervention_cost(t) == doctest::Approx(1.8).epsilon(1e-15));
}

TEST_CASE("traces are complete and rewards consistent") {
  const auto pipes = roster();
  const BaselinePolicy random(BaselineKind::Random);
  for (const auto& spec : pipes) {
    const auto trace = rollout(random, spec, env::EnvConfig{}, rollout_seed(0, spec.id, 0));
    REQUIRE(trace.steps.size() == 100);
    CHECK(trace.pipe_id == spec.id);
    double sum = 0.0;
    for (const auto& s : trace.steps) {
      if (s.sudden_failure) {
        CHECK(s.executed == env::Action::Replace);
        CHECK(s.pf_penalty == -1.0);
      } else {
        CHECK(s.executed == s.chosen);
        CHECK(s.pf_penalty == -s.state.pf());
      }
      CHECK(s.reward == doctest::Approx(s.mc + s.pf_penalty).epsilon(1e-15));
      sum += s.reward;
    }
    CHECK(trace.total_reward() == doctest::Approx(sum).epsilon(1e-15));
  }
}

TEST_CASE("report bookkeeping") {
  const auto pipes = roster();
  const BaselinePolicy m5(BaselineKind::Maintain5);
  const auto r = evaluate_policy(m5, pipes, 7, env::EnvConfig{}, 2);
  CHECK(r.pipes == 16);
  CHECK(r.episodes_per_pipe == 7);
  CHECK(r.counts.total() == 16 * 7 * 100);
  REQUIRE(r.per_pipe.size() == 16);
  double cost = 0.0;
  double pf = 0.0;
  ActionCounts sum;
  for (std::size_t i = 0; i < r.per_pipe.size(); ++i) {
    const auto& p = r.per_pipe[i];
    CHECK(p.pipe_id == pipes[i].id);
    CHECK(p.counts.total() == 7 * 100);
    // Cost from counts: 0.5 per maintain, 0.8 per replace.
    CHECK(p.avg_cost == doctest::Approx((0.5 * p.counts.maintain + 0.8 * p.counts.replace) / 7.0).epsilon(1e-12));
    cost += p.avg_cost;
    pf += p.avg_pf;
    sum.do_nothing += p.counts.do_nothing;
    sum.maintain += p.counts.maintain;
    sum.replace += p.counts.replace;
  }
  CHECK(sum == r.counts);
  CHECK(r.avg_intervention_cost == doctest::Approx(cost / 16).epsilon(1e-12));
  CHECK(r.avg_pf == doctest::Approx(pf / 16).epsilon(1e-12));
  CHECK(r.replace_per_pipe == doctest::Approx(r.counts.replace / (16.0 * 7.0)).epsilon(1e-12));
  REQUIRE(r.cost_effectiveness.has_value());
  CHECK(*r.cost_effectiveness == doctest::Approx((1 - r.avg_pf) / r.avg_intervention_cost).epsilon(1e-12));
  // Scheduled maintains plus at most the forced replaces.
  CHECK(r.counts.maintain + r.counts.replace >= 16 * 7 * 20 - r.counts.replace);
}

TEST_CASE("parallel evaluation equals the serial reference") {
  const auto pipes = roster();
  Rng rng(8);
  const GreedyModelPolicy model("net", nn::init_params(nn::MlpConfig{}, rng));
  const BaselinePolicy random(BaselineKind::Random);
  const BaselinePolicy greedy(BaselineKind::Greedy);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(4);
  for (const Policy* p : std::initializer_list<const Policy*>{&model, &random, &greedy}) {
    const auto par = evaluate_policy(*p, pipes, 6, env::EnvConfig{}, 21);
    const auto ser = evaluate_policy_serial(*p, pipes, 6, env::EnvConfig{}, 21);
    CHECK(par == ser);
  }
  omp_set_num_threads(saved);
}

TEST_CASE("evaluation is reproducible and seed dependent") {
  const auto pipes = roster();
  const BaselinePolicy random(BaselineKind::Random);
  const auto a = evaluate_policy(random, pipes, 4, env::EnvConfig{}, 5);
  const auto b = evaluate_policy(random, pipes, 4, env::EnvConfig{}, 5);
  const auto c = evaluate_policy(random, pipes, 4, env::EnvConfig{}, 6);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  CHECK_THROWS_AS(evaluate_policy(random, pipes, 0, env::EnvConfig{}, 5), UsageError);
}

TEST_CASE("rollout seeds are distinct") {
  std::set<std::uint64_t> seen;
  for (int id = 1; id <= 16; ++id) {
    for (std::size_t e = 0; e < 30; ++e) seen.insert(rollout_seed(0, id, e));
  }
  CHECK(seen.size() == 16 * 30);
  CHECK(rollout_seed(0, 1, 0) != rollout_seed(1, 1, 0));
}

TEST_CASE("lockstep input validation") {
  const BaselinePolicy none(BaselineKind::NoIntervention);
  const std::vector<env::PipeState> states(2, env::PipeState(3, env::Material::PVC, 0.03, 0));
  const std::vector<int> ids{1};
  const std::vector<std::uint64_t> seeds{1, 2};
  CHECK_THROWS_AS(rollout_lockstep(none, states, ids, env::EnvConfig{}, seeds), UsageError);
  // t is reset even if the initial state carries a timestep.
  const std::vector<env::PipeState> late(1, env::PipeState(3, env::Material::PVC, 0.03, 60));
  const std::vector<int> one{1};
  const std::vector<std::uint64_t> seed{1};
  CHECK(rollout_lockstep(none, late, one, env::EnvConfig{}, seed).front().steps.size() == 100);
}

TEST_CASE("no intervention carries the highest pf") {
  const auto pipes = roster();
  const auto none = evaluate_policy(BaselinePolicy(BaselineKind::NoIntervention), pipes, 5, env::EnvConfig{}, 9);
  for (const auto kind : {BaselineKind::Maintain5, BaselineKind::Maintain10, BaselineKind::Corrective,
                          BaselineKind::Greedy, BaselineKind::Random}) {
    CHECK(evaluate_policy(BaselinePolicy(kind), pipes, 5, env::EnvConfig{}, 9).avg_pf <= none.avg_pf);
  }
}

TEST_CASE("comparison tables") {
  const auto pipes = roster();
  const auto m5 = evaluate_policy(BaselinePolicy(BaselineKind::Maintain5), pipes, 3, env::EnvConfig{}, 1);
  const auto none = evaluate_policy(BaselinePolicy(BaselineKind::NoIntervention), pipes, 3, no_sudden(), 1);
  const std::vector<PolicyReport> one{m5};
  CHECK_THROWS_AS(compare(one), UsageError);
  CHECK_NOTHROW(render_reports(one));

  const std::vector<PolicyReport> two{m5, none};
  const Comparison c = compare(two);
  const auto metrics = lines_of(c.metrics_csv);
  REQUIRE(metrics.size() == 3);
  CHECK(metrics[0] == "policy,avg_cost,avg_pf,n_do_nothing,n_maintain,n_replace,replace_per_pipe,cost_effectiveness");
  const auto m5_row = split_csv_line(metrics[1]);
  REQUIRE(m5_row.size() == 8);
  CHECK(m5_row[0] == "maintain-5");
  CHECK(std::stod(m5_row[1]) == m5.avg_intervention_cost);
  CHECK(std::stod(m5_row[2]) == m5.avg_pf);
  CHECK(std::stoull(m5_row[4]) == m5.counts.maintain);
  const auto none_row = split_csv_line(metrics[2]);
  CHECK(none_row[1] == "0");
  CHECK(none_row[7].empty());  // cost-effectiveness undefined at zero cost

  const auto perpipe = lines_of(c.perpipe_csv);
  CHECK(perpipe[0] == "policy,pipe_id,episodes,avg_cost,avg_pf,n_do_nothing,n_maintain,n_replace");
  CHECK(perpipe.size() == 1 + 2 * 16);
  CHECK(lines_of(c.plotdata_csv)[0] == "series,policy,x,y");

  const std::vector<PolicyReport> same{m5, m5};
  const auto twin = lines_of(compare(same).metrics_csv);
  CHECK(twin[1] == twin[2]);

  casestudy::TempDir dir;
  write_comparison(c, dir.path());
  for (const char* name : {"metrics.csv", "perpipe.csv", "plotdata.csv"}) {
    std::ifstream in(dir.file(name));
    std::stringstream buf;
    buf << in.rdbuf();
    CHECK_FALSE(buf.str().empty());
  }
  std::ifstream in(dir.file("metrics.csv"));
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() == c.metrics_csv);
}
