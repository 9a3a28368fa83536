#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <sstream>

#include "case_study.hpp"
#include "pipemaint/dqn/dqn.hpp"
#include "pipemaint/env/roster.hpp"
#include "pipemaint/error.hpp"

using namespace pipemaint;
using namespace pipemaint::dqn;

namespace {

// Network whose output is the constant vector `q` for every input.
nn::MlpParams constant_q(std::array<double, 3> q) {
  nn::MlpParams p = nn::zero_params(DqnConfig{}.network());
  auto& out = p.layers.back().bias;
  std::copy(q.begin(), q.end(), out.begin());
  return p;
}

Transition transition(double reward, bool done, env::Action action = env::Action::DoNothing) {
  Transition t;
  t.reward = reward;
  t.done = done;
  t.action = action;
  return t;
}

std::vector<env::PipeSpec> roster() { return env::load_pipes(casestudy::source_path("data/pipes.csv")); }

DqnConfig small_run(std::size_t episodes) {
  DqnConfig c;
  c.episodes = episodes;
  c.learning_starts = 200;
  c.target_sync_every = 150;
  c.hidden_dims = {16, 16};
  c.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("epsilon schedule") {
  DqnConfig c;
  const std::size_t horizon = 10'000;  // 10% of 1000 episodes x 100 steps
  CHECK(epsilon_at(0, c) == 1.0);
  CHECK(epsilon_at(horizon / 2, c) == doctest::Approx(0.55).epsilon(1e-12));
  CHECK(epsilon_at(horizon, c) == 0.1);
  CHECK(epsilon_at(horizon * 7, c) == 0.1);
  for (std::size_t s = 1; s < horizon; s += 997) CHECK(epsilon_at(s, c) < epsilon_at(s - 1, c));
  c.exploration_fraction = 0.0;
  CHECK(epsilon_at(0, c) == 0.1);
}

TEST_CASE("greedy action selection") {
  Rng rng(1);
  CHECK(select_action(constant_q({-1.0, -0.2, -0.6}), {}, 0.0, rng) == env::Action::Maintain);
  CHECK(select_action(constant_q({0.0, 0.0, 0.0}), {}, 0.0, rng) == env::Action::DoNothing);
  CHECK(select_action(constant_q({-3.0, -2.0, -1.0}), {}, 0.0, rng) == env::Action::Replace);
}

TEST_CASE("full exploration is uniform") {
  Rng rng(2);
  const auto p = constant_q({5.0, 0.0, 0.0});
  std::array<int, 3> counts{};
  constexpr int kDraws = 100'000;
  for (int i = 0; i < kDraws; ++i) ++counts[static_cast<int>(select_action(p, {}, 1.0, rng))];
  for (const int c : counts) CHECK(std::abs(c / static_cast<double>(kDraws) - 1.0 / 3.0) <= 0.02 / 3.0);
}

TEST_CASE("td targets") {
  const auto target = constant_q({2.0, 1.0, -1.0});
  const Transition terminal = transition(-1.0, true);
  const Transition ongoing = transition(-1.0, false);
  std::vector<const Transition*> batch{&terminal, &ongoing};
  const auto y = td_targets(batch, target, 0.99);
  CHECK(y[0] == -1.0);
  CHECK(y[1] == doctest::Approx(0.98).epsilon(1e-12));
  const auto myopic = td_targets(batch, target, 0.0);
  CHECK(myopic[0] == -1.0);
  CHECK(myopic[1] == -1.0);
}

TEST_CASE("td targets ignore the online network") {
  Rng rng(3);
  nn::MlpParams online = nn::init_params(DqnConfig{}.network(), rng);
  const nn::MlpParams target = nn::copy_params(online);
  nn::AdamState adam = nn::make_adam(online);
  std::vector<Transition> pool;
  for (int i = 0; i < 8; ++i) {
    Transition t = transition(-0.1 * i, false, static_cast<env::Action>(i % 3));
    for (auto& v : t.state) v = rng.uniform();
    for (auto& v : t.next_state) v = rng.uniform();
    pool.push_back(t);
  }
  std::vector<const Transition*> batch;
  for (const auto& t : pool) batch.push_back(&t);
  const auto before = td_targets(batch, target, 0.99);
  for (int i = 0; i < 20; ++i) fit_batch(online, target, adam, batch, 0.99);
  CHECK_FALSE(online.same_values(target));
  CHECK(td_targets(batch, target, 0.99) == before);
}

TEST_CASE("loss on a hand-computed single transition") {
  nn::MlpParams online = constant_q({0.0, 0.5, 0.0});
  const auto target = constant_q({2.0, 1.0, -1.0});
  nn::AdamState adam = nn::make_adam(online);
  const Transition t = transition(-1.0, false, env::Action::Maintain);
  std::vector<const Transition*> batch{&t};
  const double loss = fit_batch(online, target, adam, batch, 0.99);
  CHECK(loss == doctest::Approx(0.2304).epsilon(1e-12));
  // Only the taken head moved (toward the target).
  const auto& b = online.layers.back().bias;
  CHECK(b[0] == 0.0);
  CHECK(b[1] > 0.5);
  CHECK(b[2] == 0.0);
}

TEST_CASE("loss is zero when predictions equal targets") {
  nn::MlpParams online = constant_q({-1.0, 0.0, 0.0});
  const auto target = constant_q({0.0, 0.0, 0.0});
  const nn::MlpParams before = nn::copy_params(online);
  nn::AdamState adam = nn::make_adam(online);
  const Transition t = transition(-1.0, true);
  std::vector<const Transition*> batch{&t};
  CHECK(fit_batch(online, target, adam, batch, 0.99) == 0.0);
  CHECK(online.same_values(before));
}

TEST_CASE("replay buffer evicts oldest first") {
  ReplayBuffer buffer(5);
  for (int i = 0; i < 12; ++i) buffer.push(transition(static_cast<double>(i), false));
  CHECK(buffer.size() == 5);
  for (std::size_t k = 0; k < 5; ++k) CHECK(buffer.at(k).reward == static_cast<double>(7 + k));
  CHECK_THROWS_AS(buffer.at(5), UsageError);
  CHECK_THROWS_AS(ReplayBuffer(0), UsageError);
  ReplayBuffer empty(3);
  Rng rng(1);
  CHECK_THROWS_AS(empty.sample_index(rng), UsageError);
}

TEST_CASE("replay sampling is uniform") {
  ReplayBuffer buffer(10);
  for (int i = 0; i < 10; ++i) buffer.push(transition(i, false));
  Rng rng(4);
  std::array<int, 10> counts{};
  constexpr int kDraws = 100'000;
  for (int i = 0; i < kDraws; ++i) ++counts[buffer.sample_index(rng)];
  for (const int c : counts) CHECK(std::abs(c / static_cast<double>(kDraws) - 0.1) <= 0.01);
}

TEST_CASE("train_step refuses to run before learning starts") {
  DqnConfig c;
  c.learning_starts = 50;
  Rng rng(5);
  nn::MlpParams p = nn::init_params(c.network(), rng);
  const nn::MlpParams target = nn::copy_params(p);
  nn::AdamState adam = nn::make_adam(p);
  ReplayBuffer buffer(100);
  for (int i = 0; i < 49; ++i) buffer.push(transition(-0.5, false));
  CHECK_THROWS_AS(train_step(p, target, adam, buffer, c, rng), UsageError);
  buffer.push(transition(-0.5, false));
  const double loss = train_step(p, target, adam, buffer, c, rng);
  CHECK(loss >= 0.0);
}

TEST_CASE("zero episodes returns the initial network") {
  DqnConfig c = small_run(0);
  const auto result = train(roster(), c, env::EnvConfig{});
  CHECK(result.log.empty());
  Rng init(derive_seed(c.seed, 4));
  CHECK(result.params.same_values(nn::init_params(c.network(), init)));
}

TEST_CASE("short training run") {
  const auto pipes = roster();
  const DqnConfig c = small_run(12);
  std::size_t records = 0;
  std::vector<data::TransitionRecord> seen;
  const auto result = train(pipes, c, env::EnvConfig{}, [&](const data::TransitionRecord& r) {
    ++records;
    seen.push_back(r);
  });
  CHECK(records == 12 * 100);
  CHECK(result.env_steps == 1200);
  CHECK(result.gradient_steps == (1200 - 200) / 4 + 1);
  CHECK(result.target_syncs == 1200 / 150);
  REQUIRE(result.log.size() == 12);

  std::vector<double> returns;
  for (std::size_t ep = 0; ep < result.log.size(); ++ep) {
    const auto& e = result.log[ep];
    CHECK(e.episode == ep);
    CHECK(e.episode_return >= -200.0);
    CHECK(e.episode_return <= 0.0);
    double sum = 0.0;
    for (std::size_t k = ep * 100; k < (ep + 1) * 100; ++k) {
      CHECK(seen[k].episode == static_cast<int>(ep));
      CHECK(seen[k].t == static_cast<int>(k - ep * 100));
      sum += seen[k].reward;
    }
    CHECK(e.episode_return == doctest::Approx(sum).epsilon(1e-12));
    returns.push_back(sum);
    // Oracle for the trailing window statistics.
    const std::size_t lo = ep + 1 >= 20 ? ep + 1 - 20 : 0;
    double m = 0.0;
    for (std::size_t k = lo; k <= ep; ++k) m += returns[k];
    m /= static_cast<double>(ep + 1 - lo);
    double ss = 0.0;
    for (std::size_t k = lo; k <= ep; ++k) ss += (returns[k] - m) * (returns[k] - m);
    CHECK(e.rolling_mean == doctest::Approx(m).epsilon(1e-12));
    CHECK(e.rolling_std == doctest::Approx(std::sqrt(ss / static_cast<double>(ep + 1 - lo))).epsilon(1e-9));
    CHECK(e.loss_mean.has_value() == (ep >= 1));
  }
}

TEST_CASE("training is deterministic under a seed") {
  const auto pipes = roster();
  const auto a = train(pipes, small_run(6), env::EnvConfig{});
  const auto b = train(pipes, small_run(6), env::EnvConfig{});
  CHECK(a.log == b.log);
  CHECK(a.params.same_values(b.params));
  DqnConfig other = small_run(6);
  other.seed = 6;
  CHECK_FALSE(train(pipes, other, env::EnvConfig{}).log == a.log);
  CHECK(training_log_csv(a.log) == training_log_csv(b.log));
}

TEST_CASE("training log csv") {
  std::vector<EpisodeLog> log{{0, -50.5, -50.5, 0.0, 1.0, std::nullopt}, {1, -40.0, -45.25, 5.25, 0.5, 0.125}};
  CHECK(training_log_csv(log) ==
        "episode,return,rolling_mean_20,rolling_std_20,epsilon,loss_mean\n"
        "0,-50.5,-50.5,0,1,\n"
        "1,-40,-45.25,5.25,0.5,0.125\n");
}

TEST_CASE("config validation and sidecar") {
  DqnConfig c;
  CHECK_NOTHROW(c.validate());
  c.gamma = 1.2;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = DqnConfig{};
  c.epsilon_final = 0.5;
  c.epsilon_start = 0.4;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = DqnConfig{};
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  const auto j = config_to_json(DqnConfig{});
  CHECK(j.at("algorithm") == "dqn");
  CHECK(j.at("gamma") == 0.99);
  CHECK(j.at("buffer_size") == 50000);
  CHECK(j.at("epsilon_final") == 0.1);
  CHECK(j.at("learning_rate") == 1e-4);
  CHECK(j.at("hidden_dims") == nlohmann::json::array({64, 64}));
  CHECK_THROWS_AS(train({}, DqnConfig{}, env::EnvConfig{}), UsageError);
}
