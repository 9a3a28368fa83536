#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "case_study.hpp"
#include "pipemaint/cql/cql.hpp"
#include "pipemaint/env/roster.hpp"
#include "pipemaint/error.hpp"

using namespace pipemaint;
using namespace pipemaint::cql;

namespace {

std::vector<env::PipeSpec> roster() { return env::load_pipes(casestudy::source_path("data/pipes.csv")); }

OfflineSample sample(env::Action a, double reward, bool done) {
  OfflineSample s;
  s.action = a;
  s.reward = reward;
  s.done = done;
  return s;
}

std::vector<const OfflineSample*> pointers(const std::vector<OfflineSample>& pool) {
  std::vector<const OfflineSample*> out;
  for (const auto& s : pool) out.push_back(&s);
  return out;
}

nn::MlpParams constant_q(const CqlConfig& cfg, std::array<double, 3> q) {
  nn::MlpParams p = nn::zero_params(cfg.network());
  std::copy(q.begin(), q.end(), p.layers.back().bias.begin());
  return p;
}

// Textbook loss, written against predict() only.
LossParts oracle_loss(const std::vector<const OfflineSample*>& batch, const nn::MlpParams& p,
                      const nn::MlpParams& target, double alpha, double gamma) {
  LossParts out;
  for (const auto* s : batch) {
    const auto q = nn::predict(p, s->state);
    const auto qn = nn::predict(target, s->next_state);
    const double y = s->reward + (s->done ? 0.0 : gamma * *std::max_element(qn.begin(), qn.end()));
    const double qa = q[static_cast<std::size_t>(s->action)];
    double z = 0.0;
    for (const double v : q) z += std::exp(v);
    out.penalty += std::log(z) - qa;
    out.td += (qa - y) * (qa - y);
  }
  const double n = static_cast<double>(batch.size());
  out.penalty /= n;
  out.td /= n;
  out.total = alpha * out.penalty + 0.5 * out.td;
  return out;
}

std::vector<OfflineSample> random_pool(Rng& rng, std::size_t n) {
  std::vector<OfflineSample> pool;
  for (std::size_t i = 0; i < n; ++i) {
    OfflineSample s = sample(static_cast<env::Action>(rng.below(3)), -rng.uniform() * 1.5, rng.uniform() < 0.3);
    for (auto& v : s.state) v = rng.uniform();
    for (auto& v : s.next_state) v = rng.uniform();
    pool.push_back(s);
  }
  return pool;
}

data::Dataset small_dataset(data::SourcePolicy source, std::size_t episodes, std::uint64_t seed) {
  if (source == data::SourcePolicy::Random) {
    return data::collect(source, nullptr, roster(), episodes, env::EnvConfig{}, seed);
  }
  Rng rng(seed);
  const auto model = nn::init_params(nn::MlpConfig{}, rng);
  return data::collect(data::SourcePolicy::Expert, &model, roster(), episodes, env::EnvConfig{}, seed);
}

CqlConfig small_config(std::size_t epochs) {
  CqlConfig c;
  c.epochs = epochs;
  c.hidden_dims = {16, 16};
  c.target_sync_every = 50;
  c.seed = 3;
  return c;
}

}  // namespace

TEST_CASE("conservative penalty examples") {
  const std::array<double, 3> q{1.0, 2.0, 3.0};
  CHECK(conservative_penalty(q, env::Action::Replace) == doctest::Approx(0.40761).epsilon(1e-5 / 0.40761));
  const double lse = std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0));
  CHECK(conservative_penalty(q, env::Action::DoNothing) == doctest::Approx(lse - 1.0).epsilon(1e-14));
  const std::array<double, 3> flat{-4.5, -4.5, -4.5};
  for (int a = 0; a < 3; ++a) {
    CHECK(conservative_penalty(flat, static_cast<env::Action>(a)) == doctest::Approx(std::log(3.0)).epsilon(1e-14));
  }
  const std::array<double, 2> short_row{0.0, 0.0};
  CHECK_THROWS_AS(conservative_penalty(short_row, env::Action::DoNothing), UsageError);
}

TEST_CASE("conservative penalty is non-negative and finite") {
  Rng rng(1);
  for (int i = 0; i < 2000; ++i) {
    std::array<double, 3> q{};
    for (auto& v : q) v = (rng.uniform() - 0.5) * 40.0;
    const auto a = static_cast<env::Action>(rng.below(3));
    const double p = conservative_penalty(q, a);
    CHECK(p >= 0.0);
    CHECK(p <= std::log(3.0) + (*std::max_element(q.begin(), q.end()) - q[static_cast<std::size_t>(a)]) + 1e-12);
  }
  const std::array<double, 3> huge{700.0, 700.0, -700.0};
  CHECK(std::isfinite(conservative_penalty(huge, env::Action::Replace)));
  CHECK(conservative_penalty(huge, env::Action::DoNothing) == doctest::Approx(std::log(2.0)));
  const std::array<double, 3> tiny{-700.0, -700.0, -700.0};
  CHECK(conservative_penalty(tiny, env::Action::Maintain) == doctest::Approx(std::log(3.0)));
}

TEST_CASE("loss on a hand-built batch") {
  CqlConfig cfg;
  const auto p = constant_q(cfg, {0.0, 0.0, 0.0});
  const std::vector<OfflineSample> pool{sample(env::Action::Maintain, -1.0, true)};
  const auto batch = pointers(pool);
  const LossParts l = cql_loss(batch, p, p, cfg);
  CHECK(l.penalty == doctest::Approx(std::log(3.0)).epsilon(1e-14));
  CHECK(l.td == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(l.total == doctest::Approx(std::log(3.0) + 0.5).epsilon(1e-14));

  cfg.alpha = 0.0;
  CHECK(cql_loss(batch, p, p, cfg).total == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("loss matches the oracle on random networks") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    CqlConfig cfg;
    cfg.alpha = rng.uniform() * 3.0;
    cfg.gamma = 0.9 + 0.09 * rng.uniform();
    const auto p = nn::init_params(cfg.network(), rng);
    const auto t = nn::init_params(cfg.network(), rng);
    const auto pool = random_pool(rng, 17);
    const auto batch = pointers(pool);
    const LossParts got = cql_loss(batch, p, t, cfg);
    const LossParts want = oracle_loss(batch, p, t, cfg.alpha, cfg.gamma);
    CHECK(got.total == doctest::Approx(want.total).epsilon(1e-12));
    CHECK(got.td == doctest::Approx(want.td).epsilon(1e-12));
    CHECK(got.penalty == doctest::Approx(want.penalty).epsilon(1e-12));
  }
}

TEST_CASE("loss grows with alpha") {
  Rng rng(3);
  CqlConfig cfg;
  const auto p = nn::init_params(cfg.network(), rng);
  const auto pool = random_pool(rng, 32);
  const auto batch = pointers(pool);
  double prev = -std::numeric_limits<double>::infinity();
  for (const double a : {0.0, 0.25, 0.5, 1.0, 2.0, 5.0}) {
    cfg.alpha = a;
    const double total = cql_loss(batch, p, p, cfg).total;
    CHECK(total >= prev);
    prev = total;
  }
}

TEST_CASE("fit_batch gradient matches finite differences") {
  // With a huge Adam epsilon the first update is -lr * g / (|g| + eps), which
  // exposes the raw gradient to a finite-difference oracle on cql_loss.
  Rng rng(4);
  CqlConfig cfg;
  cfg.dropout = 0.0;
  cfg.hidden_dims = {6, 5};
  cfg.alpha = 0.7;
  const auto start = nn::init_params(cfg.network(), rng);
  const auto target = nn::init_params(cfg.network(), rng);
  const auto pool = random_pool(rng, 9);
  const auto batch = pointers(pool);

  constexpr double kEps = 1e6;
  nn::MlpParams stepped = nn::copy_params(start);
  nn::AdamState adam = nn::make_adam(stepped, {.learning_rate = 1.0, .epsilon = kEps});
  Rng drop(0);
  fit_batch(stepped, target, adam, batch, cfg, drop);

  int checked = 0;
  for (std::size_t l = 0; l < start.layers.size(); ++l) {
    auto probe = [&](auto member) {
      const auto& values = start.layers[l].*member;
      for (std::size_t k = 0; k < values.size(); ++k) {
        const double delta = (stepped.layers[l].*member)[k] - values[k];
        const double g = -delta * kEps;
        nn::MlpParams plus = nn::copy_params(start);
        nn::MlpParams minus = nn::copy_params(start);
        constexpr double h = 1e-5;
        (plus.layers[l].*member)[k] += h;
        (minus.layers[l].*member)[k] -= h;
        const double fd = (cql_loss(batch, plus, target, cfg).total - cql_loss(batch, minus, target, cfg).total) / (2 * h);
        CHECK(std::abs(g - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
        ++checked;
      }
    };
    probe(&nn::Layer::weights);
    probe(&nn::Layer::bias);
  }
  CHECK(checked > 80);
}

TEST_CASE("single step direction on the constant network") {
  CqlConfig cfg;
  auto p = constant_q(cfg, {0.0, 0.0, 0.0});
  const auto target = nn::copy_params(p);
  nn::AdamState adam = nn::make_adam(p, {.learning_rate = 1e-3});
  // Gradient on the output bias: softmax - onehot + (q - y) on the data head.
  // Here [1/3, 1/3 - 1 + 0.5, 1/3] so only the maintain head rises.
  const std::vector<OfflineSample> pool{sample(env::Action::Maintain, -0.5, true)};
  Rng rng(1);
  fit_batch(p, target, adam, pointers(pool), cfg, rng);
  const auto& b = p.layers.back().bias;
  CHECK(b[0] == doctest::Approx(-1e-3).epsilon(1e-6));
  CHECK(b[1] == doctest::Approx(1e-3).epsilon(1e-6));
  CHECK(b[2] == doctest::Approx(-1e-3).epsilon(1e-6));
}

TEST_CASE("zero epochs returns the initial network") {
  const auto ds = small_dataset(data::SourcePolicy::Random, 10, 1);
  const CqlConfig cfg = small_config(0);
  const auto result = train_offline(ds, cfg, env::EnvConfig{});
  CHECK(result.log.empty());
  CHECK(result.gradient_steps == 0);
  Rng init(derive_seed(cfg.seed, 12));
  CHECK(result.params.same_values(nn::init_params(cfg.network(), init)));
}

TEST_CASE("short offline run") {
  const auto ds = small_dataset(data::SourcePolicy::Random, 20, 2);
  const CqlConfig cfg = small_config(3);
  const auto result = train_offline(ds, cfg, env::EnvConfig{});
  REQUIRE(result.log.size() == 3);
  CHECK(result.test_episodes.size() == 4);
  // 16 training episodes, 1600 records, batches of 32.
  CHECK(result.gradient_steps == 3 * 50);
  CHECK(result.env_steps_during_training == 0);
  CHECK(result.env_steps_during_evaluation == 3 * 4 * 100);
  for (std::size_t e = 0; e < result.log.size(); ++e) {
    const auto& l = result.log[e];
    CHECK(l.epoch == e);
    CHECK(std::isfinite(l.total_loss));
    CHECK(l.penalty >= 0.0);
    CHECK(l.total_loss == doctest::Approx(cfg.alpha * l.penalty + 0.5 * l.td_loss).epsilon(1e-9));
    CHECK(l.eval_return_mean <= 0.0);
    CHECK(l.eval_return_mean >= -200.0);
    CHECK(l.eval_return_std >= 0.0);
  }
}

TEST_CASE("offline training is deterministic") {
  const auto ds = small_dataset(data::SourcePolicy::Random, 12, 5);
  const auto a = train_offline(ds, small_config(2), env::EnvConfig{});
  const auto b = train_offline(ds, small_config(2), env::EnvConfig{});
  CHECK(a.log == b.log);
  CHECK(a.params.same_values(b.params));
  CHECK(a.test_episodes == b.test_episodes);
  CqlConfig other = small_config(2);
  other.seed = 4;
  CHECK_FALSE(train_offline(ds, other, env::EnvConfig{}).log == a.log);
}

TEST_CASE("offline training rejects bad input") {
  data::Dataset empty;
  CHECK_THROWS_AS(train_offline(empty, small_config(1), env::EnvConfig{}), UsageError);
  const auto ds = small_dataset(data::SourcePolicy::Random, 4, 1);
  CqlConfig bad = small_config(1);
  bad.alpha = -1.0;
  CHECK_THROWS_AS(train_offline(ds, bad, env::EnvConfig{}), ConfigError);
  const std::vector<OfflineSample> none;
  CqlConfig cfg;
  const auto p = nn::zero_params(cfg.network());
  CHECK_THROWS_AS(cql_loss(pointers(none), p, p, cfg), UsageError);
}

TEST_CASE("mean dataset q") {
  CqlConfig cfg;
  const auto p = constant_q(cfg, {-1.0, -2.0, -4.0});
  const auto ds = small_dataset(data::SourcePolicy::Random, 50, 6);  // 5000 records, two chunks
  double want = 0.0;
  for (const auto& r : ds.records) want += std::array<double, 3>{-1.0, -2.0, -4.0}[static_cast<std::size_t>(r.action)];
  want /= static_cast<double>(ds.records.size());
  CHECK(mean_dataset_q(p, ds.records) == doctest::Approx(want).epsilon(1e-12));
  CHECK(mean_dataset_q(p, {}) == 0.0);
}

TEST_CASE("source comparison") {
  const auto random = small_dataset(data::SourcePolicy::Random, 10, 7);
  const auto expert = small_dataset(data::SourcePolicy::Expert, 10, 7);
  const CqlConfig cfg = small_config(2);

  const std::array<const data::Dataset*, 2> same{&random, &random};
  const auto twins = compare_sources(same, cfg, env::EnvConfig{});
  REQUIRE(twins.size() == 2);
  CHECK(twins[0].result.log == twins[1].result.log);

  const std::array<const data::Dataset*, 2> both{&random, &expert};
  const auto runs = compare_sources(both, cfg, env::EnvConfig{});
  CHECK(runs[0].source == data::SourcePolicy::Random);
  CHECK(runs[1].source == data::SourcePolicy::Expert);
  CHECK(runs[0].result.log == train_offline(random, cfg, env::EnvConfig{}).log);
  CHECK(runs[1].result.env_steps_during_training == 0);

  const auto bigger = small_dataset(data::SourcePolicy::Random, 11, 7);
  const std::array<const data::Dataset*, 2> uneven{&random, &bigger};
  CHECK_THROWS_AS(compare_sources(uneven, cfg, env::EnvConfig{}), UsageError);
}

TEST_CASE("epoch log csv and sidecar") {
  const std::vector<EpochLog> log{{0, 1.5, 0.5, 1.25, -44.0, 3.5}};
  CHECK(epoch_log_csv(log) ==
        "epoch,total_loss,td_loss,penalty,eval_return_mean,eval_return_std\n"
        "0,1.5,0.5,1.25,-44,3.5\n");
  const auto j = config_to_json(CqlConfig{});
  CHECK(j.at("algorithm") == "cql");
  CHECK(j.at("alpha") == 1.0);
  CHECK(j.at("dropout") == 0.1);
  CHECK(j.at("epochs") == 200);
  CHECK(j.at("batch_size") == 32);
  CHECK(j.at("train_fraction") == 0.8);
  CHECK(CqlConfig{}.network().dropout_rate == 0.1);
}
