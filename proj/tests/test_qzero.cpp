// Copyright 2026 The qzanneal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <set>

#include "qzanneal/qzero.hpp"

using namespace qzanneal;
using Catch::Approx;

namespace {

std::vector<double> fake_h_info(int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(-1, 1);
  std::vector<double> h(static_cast<std::size_t>(size));
  for (auto& v : h) v = d(rng);
  return h;
}

NetworkParams small_nets(const ScheduleGrid& g, int info, bool zero_final, std::uint64_t seed = 1) {
  NetworkShape s;
  s.levels = g.size();
  s.choices = g.uniform_choices();
  s.input_size = g.size() + info;
  s.policy_hidden = {32, 16};
  s.value_hidden = {32, 16, 8};
  s.zero_final_layers = zero_final;
  return make_networks(s, seed);
}

}  // namespace

TEST_CASE("PUCT score") {
  CHECK(puct_score(0.0, 0, 0.5, 4, 1.0) == 1.0);
  CHECK(puct_score(1.0, 1, 0.5, 4, 1.0) == 1.5);
  CHECK(puct_score(-2.0, 2, 0.25, 0, 3.0) == -1.0);
  CHECK(puct_score(0.0, 3, 0.2, 9, 2.0) == Approx(0.3));
}

TEST_CASE("exploration constant decays linearly") {
  QzConfig cfg;
  CHECK(exploration_constant(cfg, 0, 200) == 3.0);
  CHECK(exploration_constant(cfg, 199, 200) == Approx(0.5));
  CHECK(exploration_constant(cfg, 99, 199) == Approx(1.75));
  CHECK(exploration_constant(cfg, 500, 200) == Approx(0.5));
}

TEST_CASE("state input scales the prefix and appends the clause matrix") {
  const auto g = ScheduleGrid::standard();
  const auto h = fake_h_info(147, 2);
  const auto s = make_state(g, {40, 0, 30}, h);
  CHECK(s.level == 3);
  const auto v = s.input(g);
  REQUIRE(v.size() == 152);
  CHECK(v(0) == Approx(1.0));
  CHECK(v(1) == Approx(-1.0));
  CHECK(v(2) == Approx(0.5));
  CHECK(v(3) == 0.0);
  CHECK(v(4) == 0.0);
  for (int k = 0; k < 147; ++k) CHECK(v(5 + k) == h[k]);
}

TEST_CASE("zero-initialized heads give uniform priors and zero value") {
  const auto g = ScheduleGrid::standard();
  const auto h = fake_h_info(147, 3);
  const auto p = small_nets(g, 147, true);
  for (int level = 0; level < 5; ++level) {
    std::vector<int> prefix(static_cast<std::size_t>(level), 7);
    const auto out = evaluate_networks(p, make_state(g, prefix, h), g);
    REQUIRE(out.priors.size() == 41);
    for (int a = 0; a < 41; ++a) CHECK(out.priors(a) == Approx(1.0 / 41.0).epsilon(1e-12));
    CHECK(out.value == 0.0);
  }
}

TEST_CASE("networks overfit a single labelled state") {
  const ScheduleGrid g(3, 0.1, 0.05);
  const auto h = fake_h_info(12, 4);
  auto p = small_nets(g, 12, false);
  TrainingSample t;
  t.input = make_state(g, {1, 3}, h).input(g);
  t.level = 2;
  t.pi = Eigen::VectorXd::Zero(5);
  t.pi(4) = 1.0;
  t.z = 1.0;
  for (int k = 0; k < 400; ++k) train_step(p, {t}, 0.05);
  const auto out = evaluate_networks(p, t.input, 2);
  CHECK(out.priors(4) > 0.99);
  CHECK(out.value > 0.95);
}

TEST_CASE("one self-play episode has one sample per coefficient") {
  const auto g = ScheduleGrid::standard();
  const auto h = fake_h_info(147, 5);
  const auto p = small_nets(g, 147, false);
  long calls = 0;
  QzEnvironment env;
  env.h_info = h;
  env.ground_energy = 0;
  env.energy = [&](const ScheduleParams& x) {
    ++calls;
    return Evaluation{std::abs(x.x[0]) + 0.5, std::nullopt};
  };
  QzConfig cfg;
  Rng rng(9);
  QzProgress progress;
  const auto rec = self_play_episode(p, env, g, cfg, 3.0, rng, progress);
  REQUIRE(rec.samples.size() == 5);
  CHECK(rec.indices.size() == 5);
  CHECK_FALSE(rec.win);
  for (int j = 0; j < 5; ++j) {
    const auto& s = rec.samples[j];
    CHECK(s.level == j);
    CHECK(s.pi.sum() == Approx(1.0));
    CHECK(s.pi.minCoeff() >= 0.0);
    CHECK(s.z == -1.0);
    CHECK(s.input.size() == 152);
  }
  CHECK(rec.energy == Approx(std::abs(g.value(0, rec.indices[0])) + 0.5));
  CHECK(progress.ledger.count() == calls);
  CHECK(calls >= 1);
  CHECK(progress.best_energy <= rec.energy);
}

TEST_CASE("an instance every schedule solves is won on the first query") {
  const auto g = ScheduleGrid::standard();
  const auto h = fake_h_info(147, 6);
  QzEnvironment env;
  env.h_info = h;
  env.ground_energy = 0;
  env.energy = [](const ScheduleParams&) { return Evaluation{0.001, 0.999}; };
  QzConfig cfg;
  const auto r = solve_instance(small_nets(g, 147, false), env, g, cfg, true);
  CHECK(r.converged);
  CHECK(r.queries_to_win == 1L);
  CHECK(r.episodes == 1);
  CHECK(r.log.size() == 1);
  REQUIRE(r.success.has_value());
  CHECK(*r.success == 0.999);
}

TEST_CASE("a hopeless instance spends the whole episode budget") {
  const ScheduleGrid g(2, 0.02, 0.01);
  const auto h = fake_h_info(6, 7);
  QzEnvironment env;
  env.h_info = h;
  env.ground_energy = 0;
  std::set<std::vector<int>> seen;
  env.energy = [&](const ScheduleParams& x) {
    seen.insert(params_to_index(g, x));
    return Evaluation{1.0 + x.x[0] + x.x[1], std::nullopt};
  };
  QzConfig cfg;
  cfg.max_episodes = 10;
  const auto r = solve_instance(small_nets(g, 6, false), env, g, cfg, true);
  CHECK_FALSE(r.converged);
  CHECK(r.episodes == 10);
  CHECK(r.log.size() == 3);
  CHECK(r.exploration.size() == 10);
  CHECK(r.exploration.front() == 3.0);
  CHECK(r.exploration.back() == Approx(0.5));
  CHECK(r.queries >= static_cast<long>(seen.size()));
  CHECK(r.energy >= 0.96 - 1e-12);
}

TEST_CASE("solves are reproducible per seed") {
  const ScheduleGrid g(3, 0.05, 0.01);
  const auto h = fake_h_info(9, 8);
  QzEnvironment env;
  env.h_info = h;
  env.ground_energy = 0;
  env.energy = [](const ScheduleParams& x) {
    return Evaluation{std::pow(x.x[0] - 0.02, 2) + std::pow(x.x[1] + 0.03, 2) + std::pow(x.x[2], 2), std::nullopt};
  };
  QzConfig cfg;
  cfg.epsilon = 1e-12;
  cfg.max_episodes = 12;
  cfg.seed = 3;
  const auto a = solve_instance(small_nets(g, 9, false), env, g, cfg, true);
  const auto b = solve_instance(small_nets(g, 9, false), env, g, cfg, true);
  CHECK(a.best_indices == b.best_indices);
  CHECK(a.queries == b.queries);
  CHECK(a.params.flat() == b.params.flat());
}

TEST_CASE("one-hot positions") {
  const auto g = ScheduleGrid::standard();
  CHECK(one_hot_index(g, 0, -0.2) == 0);
  CHECK(one_hot_index(g, 2, 0.0) == 102);
  CHECK(one_hot_index(g, 4, 0.2) == 204);
  CHECK_THROWS_AS(one_hot_index(g, 1, 0.005), InvalidArgument);
}

TEST_CASE("pre-training set has M samples per solved instance") {
  const auto g = ScheduleGrid::standard();
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<int> pick(0, 40);
  std::vector<SolvedInstance> solved;
  for (int i = 0; i < 45; ++i) {
    std::vector<int> idx(5);
    for (auto& k : idx) k = pick(rng);
    solved.push_back({fake_h_info(147, 100 + i), index_to_params(g, idx)});
  }
  const auto data = build_pretrain_dataset(solved, g);
  REQUIRE(data.size() == 225);
  for (std::size_t k = 0; k < data.size(); ++k) {
    const auto& t = data[k];
    const auto& src = solved[k / 5];
    const int j = static_cast<int>(k % 5);
    CHECK(t.level == j);
    CHECK(t.z == 1.0);
    CHECK(t.pi.sum() == 1.0);
    CHECK(t.pi(g.index_of(j, src.x.x[j])) == 1.0);
    // The state holds the prefix before x_j and nothing after it.
    for (int i = 0; i < 5; ++i) CHECK(t.input(i) == (i < j ? src.x.x[i] / 0.2 : 0.0));
    const auto back = pretrain_sample_from_json(nlohmann::json::parse(pretrain_sample_to_json(t, 41).dump()), 5, 41);
    CHECK(back.input == t.input);
    CHECK(back.level == t.level);
    CHECK(back.pi == t.pi);
    CHECK(back.z == t.z);
  }
  CHECK(pretrain_sample_to_json(data[2], 41)["p_onehot_index"] == g.index_of(2, solved[0].x.x[2]) + 82);
  CHECK_THROWS_AS(pretrain_sample_from_json(nlohmann::json{{"s_vec", {1.0}}, {"p_onehot_index", 205}, {"v", 1}}, 5, 41),
                  ParseError);
  CHECK_THROWS_AS(pretrain_sample_from_json(nlohmann::json{{"s_vec", {1.0}}}, 5, 41), ParseError);
}

TEST_CASE("pre-training fits the labels") {
  const ScheduleGrid g(3, 0.1, 0.05);
  std::vector<SolvedInstance> solved;
  for (int i = 0; i < 6; ++i) solved.push_back({fake_h_info(12, 200 + i), index_to_params(g, {i % 5, 2, 4 - i % 5})});
  const auto data = build_pretrain_dataset(solved, g);
  auto p = small_nets(g, 12, false);
  PretrainConfig pc;
  pc.epochs = 800;
  pc.batch_size = 6;
  pc.lr_start = 0.05;
  pc.lr_end = 0.01;
  const auto hist = pretrain(p, data, pc);
  CHECK(hist.back() < 0.5 * hist.front());
  for (const auto& t : data) {
    Eigen::Index best = 0;
    evaluate_networks(p, t.input, t.level).priors.maxCoeff(&best);
    Eigen::Index label = 0;
    t.pi.maxCoeff(&label);
    CHECK(best == label);
  }
}

TEST_CASE("network and grid mismatches are rejected") {
  const auto g = ScheduleGrid::standard();
  const auto p = small_nets(g, 147, false);
  const auto h = fake_h_info(140, 1);
  QzEnvironment env;
  env.h_info = h;
  env.energy = [](const ScheduleParams&) { return Evaluation{0.0, std::nullopt}; };
  CHECK_THROWS_AS(solve_instance(p, env, g, QzConfig{}, false), InvalidArgument);
  CHECK_THROWS_AS(solve_instance(p, env, ScheduleGrid(4, 0.2, 0.01), QzConfig{}, false), InvalidArgument);
  CHECK_THROWS_AS(evaluate_networks(p, Eigen::VectorXd::Zero(152), 5), InvalidArgument);
  const auto csv = training_log_csv({{0, 4, 1.5, 0, 20}});
  CHECK(csv == "round,episodes,mean_loss,wins,queries\n0,4,1.5,0,20\n");
}
