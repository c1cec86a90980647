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

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "qzanneal/bench.hpp"

using namespace qzanneal;
using Catch::Approx;

namespace {

ExperimentConfig tiny_config() {
  return config_from_json(nlohmann::json::parse(R"({
    "experiment": "sweep",
    "instances": {"n": 5, "m": 15, "count": 2},
    "grid": {"M": 2, "l": 0.04, "delta": 0.01},
    "T": [3, 6],
    "dt": 0.1,
    "mcts": {"episodes": 3}
  })"));
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = config_from_json(nlohmann::json::parse(R"({
    "experiment": "compare", "seed": 7, "T": 80, "dt": 0.02, "clamp": false,
    "instances": {"count": 3, "stream": "held"},
    "mcts": {"episodes": 12, "C": 1.5},
    "sd": {"order": "sequential", "acceptance": "best", "max_iters": 50},
    "qzero": {"max_episodes": 40, "replay_capacity": 256, "lambda": 0.001},
    "pretrain": {"epochs": 20},
    "digitize_K": [4, 8]
  })"));
  CHECK(c.experiment == "compare");
  CHECK(c.seed == 7);
  CHECK(c.T == std::vector<double>{80.0});
  CHECK(c.anneal.dt == 0.02);
  CHECK_FALSE(c.anneal.clamp);
  CHECK(c.instances.count == 3);
  CHECK(c.instances.stream == "held");
  CHECK(c.instances.n == 7);
  CHECK(c.mcts.episodes == 12);
  CHECK(c.mcts.C == 1.5);
  CHECK(c.mcts.merit_scale == 21);
  CHECK(c.sd.order == NeighborOrder::sequential);
  CHECK(c.sd.acceptance == Acceptance::best_improvement);
  CHECK(c.sd.max_iters == 50);
  CHECK(c.qzero.max_episodes == 40);
  CHECK(c.qzero.replay_capacity == 256);
  CHECK(c.lambda == 0.001);
  CHECK(c.pretrain.epochs == 20);
  CHECK(c.digitize_K == std::vector<int>{4, 8});
  CHECK(c.grid == ScheduleGrid::standard());

  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"T": "long"})")), ParseError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"T": [10, -1]})")), InvalidArgument);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"dt": 0})")), InvalidArgument);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"instances": {"files": ["/nonexistent.cnf"]}})")),
                  InvalidArgument);
}

TEST_CASE("instances resolve deterministically from the root seed") {
  InstanceSource src;
  src.n = 5;
  src.m = 15;
  src.count = 3;
  const auto a = resolve_instances(src, 2026);
  const auto b = resolve_instances(src, 2026);
  REQUIRE(a.size() == 3);
  CHECK(a[0].id == "instances-0");
  CHECK(a[2].id == "instances-2");
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(same_clause_set(a[i].instance, b[i].instance));
    CHECK(a[i].solution.solutions.size() == 1);
    CHECK(a[i].h_info.size() == 75);
  }
  CHECK(a[0].seed == substream_seed(2026, "instances", 0));
  const auto c = resolve_instances(src, 2027);
  CHECK_FALSE(same_clause_set(a[0].instance, c[0].instance));
}

TEST_CASE("instance files load as DIMACS or JSON") {
  const auto dir = std::filesystem::temp_directory_path() / "qzanneal_bench_test";
  std::filesystem::create_directories(dir);
  const auto inst = generate_unique_instance(5, 15, 77);
  const auto cnf = (dir / "a.cnf").string();
  const auto js = (dir / "a.json").string();
  std::ofstream(cnf) << emit_dimacs(inst);
  std::ofstream(js) << instance_to_json({inst, 77, std::nullopt}).dump();
  const auto p = load_problem_file(cnf);
  const auto q = load_problem_file(js);
  CHECK(same_clause_set(p.instance, inst));
  CHECK(same_clause_set(q.instance, inst));
  CHECK(q.seed == 77u);
  CHECK_THROWS_AS(load_problem_file((dir / "missing.cnf").string()), InvalidArgument);
  std::ofstream(js) << "{not json";
  CHECK_THROWS_AS(load_problem_file(js), ParseError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("clause matrices are zero-padded to the network width") {
  const std::vector<double> h{1, -1, 0, 0, 1, 1};
  const auto out = fit_h_info(h, 2, 3, 4);
  CHECK(out == std::vector<double>{1, -1, 0, 0, 1, 1, 0, 0, 0, 0, 0, 0});
  CHECK(fit_h_info(h, 2, 3, 2) == h);
  CHECK_THROWS_AS(fit_h_info(h, 2, 3, 1), InvalidArgument);
  CHECK_THROWS_AS(fit_h_info(h, 3, 3, 4), InvalidArgument);
}

TEST_CASE("median") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK_THROWS_AS(median({}), InvalidArgument);
}

TEST_CASE("sweep gives both optimizers the same query budget") {
  const auto cfg = tiny_config();
  const auto pool = resolve_instances(cfg.instances, cfg.seed);
  const auto table = run_sweep(cfg, pool);
  CHECK(table.failures.empty());
  REQUIRE(table.rows.size() == 2 * 2 * 4);
  for (const auto& p : pool)
    for (double T : cfg.T) {
      const auto* m = table.find(p.id, "mcts", T);
      const auto* s = table.find(p.id, "sd", T);
      const auto* lin = table.find(p.id, "linear", T);
      REQUIRE(m);
      REQUIRE(s);
      REQUIRE(lin);
      CHECK(m->queries == s->queries);
      CHECK(m->queries > 0);
      CHECK(lin->x == std::vector<double>{0.0, 0.0});
      // Searching can only match or beat the schedules it could have picked.
      CHECK(m->energy <= evaluate_schedule(p, ScheduleParams{m->x}, T, cfg.anneal).energy + 1e-12);
    }
}

TEST_CASE("result tables are reproducible byte for byte") {
  const auto cfg = tiny_config();
  const auto pool = resolve_instances(cfg.instances, cfg.seed);
  const auto a = run_compare(cfg, pool);
  const auto b = run_compare(cfg, pool);
  CHECK(a.to_csv() == b.to_csv());
  CHECK(a.to_csv().rfind("instance,optimizer,T,energy,success,queries,spread,x\n", 0) == 0);
  CHECK(a.timing_csv().find("wall_seconds") != std::string::npos);
  CHECK(a.to_csv().find("wall") == std::string::npos);
}

TEST_CASE("self-check flags a tampered success probability") {
  const auto cfg = tiny_config();
  const auto pool = resolve_instances(cfg.instances, cfg.seed);
  auto table = run_compare(cfg, pool);
  REQUIRE(table.failures.empty());
  self_check(table, index_problems({&pool}), cfg.anneal);
  CHECK(table.failures.empty());
  for (auto& r : table.rows)
    if (r.optimizer == "sd") {
      *r.success += 1e-6;
      break;
    }
  self_check(table, index_problems({&pool}), cfg.anneal);
  REQUIRE(table.failures.size() == 1);
  CHECK(table.failures[0].message.find("self-check") != std::string::npos);
  const auto jsonl = table.to_jsonl();
  CHECK(jsonl.find("failed_cell") != std::string::npos);
}

TEST_CASE("a throwing cell fails alone") {
  const auto t = detail::run_cells(
      3,
      [](std::size_t i) {
        if (i == 1) throw std::runtime_error("boom");
        ResultTable r;
        r.rows.push_back({"p" + std::to_string(i), "x", 1.0, 0.0, std::nullopt, 1, {}, 0.0, 0.0});
        return r;
      },
      [](std::size_t i) { return "cell" + std::to_string(i); }, 1);
  CHECK(t.rows.size() == 2);
  REQUIRE(t.failures.size() == 1);
  CHECK(t.failures[0].cell == "cell1");
  CHECK(t.failures[0].message == "boom");
}

TEST_CASE("pool energy averages the members") {
  InstanceSource src;
  src.n = 5;
  src.m = 15;
  src.count = 2;
  const auto pool = resolve_instances(src, 1);
  const AnnealOptions opt{0.1, true};
  const ScheduleParams x{{0.1, -0.05}};
  const auto a = evaluate_schedule(pool[0], x, 4.0, opt);
  const auto b = evaluate_schedule(pool[1], x, 4.0, opt);
  const auto m = make_pool_energy_fn(pool, 4.0, opt)(x);
  CHECK(m.energy == Approx(0.5 * (a.energy + b.energy)).epsilon(1e-14));
  CHECK(*m.success == Approx(0.5 * (*a.success + *b.success)).epsilon(1e-14));
}
