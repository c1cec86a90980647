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
#include <numbers>
#include <random>

#include "qzanneal/schedule.hpp"

using namespace qzanneal;
using Catch::Approx;

TEST_CASE("standard grid has 41 choices per coefficient") {
  const auto g = ScheduleGrid::standard();
  CHECK(g.size() == 5);
  CHECK(g.choices(0) == 41);
  CHECK(g.space_size() == std::pow(41.0, 5));
  CHECK(g.space_size() == Approx(1.16e8).epsilon(0.01));
  CHECK(g.value(0, 0) == Approx(-0.2).margin(1e-15));
  CHECK(g.value(0, 20) == Approx(0.0).margin(1e-15));
  CHECK(g.value(0, 40) == Approx(0.2).margin(1e-15));
  CHECK_THROWS_AS(g.value(0, 41), InvalidArgument);
  CHECK_THROWS_AS(g.value(0, -1), InvalidArgument);
}

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(ScheduleGrid(0, 0.2, 0.01), InvalidArgument);
  CHECK_THROWS_AS(ScheduleGrid(5, -0.2, 0.01), InvalidArgument);
  CHECK_THROWS_AS(ScheduleGrid(5, 0.2, 0.03), InvalidArgument);
  CHECK_THROWS_AS(ScheduleGrid({0.2, 0.2}, {0.01}), InvalidArgument);
  const ScheduleGrid mixed({0.2, 0.1}, {0.01, 0.05});
  CHECK_FALSE(mixed.uniform());
  CHECK(mixed.choices(1) == 5);
  CHECK_THROWS_AS(mixed.uniform_choices(), InvalidArgument);
}

TEST_CASE("indices and coefficients are a bijection over the grid") {
  const auto g = ScheduleGrid::standard();
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> pick(0, 40);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<int> idx(5);
    for (auto& i : idx) i = pick(rng);
    CHECK(params_to_index(g, index_to_params(g, idx)) == idx);
  }
  for (int k = 0; k < 41; ++k) CHECK(g.index_of(2, g.value(2, k)) == k);
  CHECK_THROWS_AS(g.index_of(0, 0.005), InvalidArgument);
  CHECK_THROWS_AS(g.index_of(0, 0.21), InvalidArgument);
  CHECK_THROWS_AS(params_to_index(g, ScheduleParams{{0.0, 0.0}}), InvalidArgument);
}

TEST_CASE("zero coefficients give the linear ramp") {
  const Schedule s(linear_params(5), 40.0);
  for (double t : {0.0, 3.0, 17.5, 39.9, 40.0}) CHECK(s(t) == Approx(t / 40.0).margin(1e-15));
}

TEST_CASE("single sine term at mid-anneal") {
  const Schedule s(ScheduleParams{{0.2}}, 1.0);
  CHECK(s(0.5) == Approx(0.7).margin(1e-15));
}

TEST_CASE("series value against a direct sum") {
  const ScheduleParams x{{0.13, -0.07, 0.2, -0.2, 0.05}};
  const Schedule s(x, 60.0, false);
  for (double t = 0; t <= 60.0; t += 1.7) {
    double expect = t / 60.0;
    for (int i = 1; i <= 5; ++i) expect += x.x[i - 1] * std::sin(i * std::numbers::pi * t / 60.0);
    CHECK(s.raw(t) == Approx(expect).margin(1e-14));
  }
}

TEST_CASE("endpoints are pinned for every grid point") {
  const auto g = ScheduleGrid::standard();
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> pick(0, 40);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> idx(5);
    for (auto& i : idx) i = pick(rng);
    const Schedule s(index_to_params(g, idx), 25.0, false);
    CHECK(std::abs(s.raw(0.0)) == 0.0);
    CHECK(s.raw(25.0) == 1.0);
  }
}

TEST_CASE("clamping only touches values outside the unit interval") {
  const ScheduleParams x{{0.2, 0.2, 0.2, 0.2, 0.2}};
  const Schedule raw(x, 10.0, false);
  const Schedule clamped(x, 10.0, true);
  bool saw_overshoot = false;
  for (double t = 0; t <= 10.0; t += 0.05) {
    const double r = raw(t);
    if (r < 0.0 || r > 1.0) {
      saw_overshoot = true;
      CHECK(clamped(t) == (r < 0.0 ? 0.0 : 1.0));
    } else {
      CHECK(clamped(t) == r);
    }
  }
  CHECK(saw_overshoot);
}

TEST_CASE("time outside the anneal is rejected") {
  const Schedule s = Schedule::linear(5.0);
  CHECK_THROWS_AS(s(-0.1), InvalidArgument);
  CHECK_THROWS_AS(s(5.1), InvalidArgument);
  CHECK_THROWS_AS(Schedule(linear_params(5), 0.0), InvalidArgument);
}

TEST_CASE("schedule JSON round trip and CSV sampler") {
  const auto g = ScheduleGrid::standard();
  const Schedule s(index_to_params(g, {0, 7, 20, 33, 40}), 80.0, false);
  const auto j = nlohmann::json::parse(schedule_to_json(s, g).dump());
  const auto [back, grid] = schedule_from_json(j);
  CHECK(back.params() == s.params());
  CHECK(back.duration() == 80.0);
  CHECK_FALSE(back.clamped());
  CHECK(grid == g);

  auto bad = j;
  bad["x"][0] = 0.123;
  CHECK_THROWS_AS(schedule_from_json(bad), InvalidArgument);
  CHECK_THROWS_AS(schedule_from_json(nlohmann::json{{"T", 1.0}}), ParseError);

  const auto csv = sample_schedule_csv(Schedule::linear(2.0), 3);
  CHECK(csv == "t,s\n0,0\n1,0.5\n2,1\n");
}
