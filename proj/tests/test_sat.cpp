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

#include <random>
#include <set>

#include "qzanneal/sat.hpp"
#include "qzanneal/sat_io.hpp"

using namespace qzanneal;

namespace {

Clause clause(int a, int b, int c) {
  auto lit = [](int v) { return Literal{std::abs(v) - 1, v < 0}; };
  return {lit(a), lit(b), lit(c)};
}

// Oracle: decode z into booleans via its bitstring and evaluate every
// clause as a disjunction.
int violated_by_oracle(const SatInstance& inst, std::uint64_t z) {
  const std::string bits = bitstring(z, inst.num_vars());
  int bad = 0;
  for (const auto& cl : inst.clauses()) {
    bool sat = false;
    for (const auto& lit : cl) {
      const bool value = bits[lit.var] == '1';
      sat = sat || (lit.negated ? !value : value);
    }
    bad += sat ? 0 : 1;
  }
  return bad;
}

SatInstance random_instance(int n, int m, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> var(0, n - 1);
  std::bernoulli_distribution coin(0.5);
  std::vector<Clause> cls;
  while (static_cast<int>(cls.size()) < m) {
    const int a = var(rng), b = var(rng), c = var(rng);
    if (a == b || a == c || b == c) continue;
    cls.push_back({Literal{a, coin(rng)}, Literal{b, coin(rng)}, Literal{c, coin(rng)}});
  }
  return SatInstance(n, cls);
}

}  // namespace

TEST_CASE("single positive clause is violated only by all-false") {
  const SatInstance inst(3, {clause(1, 2, 3)});
  const auto h = encode_hamiltonian(inst);
  REQUIRE(h.dim() == 8);
  for (std::uint64_t z = 0; z < 8; ++z) CHECK(h.violations[z] == (z == 0 ? 1 : 0));
  const auto sol = brute_force_solve(inst);
  CHECK(sol.satisfiable);
  CHECK(sol.solutions.size() == 7);
  CHECK(sol.ground_energy == 0);
}

TEST_CASE("complementary clauses violate 000 and 111") {
  const SatInstance inst(3, {clause(1, 2, 3), clause(-1, -2, -3)});
  const auto h = encode_hamiltonian(inst);
  for (std::uint64_t z = 0; z < 8; ++z) CHECK(h.violations[z] == ((z == 0 || z == 7) ? 1 : 0));
}

TEST_CASE("variable 0 is the most significant bit") {
  // (not b0 or b1 or b2) fails only for b0=1, b1=0, b2=0, i.e. z = 100b.
  const SatInstance inst(3, {clause(-1, 2, 3)});
  const auto h = encode_hamiltonian(inst);
  CHECK(h.violations[4] == 1);
  CHECK(bitstring(4, 3) == "100");
  CHECK(variable_bit(4, 0, 3));
  CHECK_FALSE(variable_bit(4, 2, 3));
}

TEST_CASE("all eight sign patterns make an unsatisfiable instance") {
  std::vector<Clause> cls;
  for (int mask = 0; mask < 8; ++mask)
    cls.push_back(clause(mask & 4 ? -1 : 1, mask & 2 ? -2 : 2, mask & 1 ? -3 : 3));
  const SatInstance inst(3, cls);
  const auto sol = brute_force_solve(inst);
  CHECK_FALSE(sol.satisfiable);
  CHECK(sol.ground_energy >= 1);
  const auto h = encode_hamiltonian(inst);
  for (auto z : sol.solutions) CHECK(h.violations[z] == sol.ground_energy);
}

TEST_CASE("encoded Hamiltonian matches per-assignment clause counting") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + trial % 8;
    const auto inst = random_instance(n, 1 + static_cast<int>(rng() % 40), rng);
    const auto h = encode_hamiltonian(inst);
    for (std::uint64_t z = 0; z < h.dim(); ++z) {
      REQUIRE(h.violations[z] == violated_by_oracle(inst, z));
      REQUIRE(h.violations[z] <= inst.num_clauses());
    }
  }
}

TEST_CASE("instance validation") {
  CHECK_THROWS_AS(SatInstance(3, {}), InvalidArgument);
  CHECK_THROWS_AS(SatInstance(2, {clause(1, 2, 2)}), InvalidArgument);
  CHECK_THROWS_AS(SatInstance(3, {clause(1, 1, 2)}), InvalidArgument);
  CHECK_THROWS_AS(SatInstance(3, {clause(1, 2, 4)}), InvalidArgument);
}

TEST_CASE("brute force refuses more than 24 variables") {
  const SatInstance inst(25, {clause(1, 2, 3)});
  CHECK_THROWS_AS(brute_force_solve(inst), SizeExceeded);
}

TEST_CASE("generated instances have one solution and are reproducible") {
  for (auto [n, m] : {std::pair{7, 21}, std::pair{7, 18}, std::pair{7, 23}}) {
    const auto a = generate_unique_instance(n, m, 0);
    const auto b = generate_unique_instance(n, m, 0);
    CHECK(a == b);
    CHECK(a.num_vars() == n);
    CHECK(a.num_clauses() == m);
    int solutions = 0;
    for (std::uint64_t z = 0; z < (1u << n); ++z) solutions += violated_by_oracle(a, z) == 0;
    CHECK(solutions == 1);
    const auto sol = brute_force_solve(a);
    REQUIRE(sol.solutions.size() == 1);
    CHECK(encode_hamiltonian(a).violations[sol.solutions[0]] == 0);
  }
  CHECK_FALSE(generate_unique_instance(7, 21, 0) == generate_unique_instance(7, 21, 1));
}

TEST_CASE("generator can forbid duplicate clauses") {
  GeneratorOptions opt;
  opt.allow_duplicate_clauses = false;
  const auto inst = generate_unique_instance(6, 18, 3, opt);
  std::set<Clause> seen;
  for (auto cl : inst.clauses()) {
    std::sort(cl.begin(), cl.end());
    CHECK(seen.insert(cl).second);
  }
  CHECK_THROWS_AS(generate_unique_instance(3, 9, 0, opt), InvalidArgument);
}

TEST_CASE("generator gives up after its attempt budget") {
  GeneratorOptions opt;
  opt.max_attempts = 1;
  // One clause over seven variables always has 127 solutions.
  CHECK_THROWS_AS(generate_unique_instance(7, 1, 0, opt), Exhausted);
}

TEST_CASE("spectrum is a subset of 0..m with unit spacing") {
  const auto inst = generate_unique_instance(7, 21, 5);
  const auto h = encode_hamiltonian(inst);
  std::set<int> levels(h.violations.begin(), h.violations.end());
  CHECK(*levels.begin() == 0);
  CHECK(*levels.rbegin() <= 21);
  int prev = -1;
  for (int v : levels) {
    if (prev >= 0) CHECK(v - prev >= 1);
    prev = v;
  }
}

TEST_CASE("H_info rows carry the literal signs") {
  // (b_0 or not b_2 or b_4) over five variables.
  const SatInstance inst(5, {clause(1, -3, 5), clause(2, 3, 4)});
  const auto hi = build_h_info(inst);
  CHECK(hi.rows == 2);
  CHECK(hi.cols == 5);
  CHECK(hi.at(0, 0) == 1);
  CHECK(hi.at(0, 2) == -1);
  CHECK(hi.at(0, 4) == 1);
  CHECK(hi.at(0, 1) == 0);
  CHECK(hi.at(1, 1) + hi.at(1, 2) + hi.at(1, 3) == 3);
  const auto big = build_h_info(generate_unique_instance(7, 21, 0));
  CHECK(big.vectorized().size() == 147);
  for (int r = 0; r < big.rows; ++r) {
    int nz = 0;
    for (int c = 0; c < big.cols; ++c) nz += big.at(r, c) != 0;
    CHECK(nz == 3);
  }
}

TEST_CASE("DIMACS parsing") {
  const auto inst = parse_dimacs("c tiny\np cnf 3 1\n1 2 3 0\n");
  REQUIRE(inst.num_clauses() == 1);
  CHECK(inst.clauses()[0] == clause(1, 2, 3));

  const auto split = parse_dimacs("p cnf 4 2\n1 -2\n 3 0 -4 2\n1 0\n%\n0\n");
  REQUIRE(split.num_clauses() == 2);
  CHECK(split.clauses()[1] == clause(-4, 2, 1));

  CHECK_THROWS_AS(parse_dimacs("p cnf 3 1\n1 2 0\n"), ParseError);
  CHECK_THROWS_AS(parse_dimacs("p cnf 3 1\n1 2 5 0\n"), ParseError);
  CHECK_THROWS_AS(parse_dimacs("p cnf 3 2\n1 2 3 0\n"), ParseError);
  CHECK_THROWS_AS(parse_dimacs("1 2 3 0\n"), ParseError);
  CHECK_THROWS_AS(parse_dimacs("p dnf 3 1\n1 2 3 0\n"), ParseError);
}

TEST_CASE("DIMACS and JSON round trips") {
  const auto inst = generate_unique_instance(7, 21, 9);
  const auto back = parse_dimacs(emit_dimacs(inst, "seed 9"));
  CHECK(same_clause_set(inst, back));
  CHECK(back == inst);

  const auto sol = brute_force_solve(inst);
  const auto j = instance_to_json({inst, 9, sol.solutions[0]});
  const auto rec = instance_from_json(nlohmann::json::parse(j.dump()));
  CHECK(rec.instance == inst);
  CHECK(rec.seed == std::optional<std::uint64_t>(9));
  CHECK(rec.solution == std::optional<std::uint64_t>(sol.solutions[0]));
  CHECK(j["solution"].get<std::string>() == bitstring(sol.solutions[0], 7));
}
