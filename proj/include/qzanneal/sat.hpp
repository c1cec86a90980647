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

// 3-SAT instances and their diagonal problem Hamiltonians.
//
// Basis convention: variable 0 is the most significant bit of a basis index,
// and boolean true is bit 1. So for n = 3 the index 0b100 = 4 assigns
// b0 = true, b1 = b2 = false.

#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "qzanneal/common.hpp"

namespace qzanneal {

struct Literal {
  int var = 0;
  bool negated = false;

  friend bool operator==(const Literal&, const Literal&) = default;
  friend auto operator<=>(const Literal&, const Literal&) = default;
};

using Clause = std::array<Literal, 3>;

inline constexpr int kMaxEnumerationVars = 24;
inline constexpr int kMaxGeneratorVars = 16;

/// Bit of variable `var` inside basis index `z` for an n-variable system.
inline constexpr bool variable_bit(std::uint64_t z, int var, int n) {
  return ((z >> (n - 1 - var)) & 1U) != 0;
}

class SatInstance {
 public:
  SatInstance(int n, std::vector<Clause> clauses) : n_(n), clauses_(std::move(clauses)) {
    if (n_ < 3) throw InvalidArgument("SatInstance: need n >= 3, got " + std::to_string(n_));
    if (clauses_.empty()) throw InvalidArgument("SatInstance: need at least one clause");
    for (std::size_t c = 0; c < clauses_.size(); ++c) {
      const auto& cl = clauses_[c];
      for (const auto& lit : cl) {
        if (lit.var < 0 || lit.var >= n_)
          throw InvalidArgument("SatInstance: clause " + std::to_string(c) +
                                " references variable " + std::to_string(lit.var) +
                                " outside [0, " + std::to_string(n_) + ")");
      }
      if (cl[0].var == cl[1].var || cl[0].var == cl[2].var || cl[1].var == cl[2].var)
        throw InvalidArgument("SatInstance: clause " + std::to_string(c) +
                              " repeats a variable");
    }
  }

  int num_vars() const { return n_; }
  int num_clauses() const { return static_cast<int>(clauses_.size()); }
  const std::vector<Clause>& clauses() const { return clauses_; }

  /// True when assignment z satisfies clause c.
  bool satisfies(std::size_t c, std::uint64_t z) const {
    for (const auto& lit : clauses_[c])
      if (variable_bit(z, lit.var, n_) != lit.negated) return true;
    return false;
  }

  int count_violated(std::uint64_t z) const {
    int k = 0;
    for (std::size_t c = 0; c < clauses_.size(); ++c) k += satisfies(c, z) ? 0 : 1;
    return k;
  }

  friend bool operator==(const SatInstance&, const SatInstance&) = default;

 private:
  int n_;
  std::vector<Clause> clauses_;
};

/// Two instances are the same problem when their clause multisets agree,
/// with literal order inside each clause ignored.
inline bool same_clause_set(const SatInstance& a, const SatInstance& b) {
  if (a.num_vars() != b.num_vars() || a.num_clauses() != b.num_clauses()) return false;
  auto canon = [](const SatInstance& s) {
    std::multiset<Clause> out;
    for (auto cl : s.clauses()) {
      std::sort(cl.begin(), cl.end());
      out.insert(cl);
    }
    return out;
  };
  return canon(a) == canon(b);
}

/// H_final in the computational basis: violations[z] is the number of
/// clauses whose unique violating assignment matches z.
struct DiagonalHamiltonian {
  int n = 0;
  int m = 0;
  std::vector<int> violations;

  std::size_t dim() const { return violations.size(); }
};

inline DiagonalHamiltonian encode_hamiltonian(const SatInstance& inst) {
  const int n = inst.num_vars();
  if (n > kMaxEnumerationVars) throw SizeExceeded("encode_hamiltonian: n > 24");
  DiagonalHamiltonian h;
  h.n = n;
  h.m = inst.num_clauses();
  h.violations.assign(std::size_t{1} << n, 0);
  // Each clause is a projector onto the single pattern that falsifies all
  // three literals.
  for (const auto& cl : inst.clauses()) {
    std::uint64_t mask = 0, pattern = 0;
    for (const auto& lit : cl) {
      const std::uint64_t bit = std::uint64_t{1} << (n - 1 - lit.var);
      mask |= bit;
      if (lit.negated) pattern |= bit;
    }
    for (std::uint64_t z = 0; z < h.violations.size(); ++z)
      h.violations[z] += ((z & mask) == pattern) ? 1 : 0;
  }
  return h;
}

struct SolveResult {
  bool satisfiable = false;
  std::vector<std::uint64_t> solutions;  // argmin of violations, ascending
  int ground_energy = 0;                 // E_g = min violations
};

inline SolveResult brute_force_solve(const SatInstance& inst) {
  const int n = inst.num_vars();
  if (n > kMaxEnumerationVars)
    throw SizeExceeded("brute_force_solve: n = " + std::to_string(n) + " exceeds 24");
  SolveResult r;
  r.ground_energy = inst.num_clauses() + 1;
  const std::uint64_t dim = std::uint64_t{1} << n;
  for (std::uint64_t z = 0; z < dim; ++z) {
    const int v = inst.count_violated(z);
    if (v < r.ground_energy) {
      r.ground_energy = v;
      r.solutions.clear();
    }
    if (v == r.ground_energy) r.solutions.push_back(z);
  }
  r.satisfiable = r.ground_energy == 0;
  return r;
}

/// Number of satisfying assignments, stopping early once `cap` is reached.
inline int count_solutions(const SatInstance& inst, int cap) {
  const std::uint64_t dim = std::uint64_t{1} << inst.num_vars();
  int found = 0;
  for (std::uint64_t z = 0; z < dim && found < cap; ++z)
    if (inst.count_violated(z) == 0) ++found;
  return found;
}

struct GeneratorOptions {
  long max_attempts = 100000;
  bool allow_duplicate_clauses = true;
};

/// Draw a random 3-SAT instance with exactly one satisfying assignment by
/// rejection sampling. Deterministic in `seed`.
inline SatInstance generate_unique_instance(int n, int m, std::uint64_t seed,
                                            const GeneratorOptions& opt = {}) {
  if (n < 3 || n > kMaxGeneratorVars)
    throw InvalidArgument("generate_unique_instance: n must be in [3, 16]");
  if (m < 1) throw InvalidArgument("generate_unique_instance: m must be >= 1");
  if (!opt.allow_duplicate_clauses && m > n * (n - 1) * (n - 2) / 6 * 8)
    throw InvalidArgument("generate_unique_instance: not enough distinct clauses");
  Rng rng(splitmix64(seed));
  std::uniform_int_distribution<int> pick_var(0, n - 1);
  std::bernoulli_distribution coin(0.5);
  for (long attempt = 0; attempt < opt.max_attempts; ++attempt) {
    std::vector<Clause> clauses;
    clauses.reserve(m);
    std::set<Clause> seen;
    while (static_cast<int>(clauses.size()) < m) {
      Clause cl;
      int picked = 0;
      while (picked < 3) {
        const int v = pick_var(rng);
        bool dup = false;
        for (int i = 0; i < picked; ++i) dup |= cl[i].var == v;
        if (!dup) cl[picked++] = Literal{v, false};
      }
      for (auto& lit : cl) lit.negated = coin(rng);
      if (!opt.allow_duplicate_clauses) {
        auto key = cl;
        std::sort(key.begin(), key.end());
        if (!seen.insert(key).second) continue;
      }
      clauses.push_back(cl);
    }
    SatInstance inst(n, std::move(clauses));
    if (count_solutions(inst, 2) == 1) return inst;
  }
  throw Exhausted("generate_unique_instance: no unique-solution instance for n=" +
                  std::to_string(n) + ", m=" + std::to_string(m) + " within " +
                  std::to_string(opt.max_attempts) + " attempts");
}

/// Clause/variable incidence matrix: +1 for a positive literal, -1 for a
/// negated one. Stored row-major (row = clause).
struct HInfoMatrix {
  int rows = 0;  // m
  int cols = 0;  // n
  std::vector<int> entries;

  int at(int clause, int var) const { return entries[static_cast<std::size_t>(clause) * cols + var]; }

  /// Row-major vectorization, length m*n.
  std::vector<double> vectorized() const { return {entries.begin(), entries.end()}; }
};

inline HInfoMatrix build_h_info(const SatInstance& inst) {
  HInfoMatrix h;
  h.rows = inst.num_clauses();
  h.cols = inst.num_vars();
  h.entries.assign(static_cast<std::size_t>(h.rows) * h.cols, 0);
  for (int s = 0; s < h.rows; ++s)
    for (const auto& lit : inst.clauses()[s])
      h.entries[static_cast<std::size_t>(s) * h.cols + lit.var] = lit.negated ? -1 : 1;
  return h;
}

/// Render a basis index as a bitstring, variable 0 first.
inline std::string bitstring(std::uint64_t z, int n) {
  std::string s(n, '0');
  for (int v = 0; v < n; ++v)
    if (variable_bit(z, v, n)) s[v] = '1';
  return s;
}

}  // namespace qzanneal
