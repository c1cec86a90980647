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

// DIMACS CNF and JSON serialization of SatInstance.

#pragma once

#include <cstdint>
#include <cstdlib>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qzanneal/sat.hpp"

namespace qzanneal {

namespace detail {

inline int literal_to_dimacs(const Literal& lit) { return lit.negated ? -(lit.var + 1) : lit.var + 1; }

inline Literal literal_from_dimacs(long v, int n, int line) {
  if (v == 0 || std::labs(v) > n)
    throw ParseError("dimacs line " + std::to_string(line) + ": literal " + std::to_string(v) +
                     " out of range for " + std::to_string(n) + " variables");
  return Literal{static_cast<int>(std::labs(v) - 1), v < 0};
}

}  // namespace detail

/// Parse DIMACS CNF. Every clause must have exactly three literals. Clauses
/// may span lines; `c` lines are comments; a trailing `%` line is accepted.
inline SatInstance parse_dimacs(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int n = -1;
  long declared = -1;
  int lineno = 0;
  std::vector<Clause> clauses;
  std::vector<long> pending;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    if (tok == "c" || tok[0] == 'c') continue;
    if (tok == "%") break;
    if (tok == "p") {
      std::string fmt;
      if (n >= 0) throw ParseError("dimacs line " + std::to_string(lineno) + ": duplicate header");
      if (!(ls >> fmt >> n >> declared) || fmt != "cnf" || n < 0 || declared < 0)
        throw ParseError("dimacs line " + std::to_string(lineno) + ": malformed header");
      continue;
    }
    if (n < 0) throw ParseError("dimacs line " + std::to_string(lineno) + ": clause before header");
    ls.clear();
    ls.str(line);
    long v;
    while (ls >> v) {
      if (v == 0) {
        if (pending.size() != 3)
          throw ParseError("dimacs line " + std::to_string(lineno) + ": clause of width " +
                           std::to_string(pending.size()) + ", expected 3");
        Clause cl;
        for (int i = 0; i < 3; ++i) cl[i] = detail::literal_from_dimacs(pending[i], n, lineno);
        clauses.push_back(cl);
        pending.clear();
      } else {
        pending.push_back(v);
      }
    }
    if (!ls.eof()) throw ParseError("dimacs line " + std::to_string(lineno) + ": bad token");
  }
  if (n < 0) throw ParseError("dimacs: missing 'p cnf' header");
  if (!pending.empty()) throw ParseError("dimacs: unterminated final clause");
  if (static_cast<long>(clauses.size()) != declared)
    throw ParseError("dimacs: header declares " + std::to_string(declared) + " clauses, found " +
                     std::to_string(clauses.size()));
  try {
    return SatInstance(n, std::move(clauses));
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("dimacs: ") + e.what());
  }
}

inline std::string emit_dimacs(const SatInstance& inst, const std::string& comment = {}) {
  std::ostringstream out;
  if (!comment.empty()) out << "c " << comment << '\n';
  out << "p cnf " << inst.num_vars() << ' ' << inst.num_clauses() << '\n';
  for (const auto& cl : inst.clauses())
    out << detail::literal_to_dimacs(cl[0]) << ' ' << detail::literal_to_dimacs(cl[1]) << ' '
        << detail::literal_to_dimacs(cl[2]) << " 0\n";
  return out.str();
}

/// JSON instance record: the instance plus the provenance needed to
/// reproduce it.
struct InstanceRecord {
  SatInstance instance;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> solution;  // verified unique solution, if any
};

inline nlohmann::json instance_to_json(const InstanceRecord& rec) {
  const auto& inst = rec.instance;
  nlohmann::json clauses = nlohmann::json::array();
  for (const auto& cl : inst.clauses())
    clauses.push_back({detail::literal_to_dimacs(cl[0]), detail::literal_to_dimacs(cl[1]),
                       detail::literal_to_dimacs(cl[2])});
  nlohmann::json j = {{"n", inst.num_vars()}, {"m", inst.num_clauses()}, {"clauses", clauses}};
  j["seed"] = rec.seed ? nlohmann::json(*rec.seed) : nlohmann::json(nullptr);
  j["solution"] =
      rec.solution ? nlohmann::json(bitstring(*rec.solution, inst.num_vars())) : nlohmann::json(nullptr);
  return j;
}

inline InstanceRecord instance_from_json(const nlohmann::json& j) {
  try {
    const int n = j.at("n").get<int>();
    std::vector<Clause> clauses;
    for (const auto& c : j.at("clauses")) {
      if (c.size() != 3) throw ParseError("instance json: clause width must be 3");
      Clause cl;
      for (int i = 0; i < 3; ++i) cl[i] = detail::literal_from_dimacs(c[i].get<long>(), n, 0);
      clauses.push_back(cl);
    }
    if (j.contains("m") && j["m"].get<std::size_t>() != clauses.size())
      throw ParseError("instance json: m does not match clause count");
    InstanceRecord rec{SatInstance(n, std::move(clauses)), std::nullopt, std::nullopt};
    if (j.contains("seed") && !j["seed"].is_null()) rec.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("solution") && !j["solution"].is_null()) {
      const auto bits = j["solution"].get<std::string>();
      if (static_cast<int>(bits.size()) != n) throw ParseError("instance json: solution length");
      std::uint64_t z = 0;
      for (char ch : bits) {
        if (ch != '0' && ch != '1') throw ParseError("instance json: solution must be a bitstring");
        z = (z << 1) | static_cast<std::uint64_t>(ch == '1');
      }
      rec.solution = z;
    }
    return rec;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("instance json: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("instance json: ") + e.what());
  }
}

}  // namespace qzanneal
