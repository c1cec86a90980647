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

// Stochastic descent: greedy local search over single-coordinate +-delta
// moves from random grid points, restarted many times.

#pragma once

#include <limits>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "qzanneal/common.hpp"
#include "qzanneal/mcts.hpp"
#include "qzanneal/schedule.hpp"

namespace qzanneal {

enum class NeighborOrder { randomized, sequential };
enum class Acceptance { first_improvement, best_improvement };

struct SdConfig {
  /// Cap on accepted moves per restart.
  int max_iters = 1000;
  /// Number of restarts; 0 means "until the query budget is spent".
  int restarts = 1;
  NeighborOrder order = NeighborOrder::randomized;
  Acceptance acceptance = Acceptance::first_improvement;
  std::uint64_t seed = 0;
  /// Total query budget across restarts; 0 means unlimited. The restart that
  /// hits the budget stops mid-descent.
  long query_budget = 0;

  void validate() const {
    if (max_iters < 1) throw InvalidArgument("SdConfig: max_iters must be >= 1");
    if (restarts < 0 || query_budget < 0) throw InvalidArgument("SdConfig: negative restarts or budget");
    if (restarts == 0 && query_budget == 0)
      throw InvalidArgument("SdConfig: need a restart count or a query budget");
  }
};

struct RestartLog {
  std::vector<int> start;
  std::vector<int> final_indices;
  double energy = 0;
  std::optional<double> success;
  long queries = 0;
  int accepted_moves = 0;
  /// Energies of the start point and of every accepted move, in order.
  std::vector<double> accepted_energies;
  /// True when the restart stopped at a local minimum.
  bool local_minimum = false;
  bool truncated_by_budget = false;
};

struct SdResult {
  ScheduleParams best_x;
  std::vector<int> best_indices;
  double best_energy = std::numeric_limits<double>::infinity();
  std::optional<double> best_success;
  QueryLedger ledger;
  std::vector<RestartLog> restarts;
};

inline nlohmann::json to_json(const RestartLog& r) {
  nlohmann::json j = {{"start", r.start},
                      {"final", r.final_indices},
                      {"energy", r.energy},
                      {"queries", r.queries},
                      {"accepted_moves", r.accepted_moves},
                      {"local_minimum", r.local_minimum},
                      {"truncated_by_budget", r.truncated_by_budget}};
  if (r.success) j["success_probability"] = *r.success;
  return j;
}

inline nlohmann::json result_to_json(const SdResult& r) {
  nlohmann::json j = {{"x", r.best_x.x}, {"energy", r.best_energy}, {"queries", r.ledger.count()}};
  if (r.best_success) j["success_probability"] = *r.best_success;
  return j;
}

inline SdResult sd_search(const EnergyFn& env, const ScheduleGrid& grid, const SdConfig& cfg) {
  cfg.validate();
  Rng rng(splitmix64(cfg.seed));
  SdResult out;
  const int M = grid.size();
  auto budget_left = [&] { return cfg.query_budget == 0 || out.ledger.count() < cfg.query_budget; };

  for (int r = 0; (cfg.restarts == 0 || r < cfg.restarts) && budget_left(); ++r) {
    out.ledger.begin_round();
    RestartLog log;
    std::vector<int> cur(M);
    for (int i = 0; i < M; ++i) {
      std::uniform_int_distribution<int> pick(0, grid.choices(i) - 1);
      cur[i] = pick(rng);
    }
    log.start = cur;
    auto query = [&](const std::vector<int>& idx) {
      out.ledger.record();
      ++log.queries;
      const Evaluation ev = env(index_to_params(grid, idx));
      if (ev.energy < out.best_energy) {
        out.best_energy = ev.energy;
        out.best_indices = idx;
        out.best_x = index_to_params(grid, idx);
        out.best_success = ev.success;
      }
      return ev;
    };
    Evaluation cur_ev = query(cur);
    log.accepted_energies.push_back(cur_ev.energy);

    // Neighbors are encoded as 2 * coordinate + direction.
    std::vector<int> moves;
    for (int i = 0; i < M; ++i) {
      moves.push_back(2 * i);
      moves.push_back(2 * i + 1);
    }
    while (log.accepted_moves < cfg.max_iters) {
      if (cfg.order == NeighborOrder::randomized) std::shuffle(moves.begin(), moves.end(), rng);
      std::optional<std::vector<int>> best_next;
      Evaluation best_ev;
      bool budget_hit = false;
      for (int mv : moves) {
        const int i = mv / 2;
        const int next = cur[i] + ((mv % 2) ? 1 : -1);
        if (next < 0 || next >= grid.choices(i)) continue;
        if (!budget_left()) {
          budget_hit = true;
          break;
        }
        auto cand = cur;
        cand[i] = next;
        const Evaluation ev = query(cand);
        if (ev.energy < (best_next ? best_ev.energy : cur_ev.energy)) {
          best_next = cand;
          best_ev = ev;
          if (cfg.acceptance == Acceptance::first_improvement) break;
        }
      }
      if (best_next) {
        cur = *best_next;
        cur_ev = best_ev;
        ++log.accepted_moves;
        log.accepted_energies.push_back(cur_ev.energy);
        continue;
      }
      if (budget_hit)
        log.truncated_by_budget = true;
      else
        log.local_minimum = true;
      break;
    }
    if (!log.local_minimum && !log.truncated_by_budget && !budget_left()) log.truncated_by_budget = true;
    log.final_indices = cur;
    log.energy = cur_ev.energy;
    log.success = cur_ev.success;
    out.restarts.push_back(std::move(log));
  }
  return out;
}

}  // namespace qzanneal
