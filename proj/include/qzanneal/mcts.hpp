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

// Monte Carlo tree search over the coefficient grid.
//
// The tree has M + 1 levels: the root, then one level per coefficient whose
// nodes are that coefficient's grid indices. Each episode
//   1. selects from the root by maximum UCB while the current node has no
//      untried candidates left,
//   2. expands up to N_exp untried candidates,
//   3. runs N_sim uniform random playouts to level M from every new child,
//      each one an annealer query, and
//   4. backpropagates each playout's merit to the root.
// The search returns the lowest-energy complete schedule it ever evaluated.

#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qzanneal/common.hpp"
#include "qzanneal/schedule.hpp"

namespace qzanneal {

/// Result of one annealer query.
struct Evaluation {
  double energy = 0;
  /// Ground-space probability, when the caller knows the solutions.
  std::optional<double> success;
};

using EnergyFn = std::function<Evaluation(const ScheduleParams&)>;

enum class MeritKind {
  normalized_energy,    // 1 - E / scale
  success_probability,  // needs Evaluation::success
};

/// Bridges energy minimization to the merit maximized by UCB.
inline double merit_of(double energy, double scale) {
  if (!(scale > 0)) throw InvalidArgument("merit_of: scale must be positive");
  return 1.0 - energy / scale;
}

inline double merit_of(const Evaluation& ev, MeritKind kind, double scale) {
  if (kind == MeritKind::success_probability) {
    if (!ev.success) throw InvalidArgument("merit_of: success merit requested without a success value");
    return *ev.success;
  }
  return merit_of(ev.energy, scale);
}

/// Counts annealer queries, overall and per episode (or restart).
class QueryLedger {
 public:
  void begin_round() { per_round_.push_back(0); }
  void record(long k = 1) {
    count_ += k;
    if (per_round_.empty()) per_round_.push_back(0);
    per_round_.back() += k;
  }
  long count() const { return count_; }
  const std::vector<long>& per_round() const { return per_round_; }

 private:
  long count_ = 0;
  std::vector<long> per_round_;
};

/// w / v + C sqrt(2 ln(v_parent) / v); unvisited nodes score +infinity.
inline double ucb_score(double merit_sum, long visits, long parent_visits, double C) {
  if (visits <= 0) return std::numeric_limits<double>::infinity();
  const double lnp = parent_visits > 0 ? std::log(static_cast<double>(parent_visits)) : 0.0;
  return merit_sum / visits + C * std::sqrt(2.0 * lnp / visits);
}

struct SearchNode {
  int level = 0;   // 0 = root
  int index = -1;  // coefficient grid index; -1 at the root
  long visits = 0;
  double merit_sum = 0;
  /// Playouts started from this node itself (as opposed to its subtree).
  long own_visits = 0;
  /// Mean direct merit of the node's own playouts. Not used by the UCB score.
  double direct_merit = 0;
  bool exhausted = false;
  SearchNode* parent = nullptr;
  std::vector<std::unique_ptr<SearchNode>> children;
  std::vector<int> untried;

  std::vector<int> path() const {
    std::vector<int> p;
    for (const SearchNode* n = this; n && n->level > 0; n = n->parent) p.push_back(n->index);
    return {p.rbegin(), p.rend()};
  }
};

struct MctsConfig {
  double C = 2.0;
  int n_exp = 10;
  int n_sim = 5;
  int episodes = 80;
  MeritKind merit = MeritKind::normalized_energy;
  /// Energy scale for normalized merits; the clause count m for H_final.
  double merit_scale = 1.0;
  std::uint64_t seed = 0;
  /// Workers for the playout evaluations of one expansion.
  unsigned threads = 1;

  void validate() const {
    if (!(C > 0) || n_exp < 1 || n_sim < 1 || episodes < 0)
      throw InvalidArgument("MctsConfig: need C > 0, N_exp >= 1, N_sim >= 1, episodes >= 0");
  }
};

struct EpisodeLogEntry {
  int episode = 0;
  double best_energy_so_far = 0;
  long queries_cumulative = 0;
  std::vector<int> selected_path;
};

inline nlohmann::json to_json(const EpisodeLogEntry& e) {
  return {{"episode", e.episode},
          {"best_energy_so_far", e.best_energy_so_far},
          {"queries_cumulative", e.queries_cumulative},
          {"selected_path", e.selected_path}};
}

struct SearchResult {
  ScheduleParams best_x;
  std::vector<int> best_indices;
  double best_energy = std::numeric_limits<double>::infinity();
  std::optional<double> best_success;
  QueryLedger ledger;
  std::vector<EpisodeLogEntry> episode_log;
  /// Query count at which each new best was first seen (for efficiency curves).
  std::vector<std::pair<long, double>> improvements;
};

inline nlohmann::json result_to_json(const SearchResult& r) {
  nlohmann::json j = {{"x", r.best_x.x}, {"energy", r.best_energy}, {"queries", r.ledger.count()}};
  if (r.best_success) j["success_probability"] = *r.best_success;
  return j;
}

class MctsSearch {
 public:
  MctsSearch(EnergyFn env, ScheduleGrid grid, MctsConfig cfg)
      : env_(std::move(env)), grid_(std::move(grid)), cfg_(cfg), rng_(splitmix64(cfg.seed)) {
    cfg_.validate();
    root_ = std::make_unique<SearchNode>();
    root_->untried = all_indices(0);
  }

  const SearchNode& root() const { return *root_; }
  const SearchResult& result() const { return result_; }
  SearchResult& result() { return result_; }
  bool finished() const { return root_->exhausted; }

  /// One select / expand / simulate / backpropagate round. Returns false
  /// when every leaf of the tree has already been evaluated.
  bool episode() {
    if (root_->exhausted) return false;
    result_.ledger.begin_round();
    SearchNode* node = select();
    const auto children = expand(*node);

    struct Playout {
      SearchNode* child;
      std::vector<int> indices;
    };
    std::vector<Playout> playouts;
    for (SearchNode* c : children) {
      const auto prefix = c->path();
      for (int k = 0; k < cfg_.n_sim; ++k) {
        auto full = prefix;
        for (int lvl = c->level; lvl < grid_.size(); ++lvl) {
          std::uniform_int_distribution<int> pick(0, grid_.choices(lvl) - 1);
          full.push_back(pick(rng_));
        }
        playouts.push_back({c, std::move(full)});
      }
    }

    std::vector<Evaluation> evals(playouts.size());
    parallel_for(
        playouts.size(),
        [&](std::size_t i) {
          try {
            evals[i] = env_(index_to_params(grid_, playouts[i].indices));
          } catch (const std::exception& e) {
            throw Error(std::string("mcts: environment failed on episode ") +
                        std::to_string(episodes_run_ + 1) + ": " + e.what());
          }
        },
        cfg_.threads);

    for (std::size_t i = 0; i < playouts.size(); ++i) {
      result_.ledger.record();
      note_evaluation(playouts[i].indices, evals[i]);
      const double r = merit_of(evals[i], cfg_.merit, cfg_.merit_scale);
      SearchNode* c = playouts[i].child;
      c->own_visits += 1;
      c->direct_merit += (r - c->direct_merit) / static_cast<double>(c->own_visits);
      for (SearchNode* n = c; n; n = n->parent) {
        n->visits += 1;
        n->merit_sum += r;
      }
    }
    for (SearchNode* n = node; n; n = n->parent) refresh_exhausted(*n);

    ++episodes_run_;
    result_.episode_log.push_back(
        {episodes_run_, result_.best_energy, result_.ledger.count(), node->path()});
    return true;
  }

  SearchResult run() {
    for (int e = 0; e < cfg_.episodes; ++e)
      if (!episode()) break;
    return result_;
  }

 private:
  std::vector<int> all_indices(int level) const {
    std::vector<int> v(grid_.choices(level));
    for (int i = 0; i < static_cast<int>(v.size()); ++i) v[i] = i;
    return v;
  }

  SearchNode* select() {
    SearchNode* node = root_.get();
    while (node->untried.empty() && !node->children.empty()) {
      SearchNode* best = nullptr;
      double best_score = -std::numeric_limits<double>::infinity();
      for (auto& c : node->children) {
        if (c->exhausted) continue;
        const double u = ucb_score(c->merit_sum, c->visits, node->visits, cfg_.C);
        if (!best || u > best_score || (u == best_score && c->index < best->index)) {
          best = c.get();
          best_score = u;
        }
      }
      if (!best) break;
      node = best;
    }
    return node;
  }

  std::vector<SearchNode*> expand(SearchNode& node) {
    std::vector<SearchNode*> out;
    const int k = std::min<int>(cfg_.n_exp, static_cast<int>(node.untried.size()));
    for (int i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, node.untried.size() - 1);
      std::swap(node.untried[i], node.untried[pick(rng_)]);
    }
    std::vector<int> chosen(node.untried.begin(), node.untried.begin() + k);
    node.untried.erase(node.untried.begin(), node.untried.begin() + k);
    for (int idx : chosen) {
      auto child = std::make_unique<SearchNode>();
      child->level = node.level + 1;
      child->index = idx;
      child->parent = &node;
      if (child->level < grid_.size())
        child->untried = all_indices(child->level);
      else
        child->exhausted = true;
      out.push_back(child.get());
      node.children.push_back(std::move(child));
    }
    return out;
  }

  void refresh_exhausted(SearchNode& n) {
    if (n.level == grid_.size()) {
      n.exhausted = true;
      return;
    }
    if (!n.untried.empty()) return;
    for (auto& c : n.children) {
      if (c->level == grid_.size()) c->exhausted = true;
      if (!c->exhausted) return;
    }
    n.exhausted = true;
  }

  void note_evaluation(const std::vector<int>& indices, const Evaluation& ev) {
    if (ev.energy < result_.best_energy) {
      result_.best_energy = ev.energy;
      result_.best_indices = indices;
      result_.best_x = index_to_params(grid_, indices);
      result_.best_success = ev.success;
      result_.improvements.emplace_back(result_.ledger.count(), ev.energy);
    }
  }

  EnergyFn env_;
  ScheduleGrid grid_;
  MctsConfig cfg_;
  Rng rng_;
  std::unique_ptr<SearchNode> root_;
  SearchResult result_;
  int episodes_run_ = 0;
};

inline SearchResult run_search(EnergyFn env, const ScheduleGrid& grid, const MctsConfig& cfg) {
  return MctsSearch(std::move(env), grid, cfg).run();
}

}  // namespace qzanneal
