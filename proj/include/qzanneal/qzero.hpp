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

// Network-guided tree search with self-play ("QZero").
//
// A single-player game: the moves pick x_1, ..., x_M in order, and the game
// is won when the annealed energy satisfies E - E_g < epsilon. Selection
// uses the PUCT score
//
//   U(s, a) = W(s, a) / N(s, a) + C p(s, a) sqrt(sum_a' N(s, a')) / (1 + N(s, a)).
//
// Partial-path leaves are scored by the value network, complete paths by
// the annealer (+1 win, -1 loss). After N_playout simulations the player
// moves by the visit-frequency policy pi. Networks see the current prefix
// and the flattened clause matrix of the instance, so one pair of networks
// can be pre-trained across instances and fine-tuned on a new one.

#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "qzanneal/common.hpp"
#include "qzanneal/mcts.hpp"
#include "qzanneal/nn.hpp"
#include "qzanneal/sat.hpp"
#include "qzanneal/schedule.hpp"

namespace qzanneal {

/// Network input for a partial schedule: the prefix (x_1 .. x_k, 0, .., 0)
/// scaled by the per-component bound, then vec(H_info).
struct QzState {
  std::vector<double> prefix;  // length M, zeros beyond `level`
  int level = 0;
  const std::vector<double>* h_info = nullptr;

  Eigen::VectorXd input(const ScheduleGrid& grid) const {
    const auto M = static_cast<Eigen::Index>(prefix.size());
    Eigen::VectorXd v(M + static_cast<Eigen::Index>(h_info ? h_info->size() : 0));
    for (Eigen::Index i = 0; i < M; ++i) v(i) = prefix[i] / grid.bound(static_cast<int>(i));
    if (h_info)
      for (std::size_t k = 0; k < h_info->size(); ++k) v(M + static_cast<Eigen::Index>(k)) = (*h_info)[k];
    return v;
  }
};

inline QzState make_state(const ScheduleGrid& grid, const std::vector<int>& indices,
                          const std::vector<double>& h_info) {
  QzState s;
  s.prefix.assign(grid.size(), 0.0);
  for (std::size_t i = 0; i < indices.size(); ++i) s.prefix[i] = grid.value(static_cast<int>(i), indices[i]);
  s.level = static_cast<int>(indices.size());
  s.h_info = &h_info;
  return s;
}

struct NetworkOutput {
  Eigen::VectorXd priors;  // over the current level's P actions
  double value = 0;
};

inline NetworkOutput evaluate_networks(const NetworkParams& p, const Eigen::VectorXd& input, int level) {
  check_policy_shape(p);
  if (level < 0 || level >= p.levels) throw InvalidArgument("evaluate_networks: level out of range");
  if (input.size() != p.policy.input_size())
    throw InvalidArgument("evaluate_networks: input width " + std::to_string(input.size()) + ", network expects " +
                          std::to_string(p.policy.input_size()));
  const Eigen::MatrixXd logits = p.policy.forward(input).back();
  const Eigen::MatrixXd v = p.value.forward(input).back();
  return {masked_softmax(logits.col(0), level, p.choices), v(0, 0)};
}

inline NetworkOutput evaluate_networks(const NetworkParams& p, const QzState& state, const ScheduleGrid& grid) {
  if (grid.size() != p.levels || grid.uniform_choices() != p.choices)
    throw InvalidArgument("evaluate_networks: grid does not match the policy head");
  return evaluate_networks(p, state.input(grid), state.level);
}

/// PUCT score; an unvisited child contributes no exploitation term.
inline double puct_score(double W, long N, double prior, long sum_N, double C) {
  const double q = N > 0 ? W / static_cast<double>(N) : 0.0;
  return q + C * prior * std::sqrt(static_cast<double>(sum_N)) / (1.0 + static_cast<double>(N));
}

struct PuctNode {
  std::vector<int> path;  // grid indices chosen so far
  bool expanded = false;
  std::vector<long> N;
  std::vector<double> W;
  std::vector<double> prior;
  std::vector<std::unique_ptr<PuctNode>> children;
  std::optional<double> energy;  // complete paths only, once queried

  long total_visits() const {
    long s = 0;
    for (long n : N) s += n;
    return s;
  }
};

struct QzConfig {
  int n_playout = 6;
  double C_start = 3.0;
  double C_end = 0.5;
  double epsilon = 0.01;
  int episodes_per_round = 4;
  int epochs_per_round = 5;
  int batch_size = 32;
  int max_episodes = 200;
  double lr_start = 0.008;
  double lr_end = 0.0008;
  /// Replay buffer cap, in samples, for fine-tuning.
  std::size_t replay_capacity = 1024;
  std::uint64_t seed = 0;
};

/// Exploration constant for episode `e` of a `budget`-episode run; linear
/// from C_start to C_end.
inline double exploration_constant(const QzConfig& cfg, int e, int budget) {
  if (budget <= 1) return cfg.C_start;
  const double f = std::clamp(static_cast<double>(e) / (budget - 1), 0.0, 1.0);
  return cfg.C_start + (cfg.C_end - cfg.C_start) * f;
}

/// The problem a QZero player is solving.
struct QzEnvironment {
  EnergyFn energy;
  double ground_energy = 0;       // E_g
  std::vector<double> h_info;     // vec(H_info), length m * n
};

struct EpisodeRecord {
  std::vector<TrainingSample> samples;  // one per move
  std::vector<int> indices;             // the complete schedule played
  double energy = 0;
  bool win = false;
};

/// Running state shared by the episodes of one solve.
struct QzProgress {
  QueryLedger ledger;
  double best_energy = std::numeric_limits<double>::infinity();
  std::vector<int> best_indices;
  std::optional<double> best_success;
  std::optional<long> queries_to_win;
  std::vector<std::pair<long, double>> improvements;
};

namespace detail {

class SelfPlay {
 public:
  SelfPlay(const NetworkParams& net, const QzEnvironment& env, const ScheduleGrid& grid, const QzConfig& cfg,
           double C, Rng& rng, QzProgress& progress)
      : net_(net), env_(env), grid_(grid), cfg_(cfg), C_(C), rng_(rng), progress_(progress) {}

  EpisodeRecord play() {
    EpisodeRecord rec;
    auto root = std::make_unique<PuctNode>();
    const int M = grid_.size();
    const int P = grid_.uniform_choices();
    for (int move = 0; move < M; ++move) {
      for (int k = 0; k < cfg_.n_playout; ++k) simulate(*root);
      if (!root->expanded) expand(*root);
      const long total = root->total_visits();
      Eigen::VectorXd pi(P);
      for (int a = 0; a < P; ++a)
        pi(a) = total > 0 ? static_cast<double>(root->N[a]) / total : root->prior[a];
      TrainingSample s;
      s.input = make_state(grid_, root->path, env_.h_info).input(grid_);
      s.level = move;
      s.pi = pi;
      rec.samples.push_back(std::move(s));

      std::discrete_distribution<int> pick(pi.data(), pi.data() + P);
      const int a = pick(rng_);
      if (!root->children[a]) root->children[a] = make_child(*root, a);
      root = std::move(root->children[a]);
    }
    rec.indices = root->path;
    rec.energy = terminal_energy(*root);
    rec.win = rec.energy - env_.ground_energy < cfg_.epsilon;
    for (auto& s : rec.samples) s.z = rec.win ? 1.0 : -1.0;
    return rec;
  }

 private:
  std::unique_ptr<PuctNode> make_child(const PuctNode& parent, int a) const {
    auto c = std::make_unique<PuctNode>();
    c->path = parent.path;
    c->path.push_back(a);
    return c;
  }

  bool is_terminal(const PuctNode& n) const { return static_cast<int>(n.path.size()) == grid_.size(); }

  double terminal_energy(PuctNode& n) {
    if (!n.energy) {
      const Evaluation ev = env_.energy(index_to_params(grid_, n.path));
      progress_.ledger.record();
      n.energy = ev.energy;
      if (ev.energy < progress_.best_energy) {
        progress_.best_energy = ev.energy;
        progress_.best_indices = n.path;
        progress_.best_success = ev.success;
        progress_.improvements.emplace_back(progress_.ledger.count(), ev.energy);
      }
      if (!progress_.queries_to_win && ev.energy - env_.ground_energy < cfg_.epsilon)
        progress_.queries_to_win = progress_.ledger.count();
    }
    return *n.energy;
  }

  double expand(PuctNode& n) {
    const int P = grid_.uniform_choices();
    const auto out = evaluate_networks(net_, make_state(grid_, n.path, env_.h_info), grid_);
    n.prior.assign(out.priors.data(), out.priors.data() + P);
    n.N.assign(P, 0);
    n.W.assign(P, 0.0);
    n.children.resize(P);
    n.expanded = true;
    return out.value;
  }

  void simulate(PuctNode& root) {
    std::vector<std::pair<PuctNode*, int>> trail;
    PuctNode* node = &root;
    double value = 0;
    while (true) {
      if (is_terminal(*node)) {
        value = terminal_energy(*node) - env_.ground_energy < cfg_.epsilon ? 1.0 : -1.0;
        break;
      }
      if (!node->expanded) {
        value = expand(*node);
        break;
      }
      const long total = node->total_visits();
      int best = 0;
      double best_score = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < static_cast<int>(node->N.size()); ++a) {
        const double u = puct_score(node->W[a], node->N[a], node->prior[a], total, C_);
        // Ties (all scores zero before any visit) go to the larger prior.
        if (u > best_score || (u == best_score && node->prior[a] > node->prior[best])) {
          best = a;
          best_score = u;
        }
      }
      trail.emplace_back(node, best);
      if (!node->children[best]) node->children[best] = make_child(*node, best);
      node = node->children[best].get();
    }
    for (auto& [n, a] : trail) {
      n->N[a] += 1;
      n->W[a] += value;
    }
  }

  const NetworkParams& net_;
  const QzEnvironment& env_;
  const ScheduleGrid& grid_;
  const QzConfig& cfg_;
  double C_;
  Rng& rng_;
  QzProgress& progress_;
};

}  // namespace detail

inline void check_network_fit(const NetworkParams& p, const ScheduleGrid& grid, std::size_t h_info_size) {
  check_policy_shape(p);
  if (grid.size() != p.levels || grid.uniform_choices() != p.choices)
    throw InvalidArgument("networks were shaped for a different grid");
  if (p.policy.input_size() != static_cast<Eigen::Index>(grid.size() + h_info_size))
    throw InvalidArgument("network input width " + std::to_string(p.policy.input_size()) +
                          " does not match M + m*n = " + std::to_string(grid.size() + h_info_size));
}

/// One self-play episode against frozen networks.
inline EpisodeRecord self_play_episode(const NetworkParams& p, const QzEnvironment& env, const ScheduleGrid& grid,
                                       const QzConfig& cfg, double C, Rng& rng, QzProgress& progress) {
  check_network_fit(p, grid, env.h_info.size());
  return detail::SelfPlay(p, env, grid, cfg, C, rng, progress).play();
}

/// Shape of the input layer for instances with m clauses over n variables.
inline NetworkShape network_shape_for(const ScheduleGrid& grid, int n, int m) {
  NetworkShape s;
  s.levels = grid.size();
  s.choices = grid.uniform_choices();
  s.input_size = grid.size() + n * m;
  return s;
}

/// Pre-training data from solved instances: for each, M samples pairing the
/// prefix state at level j - 1 with a one-hot label on x*_j and value 1.
struct SolvedInstance {
  std::vector<double> h_info;
  ScheduleParams x;
};

/// Position of x_j (0-based level j) in the concatenated M * P one-hot
/// vector: (x_j + l) / delta + P * j.
inline int one_hot_index(const ScheduleGrid& grid, int level, double x) {
  return grid.index_of(level, x) + grid.uniform_choices() * level;
}

inline std::vector<TrainingSample> build_pretrain_dataset(const std::vector<SolvedInstance>& solved,
                                                          const ScheduleGrid& grid) {
  const int P = grid.uniform_choices();
  std::vector<TrainingSample> out;
  for (const auto& s : solved) {
    const auto idx = params_to_index(grid, s.x);  // throws on off-grid coefficients
    for (int j = 0; j < grid.size(); ++j) {
      const std::vector<int> prefix(idx.begin(), idx.begin() + j);
      TrainingSample t;
      t.input = make_state(grid, prefix, s.h_info).input(grid);
      t.level = j;
      t.pi = Eigen::VectorXd::Zero(P);
      t.pi(one_hot_index(grid, j, s.x.x[j]) - P * j) = 1.0;
      t.z = 1.0;
      out.push_back(std::move(t));
    }
  }
  return out;
}

/// JSON-lines row for a pre-training sample: {s_vec, p_onehot_index, v}.
inline nlohmann::json pretrain_sample_to_json(const TrainingSample& t, int choices) {
  Eigen::Index a = 0;
  t.pi.maxCoeff(&a);
  return {{"s_vec", std::vector<double>(t.input.data(), t.input.data() + t.input.size())},
          {"p_onehot_index", static_cast<int>(a) + choices * t.level},
          {"v", t.z}};
}

inline TrainingSample pretrain_sample_from_json(const nlohmann::json& j, int levels, int choices) {
  try {
    TrainingSample t;
    const auto s = j.at("s_vec").get<std::vector<double>>();
    t.input = Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
    const int k = j.at("p_onehot_index").get<int>();
    if (k < 0 || k >= levels * choices) throw ParseError("pretrain sample: one-hot index out of range");
    t.level = k / choices;
    t.pi = Eigen::VectorXd::Zero(choices);
    t.pi(k % choices) = 1.0;
    t.z = j.at("v").get<double>();
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("pretrain sample: ") + e.what());
  }
}

struct PretrainConfig {
  int epochs = 300;
  int batch_size = 32;
  double lr_start = 0.008;
  double lr_end = 0.0008;
  std::uint64_t seed = 0;
};

inline std::vector<double> pretrain(NetworkParams& p, const std::vector<TrainingSample>& data,
                                    const PretrainConfig& cfg) {
  Rng rng(splitmix64(cfg.seed));
  return train_epochs(p, data, cfg.epochs, cfg.batch_size, cfg.lr_start, cfg.lr_end, rng);
}

struct TrainingLogRow {
  int round = 0;
  int episodes = 0;
  double mean_loss = 0;
  int wins = 0;
  long queries = 0;
};

struct QzSolveResult {
  ScheduleParams best_x;
  std::vector<int> best_indices;
  double energy = std::numeric_limits<double>::infinity();
  std::optional<double> success;
  long queries = 0;
  std::optional<long> queries_to_win;
  bool converged = false;
  int episodes = 0;
  std::vector<TrainingLogRow> log;
  std::vector<double> exploration;  // C used in each episode
  std::vector<std::pair<long, double>> improvements;
  NetworkParams params;
};

inline std::string training_log_csv(const std::vector<TrainingLogRow>& rows) {
  std::ostringstream out;
  out.precision(17);
  out << "round,episodes,mean_loss,wins,queries\n";
  for (const auto& r : rows)
    out << r.round << ',' << r.episodes << ',' << r.mean_loss << ',' << r.wins << ',' << r.queries << '\n';
  return out.str();
}

/// Alternates rounds of self-play and (when fine_tune is set) training on the
/// collected records until a win is seen or the episode budget runs out.
inline QzSolveResult solve_instance(NetworkParams params, const QzEnvironment& env, const ScheduleGrid& grid,
                                    const QzConfig& cfg, bool fine_tune) {
  check_network_fit(params, grid, env.h_info.size());
  if (cfg.n_playout < 1 || cfg.episodes_per_round < 1 || cfg.max_episodes < 1)
    throw InvalidArgument("QzConfig: n_playout, episodes_per_round and max_episodes must be positive");
  Rng rng(splitmix64(cfg.seed));
  QzProgress progress;
  QzSolveResult out;
  std::vector<TrainingSample> replay;
  const int rounds = (cfg.max_episodes + cfg.episodes_per_round - 1) / cfg.episodes_per_round;
  int episode = 0;
  for (int round = 0; round < rounds && episode < cfg.max_episodes; ++round) {
    int wins = 0, played = 0;
    for (int k = 0; k < cfg.episodes_per_round && episode < cfg.max_episodes; ++k, ++episode, ++played) {
      const double C = exploration_constant(cfg, episode, cfg.max_episodes);
      out.exploration.push_back(C);
      progress.ledger.begin_round();
      auto rec = self_play_episode(params, env, grid, cfg, C, rng, progress);
      wins += rec.win ? 1 : 0;
      for (auto& s : rec.samples) replay.push_back(std::move(s));
      if (progress.queries_to_win) {
        ++episode;
        ++played;
        break;
      }
    }
    if (replay.size() > cfg.replay_capacity)
      replay.erase(replay.begin(), replay.end() - static_cast<std::ptrdiff_t>(cfg.replay_capacity));
    double mean_loss = 0;
    if (fine_tune && !progress.queries_to_win) {
      const double lr = geometric_rate(cfg.lr_start, cfg.lr_end, round, rounds);
      const auto hist = train_epochs(params, replay, cfg.epochs_per_round, cfg.batch_size, lr, lr, rng);
      mean_loss = hist.empty() ? 0.0 : hist.back();
    } else if (!replay.empty()) {
      mean_loss = batch_loss(params, replay).total();
    }
    out.log.push_back({round, played, mean_loss, wins, progress.ledger.count()});
    if (progress.queries_to_win) break;
  }
  out.episodes = episode;
  out.queries = progress.ledger.count();
  out.queries_to_win = progress.queries_to_win;
  out.converged = progress.queries_to_win.has_value();
  out.energy = progress.best_energy;
  out.best_indices = progress.best_indices;
  if (!progress.best_indices.empty()) out.best_x = index_to_params(grid, progress.best_indices);
  out.success = progress.best_success;
  out.improvements = std::move(progress.improvements);
  out.params = std::move(params);
  return out;
}

}  // namespace qzanneal
