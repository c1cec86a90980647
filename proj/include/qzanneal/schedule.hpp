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

// Fourier-sine annealing schedules around the linear ramp,
//
//   s(t) = t/T + sum_{i=1..M} x_i sin(i pi t / T),
//
// and the discrete coefficient grid x_i in {-l, -l + delta, ..., l} that
// the tree searches walk.

#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qzanneal/common.hpp"

namespace qzanneal {

class ScheduleGrid {
 public:
  ScheduleGrid(int M, double l, double delta)
      : bounds_(static_cast<std::size_t>(std::max(M, 0)), l),
        steps_(static_cast<std::size_t>(std::max(M, 0)), delta) {
    validate();
  }

  ScheduleGrid(std::vector<double> bounds, std::vector<double> steps)
      : bounds_(std::move(bounds)), steps_(std::move(steps)) {
    validate();
  }

  /// Defaults used throughout: M = 5, l = 0.2, delta = 0.01.
  static ScheduleGrid standard() { return ScheduleGrid(5, 0.2, 0.01); }

  int size() const { return static_cast<int>(bounds_.size()); }
  double bound(int i) const { return bounds_[i]; }
  double step(int i) const { return steps_[i]; }

  /// 2 l_i / delta_i + 1.
  int choices(int i) const { return static_cast<int>(std::lround(2.0 * bounds_[i] / steps_[i])) + 1; }

  bool uniform() const {
    for (int i = 1; i < size(); ++i)
      if (bounds_[i] != bounds_[0] || steps_[i] != steps_[0]) return false;
    return true;
  }

  /// Choice count of the first component; callers that assume a uniform
  /// grid (policy heads, one-hot labels) check uniform() first.
  int uniform_choices() const {
    if (!uniform()) throw InvalidArgument("ScheduleGrid: grid is not uniform");
    return choices(0);
  }

  /// prod_i (2 l_i / delta_i + 1), as a double since it overflows quickly.
  double space_size() const {
    double s = 1.0;
    for (int i = 0; i < size(); ++i) s *= choices(i);
    return s;
  }

  double value(int i, int index) const {
    if (index < 0 || index >= choices(i))
      throw InvalidArgument("ScheduleGrid: index " + std::to_string(index) + " out of range for component " +
                            std::to_string(i));
    return -bounds_[i] + index * steps_[i];
  }

  int index_of(int i, double x) const {
    const double k = (x + bounds_[i]) / steps_[i];
    const double r = std::round(k);
    if (std::abs(k - r) > 1e-12 * std::max(1.0, std::abs(r)) || r < 0 || r >= choices(i))
      throw InvalidArgument("ScheduleGrid: coefficient " + std::to_string(x) + " of component " +
                            std::to_string(i) + " is off the grid");
    return static_cast<int>(r);
  }

  friend bool operator==(const ScheduleGrid&, const ScheduleGrid&) = default;

 private:
  void validate() const {
    if (bounds_.empty() || bounds_.size() != steps_.size())
      throw InvalidArgument("ScheduleGrid: need M >= 1 components with matching bounds and steps");
    for (std::size_t i = 0; i < bounds_.size(); ++i) {
      if (!(bounds_[i] > 0) || !(steps_[i] > 0))
        throw InvalidArgument("ScheduleGrid: l and delta must be positive");
      const double ratio = bounds_[i] / steps_[i];
      if (std::abs(ratio - std::round(ratio)) > 1e-9)
        throw InvalidArgument("ScheduleGrid: l / delta must be integral");
    }
  }

  std::vector<double> bounds_;
  std::vector<double> steps_;
};

struct ScheduleParams {
  std::vector<double> x;

  friend bool operator==(const ScheduleParams&, const ScheduleParams&) = default;
};

inline ScheduleParams index_to_params(const ScheduleGrid& grid, const std::vector<int>& indices) {
  if (static_cast<int>(indices.size()) != grid.size())
    throw InvalidArgument("index_to_params: expected " + std::to_string(grid.size()) + " indices");
  ScheduleParams p;
  p.x.reserve(indices.size());
  for (int i = 0; i < grid.size(); ++i) p.x.push_back(grid.value(i, indices[i]));
  return p;
}

inline std::vector<int> params_to_index(const ScheduleGrid& grid, const ScheduleParams& params) {
  if (static_cast<int>(params.x.size()) != grid.size())
    throw InvalidArgument("params_to_index: expected " + std::to_string(grid.size()) + " coefficients");
  std::vector<int> idx;
  idx.reserve(params.x.size());
  for (int i = 0; i < grid.size(); ++i) idx.push_back(grid.index_of(i, params.x[i]));
  return idx;
}

/// All-zero coefficients: the linear ramp s(t) = t/T.
inline ScheduleParams linear_params(int M) { return ScheduleParams{std::vector<double>(M, 0.0)}; }

class Schedule {
 public:
  Schedule(ScheduleParams params, double T, bool clamp = true)
      : params_(std::move(params)), T_(T), clamp_(clamp) {
    if (!(T_ > 0)) throw InvalidArgument("Schedule: T must be positive");
  }

  static Schedule linear(double T) { return Schedule(ScheduleParams{}, T); }

  /// s(t) = s0 for all t. Used for stationary-Hamiltonian checks; not a
  /// point of the search space.
  static Schedule frozen(double s0, double T) {
    if (!(s0 >= 0.0 && s0 <= 1.0)) throw InvalidArgument("Schedule::frozen: s must lie in [0, 1]");
    Schedule s(ScheduleParams{}, T);
    s.frozen_ = s0;
    return s;
  }

  bool is_frozen() const { return frozen_.has_value(); }

  const ScheduleParams& params() const { return params_; }
  double duration() const { return T_; }
  bool clamped() const { return clamp_; }

  /// Series value without clamping.
  double raw(double t) const {
    check_time(t);
    if (frozen_) return *frozen_;
    if (t == T_) return 1.0;
    double s = t / T_;
    const double w = std::numbers::pi * t / T_;
    for (std::size_t i = 0; i < params_.x.size(); ++i)
      s += params_.x[i] * std::sin(static_cast<double>(i + 1) * w);
    return s;
  }

  double operator()(double t) const {
    const double s = raw(t);
    return clamp_ ? std::clamp(s, 0.0, 1.0) : s;
  }

 private:
  void check_time(double t) const {
    if (!(t >= 0.0 && t <= T_))
      throw InvalidArgument("Schedule: t = " + std::to_string(t) + " outside [0, " + std::to_string(T_) + "]");
  }

  ScheduleParams params_;
  double T_;
  bool clamp_;
  std::optional<double> frozen_;
};

inline double eval_s(const Schedule& sched, double t) { return sched(t); }

inline nlohmann::json schedule_to_json(const Schedule& sched, const ScheduleGrid& grid) {
  if (sched.is_frozen()) throw InvalidArgument("schedule_to_json: frozen schedules have no coefficients");
  return {{"T", sched.duration()},       {"M", grid.size()},
          {"l", grid.bound(0)},          {"delta", grid.step(0)},
          {"x", sched.params().x},       {"clamp", sched.clamped()}};
}

/// Reads {T, M, l, delta, x[], clamp}. Coefficients must lie on the grid.
inline std::pair<Schedule, ScheduleGrid> schedule_from_json(const nlohmann::json& j) {
  try {
    ScheduleGrid grid(j.at("M").get<int>(), j.at("l").get<double>(), j.at("delta").get<double>());
    ScheduleParams p{j.at("x").get<std::vector<double>>()};
    params_to_index(grid, p);
    const bool clamp = j.contains("clamp") ? j["clamp"].get<bool>() : true;
    return {Schedule(std::move(p), j.at("T").get<double>(), clamp), grid};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("schedule json: ") + e.what());
  }
}

/// "t,s" rows at `points` evenly spaced times including both endpoints.
inline std::string sample_schedule_csv(const Schedule& sched, int points) {
  if (points < 2) throw InvalidArgument("sample_schedule_csv: need at least 2 points");
  std::ostringstream out;
  out.precision(17);
  out << "t,s\n";
  for (int k = 0; k < points; ++k) {
    const double t = k == points - 1 ? sched.duration() : sched.duration() * k / (points - 1);
    out << t << ',' << sched(t) << '\n';
  }
  return out.str();
}

}  // namespace qzanneal
