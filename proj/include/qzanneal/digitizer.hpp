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

// Digitized annealing: K slices of width T/K, each applying
//   exp(-i beta_j H_init) exp(-i gamma_j H_final),
// with gamma_j = s_j dt and beta_j = (1 - s_j) dt, s_j taken at the slice
// midpoint. The (gamma, beta) pairs are exactly the angles of a depth-K QAOA
// circuit.

#pragma once

#include <cstdint>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qzanneal/common.hpp"
#include "qzanneal/dynamics.hpp"
#include "qzanneal/schedule.hpp"

namespace qzanneal {

struct DigitizedSchedule {
  double T = 0;
  std::vector<double> s;
  std::vector<double> dt;
  std::vector<double> gamma;
  std::vector<double> beta;
  std::uint64_t source_hash = 0;

  int K() const { return static_cast<int>(s.size()); }
};

/// FNV-1a of the schedule's canonical JSON {T, clamp, x}.
inline std::uint64_t schedule_hash(const Schedule& sched) {
  const nlohmann::json j = {{"T", sched.duration()}, {"clamp", sched.clamped()}, {"x", sched.params().x}};
  return fnv1a(j.dump());
}

inline DigitizedSchedule digitize(const Schedule& sched, int K) {
  if (K < 1) throw InvalidArgument("digitize: K must be >= 1");
  DigitizedSchedule d;
  d.T = sched.duration();
  d.source_hash = schedule_hash(sched);
  const double h = d.T / K;
  for (int j = 0; j < K; ++j) {
    const double s = sched((j + 0.5) * h);
    d.s.push_back(s);
    d.dt.push_back(h);
    d.gamma.push_back(s * h);
    d.beta.push_back((1.0 - s) * h);
  }
  return d;
}

inline StateVector apply_digitized(const DigitizedSchedule& d, const DiagonalHamiltonian& h, StateVector psi) {
  if (psi.num_qubits() != h.n) throw InvalidArgument("apply_digitized: state and Hamiltonian sizes differ");
  for (int j = 0; j < d.K(); ++j) {
    apply_problem(psi, h, d.gamma[j]);
    apply_driver(psi, d.beta[j]);
  }
  return psi;
}

inline std::string hash_hex(std::uint64_t h) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

inline nlohmann::json export_qaoa(const DigitizedSchedule& d) {
  return {{"P", d.K()},
          {"gamma", d.gamma},
          {"beta", d.beta},
          {"T", d.T},
          {"source_schedule_hash", hash_hex(d.source_hash)}};
}

/// Inverse of export_qaoa. Slice widths and s_j are recovered from
/// gamma + beta and gamma / (gamma + beta).
inline DigitizedSchedule import_qaoa(const nlohmann::json& j) {
  try {
    DigitizedSchedule d;
    d.T = j.at("T").get<double>();
    d.gamma = j.at("gamma").get<std::vector<double>>();
    d.beta = j.at("beta").get<std::vector<double>>();
    const int P = j.at("P").get<int>();
    if (P != static_cast<int>(d.gamma.size()) || P != static_cast<int>(d.beta.size()))
      throw ParseError("qaoa json: P does not match the angle arrays");
    d.source_hash = std::stoull(j.at("source_schedule_hash").get<std::string>(), nullptr, 16);
    for (int k = 0; k < P; ++k) {
      const double w = d.gamma[k] + d.beta[k];
      d.dt.push_back(w);
      d.s.push_back(w > 0 ? d.gamma[k] / w : 0.0);
    }
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("qaoa json: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw ParseError("qaoa json: malformed schedule hash");
  }
}

}  // namespace qzanneal
