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

// State-vector evolution under H(s) = (1 - s) H_init + s H_final with
//
//   H_init = 1/2 sum_i (1 - X_i),
//
// whose ground state is the uniform superposition with energy 0, and
// H_final diagonal in the computational basis. Both terms are exactly
// diagonalizable, so one time step is the symmetric product
//
//   exp(-i a/2 H_init) exp(-i b H_final) exp(-i a/2 H_init),
//   a = (1 - s) dt,  b = s dt,  s sampled at the step midpoint,
//
// which is unitary to rounding error and second order in dt.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "qzanneal/common.hpp"
#include "qzanneal/sat.hpp"
#include "qzanneal/schedule.hpp"

namespace qzanneal {

using cplx = std::complex<double>;

inline constexpr int kMaxStateQubits = 14;
inline constexpr int kMaxSpectrumQubits = 12;

class StateVector {
 public:
  StateVector() = default;
  StateVector(int n, std::vector<cplx> amplitudes) : n_(n), amp_(std::move(amplitudes)) {
    if (amp_.size() != (std::size_t{1} << n_))
      throw InvalidArgument("StateVector: need 2^n amplitudes");
  }

  static StateVector basis(int n, std::uint64_t z) {
    std::vector<cplx> a(std::size_t{1} << n, 0.0);
    a.at(z) = 1.0;
    return StateVector(n, std::move(a));
  }

  int num_qubits() const { return n_; }
  std::size_t dim() const { return amp_.size(); }
  const std::vector<cplx>& amplitudes() const { return amp_; }
  std::vector<cplx>& amplitudes() { return amp_; }
  cplx operator[](std::size_t z) const { return amp_[z]; }

  double norm() const {
    double s = 0;
    for (const auto& a : amp_) s += std::norm(a);
    return std::sqrt(s);
  }

  cplx inner(const StateVector& other) const {
    cplx s = 0;
    for (std::size_t z = 0; z < amp_.size(); ++z) s += std::conj(amp_[z]) * other.amp_[z];
    return s;
  }

 private:
  int n_ = 0;
  std::vector<cplx> amp_;
};

/// Uniform superposition, the zero-energy ground state of H_init.
inline StateVector initial_state(int n, int max_qubits = kMaxStateQubits) {
  if (n < 1 || n > max_qubits)
    throw SizeExceeded("initial_state: n = " + std::to_string(n) + " outside [1, " +
                       std::to_string(max_qubits) + "]");
  const std::size_t dim = std::size_t{1} << n;
  return StateVector(n, std::vector<cplx>(dim, cplx(1.0 / std::sqrt(static_cast<double>(dim)), 0.0)));
}

/// psi <- exp(-i a H_init) psi. Each 1/2 (1 - X) factor has eigenvalue 0 on
/// |+> and 1 on |->, so per qubit the propagator is
/// [[(1+e)/2, (1-e)/2], [(1-e)/2, (1+e)/2]] with e = exp(-i a).
inline void apply_driver(StateVector& psi, double a) {
  if (a == 0.0) return;
  // Real arithmetic: std::complex multiplication goes through the
  // NaN-recovering library routine unless compiled with -fcx-limited-range.
  const double c = std::cos(a), sn = std::sin(a);
  const double dr = 0.5 * (1.0 + c), di = -0.5 * sn;  // (1 + e) / 2
  const double orr = 0.5 * (1.0 - c), oi = 0.5 * sn;  // (1 - e) / 2
  auto* amp = reinterpret_cast<double*>(psi.amplitudes().data());
  const std::size_t dim = psi.dim();
  for (int q = 0; q < psi.num_qubits(); ++q) {
    const std::size_t bit = std::size_t{1} << q;
    for (std::size_t base = 0; base < dim; base += 2 * bit) {
      for (std::size_t z = base; z < base + bit; ++z) {
        double* lo = amp + 2 * z;
        double* hi = amp + 2 * (z | bit);
        const double lr = lo[0], li = lo[1], hr = hi[0], hii = hi[1];
        lo[0] = dr * lr - di * li + orr * hr - oi * hii;
        lo[1] = dr * li + di * lr + orr * hii + oi * hr;
        hi[0] = orr * lr - oi * li + dr * hr - di * hii;
        hi[1] = orr * li + oi * lr + dr * hii + di * hr;
      }
    }
  }
}

/// psi <- exp(-i b H_final) psi.
inline void apply_problem(StateVector& psi, const DiagonalHamiltonian& h, double b) {
  if (b == 0.0) return;
  std::vector<double> pr(static_cast<std::size_t>(h.m) + 1), pi(pr.size());
  const double c1 = std::cos(b), s1 = -std::sin(b);
  pr[0] = 1.0;
  pi[0] = 0.0;
  for (std::size_t k = 1; k < pr.size(); ++k) {
    pr[k] = pr[k - 1] * c1 - pi[k - 1] * s1;
    pi[k] = pr[k - 1] * s1 + pi[k - 1] * c1;
  }
  auto* amp = reinterpret_cast<double*>(psi.amplitudes().data());
  for (std::size_t z = 0; z < psi.dim(); ++z) {
    const int v = h.violations[z];
    const double re = amp[2 * z], im = amp[2 * z + 1];
    amp[2 * z] = re * pr[v] - im * pi[v];
    amp[2 * z + 1] = re * pi[v] + im * pr[v];
  }
}

inline double final_energy(const StateVector& psi, const DiagonalHamiltonian& h) {
  double e = 0;
  for (std::size_t z = 0; z < psi.dim(); ++z) e += h.violations[z] * std::norm(psi[z]);
  return e;
}

inline double driver_energy(const StateVector& psi) {
  const auto& amp = psi.amplitudes();
  double hop = 0;
  for (int q = 0; q < psi.num_qubits(); ++q) {
    const std::size_t bit = std::size_t{1} << q;
    for (std::size_t z = 0; z < amp.size(); ++z) hop += std::real(std::conj(amp[z]) * amp[z ^ bit]);
  }
  const double nrm2 = psi.norm() * psi.norm();
  return 0.5 * (psi.num_qubits() * nrm2 - hop);
}

/// <psi| (1 - s) H_init + s H_final |psi>.
inline double instantaneous_energy(const StateVector& psi, const DiagonalHamiltonian& h, double s) {
  return (1.0 - s) * driver_energy(psi) + s * final_energy(psi, h);
}

inline double success_probability(const StateVector& psi, const std::vector<std::uint64_t>& solutions) {
  double p = 0;
  for (auto z : solutions) p += std::norm(psi[z]);
  return p;
}

/// Dense real-symmetric H(s); only sensible for small n.
inline Eigen::MatrixXd dense_hamiltonian(const DiagonalHamiltonian& h, double s) {
  if (h.n > kMaxSpectrumQubits) throw SizeExceeded("dense_hamiltonian: n > 12");
  const Eigen::Index dim = static_cast<Eigen::Index>(h.dim());
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim, dim);
  for (Eigen::Index z = 0; z < dim; ++z) {
    H(z, z) = (1.0 - s) * 0.5 * h.n + s * h.violations[z];
    for (int q = 0; q < h.n; ++q) H(z, z ^ (Eigen::Index{1} << q)) = -(1.0 - s) * 0.5;
  }
  return H;
}

struct LowSpectrum {
  double e0 = 0;
  double e1 = 0;
  double gap() const { return e1 - e0; }
};

inline LowSpectrum low_spectrum(const DiagonalHamiltonian& h, double s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense_hamiltonian(h, s), Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();
  return {ev(0), ev.size() > 1 ? ev(1) : ev(0)};
}

struct SpectrumScan {
  std::vector<double> s;
  std::vector<double> e0;
  std::vector<double> e1;
  double min_gap = 0;
  double s_at_min_gap = 0;
};

/// Two lowest eigenvalues of H(s) over a grid of s values. Ties in the gap
/// resolve to the earliest grid point.
inline SpectrumScan spectrum_scan(const DiagonalHamiltonian& h, const std::vector<double>& s_grid) {
  if (h.n > kMaxSpectrumQubits) throw SizeExceeded("spectrum_scan: n > 12");
  if (s_grid.empty()) throw InvalidArgument("spectrum_scan: empty s grid");
  SpectrumScan out;
  out.s = s_grid;
  out.min_gap = std::numeric_limits<double>::infinity();
  for (double s : s_grid) {
    const auto ls = low_spectrum(h, s);
    out.e0.push_back(ls.e0);
    out.e1.push_back(ls.e1);
    if (ls.gap() < out.min_gap) {
      out.min_gap = ls.gap();
      out.s_at_min_gap = s;
    }
  }
  return out;
}

inline std::vector<double> uniform_s_grid(int points) {
  std::vector<double> g;
  for (int k = 0; k < points; ++k) g.push_back(points == 1 ? 0.0 : static_cast<double>(k) / (points - 1));
  return g;
}

struct AnnealSpec {
  double T = 0;
  double dt = 0.05;
  DiagonalHamiltonian h_final;
  Schedule schedule = Schedule::linear(1.0);

  int steps() const {
    if (!(T > 0) || !(dt > 0) || dt > T) throw InvalidArgument("AnnealSpec: need T > 0 and 0 < dt <= T");
    return static_cast<int>(std::ceil(T / dt - 1e-9));
  }
};

struct EvolutionTrace {
  std::vector<double> t;
  std::vector<double> s;
  std::vector<double> energy;
  std::vector<double> e0;
  std::vector<double> gap;

  std::size_t size() const { return t.size(); }

  /// Distance above the instantaneous ground energy.
  std::vector<double> excess_energy() const {
    std::vector<double> d(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) d[k] = energy[k] - e0[k];
    return d;
  }

  std::string to_csv() const {
    std::ostringstream out;
    out.precision(17);
    out << "t,s,energy,E0,gap\n";
    for (std::size_t k = 0; k < t.size(); ++k)
      out << t[k] << ',' << s[k] << ',' << energy[k] << ',' << e0[k] << ',' << gap[k] << '\n';
    return out.str();
  }
};

struct EvolveOptions {
  /// Record a trace point every `trace_stride` steps (plus t = 0 and t = T);
  /// 0 disables tracing. Each point costs a dense diagonalization.
  int trace_stride = 0;
};

struct EvolveResult {
  StateVector psi;
  EvolutionTrace trace;
};

inline EvolveResult evolve(const AnnealSpec& spec, const StateVector& psi0, const EvolveOptions& opt = {}) {
  if (psi0.num_qubits() != spec.h_final.n) throw InvalidArgument("evolve: state and Hamiltonian sizes differ");
  if (std::abs(spec.schedule.duration() - spec.T) > 1e-12 * spec.T)
    throw InvalidArgument("evolve: schedule duration differs from T");
  const int steps = spec.steps();
  const double h = spec.T / steps;
  EvolveResult out{psi0, {}};
  StateVector& psi = out.psi;

  auto record = [&](double t) {
    const double s = spec.schedule(t);
    const auto ls = low_spectrum(spec.h_final, s);
    out.trace.t.push_back(t);
    out.trace.s.push_back(s);
    out.trace.energy.push_back(instantaneous_energy(psi, spec.h_final, s));
    out.trace.e0.push_back(ls.e0);
    out.trace.gap.push_back(ls.gap());
  };
  if (opt.trace_stride > 0) record(0.0);

  // Consecutive half-steps of H_init commute and are merged.
  double pending = 0;
  for (int k = 0; k < steps; ++k) {
    const double s = spec.schedule((k + 0.5) * h);
    const double a = (1.0 - s) * h;
    apply_driver(psi, pending + 0.5 * a);
    apply_problem(psi, spec.h_final, s * h);
    pending = 0.5 * a;
    const bool last = k + 1 == steps;
    if (opt.trace_stride > 0 && ((k + 1) % opt.trace_stride == 0 || last)) {
      apply_driver(psi, pending);
      pending = 0;
      record(last ? spec.T : (k + 1) * h);
    }
  }
  apply_driver(psi, pending);
  return out;
}

struct ConvergedEvolve {
  EvolveResult result;
  double dt = 0;
  bool converged = false;
};

/// Halve dt until the final energy moves by less than `tol`.
inline ConvergedEvolve evolve_converged(AnnealSpec spec, const StateVector& psi0, double tol = 1e-6,
                                        int max_halvings = 12) {
  auto prev = evolve(spec, psi0);
  double e_prev = final_energy(prev.psi, spec.h_final);
  for (int i = 0; i < max_halvings; ++i) {
    spec.dt *= 0.5;
    auto cur = evolve(spec, psi0);
    const double e = final_energy(cur.psi, spec.h_final);
    if (std::abs(e - e_prev) < tol) return {std::move(cur), spec.dt, true};
    prev = std::move(cur);
    e_prev = e;
  }
  return {std::move(prev), spec.dt, false};
}

// Binary state dump, little-endian:
//   bytes 0..3  magic "QZSV"
//   bytes 4..7  uint32 format version (1)
//   bytes 8..11 uint32 qubit count n
//   then 2^n pairs of float64 (real, imag), basis index ascending.

namespace detail {

template <typename T>
void write_le(std::ostream& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  unsigned char b[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(b), sizeof(T))) throw ParseError("binary read: truncated input");
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace detail

inline void dump_state(std::ostream& out, const StateVector& psi) {
  out.write("QZSV", 4);
  detail::write_le<std::uint32_t>(out, 1);
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(psi.num_qubits()));
  for (const auto& a : psi.amplitudes()) {
    detail::write_le(out, a.real());
    detail::write_le(out, a.imag());
  }
}

inline StateVector load_state(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != "QZSV") throw ParseError("state dump: bad magic");
  if (detail::read_le<std::uint32_t>(in) != 1) throw ParseError("state dump: unsupported version");
  const auto n = detail::read_le<std::uint32_t>(in);
  if (n > 30) throw ParseError("state dump: implausible qubit count");
  std::vector<cplx> amp(std::size_t{1} << n);
  for (auto& a : amp) {
    const double re = detail::read_le<double>(in);
    const double im = detail::read_le<double>(in);
    a = {re, im};
  }
  return StateVector(static_cast<int>(n), std::move(amp));
}

/// One schedule evaluation on the simulated annealer: the unit of cost
/// ("query") that every optimizer is charged for.
class Annealer {
 public:
  Annealer(DiagonalHamiltonian h, double T, double dt = 0.05, bool clamp = true)
      : h_(std::move(h)), T_(T), dt_(dt), clamp_(clamp), psi0_(initial_state(h_.n)) {}

  StateVector run(const ScheduleParams& x) const {
    AnnealSpec spec{T_, dt_, h_, Schedule(x, T_, clamp_)};
    return evolve(spec, psi0_).psi;
  }

  double energy(const ScheduleParams& x) const { return final_energy(run(x), h_); }

  const DiagonalHamiltonian& hamiltonian() const { return h_; }
  double duration() const { return T_; }
  double dt() const { return dt_; }
  bool clamp() const { return clamp_; }

 private:
  DiagonalHamiltonian h_;
  double T_;
  double dt_;
  bool clamp_;
  StateVector psi0_;
};

}  // namespace qzanneal
