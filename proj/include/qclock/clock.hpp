#pragma once

// Finite-dimensional quantum clock: equally spaced energy ladder, the
// discrete-Fourier pointer basis it shifts through, a time operator diagonal
// in that basis, and Gaussian pointer superpositions whose evolution is
// quasi-continuous and whose [T, H] statistics are quasi-canonical.

#include "qclock/hilbert.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace qclock {

struct ClockParams {
  int d;         // Hilbert space dimension, >= 2
  double omega;  // level spacing (rad / time)

  explicit ClockParams(int d_, double omega_ = 2.0 * M_PI) : d(d_), omega(omega_) {
    if (d < 2) throw std::invalid_argument("ClockParams: d must be >= 2");
    if (!(omega > 0.0)) throw std::invalid_argument("ClockParams: omega must be positive");
  }

  // period; derived so that tau * omega == 2 pi by construction
  double tau() const { return 2.0 * M_PI / omega; }
};

struct QuasiIdealParams {
  double k0 = 0.0;  // pointer-space center, k0 = t d / tau
  double sigma;     // Gaussian width in pointer units
  double n0;        // mean energy index, <H> ~ n0 omega
};

/// True when sigma lies in [1, d]; the analytic twirl results additionally
/// require sigma >= sqrt(d), checked by sigma_in_analytic_range.
inline bool sigma_in_validity_range(const ClockParams& p, const QuasiIdealParams& q) {
  return q.sigma >= 1.0 && q.sigma <= static_cast<double>(p.d);
}

inline bool sigma_in_analytic_range(const ClockParams& p, const QuasiIdealParams& q) {
  return q.sigma >= std::sqrt(static_cast<double>(p.d)) && q.sigma <= static_cast<double>(p.d);
}

/// The d pointer labels in the half-open window -d/2 <= k - k0 < d/2:
/// integers for even d, half-integers for odd d. Ascending order.
inline std::vector<double> pointer_window(int d, double k0) {
  if (d < 2) throw std::invalid_argument("pointer_window: d must be >= 2");
  const double shift = (d % 2 == 0) ? 0.0 : 0.5;
  const double lo = k0 - 0.5 * d;
  // smallest admissible label >= lo; ceil makes the lower edge closed and,
  // with exactly d consecutive labels, the upper edge open
  const double first = std::ceil(lo - shift) + shift;
  std::vector<double> w(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) w[static_cast<std::size_t>(j)] = first + j;
  return w;
}

/// |theta_k> = (1/sqrt d) sum_n e^{-i 2 pi n k / d} |n>.  The label is folded
/// to [0, d) before the phases are computed, so pointer_state(p, k + d) is
/// entrywise identical to pointer_state(p, k).
inline StateVector pointer_state(const ClockParams& p, double k) {
  double kc = std::fmod(k, static_cast<double>(p.d));
  if (kc < 0.0) kc += p.d;
  StateVector v(p.d);
  const double f = 2.0 * M_PI * kc / p.d;
  const double norm = 1.0 / std::sqrt(static_cast<double>(p.d));
  for (int n = 0; n < p.d; ++n) v(n) = std::polar(norm, -f * n);
  return v;
}

/// H_C = omega * diag(0, 1, ..., d-1) in the energy basis.
inline ComplexMatrix clock_hamiltonian(const ClockParams& p) {
  ComplexMatrix h = ComplexMatrix::Zero(p.d, p.d);
  for (int n = 0; n < p.d; ++n) h(n, n) = p.omega * n;
  return h;
}

/// T_C = (tau/d) sum_k k |theta_k><theta_k|, k = 0..d-1.
inline ComplexMatrix time_operator(const ClockParams& p) {
  ComplexMatrix t = ComplexMatrix::Zero(p.d, p.d);
  for (int k = 0; k < p.d; ++k) {
    const StateVector th = pointer_state(p, k);
    t += (p.tau() / p.d * k) * (th * th.adjoint());
  }
  return t;
}

struct QuasiIdealState {
  StateVector vec;               // normalized, energy basis
  double norm_constant_sq;       // |A|^2 from the Gaussian normalization
  bool sigma_valid;              // sigma within [1, d]
  bool analytic_regime;          // sigma >= sqrt(d)
};

/// Gaussian superposition of pointer states over the window S_d(k0), folded
/// onto the canonical space through the energy-basis expansion of |theta_k>.
inline QuasiIdealState quasi_ideal_state(const ClockParams& p, const QuasiIdealParams& q) {
  if (!(q.sigma > 0.0)) throw std::invalid_argument("quasi_ideal_state: sigma must be positive");
  if (q.n0 < 0.0 || q.n0 > p.d - 1.0)
    throw std::invalid_argument("quasi_ideal_state: n0 must lie in [0, d-1]");
  const auto window = pointer_window(p.d, q.k0);
  StateVector psi = StateVector::Zero(p.d);
  double gauss_sq_sum = 0.0;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(p.d));
  for (double k : window) {
    const double dk = k - q.k0;
    const double g = std::exp(-M_PI / (q.sigma * q.sigma) * dk * dk);
    gauss_sq_sum += g * g;
    const Complex amp = std::polar(g, 2.0 * M_PI * q.n0 * dk / p.d);
    for (int n = 0; n < p.d; ++n)
      psi(n) += amp * std::polar(inv_sqrt_d, -2.0 * M_PI * n * k / p.d);
  }
  psi /= psi.norm();
  return {std::move(psi), 1.0 / gauss_sq_sum, sigma_in_validity_range(p, q),
          sigma_in_analytic_range(p, q)};
}

/// Exact evolution under H_C (diagonal in the energy basis).
inline StateVector evolve_clock(const ClockParams& p, const StateVector& psi, double t) {
  if (psi.size() != p.d) throw std::invalid_argument("evolve_clock: dimension mismatch");
  StateVector out(p.d);
  for (int n = 0; n < p.d; ++n) out(n) = psi(n) * std::polar(1.0, -p.omega * n * t);
  return out;
}

/// || e^{-i H_C t} |psi(k0)>  -  |psi(k0 + t d/tau)> ||, the re-centered state
/// built from the same Gaussian with the phase convention of the state
/// definition (including the /d in the n0 phase).
inline double quasi_continuity_residual(const ClockParams& p, const QuasiIdealParams& q, double t) {
  const StateVector evolved = evolve_clock(p, quasi_ideal_state(p, q).vec, t);
  QuasiIdealParams shifted = q;
  shifted.k0 = q.k0 + t * p.d / p.tau();
  return (evolved - quasi_ideal_state(p, shifted).vec).norm();
}

/// <psi| [T_C, H_C] |psi> for an arbitrary clock state.
inline Complex commutator_expectation(const ClockParams& p, const StateVector& psi) {
  const ComplexMatrix t = time_operator(p);
  const ComplexMatrix h = clock_hamiltonian(p);
  const ComplexMatrix c = t * h - h * t;
  return expectation(c, psi);
}

struct CommutatorResidual {
  Complex expectation_residual;  // <psi|[T,H]|psi> - i
  double vector_residual;        // || [T,H]|psi> - i|psi> ||
};

inline CommutatorResidual commutator_residual(const ClockParams& p, const QuasiIdealParams& q) {
  const StateVector psi = quasi_ideal_state(p, q).vec;
  const ComplexMatrix t = time_operator(p);
  const ComplexMatrix h = clock_hamiltonian(p);
  const ComplexMatrix c = t * h - h * t;
  const Complex e = psi.dot(c * psi);
  const double vec = (c * psi - Complex(0.0, 1.0) * psi).norm();
  return {e - Complex(0.0, 1.0), vec};
}

struct ClockTrace {
  std::vector<double> times;
  std::vector<double> t_expect;  // raw <T_C>; wraps with the pointer label
  std::vector<double> t_stddev;  // sqrt(<T^2> - <T>^2)
};

inline ClockTrace clock_trace(const ClockParams& p, const QuasiIdealParams& q,
                              const std::vector<double>& times) {
  if (times.empty()) throw std::invalid_argument("clock_trace: empty time grid");
  const StateVector psi0 = quasi_ideal_state(p, q).vec;
  const ComplexMatrix t_op = time_operator(p);
  const ComplexMatrix t_op2 = t_op * t_op;
  ClockTrace trace;
  trace.times = times;
  trace.t_expect.reserve(times.size());
  trace.t_stddev.reserve(times.size());
  for (double t : times) {
    const StateVector psi = evolve_clock(p, psi0, t);
    const double te = psi.dot(t_op * psi).real();
    const double te2 = psi.dot(t_op2 * psi).real();
    trace.t_expect.push_back(te);
    trace.t_stddev.push_back(std::sqrt(std::max(te2 - te * te, 0.0)));
  }
  return trace;
}

}  // namespace qclock
