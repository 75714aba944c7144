#pragma once

// The six-dimensional lab: an observer register {perp, up, down} coupled to a
// spin-1/2, three models of the measurement evolution, and the outside
// observer's projective measurement family.
//
// Fixed basis order (observer state first, spin second):
//   0: |perp,up>  1: |perp,down>  2: |up,up>  3: |up,down>  4: |down,up>  5: |down,down>
// Every 6x6 matrix in this library uses this order.

#include "qclock/hilbert.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>

namespace qclock {

inline constexpr int lab_dim = 6;

enum LabBasisIndex : int {
  kPerpUp = 0,
  kPerpDown = 1,
  kUpUp = 2,
  kUpDown = 3,
  kDownUp = 4,
  kDownDown = 5,
};

/// Wigner's projection direction: |ok> = cos(theta/2)|up,up> + e^{i phi} sin(theta/2)|down,down>.
struct MeasurementSetting {
  double theta;  // [0, pi]
  double phi;    // [0, 2 pi)

  MeasurementSetting(double theta_, double phi_) : theta(theta_), phi(phi_) {
    if (theta < 0.0 || theta > M_PI) throw std::invalid_argument("MeasurementSetting: theta outside [0, pi]");
    if (phi < 0.0 || phi >= 2.0 * M_PI) throw std::invalid_argument("MeasurementSetting: phi outside [0, 2 pi)");
  }
};

/// (1/sqrt2)(|perp,up> + |perp,down>): observer ready, spin in |+>.
inline StateVector initial_lab_state() {
  StateVector v = StateVector::Zero(lab_dim);
  v(kPerpUp) = v(kPerpDown) = 1.0 / std::sqrt(2.0);
  return v;
}

/// H = omega0 (|perp,up><up,up| + |perp,down><down,down| + h.c.)
inline ComplexMatrix lab_hamiltonian(double omega0) {
  if (!(omega0 > 0.0)) throw std::invalid_argument("lab_hamiltonian: omega0 must be positive");
  ComplexMatrix h = ComplexMatrix::Zero(lab_dim, lab_dim);
  h(kPerpUp, kUpUp) = h(kUpUp, kPerpUp) = omega0;
  h(kPerpDown, kDownDown) = h(kDownDown, kPerpDown) = omega0;
  return h;
}

// Measurement-evolution models. The step model completes instantaneously at
// t_z (step(0) = 1, so the post-measurement state exists at the nominal
// time); the tanh model is a smoothed step; the periodic model is generated
// by lab_hamiltonian and must be halted at t = (m + 1/2) pi / omega0.
struct InstantModel {
  double t_z = 0.0;
};
struct TanhModel {
  double omega0;
  double t_z = 0.0;
};
struct PeriodicModel {
  double omega0;
};
using EvolutionModel = std::variant<InstantModel, TanhModel, PeriodicModel>;

namespace detail {

inline ComplexMatrix coupled_pair_unitary(Complex diag, Complex off, Complex uncoupled = Complex(1.0, 0.0)) {
  ComplexMatrix u = ComplexMatrix::Zero(lab_dim, lab_dim);
  u(kUpDown, kUpDown) = uncoupled;
  u(kDownUp, kDownUp) = uncoupled;
  for (auto [a, b] : {std::pair<int, int>{kPerpUp, kUpUp}, std::pair<int, int>{kPerpDown, kDownDown}}) {
    u(a, a) = u(b, b) = diag;
    u(a, b) = u(b, a) = off;
  }
  return u;
}

}  // namespace detail

inline ComplexMatrix lab_unitary(const EvolutionModel& model, double t) {
  return std::visit(
      [t](const auto& m) -> ComplexMatrix {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, InstantModel>) {
          const double step = (t - m.t_z >= 0.0) ? 1.0 : 0.0;
          return detail::coupled_pair_unitary(Complex(1.0 - step, 0.0), Complex(0.0, -step));
        } else if constexpr (std::is_same_v<M, TanhModel>) {
          const double th = std::tanh(m.omega0 * (t - m.t_z));
          const double den = std::sqrt(1.0 + th * th);
          const double a = (1.0 - th) / den / std::sqrt(2.0);
          const double b = (1.0 + th) / den / std::sqrt(2.0);
          return detail::coupled_pair_unitary(Complex(a, 0.0), Complex(0.0, -b));
        } else {
          const double c = std::cos(m.omega0 * t);
          const double s = std::sin(m.omega0 * t);
          return detail::coupled_pair_unitary(Complex(c, 0.0), Complex(0.0, -s));
        }
      },
      model);
}

/// Times at which the periodic model represents a completed measurement.
inline double halting_time(double omega0, int m) {
  return (m + 0.5) * M_PI / omega0;
}

inline StateVector ok_state(const MeasurementSetting& s) {
  StateVector v = StateVector::Zero(lab_dim);
  v(kUpUp) = std::cos(0.5 * s.theta);
  v(kDownDown) = std::polar(std::sin(0.5 * s.theta), s.phi);
  return v;
}

inline ComplexMatrix ok_projector(const MeasurementSetting& s) {
  return projector(ok_state(s));
}

/// (P(ok | observer recorded up), P(ok | observer recorded down))
/// = (cos^2(theta/2), sin^2(theta/2)).
inline std::pair<double, double> alice_conditional_probs(const MeasurementSetting& s) {
  const double c = std::cos(0.5 * s.theta);
  const double sn = std::sin(0.5 * s.theta);
  return {c * c, sn * sn};
}

/// Eigenbasis of the lab Hamiltonian, fixed order
/// (-w0 up, -w0 down, 0 up, 0 down, +w0 up, +w0 down) with
/// |+-w0,up> = (|perp,up> +- |up,up>)/sqrt2, |+-w0,down> = (|perp,down> +- |down,down>)/sqrt2,
/// |0,up> = |up,down>, |0,down> = |down,up>.
struct DiagonalLabBasis {
  ComplexMatrix vectors;                  // 6x6, columns in the fixed order
  std::array<double, 6> eigenvalues;      // {-w0, -w0, 0, 0, +w0, +w0}
  std::array<std::string, 6> labels;
};

inline DiagonalLabBasis diagonal_lab_basis(double omega0) {
  if (!(omega0 > 0.0)) throw std::invalid_argument("diagonal_lab_basis: omega0 must be positive");
  DiagonalLabBasis b;
  b.vectors = ComplexMatrix::Zero(lab_dim, lab_dim);
  const double r = 1.0 / std::sqrt(2.0);
  // -w0
  b.vectors(kPerpUp, 0) = r;
  b.vectors(kUpUp, 0) = -r;
  b.vectors(kPerpDown, 1) = r;
  b.vectors(kDownDown, 1) = -r;
  // 0
  b.vectors(kUpDown, 2) = 1.0;
  b.vectors(kDownUp, 3) = 1.0;
  // +w0
  b.vectors(kPerpUp, 4) = r;
  b.vectors(kUpUp, 4) = r;
  b.vectors(kPerpDown, 5) = r;
  b.vectors(kDownDown, 5) = r;
  b.eigenvalues = {-omega0, -omega0, 0.0, 0.0, omega0, omega0};
  b.labels = {"-w0,up", "-w0,down", "0,up", "0,down", "+w0,up", "+w0,down"};
  return b;
}

/// Pi_ok written in the diagonal lab basis: the block matrix
/// (1/2) [[A, O, -A], [O, O, O], [-A, O, A]] with
/// A = [[cos^2(theta/2), (1/2) e^{-i phi} sin theta], [(1/2) e^{i phi} sin theta, sin^2(theta/2)]].
inline ComplexMatrix ok_projector_diagonal(const MeasurementSetting& s) {
  const double c2 = std::cos(0.5 * s.theta) * std::cos(0.5 * s.theta);
  const double s2 = std::sin(0.5 * s.theta) * std::sin(0.5 * s.theta);
  const Complex off = 0.5 * std::polar(std::sin(s.theta), -s.phi);
  ComplexMatrix a(2, 2);
  a << Complex(c2, 0.0), off, std::conj(off), Complex(s2, 0.0);
  ComplexMatrix p = ComplexMatrix::Zero(lab_dim, lab_dim);
  p.block(0, 0, 2, 2) = 0.5 * a;
  p.block(4, 4, 2, 2) = 0.5 * a;
  p.block(0, 4, 2, 2) = -0.5 * a;
  p.block(4, 0, 2, 2) = -0.5 * a;
  return p;
}

/// The two time-symmetric projection directions
/// |ok_sym^+-> = (1/sqrt2)(|xi>_S |perp>_A +- |ok>), with
/// |xi> = cos(theta/2)|up> + e^{i phi} sin(theta/2)|down>.
inline std::pair<StateVector, StateVector> symmetric_ok_projectors(const MeasurementSetting& s) {
  StateVector xi_perp = StateVector::Zero(lab_dim);
  xi_perp(kPerpUp) = std::cos(0.5 * s.theta);
  xi_perp(kPerpDown) = std::polar(std::sin(0.5 * s.theta), s.phi);
  const StateVector ok = ok_state(s);
  const double r = 1.0 / std::sqrt(2.0);
  return {r * (xi_perp + ok), r * (xi_perp - ok)};
}

}  // namespace qclock
