#pragma once

// Observer-consistency landscape over the measurement family (theta, phi),
// charge-sector structure of the global Hamiltonian, time-symmetric
// measurement statistics, and the two benchmark single/double-lab scenarios.

#include "qclock/hilbert.hpp"
#include "qclock/lab.hpp"
#include "qclock/twirl.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace qclock {

struct DeltaPair {
  double delta0;  // P_inside(ok | up)  - P_outside(ok)
  double delta1;  // P_inside(ok | down) - P_outside(ok)
  MeasurementSetting setting;
};

namespace detail {

inline double wigner_ok_probability_closed(const MeasurementSetting& s, double f) {
  return 0.25 * (1.0 + f) * (1.0 + std::sin(s.theta) * std::cos(s.phi));
}

}  // namespace detail

/// Prediction gap between the inside observer (collapsed outcome) and the
/// outside observer reading the relational state at the first admissible
/// halting pointer K_W(m). Evaluates the closed form
///   Delta_{0(1)} = (1 +- cos theta)/2 - (1/4)(1 + F)(1 + sin theta cos phi)
/// and cross-checks it against Tr{Pi_ok rho(K_W)} from the assembled
/// relational state to 1e-9.
inline DeltaPair delta_probabilities(const MeasurementSetting& s, const GlobalSpec& spec,
                                     int m = 0) {
  const auto q = spec.resonance_q();
  if (!q)
    throw std::invalid_argument(
        "delta_probabilities: requires the resonant ratio omega0 = (q/2) omega");
  const WignerPointer kw = wigner_pointer(m, spec);
  if (!kw.admissible)
    throw std::invalid_argument(
        "delta_probabilities: K_W = (m+1/2) d/q is not a pointer label for this (d, q, m); "
        "the halting time cannot be read off the clock");

  const double f = resonance_factor(spec);
  const double pw = detail::wigner_ok_probability_closed(s, f);
  const auto [pa_up, pa_down] = alice_conditional_probs(s);

  // independent route: contract the projector with the relational state
  const RelationalState rel = relational_lab_state(spec, kw.K);
  const double pw_state = expectation(ok_projector(s), rel.matrix).real();
  if (std::abs(pw - pw_state) > 1e-9)
    throw std::logic_error("delta_probabilities: closed form and state-based P(ok) disagree");

  return {pa_up - pw, pa_down - pw, s};
}

struct ConsistencyGrid {
  std::vector<double> thetas;  // n_theta nodes over [0, pi]
  std::vector<double> phis;    // n_phi nodes over [0, 2 pi)
  std::vector<double> delta0;  // row-major, theta index major
  std::vector<double> delta1;
  struct Zero {
    double theta;
    double phi;
  };
  std::vector<Zero> zeros;  // simultaneous zeros of both fields
  double zero_tolerance;
};

namespace detail {

inline int scan_thread_count() {
  unsigned n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("QCLOCK_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1 && static_cast<unsigned>(cap) < n) n = static_cast<unsigned>(cap);
  }
  return static_cast<int>(n);
}

/// Deterministic chunked parallel loop; output ordering never depends on the
/// execution schedule because each index writes its own slot.
inline void parallel_for(int count, const std::function<void(int)>& body) {
  const int threads = std::min(scan_thread_count(), std::max(count, 1));
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  const int chunk = (count + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int lo = t * chunk;
    const int hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (int i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

struct Cell {
  double t0, t1, p0, p1;
};

inline bool sign_change(double a, double b, double c, double d) {
  const double lo = std::min(std::min(a, b), std::min(c, d));
  const double hi = std::max(std::max(a, b), std::max(c, d));
  return lo <= 0.0 && hi >= 0.0;
}

/// Quadtree bisection: recurse into every subcell on whose corners both
/// fields still change sign; a branch with no such subcell holds no crossing
/// and is pruned. Emits cell centers once the diagonal drops below tol;
/// duplicates from adjacent branches are merged by the caller.
template <typename F0, typename F1>
inline void refine_zero(const Cell& cell, const F0& f0, const F1& f1, double tol, int depth,
                        std::vector<ConsistencyGrid::Zero>& out) {
  const double diag = std::hypot(cell.t1 - cell.t0, cell.p1 - cell.p0);
  if (diag < tol || depth > 60) {
    out.push_back({0.5 * (cell.t0 + cell.t1), 0.5 * (cell.p0 + cell.p1)});
    return;
  }
  const double tm = 0.5 * (cell.t0 + cell.t1);
  const double pm = 0.5 * (cell.p0 + cell.p1);
  const Cell subs[4] = {{cell.t0, tm, cell.p0, pm},
                        {tm, cell.t1, cell.p0, pm},
                        {cell.t0, tm, pm, cell.p1},
                        {tm, cell.t1, pm, cell.p1}};
  for (const Cell& sub : subs) {
    const double a0 = f0(sub.t0, sub.p0), b0 = f0(sub.t1, sub.p0), c0 = f0(sub.t0, sub.p1),
                 d0 = f0(sub.t1, sub.p1);
    const double a1 = f1(sub.t0, sub.p0), b1 = f1(sub.t1, sub.p0), c1 = f1(sub.t0, sub.p1),
                 d1 = f1(sub.t1, sub.p1);
    if (sign_change(a0, b0, c0, d0) && sign_change(a1, b1, c1, d1))
      refine_zero(sub, f0, f1, tol, depth + 1, out);
  }
}

}  // namespace detail

/// Dense evaluation of both prediction gaps over the (theta, phi) grid, with
/// simultaneous zeros located by intersecting sign-change cells and refined
/// by bisection to zero_tol.
inline ConsistencyGrid consistency_scan(const GlobalSpec& spec, int n_theta, int n_phi,
                                        double zero_tol = 1e-6, int m = 0) {
  if (n_theta < 8 || n_phi < 8)
    throw std::invalid_argument("consistency_scan: grid sizes must be >= 8");
  const auto q = spec.resonance_q();
  if (!q) throw std::invalid_argument("consistency_scan: requires the resonant ratio");
  const WignerPointer kw = wigner_pointer(m, spec);
  if (!kw.admissible)
    throw std::invalid_argument("consistency_scan: inadmissible halting pointer K_W");

  const double f = resonance_factor(spec);
  auto d0_of = [f](double th, double ph) {
    return 0.5 * (1.0 + std::cos(th)) -
           0.25 * (1.0 + f) * (1.0 + std::sin(th) * std::cos(ph));
  };
  auto d1_of = [f](double th, double ph) {
    return 0.5 * (1.0 - std::cos(th)) -
           0.25 * (1.0 + f) * (1.0 + std::sin(th) * std::cos(ph));
  };

  ConsistencyGrid grid;
  grid.zero_tolerance = zero_tol;
  grid.thetas.resize(static_cast<std::size_t>(n_theta));
  grid.phis.resize(static_cast<std::size_t>(n_phi));
  for (int i = 0; i < n_theta; ++i) grid.thetas[i] = M_PI * i / (n_theta - 1);
  for (int j = 0; j < n_phi; ++j) grid.phis[j] = 2.0 * M_PI * j / n_phi;
  grid.delta0.assign(static_cast<std::size_t>(n_theta) * n_phi, 0.0);
  grid.delta1.assign(static_cast<std::size_t>(n_theta) * n_phi, 0.0);

  detail::parallel_for(n_theta, [&](int i) {
    for (int j = 0; j < n_phi; ++j) {
      const std::size_t idx = static_cast<std::size_t>(i) * n_phi + j;
      grid.delta0[idx] = d0_of(grid.thetas[i], grid.phis[j]);
      grid.delta1[idx] = d1_of(grid.thetas[i], grid.phis[j]);
    }
  });

  // candidate cells (phi wraps)
  for (int i = 0; i + 1 < n_theta; ++i) {
    for (int j = 0; j < n_phi; ++j) {
      const int jn = (j + 1) % n_phi;
      const double p_hi = (jn == 0) ? 2.0 * M_PI : grid.phis[jn];
      const auto at = [&](int ii, int jj) { return static_cast<std::size_t>(ii) * n_phi + jj; };
      const bool c0 = detail::sign_change(grid.delta0[at(i, j)], grid.delta0[at(i + 1, j)],
                                          grid.delta0[at(i, jn)], grid.delta0[at(i + 1, jn)]);
      const bool c1 = detail::sign_change(grid.delta1[at(i, j)], grid.delta1[at(i + 1, j)],
                                          grid.delta1[at(i, jn)], grid.delta1[at(i + 1, jn)]);
      if (!(c0 && c1)) continue;
      detail::refine_zero({grid.thetas[i], grid.thetas[i + 1], grid.phis[j], p_hi}, d0_of, d1_of,
                          zero_tol, 0, grid.zeros);
    }
  }

  // merge refinements that landed on the same point from adjacent cells
  std::vector<ConsistencyGrid::Zero> merged;
  const double merge_radius = std::max(zero_tol * 8.0, 1e-12);
  for (const auto& z : grid.zeros) {
    bool dup = false;
    for (const auto& w : merged)
      if (std::hypot(z.theta - w.theta, std::remainder(z.phi - w.phi, 2.0 * M_PI)) < merge_radius) {
        dup = true;
        break;
      }
    if (!dup) merged.push_back(z);
  }
  std::sort(merged.begin(), merged.end(), [](const auto& a, const auto& b) {
    return a.phi < b.phi || (a.phi == b.phi && a.theta < b.theta);
  });
  grid.zeros = std::move(merged);
  return grid;
}

struct ChargeSector {
  double eigenvalue;
  int dim;
  ComplexMatrix basis;  // (6 d) x dim, orthonormal columns
  std::vector<std::string> labels;
};

/// Eigenspaces of the global Hamiltonian, built from the diagonal lab basis
/// tensored with clock levels. Incommensurate ratios give only 2-dimensional
/// sectors (the up/down flavor pair); the resonant ratio merges sectors into
/// 4-dimensional (odd q) or 6-dimensional (even q) ones.
inline std::vector<ChargeSector> charge_sectors(const GlobalSpec& spec) {
  const int d = spec.clock.d;
  const DiagonalLabBasis lab = diagonal_lab_basis(spec.omega0);

  struct Level {
    double energy;
    int lab_index;
    int n;
  };
  std::vector<Level> levels;
  levels.reserve(static_cast<std::size_t>(6 * d));
  for (int li = 0; li < 6; ++li)
    for (int n = 0; n < d; ++n)
      levels.push_back({lab.eigenvalues[static_cast<std::size_t>(li)] + spec.clock.omega * n, li, n});
  std::sort(levels.begin(), levels.end(),
            [](const Level& a, const Level& b) { return a.energy < b.energy; });

  const double scale = std::max(1.0, std::abs(levels.back().energy));
  std::vector<ChargeSector> sectors;
  std::size_t start = 0;
  while (start < levels.size()) {
    std::size_t stop = start + 1;
    while (stop < levels.size() && levels[stop].energy - levels[stop - 1].energy <= 1e-9 * scale)
      ++stop;
    ChargeSector sec;
    sec.dim = static_cast<int>(stop - start);
    sec.eigenvalue = levels[start].energy;
    sec.basis = ComplexMatrix::Zero(6 * d, sec.dim);
    for (std::size_t i = start; i < stop; ++i) {
      const Level& lv = levels[i];
      StateVector clock_level = StateVector::Zero(d);
      clock_level(lv.n) = 1.0;
      sec.basis.col(static_cast<Eigen::Index>(i - start)) =
          tensor_product(StateVector(lab.vectors.col(lv.lab_index)), clock_level);
      sec.labels.push_back(lab.labels[static_cast<std::size_t>(lv.lab_index)] +
                           ",n=" + std::to_string(lv.n));
    }
    sectors.push_back(std::move(sec));
    start = stop;
  }
  return sectors;
}

struct SectorCouplingReport {
  double offblock_mass;  // sum over sector pairs of ||P_s M P_s'||_F
  bool couples;
};

/// Whether an operator moves weight between charge sectors.
inline SectorCouplingReport sector_coupling(const ComplexMatrix& op,
                                            const std::vector<ChargeSector>& sectors) {
  if (sectors.empty()) throw std::invalid_argument("sector_coupling: no sectors");
  const Eigen::Index dim = sectors.front().basis.rows();
  if (op.rows() != dim || op.cols() != dim)
    throw std::invalid_argument("sector_coupling: operator dimension mismatch");
  double mass = 0.0;
  for (std::size_t s = 0; s < sectors.size(); ++s)
    for (std::size_t sp = 0; sp < sectors.size(); ++sp) {
      if (s == sp) continue;
      mass += (sectors[s].basis.adjoint() * op * sectors[sp].basis).norm();
    }
  return {mass, mass > 1e-9};
}

/// Prediction gaps when the outside observer restricts to the time-symmetric
/// projection family: Delta_{0(1)} = (1/4)[1/2 +- cos theta - cos phi sin theta].
/// Independent of the clock parameters by construction.
inline DeltaPair symmetric_delta(const MeasurementSetting& s) {
  const double common = 0.125 - 0.25 * std::cos(s.phi) * std::sin(s.theta);
  const double c = 0.25 * std::cos(s.theta);
  return {common + c, common - c, s};
}

struct SimpleWfsReport {
  double p_alice_up;     // P(ok | inside observer saw up)
  double p_alice_down;   // P(ok | inside observer saw down)
  double p_wigner_ok;    // P(ok) from the unitary (entangled) description
  double p_wigner_fail;
  double p_wigner_ok_phase_plus;   // same, for the (pi/2, pi/2) projection
  double p_wigner_ok_phase_minus;  // and (pi/2, 3 pi/2)
};

/// Single-lab benchmark: for the projection (theta, phi) = (pi/2, pi) the
/// outside observer predicts P(ok) = 0 while the inside observer predicts
/// 1/2; the two phase-rotated projections (pi/2, +-pi/2) restore agreement.
inline SimpleWfsReport simple_wfs_scenario() {
  StateVector phi_plus = StateVector::Zero(lab_dim);
  phi_plus(kUpUp) = phi_plus(kDownDown) = 1.0 / std::sqrt(2.0);

  const MeasurementSetting original(M_PI / 2.0, M_PI);
  const auto [pa_up, pa_down] = alice_conditional_probs(original);

  auto pw = [&](const MeasurementSetting& s) {
    return expectation(ok_projector(s), phi_plus).real();
  };

  SimpleWfsReport rep;
  rep.p_alice_up = pa_up;
  rep.p_alice_down = pa_down;
  rep.p_wigner_ok = pw(original);
  rep.p_wigner_fail = 1.0 - rep.p_wigner_ok;
  rep.p_wigner_ok_phase_plus = pw(MeasurementSetting(M_PI / 2.0, M_PI / 2.0));
  rep.p_wigner_ok_phase_minus = pw(MeasurementSetting(M_PI / 2.0, 3.0 * M_PI / 2.0));
  return rep;
}

struct FrauchigerRennerReport {
  double p_ok_ok;  // joint probability of both superobservers projecting onto ok
  double p_ok_fail;
  double p_fail_ok;
  double p_fail_fail;
  double p_w_ok_given_tails_coin;  // coin prepared as pure tails
};

/// Two-lab benchmark from the superobserver viewpoint. The coin is prepared
/// in sqrt(1/3)|h> + sqrt(2/3)|t>; the first lab's measurement and
/// conditional spin preparation is an isometry coin -> coin (x) observer (x) spin,
/// the second lab's spin measurement an isometry spin -> spin (x) observer.
/// Both superobservers then project onto their ok directions.
inline FrauchigerRennerReport frauchiger_renner_scenario() {
  auto basis2 = [](int i) {
    StateVector v = StateVector::Zero(2);
    v(i) = 1.0;
    return v;
  };
  const StateVector h = basis2(0), t = basis2(1);
  const StateVector up = basis2(0), down = basis2(1);

  StateVector coin(2);
  coin << 1.0 / std::sqrt(3.0), std::sqrt(2.0 / 3.0);

  // coin -> coin (x) alice (x) spin
  ComplexMatrix v_a = ComplexMatrix::Zero(8, 2);
  v_a.col(0) = tensor_product(tensor_product(h, h), down);
  v_a.col(1) = tensor_product(tensor_product(t, t),
                              StateVector((up + down) / std::sqrt(2.0)));
  // spin -> spin (x) bob, acting on the last factor
  ComplexMatrix v_b = ComplexMatrix::Zero(4, 2);
  v_b.col(0) = tensor_product(up, up);
  v_b.col(1) = tensor_product(down, down);

  const StateVector after_a = v_a * coin;  // coin (x) alice (x) spin
  const ComplexMatrix lift_b = tensor_product(ComplexMatrix::Identity(4, 4), v_b);
  const StateVector psi = lift_b * after_a;  // coin (x) alice (x) spin (x) bob

  const StateVector ok_u = (tensor_product(h, h) - tensor_product(t, t)) / std::sqrt(2.0);
  const StateVector fail_u = (tensor_product(h, h) + tensor_product(t, t)) / std::sqrt(2.0);
  const StateVector ok_w = (tensor_product(down, down) - tensor_product(up, up)) / std::sqrt(2.0);
  const StateVector fail_w = (tensor_product(down, down) + tensor_product(up, up)) / std::sqrt(2.0);

  auto joint = [&](const StateVector& u_dir, const StateVector& w_dir) {
    const Complex amp = tensor_product(u_dir, w_dir).dot(psi);
    return std::norm(amp);
  };

  FrauchigerRennerReport rep;
  rep.p_ok_ok = joint(ok_u, ok_w);
  rep.p_ok_fail = joint(ok_u, fail_w);
  rep.p_fail_ok = joint(fail_u, ok_w);
  rep.p_fail_fail = joint(fail_u, fail_w);

  const StateVector psi_tails = lift_b * (v_a * t);
  const ComplexMatrix pi_w =
      tensor_product(ComplexMatrix::Identity(4, 4), projector(ok_w));
  rep.p_w_ok_given_tails_coin = expectation(pi_w, psi_tails).real();
  return rep;
}

}  // namespace qclock
