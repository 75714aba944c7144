#pragma once

// Time-average (G-twirl) machinery for lab (x) clock states: a numerical
// twirl with two independent realizations (eigenbasis dephasing, which is the
// exact infinite-time limit, and composite quadrature over a common period,
// which mirrors the defining integral), closed forms for the pointer-projected
// averages of the three oscillation functions 1 and e^{+-i 2 w0 t}, and the
// relational lab state conditioned on a clock pointer.

#include "qclock/clock.hpp"
#include "qclock/complex_erf.hpp"
#include "qclock/hilbert.hpp"
#include "qclock/lab.hpp"

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qclock {

/// Full experiment geometry: the clock, its prepared Gaussian state, and the
/// lab transition frequency omega0. The ratio 2 omega0 / omega decides
/// whether the twirl retains lab coherence (resonance).
struct GlobalSpec {
  ClockParams clock;
  QuasiIdealParams quasi;
  double omega0;

  GlobalSpec(ClockParams c, QuasiIdealParams q, double omega0_)
      : clock(c), quasi(q), omega0(omega0_) {
    if (!(omega0 > 0.0)) throw std::invalid_argument("GlobalSpec: omega0 must be positive");
  }

  /// q such that omega0 = (q/2) omega, when 2 omega0/omega is an integer to
  /// 1e-9 relative; empty otherwise.
  std::optional<int> resonance_q(double rel_tol = 1e-9) const {
    const double r = 2.0 * omega0 / clock.omega;
    const double rr = std::round(r);
    if (rr >= 1.0 && std::abs(r - rr) <= rel_tol * std::max(1.0, std::abs(r)))
      return static_cast<int>(rr);
    return std::nullopt;
  }

  static GlobalSpec resonant(int d, double sigma, double n0, int q, double omega = 2.0 * M_PI) {
    if (q < 1) throw std::invalid_argument("GlobalSpec::resonant: q must be >= 1");
    return GlobalSpec(ClockParams(d, omega), QuasiIdealParams{0.0, sigma, n0}, 0.5 * q * omega);
  }

  static GlobalSpec with_ratio(int d, double sigma, double n0, double omega0_over_omega,
                               double omega = 2.0 * M_PI) {
    return GlobalSpec(ClockParams(d, omega), QuasiIdealParams{0.0, sigma, n0},
                      omega0_over_omega * omega);
  }
};

/// H = H_lab (x) I_C + I_lab (x) H_C, dimension 6 d.
inline ComplexMatrix global_hamiltonian(const GlobalSpec& spec) {
  const ComplexMatrix h_lab = lab_hamiltonian(spec.omega0);
  const ComplexMatrix h_clock = clock_hamiltonian(spec.clock);
  const ComplexMatrix eye_lab = ComplexMatrix::Identity(lab_dim, lab_dim);
  const ComplexMatrix eye_clock = ComplexMatrix::Identity(spec.clock.d, spec.clock.d);
  return tensor_product(h_lab, eye_clock) + tensor_product(eye_lab, h_clock);
}

enum class TwirlScheme { Dephasing, Quadrature };

struct TwirlOptions {
  double gap_rel_tol = 1e-9;           // eigenvalue clustering and rational gap detection
  int min_nodes_per_oscillation = 64;  // quadrature density over the fastest gap
  double convergence_tol = 1e-8;       // doubling criterion for incommensurate spectra
  int max_doublings = 10;
  Eigen::Index max_nodes = Eigen::Index(1) << 22;
};

class TwirlConvergenceError : public std::runtime_error {
 public:
  TwirlConvergenceError(const std::string& msg, double residual)
      : std::runtime_error(msg + " (last residual " + std::to_string(residual) + ")"),
        last_residual_(residual) {}
  double last_residual() const { return last_residual_; }

 private:
  double last_residual_;
};

namespace detail {

/// Nearest rational p/q with q <= max_den via continued fractions; empty if
/// none matches x within rel_tol.
inline std::optional<std::pair<std::int64_t, std::int64_t>> rational_approx(double x, double rel_tol,
                                                                            std::int64_t max_den) {
  std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double v = x;
  for (int it = 0; it < 64; ++it) {
    const double fl = std::floor(v);
    if (fl > 9e17) break;
    const auto a = static_cast<std::int64_t>(fl);
    const std::int64_t p2 = a * p1 + p0;
    const std::int64_t q2 = a * q1 + q0;
    if (q2 > max_den || q2 <= 0) break;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    if (std::abs(x - static_cast<double>(p1) / static_cast<double>(q1)) <=
        rel_tol * std::max(1.0, std::abs(x)))
      return std::make_pair(p1, q1);
    const double frac = v - fl;
    if (frac < 1e-15) break;
    v = 1.0 / frac;
  }
  return std::nullopt;
}

/// Distinct eigenvalue representatives after clustering within tolerance.
inline std::vector<double> distinct_levels(const Eigen::VectorXd& w, double rel_tol) {
  const double scale = std::max(1.0, w.cwiseAbs().maxCoeff());
  std::vector<double> levels;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (levels.empty() || w(i) - levels.back() > rel_tol * scale) levels.push_back(w(i));
  }
  return levels;
}

inline std::vector<double> positive_gaps(const std::vector<double>& levels, double rel_tol) {
  const double scale =
      std::max(1.0, std::abs(levels.front()) + std::abs(levels.back()));
  std::vector<double> gaps;
  for (std::size_t i = 0; i < levels.size(); ++i)
    for (std::size_t j = i + 1; j < levels.size(); ++j) {
      const double g = levels[j] - levels[i];
      bool seen = false;
      for (double existing : gaps)
        if (std::abs(existing - g) <= rel_tol * scale) {
          seen = true;
          break;
        }
      if (!seen) gaps.push_back(g);
    }
  std::sort(gaps.begin(), gaps.end());
  return gaps;
}

/// Largest g with every gap an integer multiple of g (to rel_tol), if the
/// gaps are commensurate with moderate denominators.
inline std::optional<double> commensurate_base(const std::vector<double>& gaps, double rel_tol) {
  if (gaps.empty()) return std::nullopt;
  const double gmin = gaps.front();
  std::int64_t lcm_den = 1;
  constexpr std::int64_t den_cap = 1000000;
  for (double g : gaps) {
    const auto pq = rational_approx(g / gmin, rel_tol, 10000);
    if (!pq) return std::nullopt;
    const std::int64_t den = pq->second;
    lcm_den = std::lcm(lcm_den, den);
    if (lcm_den > den_cap) return std::nullopt;
  }
  const double base = gmin / static_cast<double>(lcm_den);
  // confirm every gap is an integer multiple of the base
  for (double g : gaps) {
    const double m = g / base;
    if (std::abs(m - std::round(m)) > rel_tol * std::max(1.0, m)) return std::nullopt;
  }
  return base;
}

inline ComplexMatrix quadrature_average(const ComplexMatrix& rho, const HermitianEigensystem& es,
                                        double t0, double t1, Eigen::Index nodes) {
  ComplexMatrix acc = ComplexMatrix::Zero(rho.rows(), rho.cols());
  const double dt = (t1 - t0) / static_cast<double>(nodes);
  StateVector phases(es.values.size());
  for (Eigen::Index j = 0; j < nodes; ++j) {
    const double t = t0 + dt * static_cast<double>(j);
    for (Eigen::Index i = 0; i < es.values.size(); ++i)
      phases(i) = std::polar(1.0, -es.values(i) * t);
    const ComplexMatrix u = es.vectors * phases.asDiagonal() * es.vectors.adjoint();
    acc += u * rho * u.adjoint();
  }
  return acc / static_cast<double>(nodes);
}

}  // namespace detail

/// Infinite-time average of U_t rho U_t^dagger under H.
///
/// Dephasing realizes the limit exactly: coherences between distinct
/// eigenvalue clusters of H are zeroed in the eigenbasis. Quadrature
/// integrates the defining expression: over one common period when the gaps
/// of H are commensurate (rational ratios detected to gap_rel_tol), otherwise
/// over a doubling number of periods of the slowest gap until successive
/// doublings agree in max-norm; failure to converge within the configured cap
/// raises TwirlConvergenceError carrying the last residual.
inline DensityOperator numerical_g_twirl(const DensityOperator& rho, const ComplexMatrix& h,
                                         TwirlScheme scheme, const TwirlOptions& opt = {}) {
  if (h.rows() != rho.dim() || h.cols() != rho.dim())
    throw std::invalid_argument("numerical_g_twirl: dimension mismatch between rho and H");
  const auto es = hermitian_eigensystem(h);
  const DensityTolerances out_tol{1e-10, 1e-10, 1e-9};

  if (scheme == TwirlScheme::Dephasing) {
    const double scale = std::max(1.0, es.values.cwiseAbs().maxCoeff());
    ComplexMatrix r = es.vectors.adjoint() * rho.matrix() * es.vectors;
    for (Eigen::Index i = 0; i < r.rows(); ++i)
      for (Eigen::Index j = 0; j < r.cols(); ++j)
        if (std::abs(es.values(i) - es.values(j)) > opt.gap_rel_tol * scale) r(i, j) = Complex(0.0, 0.0);
    return DensityOperator(es.vectors * r * es.vectors.adjoint(), out_tol);
  }

  const auto levels = detail::distinct_levels(es.values, opt.gap_rel_tol);
  if (levels.size() < 2) return rho;  // H acts as a scalar: averaging changes nothing
  const auto gaps = detail::positive_gaps(levels, opt.gap_rel_tol);
  const double gmax = gaps.back();

  if (const auto base = detail::commensurate_base(gaps, opt.gap_rel_tol)) {
    const double period = 2.0 * M_PI / *base;
    const double ratio = gmax / *base;
    const auto nodes = static_cast<Eigen::Index>(
        std::ceil(static_cast<double>(opt.min_nodes_per_oscillation) * ratio));
    if (nodes > opt.max_nodes)
      throw TwirlConvergenceError("numerical_g_twirl: node count exceeds cap", ratio);
    return DensityOperator(detail::quadrature_average(rho.matrix(), es, 0.0, period, nodes),
                           out_tol);
  }

  // Incommensurate: average over [-T, T], T = N periods of the slowest gap.
  const double slow_period = 2.0 * M_PI / gaps.front();
  ComplexMatrix prev = rho.matrix();
  double residual = std::numeric_limits<double>::infinity();
  std::int64_t n_periods = 1;
  for (int doubling = 0; doubling <= opt.max_doublings; ++doubling, n_periods *= 2) {
    const double t_half = static_cast<double>(n_periods) * slow_period;
    auto nodes = static_cast<Eigen::Index>(std::ceil(
        static_cast<double>(opt.min_nodes_per_oscillation) * (2.0 * t_half) * gmax / (2.0 * M_PI)));
    if (nodes > opt.max_nodes)
      throw TwirlConvergenceError("numerical_g_twirl: incommensurate spectrum did not converge",
                                  residual);
    const ComplexMatrix avg = detail::quadrature_average(rho.matrix(), es, -t_half, t_half, nodes);
    residual = (avg - prev).cwiseAbs().maxCoeff();
    if (residual < opt.convergence_tol) return DensityOperator(avg, out_tol);
    prev = avg;
  }
  throw TwirlConvergenceError("numerical_g_twirl: incommensurate spectrum did not converge",
                              residual);
}

/// Gamma = sqrt(pi/2) sigma q / d for the detected resonance (0 if none).
inline double gamma_parameter(const GlobalSpec& spec) {
  const auto q = spec.resonance_q();
  if (!q) return 0.0;
  return std::sqrt(M_PI / 2.0) * spec.quasi.sigma * static_cast<double>(*q) / spec.clock.d;
}

/// e^{-Gamma^2} Re{erf(X + i Gamma)} / erf(X) with X = sqrt(pi/2) d / sigma;
/// the coherence retained by the twirl at resonance. 0 when non-resonant.
inline double resonance_factor(const GlobalSpec& spec) {
  const auto q = spec.resonance_q();
  if (!q) return 0.0;
  const double gamma = gamma_parameter(spec);
  const double x = std::sqrt(M_PI / 2.0) * spec.clock.d / spec.quasi.sigma;
  return std::exp(-gamma * gamma) * complex_erf({x, gamma}).real() / std::erf(x);
}

namespace detail {

/// |A|^2 of the prepared Gaussian, from the discrete normalization over the
/// pointer window. Nearly constant in k0 for sigma >= sqrt(d).
inline double gaussian_norm_constant_sq(const GlobalSpec& spec) {
  const auto window = pointer_window(spec.clock.d, spec.quasi.k0);
  double s = 0.0;
  for (double k : window) {
    const double dk = k - spec.quasi.k0;
    s += std::exp(-2.0 * M_PI / (spec.quasi.sigma * spec.quasi.sigma) * dk * dk);
  }
  return 1.0 / s;
}

}  // namespace detail

struct ProjectedTwirlScalar {
  double value;
  bool analytic_regime;  // sigma >= sqrt(d); the closed form is derived there
};

/// Closed form for the pointer-projected time average of the clock state with
/// unit weight: |A|^2 sigma erf(X) / (sqrt2 d). Normalized to reproduce the
/// exact projection weight <theta_K| avg |theta_K> = 1/d; independent of K.
inline ProjectedTwirlScalar projected_twirl_basic(const GlobalSpec& spec) {
  const double sig = spec.quasi.sigma;
  const double d = spec.clock.d;
  const double x = std::sqrt(M_PI / 2.0) * d / sig;
  const double a2 = detail::gaussian_norm_constant_sq(spec);
  return {a2 * sig / (std::sqrt(2.0) * d) * std::erf(x),
          sigma_in_analytic_range(spec.clock, spec.quasi)};
}

struct ProjectedTwirlExponential {
  Complex value;
  bool analytic_regime;
  bool resonant;
};

/// Closed form for the pointer-projected time average weighted by
/// e^{sign i 2 w0 t}: zero unless 2 w0 / w is an integer q, in which case
/// |A|^2 sigma e^{-Gamma^2} Re{erf(X + i Gamma)} e^{sign i 2 pi q K / d} / (sqrt2 d).
/// Modulus independent of K; phase slope 2 pi q / d.
inline ProjectedTwirlExponential projected_twirl_exponential(const GlobalSpec& spec, double K,
                                                             int sign) {
  if (sign != 1 && sign != -1)
    throw std::invalid_argument("projected_twirl_exponential: sign must be +1 or -1");
  const bool regime = sigma_in_analytic_range(spec.clock, spec.quasi);
  const auto q = spec.resonance_q();
  if (!q) return {Complex(0.0, 0.0), regime, false};
  const double sig = spec.quasi.sigma;
  const double d = spec.clock.d;
  const double gamma = gamma_parameter(spec);
  const double x = std::sqrt(M_PI / 2.0) * d / sig;
  const double a2 = detail::gaussian_norm_constant_sq(spec);
  const double mag = a2 * sig / (std::sqrt(2.0) * d) * std::exp(-gamma * gamma) *
                     complex_erf({x, gamma}).real();
  const double phase = sign * 2.0 * M_PI * static_cast<double>(*q) * K / d;
  return {std::polar(mag, phase), regime, true};
}

/// Exact infinite-time counterpart of projected_twirl_exponential, evaluated
/// in the energy basis: only level pairs with (n - n') omega = sign 2 omega0
/// survive the average. Independent of the erf closed form.
inline Complex projected_twirl_exponential_numeric(const GlobalSpec& spec, double K, int sign) {
  if (sign != 1 && sign != -1)
    throw std::invalid_argument("projected_twirl_exponential_numeric: sign must be +1 or -1");
  const StateVector c = quasi_ideal_state(spec.clock, spec.quasi).vec;
  const int d = spec.clock.d;
  const double target = sign * 2.0 * spec.omega0;
  Complex acc(0.0, 0.0);
  for (int n = 0; n < d; ++n)
    for (int np = 0; np < d; ++np) {
      if (std::abs((n - np) * spec.clock.omega - target) > 1e-9 * spec.clock.omega) continue;
      // <theta_K|n><n'|theta_K> = e^{i 2 pi (n - n') K / d} / d
      const Complex frame = std::polar(1.0 / d, 2.0 * M_PI * (n - np) * K / d);
      acc += c(n) * std::conj(c(np)) * frame;
    }
  return acc;
}

struct WignerPointer {
  double K;
  bool admissible;  // integer for even d, half-integer for odd d
  int m;
};

/// K_W = (m + 1/2) d / q, the pointer at which the periodic lab transition is
/// a completed measurement. Requires the resonant frequency ratio.
inline WignerPointer wigner_pointer(int m, const GlobalSpec& spec) {
  const auto q = spec.resonance_q();
  if (!q)
    throw std::invalid_argument(
        "wigner_pointer: halting pointers exist only for the commensurate ratio omega0 = (q/2) omega");
  const double K = (m + 0.5) * static_cast<double>(spec.clock.d) / static_cast<double>(*q);
  const double shift = (spec.clock.d % 2 == 0) ? 0.0 : 0.5;
  const bool adm = std::abs(K - shift - std::round(K - shift)) <= 1e-9;
  return {K, adm, m};
}

struct RelationalState {
  double pointer_K;      // snapped to the nearest admissible pointer label
  double snap_distance;  // |requested - snapped|
  DensityOperator matrix;
  bool resonant;
  double R;
  double Q;
  double Gamma;
};

namespace detail {

inline double snap_pointer(int d, double K, double* distance) {
  const double shift = (d % 2 == 0) ? 0.0 : 0.5;
  const double snapped = std::round(K - shift) + shift;
  if (distance) *distance = std::abs(K - snapped);
  return snapped;
}

inline ComplexMatrix assemble_relational(double g1, Complex ep, Complex em) {
  // Entry layout of the time-evolved lab density, with each oscillation
  // function replaced by its projected average:
  //   cos^2 block on {0,1}, sin^2 block on {2,5}, (i/2) sin 2w0t cross terms.
  const Complex g_cos2 = 0.5 * g1 + 0.25 * (ep + em);
  const Complex g_sin2 = 0.5 * g1 - 0.25 * (ep + em);
  const Complex g_sin2w = (ep - em) / Complex(0.0, 2.0);
  ComplexMatrix rho = ComplexMatrix::Zero(lab_dim, lab_dim);
  for (int i : {kPerpUp, kPerpDown})
    for (int j : {kPerpUp, kPerpDown}) rho(i, j) = 0.5 * g_cos2;
  for (int i : {kUpUp, kDownDown})
    for (int j : {kUpUp, kDownDown}) rho(i, j) = 0.5 * g_sin2;
  const Complex cross = Complex(0.0, 0.25) * g_sin2w;
  for (int i : {kPerpUp, kPerpDown})
    for (int j : {kUpUp, kDownDown}) {
      rho(i, j) = cross;
      rho(j, i) = std::conj(cross);
    }
  const Complex tr = rho.trace();
  if (std::abs(tr) < 1e-300) throw std::runtime_error("relational state: zero trace");
  return rho / tr;
}

}  // namespace detail

/// Analytic relational lab state at clock pointer K, assembled from the
/// projected averages of 1 and e^{+-i 2 w0 t}. At resonance the state carries
/// the oscillation pattern R(K) = F cos(2 pi q K / d), Q(K) = F sin(2 pi q K / d);
/// otherwise it is the half/half mixture of the initial and the entangled state.
inline RelationalState relational_lab_state(const GlobalSpec& spec, double K) {
  double snap_dist = 0.0;
  const double ks = detail::snap_pointer(spec.clock.d, K, &snap_dist);
  const double g1 = projected_twirl_basic(spec).value;
  const Complex ep = projected_twirl_exponential(spec, ks, +1).value;
  const Complex em = projected_twirl_exponential(spec, ks, -1).value;
  const ComplexMatrix rho = detail::assemble_relational(g1, ep, em);
  const bool res = spec.resonance_q().has_value();
  const double r = ep.real() / g1;
  const double q_val = ep.imag() / g1;
  return {ks,  snap_dist, DensityOperator(rho, DensityTolerances{1e-10, 1e-10, 1e-9}),
          res, r,         q_val,
          gamma_parameter(spec)};
}

/// Brute-force pipeline: twirl the full lab (x) clock state, project the
/// clock on |theta_K>, trace the clock out, renormalize by the pointer
/// probability. The oracle route the closed forms are checked against.
inline RelationalState relational_lab_state_numeric(const GlobalSpec& spec, double K,
                                                    TwirlScheme scheme = TwirlScheme::Dephasing,
                                                    const TwirlOptions& opt = {}) {
  double snap_dist = 0.0;
  const double ks = detail::snap_pointer(spec.clock.d, K, &snap_dist);
  const int d = spec.clock.d;

  const StateVector psi_clock = quasi_ideal_state(spec.clock, spec.quasi).vec;
  const StateVector psi_lab = initial_lab_state();
  const DensityOperator rho = DensityOperator::pure(tensor_product(psi_lab, psi_clock));
  const DensityOperator g = numerical_g_twirl(rho, global_hamiltonian(spec), scheme, opt);

  const ComplexMatrix pi_k = tensor_product(ComplexMatrix::Identity(lab_dim, lab_dim),
                                            projector(pointer_state(spec.clock, ks)));
  const ComplexMatrix projected = pi_k * g.matrix() * pi_k;
  const double prob = projected.trace().real();
  if (prob < 1e-14)
    throw std::runtime_error("relational_lab_state_numeric: probability-zero pointer");
  const ComplexMatrix lab =
      partial_trace_matrix(projected, {lab_dim, d}, {0}) / Complex(prob, 0.0);

  // R and Q read off the entry pattern: (0,0) = (1+R)/4, Im(0,2) = Q/4.
  const double r = 4.0 * lab(kPerpUp, kPerpUp).real() - 1.0;
  const double q_val = 4.0 * lab(kPerpUp, kUpUp).imag();
  return {ks,
          snap_dist,
          DensityOperator(lab, DensityTolerances{1e-10, 1e-10, 1e-9}),
          spec.resonance_q().has_value(),
          r,
          q_val,
          gamma_parameter(spec)};
}

struct TwoQubitExample {
  ComplexMatrix g_rho;       // 4x4 twirled state of |+>|+> under w(sz x I + I x sz)
  ComplexMatrix rho_s_plus;  // system state conditioned on clock reading +
  ComplexMatrix rho_s_minus;
  double p_agree_plus;   // P(+|+)
  double p_agree_minus;  // P(-|-)
  double p_mistrack;     // P(+|-) = P(-|+)
};

/// Minimal two-qubit universe: one qubit is the system, the other the clock
/// with time operator sigma_x. Runs the full twirl/condition pipeline.
inline TwoQubitExample two_qubit_example(double omega = 1.0) {
  ComplexMatrix sz(2, 2);
  sz << 1.0, 0.0, 0.0, -1.0;
  const ComplexMatrix eye = ComplexMatrix::Identity(2, 2);
  const ComplexMatrix h = omega * (tensor_product(sz, eye) + tensor_product(eye, sz));

  StateVector plus(2);
  plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  StateVector minus(2);
  minus << 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0);

  const DensityOperator rho = DensityOperator::pure(tensor_product(plus, plus));
  const DensityOperator g = numerical_g_twirl(rho, h, TwirlScheme::Dephasing);

  auto condition = [&](const StateVector& pointer) {
    const ComplexMatrix pi = tensor_product(eye, projector(pointer));
    const ComplexMatrix projected = pi * g.matrix() * pi;
    const double prob = projected.trace().real();
    return ComplexMatrix(partial_trace_matrix(projected, {2, 2}, {0}) / Complex(prob, 0.0));
  };

  TwoQubitExample out;
  out.g_rho = g.matrix();
  out.rho_s_plus = condition(plus);
  out.rho_s_minus = condition(minus);
  out.p_agree_plus = (plus.dot(out.rho_s_plus * plus)).real();
  out.p_agree_minus = (minus.dot(out.rho_s_minus * minus)).real();
  out.p_mistrack = (minus.dot(out.rho_s_plus * minus)).real();
  return out;
}

}  // namespace qclock
