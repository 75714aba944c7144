#pragma once

// Error function of a complex argument.
//
// The twirl closed forms need Re{erf(x + i*gamma)} with x = sqrt(pi/2) d/sigma
// and gamma = sqrt(pi/2) sigma q / d, i.e. moderate real parts and imaginary
// parts up to a few units. The evaluation combines the real-axis erf with the
// trigonometric correction series obtained from Poisson summation
// (Abramowitz & Stegun 7.1.29); the aliasing error of that series with step
// 1/2 is ~e^{-4 pi^2} ~ 7e-18, below double precision. Series terms combine
// exp factors as exp(n y - n^2/4 - x^2) to avoid overflowing cosh(n y).
//
// For small |Re z| the 1/x term of the series loses accuracy, so the Maclaurin
// series is used there instead; it is accurate for the moderate |z| this
// library produces.

#include <cmath>
#include <complex>
#include <stdexcept>

namespace qclock {

namespace detail {

inline std::complex<double> erf_maclaurin(std::complex<double> z) {
  // erf(z) = 2/sqrt(pi) * sum_n (-1)^n z^(2n+1) / (n! (2n+1))
  const std::complex<double> z2 = z * z;
  std::complex<double> term = z;
  std::complex<double> sum = z;
  for (int n = 1; n < 96; ++n) {
    term *= -z2 / static_cast<double>(n);
    sum += term / static_cast<double>(2 * n + 1);
    if (std::abs(term) < 1e-18 * (1.0 + std::abs(sum))) break;
  }
  return 2.0 / std::sqrt(M_PI) * sum;
}

inline std::complex<double> erf_series_positive(double x, double y) {
  // requires x > 0, y > 0
  const double twoxy = 2.0 * x * y;
  const double c2xy = std::cos(twoxy);
  const double s2xy = std::sin(twoxy);
  const double ex2 = std::exp(-x * x);

  double re = std::erf(x) + ex2 / (2.0 * M_PI * x) * (1.0 - c2xy);
  double im = ex2 / (2.0 * M_PI * x) * s2xy;

  const int nmax = static_cast<int>(std::ceil(2.0 * y)) + 45;
  double sum_re = 0.0, sum_im = 0.0;
  for (int n = 1; n <= nmax; ++n) {
    const double a = std::exp(n * y - 0.25 * n * n - x * x);
    const double b = std::exp(-n * y - 0.25 * n * n - x * x);
    const double ch = 0.5 * (a + b);  // exp(-n^2/4 - x^2) * cosh(n y)
    const double sh = 0.5 * (a - b);  // exp(-n^2/4 - x^2) * sinh(n y)
    const double pref = std::exp(-0.25 * n * n - x * x);
    const double fn = 2.0 * x * pref - 2.0 * x * ch * c2xy + n * sh * s2xy;
    const double gn = 2.0 * x * ch * s2xy + n * sh * c2xy;
    const double den = n * n + 4.0 * x * x;
    sum_re += fn / den;
    sum_im += gn / den;
  }
  re += 2.0 / M_PI * sum_re;
  im += 2.0 / M_PI * sum_im;
  return {re, im};
}

}  // namespace detail

inline std::complex<double> complex_erf(std::complex<double> z) {
  const double x = z.real();
  const double y = z.imag();
  if (!std::isfinite(x) || !std::isfinite(y))
    throw std::invalid_argument("complex_erf: non-finite argument");
  if (y == 0.0) return {std::erf(x), 0.0};
  if (x < 0.0) return -complex_erf(-z);                       // erf is odd
  if (y < 0.0) return std::conj(complex_erf(std::conj(z)));   // erf(conj z) = conj erf(z)
  if (x < 0.5) {
    if (std::abs(z) > 6.0)
      throw std::domain_error("complex_erf: small Re(z) with large |z| is outside the supported region");
    return detail::erf_maclaurin(z);
  }
  return detail::erf_series_positive(x, y);
}

}  // namespace qclock
