#include "qclock/twirl.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace qclock;
using Catch::Approx;

namespace {

std::mt19937& rng() {
  static std::mt19937 gen(77031);
  return gen;
}

DensityOperator random_density(Eigen::Index n) {
  std::normal_distribution<double> dist(0.0, 1.0);
  ComplexMatrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = Complex(dist(rng()), dist(rng()));
  ComplexMatrix rho = a * a.adjoint();
  rho /= rho.trace();
  return DensityOperator(std::move(rho));
}

double max_abs(const ComplexMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("global hamiltonian spectrum") {
  const GlobalSpec spec = GlobalSpec::resonant(3, 1.8, 1.0, 1);
  const ComplexMatrix h = global_hamiltonian(spec);
  REQUIRE(h.rows() == 18);
  REQUIRE(hermiticity_defect(h) < 1e-12);

  // levels n w + {-w0, 0, +w0}, each twice; w0 = w/2 makes n'=n+1 overlaps
  const auto es = hermitian_eigensystem(h);
  std::vector<double> want;
  for (int n = 0; n < 3; ++n)
    for (double lam : {-spec.omega0, -spec.omega0, 0.0, 0.0, spec.omega0, spec.omega0})
      want.push_back(n * spec.clock.omega + lam);
  std::sort(want.begin(), want.end());
  for (int i = 0; i < 18; ++i) REQUIRE(es.values(i) == Approx(want[i]).margin(1e-9));

  // degeneracy beyond the flavor pair appears exactly at n w + w0 = (n+1) w - w0
  int quads = 0;
  for (int i = 0; i + 3 < 18; ++i)
    if (std::abs(es.values(i + 3) - es.values(i)) < 1e-9) ++quads;
  REQUIRE(quads > 0);
}

TEST_CASE("resonance detection") {
  REQUIRE(GlobalSpec::resonant(8, 3.0, 4.0, 1).resonance_q() == 1);
  REQUIRE(GlobalSpec::resonant(8, 3.0, 4.0, 2).resonance_q() == 2);
  REQUIRE_FALSE(GlobalSpec::with_ratio(8, 3.0, 4.0, 1.0 / std::sqrt(2.0)).resonance_q());
}

TEST_CASE("two-qubit universe example") {
  const TwoQubitExample ex = two_qubit_example();

  ComplexMatrix g_want(4, 4);
  g_want << 1, 0, 0, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 0, 0, 1;
  g_want *= 0.25;
  REQUIRE(max_abs(ex.g_rho - g_want) < 1e-10);

  ComplexMatrix s_want(2, 2);
  s_want << 2, 1, 1, 2;
  s_want *= 0.25;
  REQUIRE(max_abs(ex.rho_s_plus - s_want) < 1e-10);
  s_want(0, 1) = s_want(1, 0) = -0.25;
  REQUIRE(max_abs(ex.rho_s_minus - s_want) < 1e-10);

  REQUIRE(ex.p_agree_plus == Approx(0.75).margin(1e-12));
  REQUIRE(ex.p_agree_minus == Approx(0.75).margin(1e-12));
  REQUIRE(ex.p_mistrack == Approx(0.25).margin(1e-12));
}

TEST_CASE("twirl properties") {
  ComplexMatrix h4 = ComplexMatrix::Zero(4, 4);
  h4.diagonal() << 0.0, 1.0, 3.0, 4.0;

  SECTION("dephasing and quadrature agree on commensurate spectra") {
    for (Eigen::Index n : {Eigen::Index(4), Eigen::Index(12)}) {
      ComplexMatrix h = ComplexMatrix::Zero(n, n);
      std::uniform_int_distribution<int> lev(0, 6);
      for (Eigen::Index i = 0; i < n; ++i) h(i, i) = 0.5 * lev(rng());
      const DensityOperator rho = random_density(n);
      const DensityOperator a = numerical_g_twirl(rho, h, TwirlScheme::Dephasing);
      const DensityOperator b = numerical_g_twirl(rho, h, TwirlScheme::Quadrature);
      REQUIRE(max_abs(a.matrix() - b.matrix()) < 1e-8);
    }
  }

  SECTION("output commutes with H and the map is idempotent") {
    const DensityOperator rho = random_density(4);
    const DensityOperator g = numerical_g_twirl(rho, h4, TwirlScheme::Dephasing);
    REQUIRE(max_abs(g.matrix() * h4 - h4 * g.matrix()) < 1e-9);
    const DensityOperator gg = numerical_g_twirl(g, h4, TwirlScheme::Dephasing);
    REQUIRE(max_abs(gg.matrix() - g.matrix()) < 1e-9);

    const DensityOperator q = numerical_g_twirl(rho, h4, TwirlScheme::Quadrature);
    REQUIRE(max_abs(q.matrix() * h4 - h4 * q.matrix()) < 1e-9);
  }

  SECTION("incommensurate spectra fail loudly with the last residual") {
    ComplexMatrix h = ComplexMatrix::Zero(3, 3);
    h.diagonal() << 0.0, 1.0, std::sqrt(2.0);
    const DensityOperator rho = random_density(3);
    TwirlOptions opt;
    opt.max_doublings = 3;
    opt.min_nodes_per_oscillation = 16;
    try {
      numerical_g_twirl(rho, h, TwirlScheme::Quadrature, opt);
      FAIL("expected TwirlConvergenceError");
    } catch (const TwirlConvergenceError& e) {
      REQUIRE(e.last_residual() > 0.0);
      REQUIRE(e.last_residual() < 1.0);
    }
  }

  SECTION("dimension mismatch is rejected") {
    const DensityOperator rho = random_density(3);
    REQUIRE_THROWS_AS(numerical_g_twirl(rho, h4, TwirlScheme::Dephasing), std::invalid_argument);
  }
}

TEST_CASE("projected twirl closed forms") {
  SECTION("basic scalar: positive, K-free, matches the exact projection weight 1/d") {
    for (auto [d, sig] : {std::pair{8, std::sqrt(8.0)}, {16, 4.0}, {32, std::sqrt(32.0)}}) {
      const GlobalSpec spec = GlobalSpec::resonant(d, sig, d / 2.0, 1);
      const auto scalar = projected_twirl_basic(spec);
      REQUIRE(scalar.analytic_regime);
      REQUIRE(scalar.value > 0.0);
      REQUIRE(scalar.value == Approx(1.0 / d).epsilon(0.02));
    }
    const GlobalSpec spec16 = GlobalSpec::resonant(16, 4.0, 8.0, 1);
    REQUIRE(projected_twirl_basic(spec16).value == Approx(6.249999999866528e-2).epsilon(1e-10));
  }

  SECTION("exponential scalar vanishes off resonance") {
    const GlobalSpec spec = GlobalSpec::with_ratio(8, std::sqrt(8.0), 4.0, 1.0 / std::sqrt(2.0));
    const auto e = projected_twirl_exponential(spec, 0.0, +1);
    REQUIRE_FALSE(e.resonant);
    REQUIRE(std::abs(e.value) == 0.0);
    REQUIRE(std::abs(projected_twirl_exponential_numeric(spec, 0.0, +1)) < 1e-15);
  }

  SECTION("even and odd q both survive at resonance") {
    for (int q : {1, 2}) {
      const GlobalSpec spec = GlobalSpec::resonant(100, 10.0, 50.0, q);
      REQUIRE(std::abs(projected_twirl_exponential(spec, 0.0, +1).value) > 1e-3);
    }
  }

  SECTION("modulus is K-free; phase is linear with slope 2 pi q / d") {
    const GlobalSpec spec = GlobalSpec::resonant(8, std::sqrt(8.0), 4.0, 3);
    const Complex e0 = projected_twirl_exponential(spec, 0.0, +1).value;
    for (double k : {1.0, 2.0, 5.0}) {
      const Complex ek = projected_twirl_exponential(spec, k, +1).value;
      REQUIRE(std::abs(ek) == Approx(std::abs(e0)).epsilon(1e-12));
      const double phase = std::arg(ek / e0);
      const double want = std::remainder(2.0 * M_PI * 3.0 * k / 8.0, 2.0 * M_PI);
      REQUIRE(std::remainder(phase - want, 2.0 * M_PI) == Approx(0.0).margin(1e-12));
    }
  }

  SECTION("closed form against the energy-basis average, within 2% at d=8") {
    for (int sign : {+1, -1}) {
      for (double k : {0.0, 3.0}) {
        const GlobalSpec spec = GlobalSpec::resonant(8, std::sqrt(8.0), 4.0, 1);
        const Complex closed = projected_twirl_exponential(spec, k, sign).value;
        const Complex exact = projected_twirl_exponential_numeric(spec, k, sign);
        REQUIRE(std::abs(closed - exact) < 0.02 * std::abs(exact));
      }
    }
  }

  SECTION("resonance factor frozen values") {
    REQUIRE(resonance_factor(GlobalSpec::resonant(8, std::sqrt(8.0), 4.0, 1)) ==
            Approx(0.8217259259807329).epsilon(1e-12));
    REQUIRE(resonance_factor(GlobalSpec::resonant(32, std::sqrt(32.0), 16.0, 1)) ==
            Approx(0.9520979267837046).epsilon(1e-12));
    REQUIRE(resonance_factor(GlobalSpec::resonant(100, 10.0, 50.0, 1)) ==
            Approx(0.9844147633517137).epsilon(1e-12));
    REQUIRE(resonance_factor(GlobalSpec::resonant(100, 10.0, 50.0, 2)) ==
            Approx(0.9391013674242926).epsilon(1e-12));
  }

  SECTION("|A| is nearly constant over a pointer period for sigma >= sqrt(d)") {
    for (auto [d, sig] : {std::pair{8, std::sqrt(8.0)}, {16, 4.0}}) {
      double lo = 1e300, hi = 0.0;
      for (int j = 0; j <= 20; ++j) {
        GlobalSpec spec = GlobalSpec::resonant(d, sig, d / 2.0, 1);
        spec.quasi.k0 = j / 20.0;
        const double a = std::sqrt(detail::gaussian_norm_constant_sq(spec));
        lo = std::min(lo, a);
        hi = std::max(hi, a);
      }
      REQUIRE((hi - lo) / lo < 0.01);
    }
  }
}

TEST_CASE("wigner pointer") {
  const GlobalSpec d8q1 = GlobalSpec::resonant(8, std::sqrt(8.0), 4.0, 1);
  const WignerPointer w0 = wigner_pointer(0, d8q1);
  REQUIRE(w0.K == Approx(4.0));
  REQUIRE(w0.admissible);

  const GlobalSpec d8q3 = GlobalSpec::resonant(8, std::sqrt(8.0), 4.0, 3);
  const WignerPointer w3 = wigner_pointer(0, d8q3);
  REQUIRE(w3.K == Approx(4.0 / 3.0));
  REQUIRE_FALSE(w3.admissible);

  const GlobalSpec d3q1 = GlobalSpec::resonant(3, 1.8, 1.0, 1);
  const WignerPointer w1 = wigner_pointer(0, d3q1);
  REQUIRE(w1.K == Approx(1.5));
  REQUIRE(w1.admissible);  // half-integer labels for odd d

  REQUIRE_THROWS_AS(wigner_pointer(0, GlobalSpec::with_ratio(8, 3.0, 4.0, 0.7071)),
                    std::invalid_argument);
}

TEST_CASE("relational lab state, analytic route") {
  SECTION("non-resonant ratio gives the half/half mixture pattern") {
    const GlobalSpec spec = GlobalSpec::with_ratio(8, std::sqrt(8.0), 4.0, 1.0 / std::sqrt(2.0));
    const RelationalState rel = relational_lab_state(spec, 0.0);
    REQUIRE_FALSE(rel.resonant);
    REQUIRE(rel.R == Approx(0.0).margin(1e-15));
    REQUIRE(rel.Q == Approx(0.0).margin(1e-15));
    ComplexMatrix want = ComplexMatrix::Zero(6, 6);
    for (int i : {0, 1})
      for (int j : {0, 1}) want(i, j) = 0.25;
    for (int i : {2, 5})
      for (int j : {2, 5}) want(i, j) = 0.25;
    REQUIRE(max_abs(rel.matrix.matrix() - want) < 1e-12);
  }

  SECTION("halting pointer flips R and kills Q") {
    const GlobalSpec spec = GlobalSpec::resonant(8, std::sqrt(8.0), 4.0, 1);
    const RelationalState at0 = relational_lab_state(spec, 0.0);
    const RelationalState atw = relational_lab_state(spec, wigner_pointer(0, spec).K);
    REQUIRE(atw.Q == Approx(0.0).margin(1e-12));
    REQUIRE(atw.R == Approx(-at0.R).epsilon(1e-12));
  }

  SECTION("R, Q have constant modulus and period d/q in K") {
    const GlobalSpec spec = GlobalSpec::resonant(32, std::sqrt(32.0), 16.0, 2);
    const double f = resonance_factor(spec);
    for (double k : {0.0, 1.0, 5.0, 9.0}) {
      const RelationalState rel = relational_lab_state(spec, k);
      REQUIRE(rel.R * rel.R + rel.Q * rel.Q == Approx(f * f).epsilon(1e-10));
      const RelationalState shifted = relational_lab_state(spec, k + 32.0 / 2.0);
      REQUIRE(shifted.R == Approx(rel.R).margin(1e-10));
      REQUIRE(shifted.Q == Approx(rel.Q).margin(1e-10));
    }
  }

  SECTION("non-pointer requests snap and record the distance") {
    const GlobalSpec spec = GlobalSpec::resonant(8, std::sqrt(8.0), 4.0, 1);
    const RelationalState rel = relational_lab_state(spec, 2.3);
    REQUIRE(rel.pointer_K == Approx(2.0));
    REQUIRE(rel.snap_distance == Approx(0.3));
    const GlobalSpec odd = GlobalSpec::resonant(3, 1.8, 1.0, 1);
    const RelationalState rel_odd = relational_lab_state(odd, 1.1);
    REQUIRE(rel_odd.pointer_K == Approx(1.5));
  }
}

TEST_CASE("relational lab state, oracle pipeline") {
  SECTION("analytic matches the brute-force route at d=8 within 2% entrywise") {
    const GlobalSpec spec = GlobalSpec::resonant(8, std::sqrt(8.0), 4.0, 1);
    for (double k : {0.0, 4.0}) {
      const RelationalState ana = relational_lab_state(spec, k);
      const RelationalState num = relational_lab_state_numeric(spec, k);
      const double scale = max_abs(num.matrix.matrix());
      REQUIRE(max_abs(ana.matrix.matrix() - num.matrix.matrix()) < 0.02 * scale);
    }
  }

  SECTION("quadrature twirl feeds the same pipeline") {
    const GlobalSpec spec = GlobalSpec::resonant(8, std::sqrt(8.0), 4.0, 1);
    const RelationalState deph = relational_lab_state_numeric(spec, 0.0, TwirlScheme::Dephasing);
    const RelationalState quad = relational_lab_state_numeric(spec, 0.0, TwirlScheme::Quadrature);
    REQUIRE(max_abs(deph.matrix.matrix() - quad.matrix.matrix()) < 1e-7);
  }

  SECTION("non-resonant oracle reproduces the mixture exactly") {
    const GlobalSpec spec = GlobalSpec::with_ratio(8, std::sqrt(8.0), 4.0, 1.0 / std::sqrt(2.0));
    const RelationalState num = relational_lab_state_numeric(spec, 0.0);
    const RelationalState ana = relational_lab_state(spec, 0.0);
    REQUIRE(max_abs(num.matrix.matrix() - ana.matrix.matrix()) < 1e-12);
  }

  SECTION("odd clock dimension: half-integer pointers through the whole pipeline") {
    const GlobalSpec spec = GlobalSpec::resonant(9, 3.0, 4.0, 1);
    const WignerPointer kw = wigner_pointer(0, spec);
    REQUIRE(kw.K == Approx(4.5));
    REQUIRE(kw.admissible);
    for (double k : {0.5, kw.K}) {
      const RelationalState ana = relational_lab_state(spec, k);
      const RelationalState num = relational_lab_state_numeric(spec, k);
      REQUIRE(ana.pointer_K == Approx(k));  // already admissible, no snap
      REQUIRE(ana.snap_distance == Approx(0.0).margin(1e-12));
      const double scale = max_abs(num.matrix.matrix());
      REQUIRE(max_abs(ana.matrix.matrix() - num.matrix.matrix()) < 0.05 * scale);
    }
    const RelationalState at_kw = relational_lab_state(spec, kw.K);
    REQUIRE(at_kw.Q == Approx(0.0).margin(1e-12));
  }
}
