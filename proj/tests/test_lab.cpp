#include "qclock/lab.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace qclock;
using Catch::Approx;

namespace {
const double r2 = 1.0 / std::sqrt(2.0);
}

TEST_CASE("initial lab state") {
  const StateVector v = initial_lab_state();
  REQUIRE(std::abs(v.norm() - 1.0) < 1e-15);
  REQUIRE(std::abs(v(kPerpUp) - Complex(r2, 0)) < 1e-15);
  REQUIRE(std::abs(v(kPerpDown) - Complex(r2, 0)) < 1e-15);
  for (int i = 2; i < 6; ++i) REQUIRE(v(i) == Complex(0.0, 0.0));

  // spin is in |+>: <sigma_z on spin> = 0
  ComplexMatrix sz_spin = ComplexMatrix::Zero(6, 6);
  for (int a : {0, 2, 4}) sz_spin(a, a) = 1.0;   // spin up rows
  for (int a : {1, 3, 5}) sz_spin(a, a) = -1.0;  // spin down rows
  REQUIRE(std::abs(expectation(sz_spin, v)) < 1e-15);
}

TEST_CASE("lab hamiltonian spectrum and action") {
  const double w0 = M_PI;
  const ComplexMatrix h = lab_hamiltonian(w0);
  REQUIRE(hermiticity_defect(h) == 0.0);

  const auto es = hermitian_eigensystem(h);
  REQUIRE(es.values(0) == Approx(-w0));
  REQUIRE(es.values(1) == Approx(-w0));
  REQUIRE(es.values(2) == Approx(0.0).margin(1e-12));
  REQUIRE(es.values(3) == Approx(0.0).margin(1e-12));
  REQUIRE(es.values(4) == Approx(w0));
  REQUIRE(es.values(5) == Approx(w0));

  StateVector up_down = StateVector::Zero(6);
  up_down(kUpDown) = 1.0;
  REQUIRE((h * up_down).norm() == 0.0);
  StateVector down_up = StateVector::Zero(6);
  down_up(kDownUp) = 1.0;
  REQUIRE((h * down_up).norm() == 0.0);
}

TEST_CASE("generated evolution equals the periodic transition") {
  const double w0 = 1.3;
  const ComplexMatrix h = lab_hamiltonian(w0);
  for (double t : {0.0, M_PI / (4.0 * w0), M_PI / (2.0 * w0), 2.2}) {
    const ComplexMatrix u_gen = hermitian_exponential(h, t);
    const ComplexMatrix u_model = lab_unitary(PeriodicModel{w0}, t);
    REQUIRE((u_gen - u_model).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("all three evolution models are unitary over [-5 tau, 5 tau]") {
  const double w0 = 2.0;
  const double tau = 2.0 * M_PI / w0;
  const EvolutionModel models[] = {EvolutionModel{InstantModel{0.7}},
                                   EvolutionModel{TanhModel{w0, 0.0}},
                                   EvolutionModel{PeriodicModel{w0}}};
  for (const auto& m : models) {
    for (int j = -20; j <= 20; ++j) {
      const double t = j * 0.25 * tau;
      const ComplexMatrix u = lab_unitary(m, t);
      REQUIRE((u * u.adjoint() - ComplexMatrix::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("periodic model composes as a one-parameter group") {
  const PeriodicModel m{1.7};
  for (auto [t, s] : {std::pair{0.3, 1.9}, {2.0, -0.8}, {-1.1, -2.2}}) {
    const ComplexMatrix lhs = lab_unitary(EvolutionModel{m}, t) * lab_unitary(EvolutionModel{m}, s);
    const ComplexMatrix rhs = lab_unitary(EvolutionModel{m}, t + s);
    REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("periodic model at halting times completes the measurement") {
  const double w0 = 0.9;
  StateVector target = StateVector::Zero(6);
  target(kUpUp) = target(kDownDown) = r2;
  for (int m = 0; m <= 5; ++m) {
    const StateVector out =
        lab_unitary(EvolutionModel{PeriodicModel{w0}}, halting_time(w0, m)) * initial_lab_state();
    const double fidelity = std::norm(target.dot(out));
    REQUIRE(fidelity >= 1.0 - 1e-10);
  }

  // global phase at the first halting time is -i
  const StateVector first =
      lab_unitary(EvolutionModel{PeriodicModel{w0}}, halting_time(w0, 0)) * initial_lab_state();
  REQUIRE(std::abs(first(kUpUp) - Complex(0.0, -r2)) < 1e-12);
  REQUIRE(std::abs(first(kDownDown) - Complex(0.0, -r2)) < 1e-12);
}

TEST_CASE("instant model is a step") {
  const InstantModel m{1.0};
  const ComplexMatrix before = lab_unitary(EvolutionModel{m}, 0.5);
  REQUIRE((before - ComplexMatrix::Identity(6, 6)).cwiseAbs().maxCoeff() == 0.0);

  // completed at the nominal time: step(0) = 1
  const ComplexMatrix at = lab_unitary(EvolutionModel{m}, 1.0);
  REQUIRE(std::abs(at(kPerpUp, kUpUp) - Complex(0.0, -1.0)) < 1e-15);
  REQUIRE(std::abs(at(kPerpUp, kPerpUp)) < 1e-15);
  REQUIRE(std::abs(at(kUpDown, kUpDown) - Complex(1.0, 0.0)) < 1e-15);
}

TEST_CASE("tanh model at zero offset is the half-way coupling") {
  const ComplexMatrix u = lab_unitary(EvolutionModel{TanhModel{3.0, 0.0}}, 0.0);
  REQUIRE(std::abs(u(kPerpUp, kPerpUp) - Complex(r2, 0.0)) < 1e-15);
  REQUIRE(std::abs(u(kPerpUp, kUpUp) - Complex(0.0, -r2)) < 1e-15);
  REQUIRE(std::abs(u(kDownUp, kDownUp) - Complex(1.0, 0.0)) < 1e-15);

  SECTION("large-offset limits reach the step model") {
    const ComplexMatrix late = lab_unitary(EvolutionModel{TanhModel{3.0, 0.0}}, 50.0);
    const ComplexMatrix step = lab_unitary(EvolutionModel{InstantModel{0.0}}, 1.0);
    REQUIRE((late - step).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("ok projector") {
  SECTION("the equal-weight opposite-phase choice") {
    const StateVector ok = ok_state(MeasurementSetting(M_PI / 2.0, M_PI));
    REQUIRE(std::abs(ok(kUpUp) - Complex(r2, 0.0)) < 1e-15);
    REQUIRE(std::abs(ok(kDownDown) + Complex(r2, 0.0)) < 1e-12);
  }

  SECTION("rank-1 Hermitian idempotent supported on the recorded branches") {
    const MeasurementSetting s(1.1, 2.3);
    const ComplexMatrix p = ok_projector(s);
    REQUIRE(hermiticity_defect(p) < 1e-15);
    REQUIRE(std::abs(p.trace() - Complex(1.0, 0.0)) < 1e-12);
    REQUIRE((p * p - p).cwiseAbs().maxCoeff() < 1e-12);
    for (int i : {kPerpUp, kPerpDown, kUpDown, kDownUp}) {
      REQUIRE(p.row(i).norm() < 1e-15);
      REQUIRE(p.col(i).norm() < 1e-15);
    }
  }

  SECTION("theta = 0 pins the up branch") {
    const StateVector ok = ok_state(MeasurementSetting(0.0, 0.0));
    REQUIRE(std::abs(ok(kUpUp) - Complex(1.0, 0.0)) < 1e-15);
    REQUIRE(std::abs(ok(kDownDown)) < 1e-15);
  }
}

TEST_CASE("measurement setting ranges") {
  REQUIRE_THROWS_AS(MeasurementSetting(-0.1, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(MeasurementSetting(3.5, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(MeasurementSetting(1.0, 2.0 * M_PI), std::invalid_argument);
  REQUIRE_THROWS_AS(lab_hamiltonian(0.0), std::invalid_argument);
}

TEST_CASE("inside observer's conditional probabilities") {
  const auto [u_half, d_half] = alice_conditional_probs(MeasurementSetting(M_PI / 2.0, 0.0));
  REQUIRE(u_half == Approx(0.5));
  REQUIRE(d_half == Approx(0.5));
  const auto [u_pole, d_pole] = alice_conditional_probs(MeasurementSetting(0.0, 0.0));
  REQUIRE(u_pole == Approx(1.0));
  REQUIRE(d_pole == Approx(0.0).margin(1e-15));
}

TEST_CASE("diagonal lab basis") {
  const double w0 = 2.4;
  const DiagonalLabBasis b = diagonal_lab_basis(w0);
  const ComplexMatrix h = lab_hamiltonian(w0);

  for (int c = 0; c < 6; ++c) {
    const StateVector v = b.vectors.col(c);
    REQUIRE((h * v - b.eigenvalues[c] * v).norm() < 1e-12);
  }
  REQUIRE((b.vectors.adjoint() * b.vectors - ComplexMatrix::Identity(6, 6)).cwiseAbs().maxCoeff() <
          1e-12);
}

TEST_CASE("ok projector in the diagonal basis") {
  SECTION("printed block at (pi/2, 0)") {
    const ComplexMatrix p = ok_projector_diagonal(MeasurementSetting(M_PI / 2.0, 0.0));
    ComplexMatrix a(2, 2);
    a << 0.5, 0.5, 0.5, 0.5;
    REQUIRE((p.block(0, 0, 2, 2) - 0.5 * a).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE((p.block(0, 4, 2, 2) + 0.5 * a).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE(p.block(2, 2, 2, 2).cwiseAbs().maxCoeff() == 0.0);
  }

  SECTION("agrees with conjugating the projector on a 20x20 grid") {
    for (int i = 0; i < 20; ++i)
      for (int j = 0; j < 20; ++j) {
        const MeasurementSetting s(M_PI * i / 19.0, 2.0 * M_PI * j / 20.0);
        const DiagonalLabBasis b = diagonal_lab_basis(1.0);
        const ComplexMatrix direct = ok_projector_diagonal(s);
        const ComplexMatrix conj = b.vectors.adjoint() * ok_projector(s) * b.vectors;
        REQUIRE((direct - conj).cwiseAbs().maxCoeff() < 1e-12);
        REQUIRE(std::abs(direct.trace() - Complex(1.0, 0.0)) < 1e-12);
      }
  }
}

TEST_CASE("time-symmetric projection directions") {
  const MeasurementSetting s(0.8, 4.0);
  const auto [plus, minus] = symmetric_ok_projectors(s);
  REQUIRE(std::abs(plus.norm() - 1.0) < 1e-12);
  REQUIRE(std::abs(minus.norm() - 1.0) < 1e-12);
  REQUIRE(std::abs(plus.dot(minus)) < 1e-12);

  SECTION("theta = 0 reduces to lab eigenvectors") {
    const auto [p0, m0] = symmetric_ok_projectors(MeasurementSetting(0.0, 0.0));
    const DiagonalLabBasis b = diagonal_lab_basis(1.0);
    REQUIRE((p0 - b.vectors.col(4)).norm() < 1e-12);  // +w0 up
    REQUIRE((m0 - b.vectors.col(0)).norm() < 1e-12);  // -w0 up
  }
}
