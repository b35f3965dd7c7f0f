#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "kph/ph_model.hpp"

using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

namespace {

const double kPi = 3.141592653589793;

kph::PHSystem expanding_system() {
  // Legal structure (J skew, R psd) but H unbounded below, so the flow
  // escapes to infinity.
  kph::PHSystem sys;
  sys.n = 2;
  sys.m = 1;
  sys.J = [](const VectorXd&) { return MatrixXd::Zero(2, 2); };
  sys.R = [](const VectorXd&) { return MatrixXd::Identity(2, 2); };
  sys.G = [](const VectorXd&) { return MatrixXd::Constant(2, 1, 0.0); };
  sys.H = [](const VectorXd& x) { return -0.5 * x.squaredNorm(); };
  sys.gradH = [](const VectorXd& x) { return VectorXd(-x); };
  return sys;
}

}  // namespace

TEST_CASE("pendulum fields at a quarter turn") {
  const kph::PHSystem sys = kph::pendulum(0.3);
  const Vector2d x(kPi / 2.0, 2.0);

  const kph::SubFields f = kph::sub_fields(sys, x);
  CHECK(f.v_J(0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(f.v_J(1) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(f.v_R(0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(f.v_R(1) == doctest::Approx(0.6).epsilon(1e-14));

  const VectorXd v = kph::drift(sys, x);
  CHECK((v - (f.v_J - f.v_R)).norm() == 0.0);

  CHECK(kph::output(sys, x)(0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(sys.H(x) == doctest::Approx(0.5 * 4.0 + 1.0).epsilon(1e-14));
}

TEST_CASE("pendulum drift with heavier friction") {
  const kph::PHSystem sys = kph::pendulum(0.5);
  const VectorXd v = kph::drift(sys, Vector2d(kPi / 2.0, 1.0));
  CHECK(v(0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(v(1) == doctest::Approx(-1.5).epsilon(1e-14));
}

TEST_CASE("energy rate matches supplied power minus dissipation") {
  const kph::PHSystem sys = kph::pendulum(0.3);
  const Vector2d x(kPi / 2.0, 2.0);
  CHECK(kph::energy_rate(sys, x, VectorXd::Zero(1)) ==
        doctest::Approx(-1.2).epsilon(1e-14));
  CHECK(kph::energy_rate(sys, x, VectorXd::Constant(1, 1.0)) ==
        doctest::Approx(0.8).epsilon(1e-14));
}

TEST_CASE("linear system evaluates (J - R) Q x + G u") {
  MatrixXd J(2, 2), R(2, 2), G(2, 1), Q(2, 2);
  J << 0, 1, -1, 0;
  R << 0, 0, 0, 0.3;
  G << 0, 1;
  Q << 2, 0, 0, 1;
  const kph::PHSystem sys = kph::linear_ph(J, R, G, Q).as_system();

  const Vector2d x(1.0, 2.0);
  const VectorXd v = kph::drift(sys, x);
  CHECK(v(0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(v(1) == doctest::Approx(-2.6).epsilon(1e-14));
  CHECK(sys.H(x) == doctest::Approx(0.5 * (2.0 + 4.0)).epsilon(1e-14));
  CHECK(kph::output(sys, x)(0) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("constant matrices are validated at construction") {
  MatrixXd J(2, 2), R(2, 2), G(2, 1), Q(2, 2);
  J << 0, 1, 1, 0;  // not skew
  R.setZero();
  G << 0, 1;
  Q.setIdentity();
  CHECK_THROWS_AS((void)kph::linear_ph(J, R, G, Q), kph::StructureError);

  J << 0, 1, -1, 0;
  R << -0.1, 0, 0, 0;  // negative eigenvalue
  CHECK_THROWS_AS((void)kph::linear_ph(J, R, G, Q), kph::StructureError);

  R.setZero();
  Q << 1, 0, 0, -1;  // indefinite energy weight
  CHECK_THROWS_AS((void)kph::linear_ph(J, R, G, Q), kph::StructureError);
}

TEST_CASE("state-dependent structure violations are caught lazily") {
  kph::PHSystem sys = kph::pendulum(0.3);
  sys.J = [](const VectorXd& x) {
    MatrixXd J(2, 2);
    J << 0, 1, -1, x(0);  // skew only at x(0) == 0
    return J;
  };
  CHECK_NOTHROW((void)kph::drift(sys, Vector2d(0.0, 1.0)));
  CHECK_THROWS_AS((void)kph::drift(sys, Vector2d(1.0, 1.0)), kph::StructureError);
  CHECK_NOTHROW((void)kph::drift(sys, Vector2d(1.0, 1.0), false));
}

TEST_CASE("dimension mismatches are rejected") {
  const kph::PHSystem sys = kph::pendulum(0.3);
  CHECK_THROWS_AS((void)kph::drift(sys, VectorXd::Zero(3)), kph::DimensionError);
  CHECK_THROWS_AS((void)kph::energy_rate(sys, Vector2d(1.0, 0.0), VectorXd::Zero(2)),
                  kph::DimensionError);
}

TEST_CASE("frictionless pendulum conserves energy over a long run") {
  const kph::PHSystem sys = kph::pendulum(0.0);
  const kph::Trajectory tr =
      kph::simulate(sys, Vector2d(2.0, 0.0), kph::zero_input(1), 10.0, 1e-3);
  REQUIRE(tr.times.size() == 10001);
  const double h0 = tr.energies(0);
  for (int k = 0; k < tr.energies.size(); ++k)
    CHECK(std::abs(tr.energies(k) - h0) < 1e-9);
}

TEST_CASE("damped pendulum dissipates monotonically") {
  const kph::PHSystem sys = kph::pendulum(0.3);
  const kph::Trajectory tr =
      kph::simulate(sys, Vector2d(2.0, 0.0), kph::zero_input(1), 10.0, 1e-3);
  for (int k = 0; k + 1 < tr.energies.size(); ++k)
    CHECK(tr.energies(k + 1) - tr.energies(k) <= 1e-10);
  CHECK(tr.energies(tr.energies.size() - 1) < tr.energies(0));
}

TEST_CASE("trajectory grid and recorded signals are consistent") {
  const kph::PHSystem sys = kph::pendulum(0.3);
  const kph::InputSignal u = [](double t) {
    return VectorXd::Constant(1, 0.5 * std::sin(0.7 * t));
  };
  const kph::Trajectory tr = kph::simulate(sys, Vector2d(1.0, 0.0), u, 1.0, 0.01);
  REQUIRE(tr.times.size() == 101);
  CHECK(tr.states.cols() == 101);
  CHECK(tr.inputs.cols() == 101);
  CHECK(tr.outputs.cols() == 101);
  for (int k = 0; k < tr.times.size(); ++k) {
    CHECK(tr.times(k) == doctest::Approx(0.01 * k).epsilon(1e-12));
    CHECK((tr.inputs.col(k) - u(tr.times(k))).norm() == 0.0);
    CHECK((tr.outputs.col(k) - kph::output(sys, tr.states.col(k))).norm() == 0.0);
    CHECK(tr.energies(k) == sys.H(tr.states.col(k)));
  }
}

TEST_CASE("runaway trajectories raise instead of returning garbage") {
  CHECK_THROWS_AS((void)kph::simulate(expanding_system(), Vector2d(1.0, 1.0),
                                      kph::zero_input(1), 40.0, 1e-2),
                  kph::NumericalError);
}

TEST_CASE("canned inputs") {
  CHECK(kph::zero_input(2)(3.7).norm() == 0.0);
  const VectorXd c = VectorXd::Constant(2, 1.5);
  CHECK((kph::constant_input(c)(0.0) - c).norm() == 0.0);
  CHECK((kph::constant_input(c)(9.9) - c).norm() == 0.0);
}
