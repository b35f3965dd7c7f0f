#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "kph/numerics.hpp"
#include "kph/observables.hpp"

using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

namespace {

const double kPi = 3.141592653589793;

// Independent check of jac against central differences of eval.
double jac_fd_error(const kph::Dictionary& d, const VectorXd& x, double h = 1e-6) {
  const MatrixXd jac = d.jac(x);
  double worst = 0.0;
  for (int j = 0; j < d.n; ++j) {
    VectorXd xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    const VectorXd col = (d.eval(xp) - d.eval(xm)) / (2.0 * h);
    worst = std::max(worst, (col - jac.col(j)).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace

TEST_CASE("pendulum dictionary values") {
  const kph::Dictionary d = kph::pendulum_dictionary();
  REQUIRE(d.N == 4);
  REQUIRE(d.n == 2);

  const VectorXd at_rest = kph::eval_dictionary(d, Vector2d(0.0, 0.0));
  CHECK(at_rest(0) == 0.0);
  CHECK(at_rest(1) == 0.0);
  CHECK(at_rest(2) == 1.0);
  CHECK(at_rest(3) == 0.0);

  const VectorXd up = kph::eval_dictionary(d, Vector2d(kPi / 2.0, 1.0));
  CHECK(up(0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(up(1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(up(2) == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  CHECK(up(3) == doctest::Approx(1.5).epsilon(1e-14));

  CHECK(d.in_domain(Vector2d(3.0, 1.9)));
  CHECK_FALSE(d.in_domain(Vector2d(0.0, 2.1)));
}

TEST_CASE("pendulum dictionary gradients match finite differences") {
  const kph::Dictionary d = kph::pendulum_dictionary();
  kph::Rng rng(42);
  for (int i = 0; i < 20; ++i) {
    const Vector2d x(rng.uniform(-kPi, kPi), rng.uniform(-2.0, 2.0));
    CHECK(jac_fd_error(d, x) < 1e-8);
  }
}

TEST_CASE("generator action on the pendulum dictionary has closed form") {
  const double b = 0.3;
  const kph::PHSystem sys = kph::pendulum(b);
  const kph::Dictionary d = kph::pendulum_dictionary();
  kph::Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    const double theta = rng.uniform(-kPi, kPi);
    const double p = rng.uniform(-2.0, 2.0);
    const kph::GeneratorAction ga = kph::generator_action(d, sys, Vector2d(theta, p));

    VectorXd kj(4), kr(4);
    kj << p * std::cos(theta), -std::sin(theta), -p * std::sin(theta), 0.0;
    kr << 0.0, b * p, 0.0, b * p * p;
    CHECK((ga.kJ - kj).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((ga.kR - kr).cwiseAbs().maxCoeff() < 1e-13);

    VectorXd ku(4);
    ku << 0.0, 1.0, 0.0, p;
    CHECK((ga.kU.col(0) - ku).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("identity and scaled dictionaries are linear maps") {
  const kph::Dictionary id = kph::identity_dictionary(3);
  const VectorXd x = Eigen::Vector3d(0.3, -0.7, 2.0);
  CHECK((kph::eval_dictionary(id, x) - x).norm() == 0.0);
  CHECK((id.jac(x) - MatrixXd::Identity(3, 3)).norm() == 0.0);
  CHECK(id.labels.size() == 3);

  MatrixXd Q(2, 2);
  Q << 1.5, 0.5, 0.5, 2.0;
  const kph::Dictionary qd = kph::q_scaled_dictionary(Q);
  const Vector2d z(1.0, -2.0);
  CHECK((kph::eval_dictionary(qd, z) - Q * z).norm() == 0.0);
  CHECK((qd.jac(z) - Q).norm() == 0.0);
}

TEST_CASE("scaled dictionary rejects a non-square matrix") {
  CHECK_THROWS_AS((void)kph::q_scaled_dictionary(MatrixXd::Zero(2, 3)),
                  kph::DimensionError);
}

TEST_CASE("polynomial dictionary enumerates graded monomials") {
  const kph::Dictionary d = kph::polynomial_dictionary(2, 2);
  REQUIRE(d.N == 5);
  const VectorXd v = kph::eval_dictionary(d, Vector2d(2.0, 3.0));
  VectorXd expected(5);
  expected << 2.0, 3.0, 4.0, 6.0, 9.0;
  CHECK((v - expected).norm() == 0.0);

  const kph::Dictionary with_one = kph::polynomial_dictionary(2, 2, true);
  REQUIRE(with_one.N == 6);
  CHECK(kph::eval_dictionary(with_one, Vector2d(2.0, 3.0))(0) == 1.0);

  kph::Rng rng(11);
  for (int i = 0; i < 10; ++i) {
    const Vector2d x(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    CHECK(jac_fd_error(d, x) < 1e-8);
  }
}

TEST_CASE("rbf dictionary peaks at its centers") {
  std::vector<VectorXd> centers = {Vector2d(0.0, 0.0), Vector2d(1.0, 1.0)};
  const kph::Dictionary d = kph::gaussian_rbf_dictionary(centers, 1.0);
  REQUIRE(d.N == 2);
  const VectorXd at_first = kph::eval_dictionary(d, Vector2d(0.0, 0.0));
  CHECK(at_first(0) == 1.0);
  CHECK(at_first(1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(kph::eval_dictionary(d, Vector2d(1.0, 0.0))(0) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-14));

  kph::Rng rng(3);
  for (int i = 0; i < 10; ++i) {
    const Vector2d x(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
    CHECK(jac_fd_error(d, x) < 1e-8);
  }
  CHECK_THROWS_AS((void)kph::gaussian_rbf_dictionary(centers, 0.0), kph::ConfigError);
}

TEST_CASE("generator action validates shapes") {
  const kph::Dictionary d = kph::pendulum_dictionary();
  const kph::PHSystem sys = kph::pendulum(0.3);
  CHECK_THROWS_AS((void)kph::generator_action(d, sys, VectorXd::Zero(3)),
                  kph::DimensionError);
  const kph::Dictionary wrong = kph::identity_dictionary(3);
  CHECK_THROWS_AS((void)kph::generator_action(wrong, sys, VectorXd::Zero(3)),
                  kph::DimensionError);
}
