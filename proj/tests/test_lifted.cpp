#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <memory>

#include "doctest.h"
#include "kph/galerkin.hpp"
#include "kph/lifted.hpp"
#include "kph/numerics.hpp"

using Eigen::Matrix2d;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

namespace {

// Synthetic two-dimensional surrogate with known blocks.
kph::KpHModel toy_model(double r = 0.3) {
  MatrixXd J(2, 2), R(2, 2), G(2, 1);
  J << 0, 1, -1, 0;
  R << 0, 0, 0, r;
  G << 0, 1;
  auto dict = std::make_shared<kph::Dictionary>(kph::identity_dictionary(2));
  const kph::Enforced parts = kph::enforce_structure(J, R);
  return kph::KpHModel::structured(dict, MatrixXd::Identity(2, 2), parts, G, {});
}

}  // namespace

TEST_CASE("storage specs validate their matrix") {
  const kph::StorageSpec id = kph::StorageSpec::identity(3);
  CHECK(id.dim() == 3);
  CHECK((id.P() - MatrixXd::Identity(3, 3)).norm() == 0.0);

  MatrixXd bad(2, 2);
  bad << 1.0, 0.5, 0.0, 1.0;  // not symmetric
  CHECK_THROWS_AS(kph::StorageSpec{bad}, kph::StructureError);
  MatrixXd sing(2, 2);
  sing << 1.0, 0.0, 0.0, 0.0;  // not positive definite
  CHECK_THROWS_AS(kph::StorageSpec{sing}, kph::StructureError);
  CHECK_THROWS_AS(kph::StorageSpec{MatrixXd::Zero(2, 3)}, kph::DimensionError);
}

TEST_CASE("drift output and storage values") {
  const kph::KpHModel m = toy_model();

  const VectorXd d0 = kph::lifted_drift(m, Vector2d(1.0, 0.0), VectorXd::Zero(1));
  CHECK(d0(0) == 0.0);
  CHECK(d0(1) == -1.0);
  const VectorXd d1 =
      kph::lifted_drift(m, Vector2d(0.0, 1.0), VectorXd::Constant(1, 1.0));
  CHECK(d1(0) == 1.0);
  CHECK(d1(1) == doctest::Approx(0.7).epsilon(1e-12));

  Matrix2d Pm;
  Pm << 2.0, 0.0, 0.0, 1.0;
  const kph::StorageSpec weighted{Pm};
  CHECK(kph::lifted_output(m, Vector2d(1.0, 3.0), weighted)(0) == 3.0);
  CHECK(kph::storage_value(Vector2d(3.0, 4.0), kph::StorageSpec::identity(2)) ==
        12.5);
  CHECK(kph::storage_value(Vector2d(1.0, 1.0), weighted) == 1.5);
}

TEST_CASE("identity storage certifies the structured surrogate") {
  const kph::KpHModel m = toy_model();
  const kph::StorageSpec id = kph::StorageSpec::identity(2);
  const kph::PassivityCertificate cert = kph::check_passivity_conditions(m, id);
  CHECK(cert.passed);
  CHECK(cert.skew_residual == 0.0);
  CHECK(cert.psd_min_eig >= -1e-12);
}

TEST_CASE("a storage that breaks the skew condition is rejected") {
  const kph::KpHModel m = toy_model();
  Matrix2d Pm;
  Pm << 1.0, 0.0, 0.0, 2.0;
  const kph::StorageSpec skewed{Pm};
  const kph::PassivityCertificate cert = kph::check_passivity_conditions(m, skewed);
  CHECK_FALSE(cert.passed);
  // P K_J + K_J^T P = [[0, -1], [-1, 0]] for this pair
  CHECK(cert.skew_residual == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK_THROWS_AS(
      (void)kph::lifted_energy_rate(m, Vector2d(1.0, 0.0), VectorXd::Zero(1), skewed),
      kph::CertificateError);
}

TEST_CASE("energy rate splits into dissipation and supplied power") {
  const kph::KpHModel m = toy_model();
  const kph::StorageSpec id = kph::StorageSpec::identity(2);
  const Vector2d psi(0.0, 2.0);
  CHECK(kph::lifted_energy_rate(m, psi, VectorXd::Zero(1), id) ==
        doctest::Approx(-1.2).epsilon(1e-12));
  CHECK(kph::lifted_energy_rate(m, psi, VectorXd::Constant(1, 1.0), id) ==
        doctest::Approx(0.8).epsilon(1e-12));
  // supplied power is y^T u with y = K_u^T P psi
  const double y = kph::lifted_output(m, psi, id)(0);
  CHECK(y == 2.0);
}

TEST_CASE("euler step residual is the second-order defect") {
  const kph::KpHModel m = toy_model();
  const Vector2d psi(0.8, -0.5);
  const VectorXd u = VectorXd::Constant(1, 0.3);

  const kph::EulerStep big = kph::euler_step(m, psi, u, 0.01);
  const VectorXd delta = 0.01 * kph::lifted_drift(m, psi, u);
  CHECK((big.psi_next - (psi + delta)).norm() == 0.0);
  // H(psi + d) - H(psi) - dt dH = psi.d + d.d/2 - dt dH; the linear term is
  // the rate up to the vanishing skew quadratic
  CHECK(big.energy_residual ==
        doctest::Approx(0.5 * delta.squaredNorm()).epsilon(1e-9));

  const kph::EulerStep half = kph::euler_step(m, psi, u, 0.005);
  const double ratio = big.energy_residual / half.energy_residual;
  CHECK(ratio > 3.5);
  CHECK(ratio < 4.5);
}

TEST_CASE("lifted simulation tracks the surrogate flow") {
  const kph::KpHModel m = toy_model();
  const kph::StorageSpec id = kph::StorageSpec::identity(2);
  const kph::InputSignal u = [](double t) {
    return VectorXd::Constant(1, 0.5 * std::sin(0.7 * t));
  };
  const kph::LiftedTrajectory tr =
      kph::simulate_lifted(m, Vector2d(1.0, 0.5), u, 2.0, 0.01, id);
  REQUIRE(tr.times.size() == 201);
  CHECK(tr.psis.cols() == 201);

  for (int k = 0; k < tr.times.size(); ++k) {
    CHECK(tr.storages(k) ==
          doctest::Approx(0.5 * tr.psis.col(k).squaredNorm()).epsilon(1e-14));
    CHECK((tr.outputs.col(k) - m.K_u().transpose() * tr.psis.col(k)).norm() <
          1e-14);
  }

  // the toy surrogate is the linear system itself, so compare with a fine
  // reference rollout
  const kph::LiftedTrajectory fine =
      kph::simulate_lifted(m, Vector2d(1.0, 0.5), u, 2.0, 0.001, id);
  CHECK((tr.psis.col(200) - fine.psis.col(2000)).norm() < 1e-10);
}

TEST_CASE("unforced storage never increases") {
  const kph::KpHModel m = toy_model();
  const kph::LiftedTrajectory tr =
      kph::simulate_lifted(m, Vector2d(1.0, 0.5), kph::zero_input(1), 10.0, 0.001,
                           kph::StorageSpec::identity(2));
  for (int k = 0; k + 1 < tr.storages.size(); ++k)
    CHECK(tr.storages(k + 1) - tr.storages(k) <= 1e-12);
}

TEST_CASE("driven storage obeys the integrated balance") {
  const kph::KpHModel m = toy_model();
  const kph::InputSignal u = [](double t) {
    return VectorXd::Constant(1, 0.5 * std::sin(0.7 * t));
  };
  const kph::LiftedTrajectory tr = kph::simulate_lifted(
      m, Vector2d(1.0, 0.5), u, 10.0, 0.001, kph::StorageSpec::identity(2));
  kph::PairwiseAccumulator acc;
  for (int k = 0; k + 1 < tr.times.size(); ++k) {
    const double f0 = tr.outputs.col(k).dot(tr.inputs.col(k));
    const double f1 = tr.outputs.col(k + 1).dot(tr.inputs.col(k + 1));
    acc.add(0.5 * (tr.times(k + 1) - tr.times(k)) * (f0 + f1));
  }
  const double slack =
      tr.storages(tr.storages.size() - 1) - tr.storages(0) - acc.total();
  CHECK(slack <= 1e-6);
}

TEST_CASE("euler rollout matches stepwise application") {
  const kph::KpHModel m = toy_model();
  const kph::InputSignal u = [](double t) {
    return VectorXd::Constant(1, std::cos(t));
  };
  const kph::LiftedTrajectory tr =
      kph::rollout_euler(m, Vector2d(0.5, 0.0), u, 0.1, 0.01);
  REQUIRE(tr.times.size() == 11);
  VectorXd psi = Vector2d(0.5, 0.0);
  for (int k = 0; k < 10; ++k) {
    psi = kph::euler_step(m, psi, u(tr.times(k)), 0.01).psi_next;
    CHECK((tr.psis.col(k + 1) - psi).norm() == 0.0);
  }
}

TEST_CASE("blowups inside the lifted integrator are reported") {
  // flip the sign of the dissipative block by driving with positive feedback:
  // use a model whose "dissipation" is zero and a destabilizing input signal
  // large enough to overflow the guard
  const kph::KpHModel m = toy_model(0.0);
  const kph::InputSignal pump = [&m](double) {
    return VectorXd::Constant(1, 1e300);
  };
  CHECK_THROWS_AS((void)kph::simulate_lifted(m, Vector2d(1.0, 0.0), pump, 1.0, 0.1,
                                             kph::StorageSpec::identity(2)),
                  kph::NumericalError);
}

TEST_CASE("dimension validation on lifted entry points") {
  const kph::KpHModel m = toy_model();
  const kph::StorageSpec id = kph::StorageSpec::identity(2);
  CHECK_THROWS_AS((void)kph::lifted_drift(m, VectorXd::Zero(3), VectorXd::Zero(1)),
                  kph::DimensionError);
  CHECK_THROWS_AS((void)kph::lifted_drift(m, VectorXd::Zero(2), VectorXd::Zero(2)),
                  kph::DimensionError);
  CHECK_THROWS_AS(
      (void)kph::lifted_output(m, VectorXd::Zero(2), kph::StorageSpec::identity(3)),
      kph::DimensionError);
}
