#include "kph/lifted.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include "kph/tolerances.hpp"

namespace kph {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

void require_psi(const KpHModel& m, const VectorXd& psi) {
  if (psi.size() != m.dim()) throw DimensionError("lifted state has wrong size");
}

void require_input(const KpHModel& m, const VectorXd& u) {
  if (u.size() != m.inputs()) throw DimensionError("input vector has wrong size");
}

void require_storage(const KpHModel& m, const StorageSpec& storage) {
  if (storage.dim() != m.dim())
    throw DimensionError("storage weight does not match the lifted dimension");
}

}  // namespace

StorageSpec::StorageSpec(MatrixXd P) : p_(std::move(P)) {
  const Tolerances tol;
  if (p_.rows() != p_.cols()) throw DimensionError("storage weight must be square");
  const double asym = (p_ - p_.transpose()).norm();
  if (asym > tol.structure_check) {
    std::ostringstream os;
    os << "storage weight is not symmetric (residual " << asym << ")";
    throw StructureError(os.str());
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (p_ + p_.transpose()));
  if (es.info() != Eigen::Success)
    throw EigenvalueFailure("eigendecomposition of the storage weight failed");
  const double lmin = es.eigenvalues().minCoeff();
  if (!(lmin > 0.0)) {
    std::ostringstream os;
    os << "storage weight is not positive definite (min eigenvalue " << lmin << ")";
    throw StructureError(os.str());
  }
}

StorageSpec StorageSpec::identity(int N) {
  if (N < 1) throw DimensionError("storage dimension must be positive");
  return StorageSpec(MatrixXd::Identity(N, N));
}

VectorXd lifted_drift(const KpHModel& m, const VectorXd& psi, const VectorXd& u) {
  require_psi(m, psi);
  require_input(m, u);
  return m.K_J() * psi - m.K_R() * psi + m.K_u() * u;
}

VectorXd lifted_output(const KpHModel& m, const VectorXd& psi,
                       const StorageSpec& storage) {
  require_psi(m, psi);
  require_storage(m, storage);
  return m.K_u().transpose() * (storage.P() * psi);
}

double storage_value(const VectorXd& psi, const StorageSpec& storage) {
  if (psi.size() != storage.dim())
    throw DimensionError("lifted state does not match the storage weight");
  return 0.5 * psi.dot(storage.P() * psi);
}

PassivityCertificate check_passivity_conditions(const KpHModel& m,
                                                const StorageSpec& storage) {
  require_storage(m, storage);
  const Tolerances tol;
  const MatrixXd& P = storage.P();
  PassivityCertificate cert;
  cert.skew_residual = (P * m.K_J() + m.K_J().transpose() * P).norm();
  const MatrixXd d = P * m.K_R() + m.K_R().transpose() * P;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (d + d.transpose()));
  if (es.info() != Eigen::Success)
    throw EigenvalueFailure("eigendecomposition of the dissipation pairing failed");
  cert.psd_min_eig = es.eigenvalues().minCoeff();
  cert.passed = cert.skew_residual <= tol.passivity_skew &&
                cert.psd_min_eig >= -tol.passivity_psd;
  return cert;
}

double lifted_energy_rate(const KpHModel& m, const VectorXd& psi,
                          const VectorXd& u, const StorageSpec& storage) {
  require_psi(m, psi);
  require_input(m, u);
  const PassivityCertificate cert = check_passivity_conditions(m, storage);
  if (!cert.passed) {
    std::ostringstream os;
    os << "storage weight fails the passivity conditions (skew residual "
       << cert.skew_residual << ", dissipation min eigenvalue " << cert.psd_min_eig
       << "); the energy rate would not certify passivity";
    throw CertificateError(os.str());
  }
  const VectorXd Ppsi = storage.P() * psi;
  return Ppsi.dot(m.K_J() * psi) - Ppsi.dot(m.K_R() * psi) + Ppsi.dot(m.K_u() * u);
}

EulerStep euler_step(const KpHModel& m, const VectorXd& psi, const VectorXd& u,
                     double dt) {
  require_psi(m, psi);
  require_input(m, u);
  if (!(dt > 0.0)) throw ConfigError("euler_step requires dt > 0");
  EulerStep st;
  st.psi_next = psi + dt * lifted_drift(m, psi, u);
  const double y_u = (m.K_u().transpose() * psi).dot(u);
  const double rate = -m.dissipation_form(psi) + y_u;
  st.energy_residual =
      (0.5 * st.psi_next.squaredNorm() - 0.5 * psi.squaredNorm()) - dt * rate;
  return st;
}

LiftedTrajectory simulate_lifted(const KpHModel& m, const VectorXd& psi0,
                                 const InputSignal& u, double t_end, double dt,
                                 const StorageSpec& storage, int substeps) {
  require_psi(m, psi0);
  require_storage(m, storage);
  if (!(dt > 0.0) || !(t_end > 0.0))
    throw ConfigError("simulate_lifted requires dt > 0 and t_end > 0");
  if (substeps < 1) throw ConfigError("simulate_lifted requires substeps >= 1");
  const Tolerances tol;
  const long steps = std::max(1L, std::lround(t_end / dt));
  const int N = m.dim(), mi = m.inputs();

  LiftedTrajectory tr;
  tr.times.resize(steps + 1);
  tr.psis.resize(N, steps + 1);
  tr.inputs.resize(mi, steps + 1);
  tr.outputs.resize(mi, steps + 1);
  tr.storages.resize(steps + 1);

  VectorXd psi = psi0;
  auto record = [&](long k, double t) {
    const VectorXd uk = u(t);
    if (uk.size() != mi) throw DimensionError("input signal has wrong size");
    tr.times(k) = t;
    tr.psis.col(k) = psi;
    tr.inputs.col(k) = uk;
    tr.outputs.col(k) = m.K_u().transpose() * (storage.P() * psi);
    tr.storages(k) = storage_value(psi, storage);
  };
  record(0, 0.0);

  const double h = dt / substeps;
  for (long k = 0; k < steps; ++k) {
    const double t0 = k * dt;
    for (int s = 0; s < substeps; ++s) {
      const double t = t0 + s * h;
      const VectorXd k1 = lifted_drift(m, psi, u(t));
      const VectorXd k2 = lifted_drift(m, psi + 0.5 * h * k1, u(t + 0.5 * h));
      const VectorXd k3 = lifted_drift(m, psi + 0.5 * h * k2, u(t + 0.5 * h));
      const VectorXd k4 = lifted_drift(m, psi + h * k3, u(t + h));
      psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!psi.allFinite() || psi.norm() > tol.blowup_norm) {
      std::ostringstream os;
      os << "lifted state blew up at t = " << (k + 1) * dt;
      throw NumericalError(os.str());
    }
    record(k + 1, (k + 1) * dt);
  }
  return tr;
}

LiftedTrajectory rollout_euler(const KpHModel& m, const VectorXd& psi0,
                               const InputSignal& u, double t_end, double dt) {
  require_psi(m, psi0);
  if (!(dt > 0.0) || !(t_end > 0.0))
    throw ConfigError("rollout_euler requires dt > 0 and t_end > 0");
  const Tolerances tol;
  const long steps = std::max(1L, std::lround(t_end / dt));
  const int N = m.dim(), mi = m.inputs();

  LiftedTrajectory tr;
  tr.times.resize(steps + 1);
  tr.psis.resize(N, steps + 1);
  tr.inputs.resize(mi, steps + 1);
  tr.outputs.resize(mi, steps + 1);
  tr.storages.resize(steps + 1);

  VectorXd psi = psi0;
  auto record = [&](long k, double t) {
    const VectorXd uk = u(t);
    if (uk.size() != mi) throw DimensionError("input signal has wrong size");
    tr.times(k) = t;
    tr.psis.col(k) = psi;
    tr.inputs.col(k) = uk;
    tr.outputs.col(k) = m.K_u().transpose() * psi;
    tr.storages(k) = 0.5 * psi.squaredNorm();
  };
  record(0, 0.0);

  for (long k = 0; k < steps; ++k) {
    psi = euler_step(m, psi, u(k * dt), dt).psi_next;
    if (!psi.allFinite() || psi.norm() > tol.blowup_norm) {
      std::ostringstream os;
      os << "lifted state blew up at t = " << (k + 1) * dt;
      throw NumericalError(os.str());
    }
    record(k + 1, (k + 1) * dt);
  }
  return tr;
}

}  // namespace kph
