#pragma once

#include <Eigen/Dense>

#include "kph/galerkin.hpp"

namespace kph {

struct LiftedState {
  Eigen::VectorXd psi;
  double t = 0.0;
};

// Quadratic storage H~(psi) = 1/2 psi^T P psi.  P must be symmetric positive
// definite; the identity weight reproduces the plain squared norm.
class StorageSpec {
 public:
  explicit StorageSpec(Eigen::MatrixXd P);
  static StorageSpec identity(int N);

  int dim() const { return static_cast<int>(p_.rows()); }
  const Eigen::MatrixXd& P() const { return p_; }

 private:
  Eigen::MatrixXd p_;
};

struct PassivityCertificate {
  double skew_residual = 0.0;  // ||P K_J + K_J^T P||_F
  double psd_min_eig = 0.0;    // min eigenvalue of sym(P K_R + K_R^T P)
  bool passed = false;
};

// (K_J - K_R) psi + K_u u.
Eigen::VectorXd lifted_drift(const KpHModel& m, const Eigen::VectorXd& psi,
                             const Eigen::VectorXd& u);

// Conjugate output K_u^T P psi; identity storage gives K_u^T psi.
Eigen::VectorXd lifted_output(const KpHModel& m, const Eigen::VectorXd& psi,
                              const StorageSpec& storage);

double storage_value(const Eigen::VectorXd& psi, const StorageSpec& storage);

// passed iff the skew residual is at most 1e-9 and the dissipation pairing
// sym(P K_R + K_R^T P) has no eigenvalue below -1e-9.  Identity storage on a
// structured model passes by construction.
PassivityCertificate check_passivity_conditions(const KpHModel& m,
                                                const StorageSpec& storage);

// d/dt H~ along the surrogate flow: psi^T P (K_J - K_R) psi + psi^T P K_u u.
// The storage must pass check_passivity_conditions; otherwise the rate is not
// a passivity certificate and the call fails with CertificateError.
double lifted_energy_rate(const KpHModel& m, const Eigen::VectorXd& psi,
                          const Eigen::VectorXd& u, const StorageSpec& storage);

// One forward Euler step with identity storage diagnostics.  energy_residual
// is the gap between the discrete storage increment and dt times the
// continuous rate; it shrinks as O(dt^2).
struct EulerStep {
  Eigen::VectorXd psi_next;
  double energy_residual = 0.0;
};

EulerStep euler_step(const KpHModel& m, const Eigen::VectorXd& psi,
                     const Eigen::VectorXd& u, double dt);

struct LiftedTrajectory {
  Eigen::VectorXd times;
  Eigen::MatrixXd psis;      // N x (K+1)
  Eigen::MatrixXd inputs;    // m x (K+1)
  Eigen::MatrixXd outputs;   // m x (K+1), K_u^T P psi
  Eigen::VectorXd storages;  // K+1
};

// Reference propagation: classic RK4 with `substeps` stages per recorded
// step, so the grid spacing dt controls output resolution while dt/substeps
// controls integration error.
LiftedTrajectory simulate_lifted(const KpHModel& m, const Eigen::VectorXd& psi0,
                                 const InputSignal& u, double t_end, double dt,
                                 const StorageSpec& storage, int substeps = 10);

// Plain forward Euler rollout with identity storage diagnostics, kept
// separate from the reference propagator so discretization effects on the
// energy balance stay visible.
LiftedTrajectory rollout_euler(const KpHModel& m, const Eigen::VectorXd& psi0,
                               const InputSignal& u, double t_end, double dt);

}  // namespace kph
