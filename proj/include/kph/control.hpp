#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "kph/lifted.hpp"

namespace kph {

// Output feedback u = -K_d y + v_ext(t) with a symmetric PSD gain.  A default
// constructed signal means v_ext = 0.
class DampingController {
 public:
  explicit DampingController(Eigen::MatrixXd K_d, InputSignal v_ext = {});

  int dim() const { return static_cast<int>(kd_.rows()); }
  const Eigen::MatrixXd& K_d() const { return kd_; }
  Eigen::VectorXd v_ext(double t) const;

 private:
  Eigen::MatrixXd kd_;
  InputSignal vext_;
};

Eigen::VectorXd damping_input(const DampingController& c, const Eigen::VectorXd& y,
                              double t);

// K_J - K_R - K_u K_d K_u^T.
Eigen::MatrixXd closed_loop_matrix(const KpHModel& m, const Eigen::MatrixXd& K_d);

struct DetectabilityReport {
  bool detectable = false;
  std::vector<std::complex<double>> offending_modes;
};

// PBH test: every eigenvalue of A with real part >= -tol must leave the
// stacked matrix [lambda I - A; C] at full column rank (singular values,
// threshold 1e-9 of the largest).
DetectabilityReport check_detectability(const Eigen::MatrixXd& A,
                                        const Eigen::MatrixXd& C,
                                        double tol = 1e-8);

// Unique P = P^T > 0 with A^T P + P A + Q = 0, via the vectorized dense
// linear system.  A must be Hurwitz and Q symmetric positive definite.
Eigen::MatrixXd solve_lyapunov_ct(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q);

// Discrete-time counterpart: A_d^T P A_d - P + Q = 0, spectral radius of A_d
// must be below one.
Eigen::MatrixXd solve_lyapunov_dt(const Eigen::MatrixXd& A_d, const Eigen::MatrixXd& Q);

// Finite-horizon tracking problem on the surrogate, discretized with zero
// order hold and forward Euler: A_d = I + dt (K_J - K_R), B_d = dt K_u, stage
// cost dt (e^T state_cost e + u^T input_cost u) on the error e = psi -
// psi_ref, terminal cost e^T P e.  The reference is treated as the origin of
// the error dynamics, which is exact when psi_ref is an equilibrium of the
// surrogate (in particular psi_ref = 0).
struct MPCProblem {
  MPCProblem(KpHModel model, Eigen::VectorXd psi_ref, double horizon, double dt,
             Eigen::MatrixXd P, Eigen::MatrixXd Q_lyap);

  KpHModel model;
  Eigen::VectorXd psi_ref;
  double horizon;
  double dt;
  Eigen::MatrixXd P;           // terminal weight, symmetric PSD
  Eigen::MatrixXd Q_lyap;      // weight in the terminal Lyapunov inequality
  Eigen::MatrixXd state_cost;  // identity unless overridden
  Eigen::MatrixXd input_cost;  // identity unless overridden, must stay > 0

  int steps() const;  // horizon / dt, rounded
};

struct MPCSolution {
  Eigen::MatrixXd inputs;  // m x L
  Eigen::MatrixXd states;  // N x (L+1)
  double cost = 0.0;
};

// Exact minimizer of the unconstrained LQ transcription by backward Riccati
// recursion plus a forward rollout.
MPCSolution mpc_solve(const MPCProblem& prob, const Eigen::VectorXd& psi0);

// Receding horizon loop: apply the first input of each solve, re-solve every
// step.  Requires the terminal inequality A_d^T P A_d - P + Q_lyap <= 0
// (slack 1e-9) up front and certifies that the optimal cost sequence is
// nonincreasing (relative slack 1e-9).
struct MPCLoopResult {
  LiftedTrajectory trajectory;
  Eigen::VectorXd optimal_costs;    // J_k for each solve
  Eigen::VectorXd lyapunov_values;  // V_k = e_k^T P e_k
  double max_cost_increase = 0.0;   // largest relative increase observed
  bool cost_monotone = false;
};

MPCLoopResult mpc_closed_loop(const MPCProblem& prob, const Eigen::VectorXd& psi0,
                              int n_steps);

}  // namespace kph
