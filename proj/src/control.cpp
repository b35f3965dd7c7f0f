#include "kph/control.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <sstream>

#include "kph/tolerances.hpp"

namespace kph {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

void require_sym_psd(const MatrixXd& a, const char* what, bool strict) {
  const Tolerances tol;
  if (a.rows() != a.cols()) {
    std::ostringstream os;
    os << what << " must be square";
    throw DimensionError(os.str());
  }
  const double asym = (a - a.transpose()).norm();
  if (asym > tol.structure_check) {
    std::ostringstream os;
    os << what << " is not symmetric (residual " << asym << ")";
    throw StructureError(os.str());
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (a + a.transpose()));
  if (es.info() != Eigen::Success) {
    std::ostringstream os;
    os << "eigendecomposition of " << what << " failed";
    throw EigenvalueFailure(os.str());
  }
  const double lmin = es.eigenvalues().minCoeff();
  if (strict ? !(lmin > 0.0) : lmin < -tol.structure_check) {
    std::ostringstream os;
    os << what << (strict ? " is not positive definite" : " is not positive semidefinite")
       << " (min eigenvalue " << lmin << ")";
    throw StructureError(os.str());
  }
}

MatrixXd kron(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd k(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return k;
}

MatrixXd symmetrized(const MatrixXd& a) {
  MatrixXd s(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = i; j < a.cols(); ++j) {
      s(i, j) = 0.5 * (a(i, j) + a(j, i));
      s(j, i) = s(i, j);
    }
  }
  return s;
}

Eigen::VectorXcd general_eigenvalues(const MatrixXd& a, const char* what) {
  Eigen::EigenSolver<MatrixXd> es(a, false);
  if (es.info() != Eigen::Success) {
    std::ostringstream os;
    os << "eigensolver did not converge on " << what;
    throw EigenvalueFailure(os.str());
  }
  return es.eigenvalues();
}

// Solves the vectorized equation L vec(P) = -vec(Q) and checks the residual.
MatrixXd lyapunov_from_vectorized(const MatrixXd& L, const MatrixXd& Q,
                                  const char* what) {
  const Tolerances tol;
  const int N = static_cast<int>(Q.rows());
  const Eigen::Map<const VectorXd> qvec(Q.data(), N * N);
  Eigen::FullPivLU<MatrixXd> lu(L);
  if (!lu.isInvertible()) {
    std::ostringstream os;
    os << "vectorized " << what << " system is singular";
    throw SolveError(os.str());
  }
  const VectorXd pvec = lu.solve(-qvec);
  MatrixXd P = symmetrized(Eigen::Map<const MatrixXd>(pvec.data(), N, N));
  return P;
}

void check_residual(const MatrixXd& res, const MatrixXd& Q, const char* what) {
  const Tolerances tol;
  const double r = res.norm();
  if (r > tol.lyapunov_residual_rel * Q.norm()) {
    std::ostringstream os;
    os << what << " residual " << r << " exceeds " << tol.lyapunov_residual_rel
       << " of ||Q||";
    throw NumericalError(os.str());
  }
}

struct Transcription {
  MatrixXd A_d, B_d, Qs, Rs;
  int L = 0;
};

Transcription transcribe(const MPCProblem& prob) {
  require_sym_psd(prob.state_cost, "the state cost", false);
  require_sym_psd(prob.input_cost, "the input cost", true);
  const int N = prob.model.dim();
  Transcription tr;
  tr.A_d = MatrixXd::Identity(N, N) + prob.dt * (prob.model.K_J() - prob.model.K_R());
  tr.B_d = prob.dt * prob.model.K_u();
  tr.Qs = prob.dt * prob.state_cost;
  tr.Rs = prob.dt * prob.input_cost;
  tr.L = prob.steps();
  return tr;
}

// Backward Riccati sweep; gains[k] is the feedback for step k (u = -gain e).
std::vector<MatrixXd> riccati_gains(const Transcription& tr, const MatrixXd& P_T) {
  std::vector<MatrixXd> gains(tr.L);
  MatrixXd P = P_T;
  for (int k = tr.L - 1; k >= 0; --k) {
    const MatrixXd bp = tr.B_d.transpose() * P;
    const MatrixXd G = tr.Rs + bp * tr.B_d;
    Eigen::LLT<MatrixXd> llt(symmetrized(G));
    if (llt.info() != Eigen::Success)
      throw SolveError("Riccati input-weight block is not positive definite");
    gains[k] = llt.solve(bp * tr.A_d);
    const MatrixXd acl = tr.A_d - tr.B_d * gains[k];
    P = symmetrized(tr.Qs + gains[k].transpose() * tr.Rs * gains[k] +
                    acl.transpose() * P * acl);
  }
  return gains;
}

}  // namespace

DampingController::DampingController(MatrixXd K_d, InputSignal v_ext)
    : kd_(std::move(K_d)), vext_(std::move(v_ext)) {
  require_sym_psd(kd_, "the damping gain", false);
}

VectorXd DampingController::v_ext(double t) const {
  if (!vext_) return VectorXd::Zero(dim());
  VectorXd v = vext_(t);
  if (v.size() != dim()) throw DimensionError("external input has wrong size");
  return v;
}

VectorXd damping_input(const DampingController& c, const VectorXd& y, double t) {
  if (y.size() != c.dim()) throw DimensionError("output vector has wrong size");
  return -c.K_d() * y + c.v_ext(t);
}

MatrixXd closed_loop_matrix(const KpHModel& m, const MatrixXd& K_d) {
  if (K_d.rows() != m.inputs())
    throw DimensionError("damping gain does not match the input dimension");
  require_sym_psd(K_d, "the damping gain", false);
  return m.K_J() - m.K_R() - m.K_u() * K_d * m.K_u().transpose();
}

DetectabilityReport check_detectability(const MatrixXd& A, const MatrixXd& C,
                                        double tol) {
  if (A.rows() != A.cols()) throw DimensionError("system matrix must be square");
  if (C.cols() != A.cols())
    throw DimensionError("output matrix does not match the system dimension");
  if (!A.allFinite() || !C.allFinite())
    throw NumericalError("detectability check received non-finite matrices");
  const Tolerances tols;
  const int N = static_cast<int>(A.rows());
  const Eigen::VectorXcd lam = general_eigenvalues(A, "the closed-loop matrix");

  DetectabilityReport rep;
  rep.detectable = true;
  MatrixXcd stack(N + C.rows(), N);
  stack.bottomRows(C.rows()) = C.cast<std::complex<double>>();
  for (int i = 0; i < lam.size(); ++i) {
    if (lam(i).real() < -tol) continue;
    stack.topRows(N) =
        lam(i) * MatrixXcd::Identity(N, N) - A.cast<std::complex<double>>();
    Eigen::JacobiSVD<MatrixXcd> svd(stack);
    const auto& sv = svd.singularValues();
    const double cutoff = tols.rank_rel * sv(0);
    int rank = 0;
    for (int s = 0; s < sv.size(); ++s)
      if (sv(s) > cutoff) ++rank;
    if (rank < N) {
      rep.detectable = false;
      rep.offending_modes.push_back(lam(i));
    }
  }
  return rep;
}

MatrixXd solve_lyapunov_ct(const MatrixXd& A, const MatrixXd& Q) {
  if (A.rows() != A.cols()) throw DimensionError("system matrix must be square");
  if (Q.rows() != A.rows() || Q.cols() != A.cols())
    throw DimensionError("weight matrix does not match the system dimension");
  require_sym_psd(Q, "the Lyapunov weight", true);

  const Eigen::VectorXcd lam = general_eigenvalues(A, "the system matrix");
  const double maxre = lam.real().maxCoeff();
  if (maxre >= 0.0) {
    std::ostringstream os;
    os << "system matrix is not Hurwitz (max real part " << maxre << ")";
    throw NotHurwitzError(os.str());
  }

  const int N = static_cast<int>(A.rows());
  const MatrixXd I = MatrixXd::Identity(N, N);
  const MatrixXd L = kron(I, A.transpose()) + kron(A.transpose(), I);
  const MatrixXd P = lyapunov_from_vectorized(L, Q, "Lyapunov");
  check_residual(A.transpose() * P + P * A + Q, Q, "Lyapunov");
  return P;
}

MatrixXd solve_lyapunov_dt(const MatrixXd& A_d, const MatrixXd& Q) {
  if (A_d.rows() != A_d.cols()) throw DimensionError("system matrix must be square");
  if (Q.rows() != A_d.rows() || Q.cols() != A_d.cols())
    throw DimensionError("weight matrix does not match the system dimension");
  require_sym_psd(Q, "the Lyapunov weight", true);

  const Eigen::VectorXcd lam = general_eigenvalues(A_d, "the step matrix");
  const double rho = lam.cwiseAbs().maxCoeff();
  if (rho >= 1.0) {
    std::ostringstream os;
    os << "step matrix has spectral radius " << rho << " >= 1";
    throw NotSchurError(os.str());
  }

  const int N = static_cast<int>(A_d.rows());
  const MatrixXd L = kron(A_d.transpose(), A_d.transpose()) -
                     MatrixXd::Identity(N * N, N * N);
  const MatrixXd P = lyapunov_from_vectorized(L, Q, "discrete Lyapunov");
  check_residual(A_d.transpose() * P * A_d - P + Q, Q, "discrete Lyapunov");
  return P;
}

MPCProblem::MPCProblem(KpHModel model_, VectorXd psi_ref_, double horizon_,
                       double dt_, MatrixXd P_, MatrixXd Q_lyap_)
    : model(std::move(model_)),
      psi_ref(std::move(psi_ref_)),
      horizon(horizon_),
      dt(dt_),
      P(std::move(P_)),
      Q_lyap(std::move(Q_lyap_)) {
  const int N = model.dim();
  if (psi_ref.size() != N) throw DimensionError("reference has wrong size");
  if (!(dt > 0.0)) throw ConfigError("MPC requires dt > 0");
  if (horizon < dt) throw ConfigError("MPC horizon is shorter than one step");
  if (P.rows() != N || P.cols() != N)
    throw DimensionError("terminal weight has wrong size");
  require_sym_psd(P, "the terminal weight", false);
  if (Q_lyap.rows() != N || Q_lyap.cols() != N)
    throw DimensionError("terminal-inequality weight has wrong size");
  require_sym_psd(Q_lyap, "the terminal-inequality weight", true);
  state_cost = MatrixXd::Identity(N, N);
  input_cost = MatrixXd::Identity(model.inputs(), model.inputs());
}

int MPCProblem::steps() const {
  return static_cast<int>(std::max(1L, std::lround(horizon / dt)));
}

MPCSolution mpc_solve(const MPCProblem& prob, const VectorXd& psi0) {
  const int N = prob.model.dim(), m = prob.model.inputs();
  if (psi0.size() != N) throw DimensionError("initial lifted state has wrong size");
  const Transcription tr = transcribe(prob);
  const std::vector<MatrixXd> gains = riccati_gains(tr, prob.P);

  MPCSolution sol;
  sol.inputs.resize(m, tr.L);
  sol.states.resize(N, tr.L + 1);
  VectorXd e = psi0 - prob.psi_ref;
  sol.states.col(0) = psi0;
  double cost = 0.0;
  for (int k = 0; k < tr.L; ++k) {
    const VectorXd u = -gains[k] * e;
    sol.inputs.col(k) = u;
    cost += e.dot(tr.Qs * e) + u.dot(tr.Rs * u);
    e = tr.A_d * e + tr.B_d * u;
    sol.states.col(k + 1) = e + prob.psi_ref;
  }
  cost += e.dot(prob.P * e);
  sol.cost = cost;
  return sol;
}

MPCLoopResult mpc_closed_loop(const MPCProblem& prob, const VectorXd& psi0,
                              int n_steps) {
  const int N = prob.model.dim(), m = prob.model.inputs();
  if (psi0.size() != N) throw DimensionError("initial lifted state has wrong size");
  if (n_steps < 1) throw ConfigError("mpc_closed_loop requires n_steps >= 1");
  const Tolerances tol;
  const Transcription tr = transcribe(prob);

  const MatrixXd terminal =
      symmetrized(tr.A_d.transpose() * prob.P * tr.A_d - prob.P + prob.Q_lyap);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(terminal);
  if (es.info() != Eigen::Success)
    throw EigenvalueFailure("eigendecomposition of the terminal inequality failed");
  const double slack = es.eigenvalues().maxCoeff();
  if (slack > tol.certificate_rel) {
    std::ostringstream os;
    os << "terminal weight violates the discrete Lyapunov inequality (max eigenvalue "
       << slack << "); pick P from solve_lyapunov_dt";
    throw CertificateError(os.str());
  }

  MPCLoopResult res;
  res.trajectory.times.resize(n_steps + 1);
  res.trajectory.psis.resize(N, n_steps + 1);
  res.trajectory.inputs.resize(m, n_steps + 1);
  res.trajectory.outputs.resize(m, n_steps + 1);
  res.trajectory.storages.resize(n_steps + 1);
  res.optimal_costs.resize(n_steps + 1);
  res.lyapunov_values.resize(n_steps + 1);

  VectorXd psi = psi0;
  res.cost_monotone = true;
  for (int k = 0; k <= n_steps; ++k) {
    const MPCSolution sol = mpc_solve(prob, psi);
    const VectorXd e = psi - prob.psi_ref;
    const VectorXd u = k < n_steps ? VectorXd(sol.inputs.col(0)) : VectorXd::Zero(m);
    res.trajectory.times(k) = k * prob.dt;
    res.trajectory.psis.col(k) = psi;
    res.trajectory.inputs.col(k) = u;
    res.trajectory.outputs.col(k) = prob.model.K_u().transpose() * psi;
    res.trajectory.storages(k) = 0.5 * psi.squaredNorm();
    res.optimal_costs(k) = sol.cost;
    res.lyapunov_values(k) = e.dot(prob.P * e);
    if (k > 0) {
      const double prev = res.optimal_costs(k - 1);
      const double rise = sol.cost - prev;
      const double rel = rise / std::max(1.0, prev);
      res.max_cost_increase = std::max(res.max_cost_increase, rel);
      if (rel > tol.certificate_rel) res.cost_monotone = false;
    }
    // Roll the prediction model itself so the monotonicity certificate
    // speaks about one consistent system.
    if (k < n_steps) psi = prob.psi_ref + tr.A_d * e + tr.B_d * u;
  }
  if (!res.cost_monotone) {
    std::ostringstream os;
    os << "optimal cost increased by relative " << res.max_cost_increase
       << " along the loop";
    throw CertificateError(os.str());
  }
  return res;
}

}  // namespace kph
