#pragma once

// Slow reference implementations the tests compare against.  Everything here
// is written with plain loops and naive accumulation so it shares no code
// path with the library.

#include <Eigen/Dense>

#include "kph/galerkin.hpp"
#include "kph/observables.hpp"
#include "kph/ph_model.hpp"

namespace oracles {

struct NaiveProjection {
  Eigen::MatrixXd M;
  Eigen::MatrixXd A_J;
  Eigen::MatrixXd A_R;
  Eigen::MatrixXd A_u;
};

// Direct double loop over samples and matrix entries.
inline NaiveProjection naive_projection(const kph::Dictionary& d,
                                        const kph::PHSystem& sys,
                                        const kph::SampleSet& s) {
  const int N = d.N;
  const int m = sys.m;
  NaiveProjection out;
  out.M = Eigen::MatrixXd::Zero(N, N);
  out.A_J = Eigen::MatrixXd::Zero(N, N);
  out.A_R = Eigen::MatrixXd::Zero(N, N);
  out.A_u = Eigen::MatrixXd::Zero(N, m);

  for (int k = 0; k < s.size(); ++k) {
    const Eigen::VectorXd x = s.points().col(k);
    const double w = s.weights()(k);
    const Eigen::VectorXd psi = d.eval(x);
    const Eigen::MatrixXd jac = d.jac(x);
    const kph::SubFields f = kph::sub_fields(sys, x);
    const Eigen::VectorXd kJ = jac * f.v_J;
    const Eigen::MatrixXd R = sys.R(x);
    const Eigen::MatrixXd G = sys.G(x);
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) {
        out.M(i, j) += w * psi(i) * psi(j);
        out.A_J(i, j) += w * kJ(i) * psi(j);
        out.A_R(i, j) += w * jac.row(i).dot(R * jac.row(j).transpose());
      }
      for (int j = 0; j < m; ++j)
        out.A_u(i, j) += w * jac.row(i).dot(G.col(j));
    }
  }
  return out;
}

struct BatchMPC {
  Eigen::MatrixXd inputs;  // m x L
  double cost = 0.0;
};

// Condensed finite-horizon LQ solve: stack the predicted states, minimize the
// quadratic in the stacked inputs directly.
inline BatchMPC batch_mpc_oracle(const Eigen::MatrixXd& A_d,
                                 const Eigen::MatrixXd& B_d,
                                 const Eigen::MatrixXd& Qs,
                                 const Eigen::MatrixXd& Rs,
                                 const Eigen::MatrixXd& P, int L,
                                 const Eigen::VectorXd& e0) {
  const int N = static_cast<int>(A_d.rows());
  const int m = static_cast<int>(B_d.cols());

  Eigen::MatrixXd Sx = Eigen::MatrixXd::Zero(N * L, N);
  Eigen::MatrixXd Su = Eigen::MatrixXd::Zero(N * L, m * L);
  Eigen::MatrixXd Ak = Eigen::MatrixXd::Identity(N, N);
  for (int k = 0; k < L; ++k) {
    Ak = A_d * Ak;  // A^{k+1}
    Sx.block(k * N, 0, N, N) = Ak;
    Eigen::MatrixXd AjB = B_d;
    for (int j = k; j >= 0; --j) {
      Su.block(k * N, j * m, N, m) = AjB;
      AjB = A_d * AjB;
    }
  }

  Eigen::MatrixXd Qbar = Eigen::MatrixXd::Zero(N * L, N * L);
  for (int k = 0; k + 1 < L; ++k) Qbar.block(k * N, k * N, N, N) = Qs;
  Qbar.block((L - 1) * N, (L - 1) * N, N, N) = P;
  Eigen::MatrixXd Rbar = Eigen::MatrixXd::Zero(m * L, m * L);
  for (int k = 0; k < L; ++k) Rbar.block(k * m, k * m, m, m) = Rs;

  const Eigen::MatrixXd H = Su.transpose() * Qbar * Su + Rbar;
  const Eigen::VectorXd f = Su.transpose() * Qbar * (Sx * e0);
  const Eigen::VectorXd U = -H.ldlt().solve(f);

  BatchMPC out;
  out.inputs.resize(m, L);
  for (int k = 0; k < L; ++k) out.inputs.col(k) = U.segment(k * m, m);
  const Eigen::VectorXd X = Sx * e0 + Su * U;
  out.cost = e0.dot(Qs * e0) + X.dot(Qbar * X) + U.dot(Rbar * U);
  return out;
}

}  // namespace oracles
