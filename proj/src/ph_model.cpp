#include "kph/ph_model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

namespace kph {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

void require_state(const PHSystem& sys, const VectorXd& x) {
  if (x.size() != sys.n) {
    std::ostringstream os;
    os << "state has size " << x.size() << " but the system has n = " << sys.n;
    throw DimensionError(os.str());
  }
}

void require_square(const MatrixXd& a, int n, const char* name) {
  if (a.rows() != n || a.cols() != n) {
    std::ostringstream os;
    os << name << " is " << a.rows() << "x" << a.cols() << ", expected " << n
       << "x" << n;
    throw DimensionError(os.str());
  }
}

void check_interconnection(const MatrixXd& J, double tol) {
  const double res = (J + J.transpose()).cwiseAbs().maxCoeff();
  if (res > tol) {
    std::ostringstream os;
    os << "J skewness residual " << res << " exceeds " << tol;
    throw StructureError(os.str());
  }
}

void check_dissipation(const MatrixXd& R, double tol) {
  const double sym = (R - R.transpose()).cwiseAbs().maxCoeff();
  if (sym > tol) {
    std::ostringstream os;
    os << "R symmetry residual " << sym << " exceeds " << tol;
    throw StructureError(os.str());
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (R + R.transpose()),
                                             Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw EigenvalueFailure("eigendecomposition of R failed");
  const double mineig = es.eigenvalues().minCoeff();
  if (mineig < -tol) {
    std::ostringstream os;
    os << "R has eigenvalue " << mineig << " below -" << tol;
    throw StructureError(os.str());
  }
}

}  // namespace

PHSystem pendulum(double damping) {
  if (damping < 0.0) {
    std::ostringstream os;
    os << "pendulum damping must be nonnegative, got " << damping;
    throw ConfigError(os.str());
  }
  PHSystem sys;
  sys.n = 2;
  sys.m = 1;
  MatrixXd J(2, 2), R(2, 2), G(2, 1);
  J << 0.0, 1.0, -1.0, 0.0;
  R << 0.0, 0.0, 0.0, damping;
  G << 0.0, 1.0;
  sys.J = [J](const VectorXd&) { return J; };
  sys.R = [R](const VectorXd&) { return R; };
  sys.G = [G](const VectorXd&) { return G; };
  sys.H = [](const VectorXd& x) { return 0.5 * x(1) * x(1) + (1.0 - std::cos(x(0))); };
  sys.gradH = [](const VectorXd& x) {
    VectorXd g(2);
    g << std::sin(x(0)), x(1);
    return g;
  };
  sys.hessH = [](const VectorXd& x) {
    MatrixXd h(2, 2);
    h << std::cos(x(0)), 0.0, 0.0, 1.0;
    return h;
  };
  return sys;
}

LinearPHSystem linear_ph(const MatrixXd& J, const MatrixXd& R, const MatrixXd& G,
                         const MatrixXd& Q) {
  const int n = static_cast<int>(J.rows());
  require_square(J, n, "J");
  require_square(R, n, "R");
  require_square(Q, n, "Q");
  if (G.rows() != n) {
    std::ostringstream os;
    os << "G has " << G.rows() << " rows, expected " << n;
    throw DimensionError(os.str());
  }
  const Tolerances tol;
  check_interconnection(J, tol.structure_check);
  check_dissipation(R, tol.structure_check);
  const double qsym = (Q - Q.transpose()).cwiseAbs().maxCoeff();
  if (qsym > tol.structure_check) {
    std::ostringstream os;
    os << "Q symmetry residual " << qsym << " exceeds " << tol.structure_check;
    throw StructureError(os.str());
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (Q + Q.transpose()),
                                             Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw EigenvalueFailure("eigendecomposition of Q failed");
  if (es.eigenvalues().minCoeff() <= 0.0) {
    std::ostringstream os;
    os << "Q must be positive definite, min eigenvalue " << es.eigenvalues().minCoeff();
    throw StructureError(os.str());
  }
  return LinearPHSystem{J, R, G, Q};
}

PHSystem LinearPHSystem::as_system() const {
  PHSystem sys;
  sys.n = static_cast<int>(J.rows());
  sys.m = static_cast<int>(G.cols());
  const MatrixXd Jc = J, Rc = R, Gc = G, Qc = Q;
  sys.J = [Jc](const VectorXd&) { return Jc; };
  sys.R = [Rc](const VectorXd&) { return Rc; };
  sys.G = [Gc](const VectorXd&) { return Gc; };
  sys.H = [Qc](const VectorXd& x) { return 0.5 * x.dot(Qc * x); };
  sys.gradH = [Qc](const VectorXd& x) -> VectorXd { return Qc * x; };
  sys.hessH = [Qc](const VectorXd&) { return Qc; };
  return sys;
}

InputSignal zero_input(int m) {
  return [m](double) { return VectorXd::Zero(m).eval(); };
}

InputSignal constant_input(const VectorXd& u) {
  return [u](double) { return u; };
}

SubFields sub_fields(const PHSystem& sys, const VectorXd& x, bool check_structure) {
  require_state(sys, x);
  const Tolerances tol;
  const MatrixXd J = sys.J(x);
  const MatrixXd R = sys.R(x);
  require_square(J, sys.n, "J(x)");
  require_square(R, sys.n, "R(x)");
  if (check_structure) {
    check_interconnection(J, tol.structure_check);
    check_dissipation(R, tol.structure_check);
  }
  const VectorXd g = sys.gradH(x);
  if (g.size() != sys.n) throw DimensionError("gradH(x) has wrong size");
  SubFields f;
  f.v_J = J * g;
  f.v_R = R * g;
  if (!f.v_J.allFinite() || !f.v_R.allFinite())
    throw NumericalError("sub-field evaluation produced non-finite values");
  return f;
}

VectorXd drift(const PHSystem& sys, const VectorXd& x, bool check_structure) {
  const SubFields f = sub_fields(sys, x, check_structure);
  return f.v_J - f.v_R;
}

VectorXd output(const PHSystem& sys, const VectorXd& x) {
  require_state(sys, x);
  const MatrixXd G = sys.G(x);
  if (G.rows() != sys.n || G.cols() != sys.m)
    throw DimensionError("G(x) has wrong shape");
  const VectorXd y = G.transpose() * sys.gradH(x);
  if (!y.allFinite()) throw NumericalError("output evaluation produced non-finite values");
  return y;
}

double energy_rate(const PHSystem& sys, const VectorXd& x, const VectorXd& u,
                   bool check_structure) {
  require_state(sys, x);
  if (u.size() != sys.m) {
    std::ostringstream os;
    os << "input has size " << u.size() << " but the system has m = " << sys.m;
    throw DimensionError(os.str());
  }
  const MatrixXd R = sys.R(x);
  if (check_structure) check_dissipation(R, Tolerances{}.structure_check);
  const VectorXd g = sys.gradH(x);
  const VectorXd y = output(sys, x);
  const double rate = y.dot(u) - g.dot(R * g);
  if (!std::isfinite(rate)) throw NumericalError("energy rate is non-finite");
  return rate;
}

Trajectory simulate(const PHSystem& sys, const VectorXd& x0, const InputSignal& u,
                    double t_end, double dt, bool check_structure) {
  require_state(sys, x0);
  if (!(dt > 0.0)) throw ConfigError("simulate requires dt > 0");
  if (!(t_end > 0.0)) throw ConfigError("simulate requires t_end > 0");
  const long steps = std::max(1l, std::lround(t_end / dt));
  const Tolerances tol;

  auto eval_u = [&](double t) {
    VectorXd ut = u(t);
    if (ut.size() != sys.m) throw DimensionError("input signal has wrong size");
    return ut;
  };
  auto f = [&](const VectorXd& x, double t) -> VectorXd {
    return drift(sys, x, check_structure) + sys.G(x) * eval_u(t);
  };

  Trajectory tr;
  tr.times.resize(steps + 1);
  tr.states.resize(sys.n, steps + 1);
  tr.inputs.resize(sys.m, steps + 1);
  tr.outputs.resize(sys.m, steps + 1);
  tr.energies.resize(steps + 1);

  VectorXd x = x0;
  for (long k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    tr.times(k) = t;
    tr.states.col(k) = x;
    tr.inputs.col(k) = eval_u(t);
    tr.outputs.col(k) = output(sys, x);
    tr.energies(k) = sys.H(x);
    if (k == steps) break;

    const VectorXd k1 = f(x, t);
    const VectorXd k2 = f(x + (0.5 * dt) * k1, t + 0.5 * dt);
    const VectorXd k3 = f(x + (0.5 * dt) * k2, t + 0.5 * dt);
    const VectorXd k4 = f(x + dt * k3, t + dt);
    x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite() || x.norm() > tol.blowup_norm) {
      std::ostringstream os;
      os << "simulation diverged at t = " << t + dt << " (norm above "
         << tol.blowup_norm << ")";
      throw NumericalError(os.str());
    }
  }
  return tr;
}

}  // namespace kph
