#pragma once

#include <Eigen/Dense>
#include <functional>

#include "kph/errors.hpp"
#include "kph/tolerances.hpp"

namespace kph {

using MatrixMap = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;
using VectorMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using ScalarMap = std::function<double(const Eigen::VectorXd&)>;
using InputSignal = std::function<Eigen::VectorXd(double)>;

// Input-state-output system
//   x' = (J(x) - R(x)) grad H(x) + G(x) u,   y = G(x)^T grad H(x),
// with J skew-symmetric and R symmetric positive semidefinite.  Both
// properties are checked lazily wherever J or R is evaluated; callers can
// disable the check per call.
struct PHSystem {
  int n = 0;
  int m = 0;
  MatrixMap J;
  MatrixMap R;
  MatrixMap G;
  ScalarMap H;
  VectorMap gradH;
  MatrixMap hessH;  // optional, used only by diagnostics
};

struct SubFields {
  Eigen::VectorXd v_J;  // J grad H, conservative part
  Eigen::VectorXd v_R;  // R grad H, dissipative part
};

struct Trajectory {
  Eigen::VectorXd times;     // uniform grid, strictly increasing
  Eigen::MatrixXd states;    // n x (steps+1)
  Eigen::MatrixXd inputs;    // m x (steps+1)
  Eigen::MatrixXd outputs;   // m x (steps+1)
  Eigen::VectorXd energies;  // H along the grid
};

// Constant-coefficient special case x' = (J - R) Q x + G u with quadratic
// energy H(x) = x^T Q x / 2.
struct LinearPHSystem {
  Eigen::MatrixXd J, R, G, Q;
  PHSystem as_system() const;
};

// Planar pendulum with momentum damping: x = (theta, p),
// H = p^2/2 + 1 - cos(theta), G = (0, 1)^T.
PHSystem pendulum(double damping);

LinearPHSystem linear_ph(const Eigen::MatrixXd& J, const Eigen::MatrixXd& R,
                         const Eigen::MatrixXd& G, const Eigen::MatrixXd& Q);

InputSignal zero_input(int m);
InputSignal constant_input(const Eigen::VectorXd& u);

// v_J and v_R evaluated at x; drift(x) is exactly v_J - v_R.
SubFields sub_fields(const PHSystem& sys, const Eigen::VectorXd& x,
                     bool check_structure = true);
Eigen::VectorXd drift(const PHSystem& sys, const Eigen::VectorXd& x,
                      bool check_structure = true);
Eigen::VectorXd output(const PHSystem& sys, const Eigen::VectorXd& x);

// dH/dt along solutions: y^T u - grad H^T R grad H.
double energy_rate(const PHSystem& sys, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& u, bool check_structure = true);

// Classical fixed-step fourth-order Runge-Kutta on a uniform grid.  t_end is
// rounded to the nearest whole number of steps.  Aborts with NumericalError
// once the state norm passes the blow-up threshold.
Trajectory simulate(const PHSystem& sys, const Eigen::VectorXd& x0,
                    const InputSignal& u, double t_end, double dt,
                    bool check_structure = true);

}  // namespace kph
