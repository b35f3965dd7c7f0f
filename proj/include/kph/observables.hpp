#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "kph/ph_model.hpp"

namespace kph {

// Observable dictionary psi : R^n -> R^N.  jac(x) stacks the gradients, row i
// holding grad(psi_i)^T.  The domain is a declared bounding box; evaluating
// outside it is legal and is only surfaced by in_domain diagnostics.
struct Dictionary {
  int n = 0;
  int N = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> eval;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jac;
  std::vector<std::string> labels;
  Eigen::VectorXd domain_lo;
  Eigen::VectorXd domain_hi;

  bool in_domain(const Eigen::VectorXd& x) const;
};

// Action of the drift and port fields on every dictionary entry at one state:
//   kJ_i = grad(psi_i)^T J grad H,  kR_i = grad(psi_i)^T R grad H,
//   kU_{ij} = grad(psi_i)^T g_j.
struct GeneratorAction {
  Eigen::VectorXd kJ;
  Eigen::VectorXd kR;
  Eigen::MatrixXd kU;
};

Eigen::VectorXd eval_dictionary(const Dictionary& d, const Eigen::VectorXd& x);
GeneratorAction generator_action(const Dictionary& d, const PHSystem& sys,
                                 const Eigen::VectorXd& x,
                                 bool check_structure = true);

Dictionary identity_dictionary(int n);
Dictionary q_scaled_dictionary(const Eigen::MatrixXd& Q);

// [sin(theta), p, cos(theta), H] on the box [-pi, pi] x [-2, 2].
Dictionary pendulum_dictionary();

// All monomials of total degree 1..degree (graded order, lexicographic within
// a grade).  The constant observable is excluded unless include_constant is
// set: it spans the kernel of every generator and only degrades the Gram
// conditioning.
Dictionary polynomial_dictionary(int n, int degree, bool include_constant = false);

Dictionary gaussian_rbf_dictionary(const std::vector<Eigen::VectorXd>& centers,
                                   double width);

}  // namespace kph
