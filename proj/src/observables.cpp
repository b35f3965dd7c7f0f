#include "kph/observables.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace kph {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.141592653589793238462643383279502884;

void require_point(const Dictionary& d, const VectorXd& x) {
  if (x.size() != d.n) {
    std::ostringstream os;
    os << "point has size " << x.size() << " but the dictionary has n = " << d.n;
    throw DimensionError(os.str());
  }
}

Dictionary with_free_domain(Dictionary d) {
  d.domain_lo = VectorXd::Constant(d.n, -kInf);
  d.domain_hi = VectorXd::Constant(d.n, kInf);
  return d;
}

double pow_int(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

}  // namespace

bool Dictionary::in_domain(const Eigen::VectorXd& x) const {
  if (x.size() != n) return false;
  for (int i = 0; i < n; ++i)
    if (x(i) < domain_lo(i) || x(i) > domain_hi(i)) return false;
  return true;
}

VectorXd eval_dictionary(const Dictionary& d, const VectorXd& x) {
  require_point(d, x);
  VectorXd psi = d.eval(x);
  if (psi.size() != d.N) throw DimensionError("dictionary eval returned wrong size");
  if (!psi.allFinite()) throw NumericalError("dictionary eval produced non-finite values");
  return psi;
}

GeneratorAction generator_action(const Dictionary& d, const PHSystem& sys,
                                 const VectorXd& x, bool check_structure) {
  require_point(d, x);
  if (d.n != sys.n) {
    std::ostringstream os;
    os << "dictionary dimension " << d.n << " does not match system dimension "
       << sys.n;
    throw DimensionError(os.str());
  }
  const MatrixXd jac = d.jac(x);
  if (jac.rows() != d.N || jac.cols() != d.n)
    throw DimensionError("dictionary jac returned wrong shape");
  const SubFields f = sub_fields(sys, x, check_structure);
  GeneratorAction a;
  a.kJ = jac * f.v_J;
  a.kR = jac * f.v_R;
  a.kU = jac * sys.G(x);
  if (!a.kJ.allFinite() || !a.kR.allFinite() || !a.kU.allFinite())
    throw NumericalError("generator action produced non-finite values");
  return a;
}

Dictionary identity_dictionary(int n) {
  if (n < 1) throw ConfigError("identity_dictionary requires n >= 1");
  Dictionary d;
  d.n = n;
  d.N = n;
  d.eval = [](const VectorXd& x) { return x; };
  d.jac = [n](const VectorXd&) { return MatrixXd::Identity(n, n).eval(); };
  for (int i = 0; i < n; ++i) d.labels.push_back("x" + std::to_string(i + 1));
  return with_free_domain(d);
}

Dictionary q_scaled_dictionary(const MatrixXd& Q) {
  if (Q.rows() != Q.cols() || Q.rows() < 1)
    throw DimensionError("q_scaled_dictionary requires a square matrix");
  const int n = static_cast<int>(Q.rows());
  Dictionary d;
  d.n = n;
  d.N = n;
  const MatrixXd Qc = Q;
  d.eval = [Qc](const VectorXd& x) -> VectorXd { return Qc * x; };
  d.jac = [Qc](const VectorXd&) { return Qc; };
  for (int i = 0; i < n; ++i) d.labels.push_back("q" + std::to_string(i + 1));
  return with_free_domain(d);
}

Dictionary pendulum_dictionary() {
  Dictionary d;
  d.n = 2;
  d.N = 4;
  d.eval = [](const VectorXd& x) {
    VectorXd psi(4);
    const double th = x(0), p = x(1);
    psi << std::sin(th), p, std::cos(th), 0.5 * p * p + (1.0 - std::cos(th));
    return psi;
  };
  d.jac = [](const VectorXd& x) {
    MatrixXd j(4, 2);
    const double th = x(0), p = x(1);
    j << std::cos(th), 0.0,
         0.0, 1.0,
         -std::sin(th), 0.0,
         std::sin(th), p;
    return j;
  };
  d.labels = {"sin_theta", "p", "cos_theta", "H"};
  d.domain_lo = VectorXd(2);
  d.domain_hi = VectorXd(2);
  d.domain_lo << -kPi, -2.0;
  d.domain_hi << kPi, 2.0;
  return d;
}

Dictionary polynomial_dictionary(int n, int degree, bool include_constant) {
  if (n < 1) throw ConfigError("polynomial_dictionary requires n >= 1");
  if (degree < 1) throw ConfigError("polynomial_dictionary requires degree >= 1");

  std::vector<std::vector<int>> exps;
  std::vector<int> cur(n, 0);
  // Grades in increasing order; within a grade, lexicographic with the first
  // coordinate's exponent decreasing.
  std::function<void(int, int)> emit = [&](int pos, int remaining) {
    if (pos == n - 1) {
      cur[pos] = remaining;
      exps.push_back(cur);
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      cur[pos] = e;
      emit(pos + 1, remaining - e);
    }
  };
  for (int g = include_constant ? 0 : 1; g <= degree; ++g) emit(0, g);

  Dictionary d;
  d.n = n;
  d.N = static_cast<int>(exps.size());
  for (const auto& a : exps) {
    std::string lab;
    for (int i = 0; i < n; ++i) {
      if (a[i] == 0) continue;
      if (!lab.empty()) lab += "*";
      lab += "x" + std::to_string(i + 1);
      if (a[i] > 1) lab += "^" + std::to_string(a[i]);
    }
    if (lab.empty()) lab = "1";
    d.labels.push_back(lab);
  }
  d.eval = [exps, n](const VectorXd& x) {
    VectorXd psi(static_cast<int>(exps.size()));
    for (std::size_t k = 0; k < exps.size(); ++k) {
      double v = 1.0;
      for (int i = 0; i < n; ++i) v *= pow_int(x(i), exps[k][i]);
      psi(static_cast<int>(k)) = v;
    }
    return psi;
  };
  d.jac = [exps, n](const VectorXd& x) {
    MatrixXd j = MatrixXd::Zero(static_cast<int>(exps.size()), n);
    for (std::size_t k = 0; k < exps.size(); ++k) {
      for (int i = 0; i < n; ++i) {
        if (exps[k][i] == 0) continue;
        double v = static_cast<double>(exps[k][i]) * pow_int(x(i), exps[k][i] - 1);
        for (int l = 0; l < n; ++l)
          if (l != i) v *= pow_int(x(l), exps[k][l]);
        j(static_cast<int>(k), i) = v;
      }
    }
    return j;
  };
  return with_free_domain(d);
}

Dictionary gaussian_rbf_dictionary(const std::vector<VectorXd>& centers, double width) {
  if (centers.empty()) throw ConfigError("gaussian_rbf_dictionary requires at least one center");
  if (!(width > 0.0)) throw ConfigError("gaussian_rbf_dictionary requires width > 0");
  const int n = static_cast<int>(centers.front().size());
  for (const auto& c : centers)
    if (c.size() != n) throw DimensionError("rbf centers have inconsistent dimensions");

  Dictionary d;
  d.n = n;
  d.N = static_cast<int>(centers.size());
  const double inv2w2 = 1.0 / (2.0 * width * width);
  const double invw2 = 1.0 / (width * width);
  d.eval = [centers, inv2w2](const VectorXd& x) {
    VectorXd psi(static_cast<int>(centers.size()));
    for (std::size_t k = 0; k < centers.size(); ++k)
      psi(static_cast<int>(k)) = std::exp(-(x - centers[k]).squaredNorm() * inv2w2);
    return psi;
  };
  d.jac = [centers, inv2w2, invw2, n](const VectorXd& x) {
    MatrixXd j(static_cast<int>(centers.size()), n);
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const double v = std::exp(-(x - centers[k]).squaredNorm() * inv2w2);
      j.row(static_cast<int>(k)) = (-invw2 * v) * (x - centers[k]).transpose();
    }
    return j;
  };
  for (std::size_t k = 0; k < centers.size(); ++k)
    d.labels.push_back("rbf" + std::to_string(k + 1));
  return with_free_domain(d);
}

}  // namespace kph
