#include "kph/galerkin.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include "kph/numerics.hpp"

namespace kph {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Per-entry pairwise accumulation for a streamed matrix sum.
class MatAccum {
 public:
  MatAccum(int rows, int cols)
      : rows_(rows), cols_(cols), cells_(static_cast<std::size_t>(rows) * cols) {}
  void add(int i, int j, double v) { cells_[static_cast<std::size_t>(i) * cols_ + j].add(v); }
  MatrixXd total() const {
    MatrixXd a(rows_, cols_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j)
        a(i, j) = cells_[static_cast<std::size_t>(i) * cols_ + j].total();
    return a;
  }

 private:
  int rows_, cols_;
  std::vector<PairwiseAccumulator> cells_;
};

void mirror_upper(MatrixXd& a) {
  for (int i = 0; i < a.rows(); ++i)
    for (int j = i + 1; j < a.cols(); ++j) a(j, i) = a(i, j);
}

// Skew part materialised from the strict lower triangle, so K + K^T is zero
// entry by entry, not merely small.
MatrixXd exact_skew_part(const MatrixXd& a) {
  const int N = static_cast<int>(a.rows());
  MatrixXd k = MatrixXd::Zero(N, N);
  for (int i = 0; i < N; ++i) {
    for (int j = i + 1; j < N; ++j) {
      const double l = 0.5 * (a(i, j) - a(j, i));
      k(i, j) = l;
      k(j, i) = -l;
    }
  }
  return k;
}

Eigen::SelfAdjointEigenSolver<MatrixXd> sym_eig(const MatrixXd& s, const char* what) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(s);
  if (es.info() != Eigen::Success) {
    std::ostringstream os;
    os << "eigendecomposition of " << what << " failed";
    throw EigenvalueFailure(os.str());
  }
  return es;
}

double gram_condition_or_throw(const MatrixXd& M) {
  const Tolerances tol;
  auto es = sym_eig(M, "the Gram matrix");
  const double lmin = es.eigenvalues().minCoeff();
  const double lmax = es.eigenvalues().maxCoeff();
  if (!(lmin > 0.0)) {
    std::ostringstream os;
    os << "Gram matrix is singular (min eigenvalue " << lmin << ")";
    throw SingularGramError(os.str());
  }
  const double cond = lmax / lmin;
  if (cond > tol.gram_condition_max) {
    std::ostringstream os;
    os << "Gram condition " << cond << " exceeds " << tol.gram_condition_max
       << "; enlarge or rebalance the sample set or shrink the dictionary";
    throw SingularGramError(os.str());
  }
  return cond;
}

void require_compatible(const Dictionary& d, const PHSystem& sys, const SampleSet& s) {
  if (d.n != sys.n)
    throw DimensionError("dictionary and system disagree on the state dimension");
  if (s.dim() != sys.n)
    throw DimensionError("sample set and system disagree on the state dimension");
  if (s.size() < d.N) {
    std::ostringstream os;
    os << "sample set has " << s.size() << " points but the dictionary has N = "
       << d.N << "; the Gram matrix would be singular";
    throw SingularGramError(os.str());
  }
}

}  // namespace

SampleSet::SampleSet(MatrixXd points, VectorXd weights) {
  if (points.cols() != weights.size())
    throw DimensionError("sample points and weights have different counts");
  if (points.cols() == 0) throw ConfigError("sample set is empty");
  int kept = 0;
  for (int k = 0; k < weights.size(); ++k) {
    if (weights(k) < 0.0) {
      std::ostringstream os;
      os << "sample weight " << weights(k) << " at index " << k << " is negative";
      throw ConfigError(os.str());
    }
    if (weights(k) > 0.0) ++kept;
  }
  if (kept == 0) throw ConfigError("all sample weights are zero");
  points_.resize(points.rows(), kept);
  weights_.resize(kept);
  int c = 0;
  for (int k = 0; k < weights.size(); ++k) {
    if (weights(k) == 0.0) continue;
    points_.col(c) = points.col(k);
    weights_(c) = weights(k);
    ++c;
  }
  PairwiseAccumulator acc;
  for (int k = 0; k < weights_.size(); ++k) acc.add(weights_(k));
  const double sum = acc.total();
  if (std::abs(sum - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "sample weights sum to " << sum << ", expected 1 within 1e-12";
    throw ConfigError(os.str());
  }
}

SampleSet SampleSet::uniform(MatrixXd points) {
  const int k = static_cast<int>(points.cols());
  if (k == 0) throw ConfigError("sample set is empty");
  return SampleSet(std::move(points), VectorXd::Constant(k, 1.0 / k));
}

SampleSet grid_samples(const VectorXd& lo, const VectorXd& hi,
                       const std::vector<int>& per_axis) {
  const int n = static_cast<int>(lo.size());
  if (hi.size() != n || static_cast<int>(per_axis.size()) != n)
    throw DimensionError("grid bounds and axis counts have inconsistent sizes");
  long total = 1;
  for (int i = 0; i < n; ++i) {
    if (per_axis[i] < 1) throw ConfigError("grid needs at least one node per axis");
    if (!(lo(i) <= hi(i))) throw ConfigError("grid has lo > hi on some axis");
    total *= per_axis[i];
  }
  MatrixXd pts(n, total);
  std::vector<int> idx(n, 0);
  for (long k = 0; k < total; ++k) {
    for (int i = 0; i < n; ++i) {
      pts(i, k) = per_axis[i] == 1
                      ? 0.5 * (lo(i) + hi(i))
                      : lo(i) + idx[i] * (hi(i) - lo(i)) / (per_axis[i] - 1);
    }
    for (int i = n - 1; i >= 0; --i) {
      if (++idx[i] < per_axis[i]) break;
      idx[i] = 0;
    }
  }
  return SampleSet::uniform(std::move(pts));
}

SampleSet monte_carlo_samples(const VectorXd& lo, const VectorXd& hi, int count,
                              std::uint64_t seed) {
  const int n = static_cast<int>(lo.size());
  if (hi.size() != n) throw DimensionError("sample bounds have inconsistent sizes");
  if (count < 1) throw ConfigError("monte_carlo_samples requires count >= 1");
  Rng rng(seed);
  MatrixXd pts(n, count);
  for (int k = 0; k < count; ++k)
    for (int i = 0; i < n; ++i) pts(i, k) = rng.uniform(lo(i), hi(i));
  return SampleSet::uniform(std::move(pts));
}

SampleSet trajectory_samples(const Trajectory& tr, int stride) {
  if (stride < 1) throw ConfigError("trajectory_samples requires stride >= 1");
  const long cols = tr.states.cols();
  if (cols == 0) throw ConfigError("trajectory has no states");
  const long kept = (cols - 1) / stride + 1;
  MatrixXd pts(tr.states.rows(), kept);
  for (long k = 0; k < kept; ++k) pts.col(k) = tr.states.col(k * stride);
  return SampleSet::uniform(std::move(pts));
}

SampleSet isotropize(const SampleSet& s) {
  const int n = s.dim();
  MatrixXd sm = MatrixXd::Zero(n, n);
  for (int k = 0; k < s.size(); ++k) {
    const VectorXd x = s.points().col(k);
    const double w = s.weights()(k);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) sm(i, j) += w * x(i) * x(j);
  }
  mirror_upper(sm);
  auto es = sym_eig(sm, "the sample second moment");
  if (!(es.eigenvalues().minCoeff() > 0.0))
    throw SingularGramError("sample second moment is singular; points do not span the state space");
  const MatrixXd t = es.eigenvectors() *
                     es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                     es.eigenvectors().transpose();
  return SampleSet(t * s.points(), s.weights());
}

RawProjection raw_projection(const Dictionary& d, const PHSystem& sys,
                             const SampleSet& s, bool check_structure) {
  require_compatible(d, sys, s);
  const int N = d.N, m = sys.m;
  MatAccum accM(N, N), accJ(N, N), accR(N, N), accU(N, m);

  for (int k = 0; k < s.size(); ++k) {
    const VectorXd x = s.points().col(k);
    const double w = s.weights()(k);
    const VectorXd psi = eval_dictionary(d, x);
    const MatrixXd jac = d.jac(x);
    if (jac.rows() != N || jac.cols() != d.n)
      throw DimensionError("dictionary jac returned wrong shape");
    const SubFields f = sub_fields(sys, x, check_structure);
    const VectorXd kJ = jac * f.v_J;
    const MatrixXd jr = jac * sys.R(x);  // rows: grad psi_i^T R
    const MatrixXd gu = jac * sys.G(x);
    for (int i = 0; i < N; ++i) {
      for (int j = i; j < N; ++j) {
        accM.add(i, j, w * psi(i) * psi(j));
        accR.add(i, j, w * jr.row(i).dot(jac.row(j)));
      }
      for (int j = 0; j < N; ++j) accJ.add(i, j, w * kJ(i) * psi(j));
      for (int j = 0; j < m; ++j) accU.add(i, j, w * gu(i, j));
    }
  }

  RawProjection rp;
  rp.M = accM.total();
  rp.A_R = accR.total();
  mirror_upper(rp.M);
  mirror_upper(rp.A_R);
  rp.A_J = accJ.total();
  rp.A_u = accU.total();
  gram_condition_or_throw(rp.M);
  return rp;
}

Whitened whiten(const RawProjection& rp) {
  Whitened w;
  w.gram_condition = gram_condition_or_throw(rp.M);
  auto es = sym_eig(rp.M, "the Gram matrix");
  w.T = es.eigenvectors() *
        es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
        es.eigenvectors().transpose();
  w.rp.M = w.T * rp.M * w.T.transpose();
  w.rp.A_J = w.T * rp.A_J * w.T.transpose();
  w.rp.A_R = w.T * rp.A_R * w.T.transpose();
  mirror_upper(w.rp.A_R);
  w.rp.A_u = w.T * rp.A_u;
  return w;
}

Enforced enforce_structure(const MatrixXd& A_J, const MatrixXd& A_R) {
  const int N = static_cast<int>(A_J.rows());
  if (A_J.cols() != N || A_R.rows() != N || A_R.cols() != N)
    throw DimensionError("enforce_structure expects square blocks of equal size");

  Enforced e;
  e.K_J = exact_skew_part(A_J);
  e.kj_distance = (A_J - e.K_J).norm();

  MatrixXd sym(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = i; j < N; ++j) sym(i, j) = 0.5 * (A_R(i, j) + A_R(j, i));
  mirror_upper(sym);
  auto es = sym_eig(sym, "the dissipation block");
  VectorXd vals = es.eigenvalues().cwiseMax(0.0);
  e.kr_eigenvalues = vals;
  e.kr_factor = es.eigenvectors() * vals.cwiseSqrt().asDiagonal();
  e.K_R.resize(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = i; j < N; ++j) e.K_R(i, j) = e.kr_factor.row(i).dot(e.kr_factor.row(j));
  mirror_upper(e.K_R);
  e.kr_distance = (A_R - e.K_R).norm();
  return e;
}

SkewPsdSplit split_skew_psd(const MatrixXd& K, double tol) {
  const int N = static_cast<int>(K.rows());
  if (K.cols() != N) throw DimensionError("split_skew_psd expects a square matrix");
  SkewPsdSplit sp;
  sp.K_J = exact_skew_part(K);

  MatrixXd sym(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = i; j < N; ++j) sym(i, j) = 0.5 * (K(i, j) + K(j, i));
  mirror_upper(sym);
  auto es = sym_eig(sym, "the symmetric part");
  const double maxeig = es.eigenvalues().maxCoeff();
  if (maxeig > tol) {
    std::ostringstream os;
    os << "symmetric part has eigenvalue " << maxeig << " above " << tol
       << "; the generator is not dissipative";
    throw NotDissipativeError(os.str());
  }
  // K_R = -sym with the slightly positive eigenvalues of sym clipped away.
  const VectorXd vals = (-es.eigenvalues()).cwiseMax(0.0);
  const MatrixXd b = es.eigenvectors() * vals.cwiseSqrt().asDiagonal();
  sp.K_R.resize(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = i; j < N; ++j) sp.K_R(i, j) = b.row(i).dot(b.row(j));
  mirror_upper(sp.K_R);
  return sp;
}

KpHModel KpHModel::structured(std::shared_ptr<const Dictionary> dict,
                              const MatrixXd& T, const Enforced& parts,
                              const MatrixXd& K_u, StructureReport report) {
  KpHModel m;
  m.kj_ = parts.K_J;
  m.kr_ = parts.K_R;
  m.kr_factor_ = parts.kr_factor;
  m.ku_ = K_u;
  m.t_ = T;
  m.dict_ = std::move(dict);
  m.structured_ = true;
  report.kj_skew_residual = (m.kj_ + m.kj_.transpose()).norm();
  report.kr_min_eig = parts.kr_eigenvalues.minCoeff();
  m.report_ = report;
  return m;
}

KpHModel KpHModel::unstructured(std::shared_ptr<const Dictionary> dict,
                                const MatrixXd& K, const MatrixXd& K_u,
                                double gram_condition) {
  const int N = static_cast<int>(K.rows());
  if (K.cols() != N) throw DimensionError("generator matrix must be square");
  KpHModel m;
  m.kj_ = exact_skew_part(K);
  m.kr_.resize(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = i; j < N; ++j) m.kr_(i, j) = -0.5 * (K(i, j) + K(j, i));
  mirror_upper(m.kr_);
  m.ku_ = K_u;
  m.t_ = MatrixXd::Identity(N, N);
  m.dict_ = std::move(dict);
  m.structured_ = false;
  StructureReport rep;
  rep.kj_skew_residual = (m.kj_ + m.kj_.transpose()).norm();
  rep.gram_condition = gram_condition;
  rep.pre_skew_residual = (K + K.transpose()).norm();
  auto es = sym_eig(m.kr_, "the dissipative part");
  rep.kr_min_eig = es.eigenvalues().minCoeff();
  m.report_ = rep;
  return m;
}

double KpHModel::dissipation_form(const VectorXd& psi) const {
  if (psi.size() != dim()) throw DimensionError("lifted state has wrong size");
  if (structured_) return (kr_factor_.transpose() * psi).squaredNorm();
  return psi.dot(kr_ * psi);
}

VectorXd KpHModel::lift(const VectorXd& x) const {
  if (!dict_) throw Error("model carries no dictionary; it was built from raw matrices");
  return t_ * eval_dictionary(*dict_, x);
}

KpHModel identify_from_data(std::shared_ptr<const Dictionary> dict,
                            const PHSystem& sys, const SampleSet& s,
                            IdentifyMode mode, bool check_structure) {
  if (!dict) throw ConfigError("identify_from_data requires a dictionary");

  if (mode == IdentifyMode::structured) {
    const RawProjection rp = raw_projection(*dict, sys, s, check_structure);
    const Whitened wh = whiten(rp);
    const Enforced enf = enforce_structure(wh.rp.A_J, wh.rp.A_R);
    StructureReport rep;
    rep.gram_condition = wh.gram_condition;
    rep.pre_skew_residual = (wh.rp.A_J + wh.rp.A_J.transpose()).norm();
    rep.kj_adjustment = enf.kj_distance;
    rep.kr_adjustment = enf.kr_distance;
    return KpHModel::structured(std::move(dict), wh.T, enf, wh.rp.A_u, rep);
  }

  // Baseline: one unconstrained generator from (psi, jac * drift) pairs.
  require_compatible(*dict, sys, s);
  const int N = dict->N, m = sys.m;
  MatAccum accM(N, N), accD(N, N), accU(N, m);
  for (int k = 0; k < s.size(); ++k) {
    const VectorXd x = s.points().col(k);
    const double w = s.weights()(k);
    const VectorXd psi = eval_dictionary(*dict, x);
    const MatrixXd jac = dict->jac(x);
    const SubFields f = sub_fields(sys, x, check_structure);
    const VectorXd dv = jac * (f.v_J - f.v_R);
    const MatrixXd gu = jac * sys.G(x);
    for (int i = 0; i < N; ++i) {
      for (int j = i; j < N; ++j) accM.add(i, j, w * psi(i) * psi(j));
      for (int j = 0; j < N; ++j) accD.add(i, j, w * dv(i) * psi(j));
      for (int j = 0; j < m; ++j) accU.add(i, j, w * gu(i, j));
    }
  }
  MatrixXd M = accM.total();
  mirror_upper(M);
  const double cond = gram_condition_or_throw(M);
  const MatrixXd A_drift = accD.total();
  const MatrixXd K = M.llt().solve(A_drift.transpose()).transpose();
  return KpHModel::unstructured(std::move(dict), K, accU.total(), cond);
}

}  // namespace kph
