#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>

#include "kph/observables.hpp"
#include "kph/ph_model.hpp"

namespace kph {

// Weighted point cloud used as a discrete inner product.  Weights are
// nonnegative and sum to one; zero-weight points are pruned on construction.
class SampleSet {
 public:
  SampleSet(Eigen::MatrixXd points, Eigen::VectorXd weights);
  static SampleSet uniform(Eigen::MatrixXd points);

  int dim() const { return static_cast<int>(points_.rows()); }
  int size() const { return static_cast<int>(points_.cols()); }
  const Eigen::MatrixXd& points() const { return points_; }
  const Eigen::VectorXd& weights() const { return weights_; }

 private:
  Eigen::MatrixXd points_;
  Eigen::VectorXd weights_;
};

SampleSet grid_samples(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                       const std::vector<int>& per_axis);
SampleSet monte_carlo_samples(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                              int count, std::uint64_t seed);
SampleSet trajectory_samples(const Trajectory& tr, int stride);

// Linearly transform the points so their weighted second-moment matrix is the
// identity.  With such samples the Gram matrix of a linear dictionary is the
// identity and whitening becomes a no-op.
SampleSet isotropize(const SampleSet& s);

// Weighted projections of the dictionary against the generator pieces:
//   M_ij   = sum_k w_k psi_i psi_j                       (Gram)
//   A_J_ij = sum_k w_k (grad psi_i^T J grad H) psi_j     (drift pairing)
//   A_R_ij = sum_k w_k grad psi_i^T R grad psi_j         (dissipation form)
//   A_u_ij = sum_k w_k grad psi_i^T g_j                  (port mean)
// A_R is symmetric positive semidefinite for any nonnegative weights because
// every summand is a congruence of R.  A_J is skew only when the weights
// approximate an invariant measure of the conservative flow, so its skewness
// is reported downstream rather than assumed.  All entries are accumulated
// with fixed-order pairwise summation.
struct RawProjection {
  Eigen::MatrixXd M;
  Eigen::MatrixXd A_J;
  Eigen::MatrixXd A_R;
  Eigen::MatrixXd A_u;
};

RawProjection raw_projection(const Dictionary& d, const PHSystem& sys,
                             const SampleSet& s, bool check_structure = true);

// T = M^{-1/2} by symmetric eigendecomposition; blocks transform by
// congruence (A_u by a single factor), which preserves symmetry, skewness and
// inertia.  gram_condition is the condition number of the original M.
struct Whitened {
  Eigen::MatrixXd T;
  RawProjection rp;
  double gram_condition = 0.0;
};

Whitened whiten(const RawProjection& rp);

// Nearest structured pair in Frobenius norm: K_J is the skew part of A_J and
// K_R is the eigenvalue-clipped symmetric part of A_R.  K_J is materialised
// from its strict lower triangle so K_J + K_J^T is exactly zero, and K_R is
// materialised from its factor B (K_R = B B^T) so its quadratic form can be
// evaluated as a sum of squares.
struct Enforced {
  Eigen::MatrixXd K_J;
  Eigen::MatrixXd K_R;
  Eigen::MatrixXd kr_factor;       // B with K_R = B B^T
  Eigen::VectorXd kr_eigenvalues;  // clipped spectrum, all >= 0
  double kj_distance = 0.0;        // ||A_J - K_J||_F
  double kr_distance = 0.0;        // ||A_R - K_R||_F
};

Enforced enforce_structure(const Eigen::MatrixXd& A_J, const Eigen::MatrixXd& A_R);

// Exact splitting K = K_J - K_R into a skew part and a dissipative part.
// Fails with NotDissipativeError when the symmetric part of K has an
// eigenvalue above tol; eigenvalues within [-tol, 0) are clipped to zero.
struct SkewPsdSplit {
  Eigen::MatrixXd K_J;
  Eigen::MatrixXd K_R;
};

SkewPsdSplit split_skew_psd(const Eigen::MatrixXd& K, double tol = 1e-10);

struct StructureReport {
  double kj_skew_residual = 0.0;   // ||K_J + K_J^T||_F of the final model
  double kr_min_eig = 0.0;         // certified minimum eigenvalue of K_R
  double gram_condition = 0.0;
  double pre_skew_residual = 0.0;  // ||A_J + A_J^T||_F before enforcement
  double kj_adjustment = 0.0;      // Frobenius distance moved by the skew projection
  double kr_adjustment = 0.0;      // Frobenius distance moved by the PSD clip
};

// Finite-dimensional surrogate psi' = (K_J - K_R) psi + K_u u with the
// structure certified by construction.  Structured models live in the
// whitened dictionary basis; whitener() maps raw observable values into it.
class KpHModel {
 public:
  static KpHModel structured(std::shared_ptr<const Dictionary> dict,
                             const Eigen::MatrixXd& T, const Enforced& parts,
                             const Eigen::MatrixXd& K_u, StructureReport report);
  // Unconstrained least-squares baseline: K is split exactly into skew and
  // symmetric parts without any eigenvalue clipping, so kr_min_eig may be
  // negative.
  static KpHModel unstructured(std::shared_ptr<const Dictionary> dict,
                               const Eigen::MatrixXd& K, const Eigen::MatrixXd& K_u,
                               double gram_condition);

  int dim() const { return static_cast<int>(kj_.rows()); }
  int inputs() const { return static_cast<int>(ku_.cols()); }
  bool is_structured() const { return structured_; }
  const Eigen::MatrixXd& K_J() const { return kj_; }
  const Eigen::MatrixXd& K_R() const { return kr_; }
  const Eigen::MatrixXd& K_u() const { return ku_; }
  const Eigen::MatrixXd& whitener() const { return t_; }
  const StructureReport& structure_report() const { return report_; }
  std::shared_ptr<const Dictionary> dictionary() const { return dict_; }

  // psi^T K_R psi evaluated through the stored factor as ||B^T psi||^2, which
  // is a sum of squares and therefore never negative (structured models).
  double dissipation_form(const Eigen::VectorXd& psi) const;

  // Lifted initial condition T * psi(x).
  Eigen::VectorXd lift(const Eigen::VectorXd& x) const;

 private:
  KpHModel() = default;
  Eigen::MatrixXd kj_, kr_, ku_, t_, kr_factor_;
  std::shared_ptr<const Dictionary> dict_;
  StructureReport report_;
  bool structured_ = false;
};

enum class IdentifyMode { structured, unstructured };

// structured: raw_projection -> whiten -> enforce_structure, with the
// whitening transform recorded on the model.  unstructured: single
// least-squares generator fit in the raw basis, kept as a comparison
// baseline.
KpHModel identify_from_data(std::shared_ptr<const Dictionary> dict,
                            const PHSystem& sys, const SampleSet& s,
                            IdentifyMode mode = IdentifyMode::structured,
                            bool check_structure = true);

}  // namespace kph
