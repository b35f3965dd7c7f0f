#pragma once

namespace kph {

// Default numeric tolerances, one place for all modules.  Functions that take
// no explicit tolerance argument use these values; scenario configs may
// override individual entries per run.
struct Tolerances {
  double structure_check = 1e-10;       // skewness / symmetry / PSD slack on J, R
  double gram_condition_max = 1e12;     // Gram condition beyond which projection aborts
  double dissipative_slack = 1e-10;     // eigenvalue slack in split_skew_psd
  double passivity_skew = 1e-9;         // bound on ||P K_J + K_J^T P||_F
  double passivity_psd = 1e-9;          // eigenvalue slack for P K_R + K_R^T P
  double energy_rate_slack = 1e-10;     // lifted energy rate vs supplied power
  double pbh_marginal = 1e-8;           // Re(lambda) >= -pbh_marginal counts as marginal
  double rank_rel = 1e-9;               // SVD rank threshold relative to sigma_max
  double lyapunov_residual_rel = 1e-9;  // Lyapunov residual relative to ||Q||_F
  double certificate_rel = 1e-9;        // relative slack in monotonicity certificates
  double blowup_norm = 1e12;            // simulation abort threshold
};

}  // namespace kph
