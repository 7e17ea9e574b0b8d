#pragma once

#include <vector>

#include "dpcp/common.hpp"

namespace dpcp {

struct PcpConfig {
  double lambda_star = 0.0;
  double lambda_1 = 0.0;
  int max_iters = 1000;
  double tol_rel = 1e-9;
  double step = 1.0;  // proximal-gradient step for the low-rank block, in (0,1]
};

// First-order optimality residuals of the convex program at (X, O), all
// reported as violations clipped at zero. G denotes the masked data residual.
struct KktGaps {
  double spectral_gap = 0.0;   // max(0, ||G||_2 - lambda_star)
  double inf_gap = 0.0;        // max(0, ||G||_max - lambda_1)
  double support_gap = 0.0;    // max over supp(O) of |G - lambda_1*sign(o)|
  double alignment_gap = 0.0;  // relative defect of <G,X> = lambda_star*||X||_*
};

struct PcpSolution {
  Matrix X_hat;
  Matrix O_hat;
  std::vector<double> objective_trace;  // initial point first, then one per iteration
  std::vector<KktGaps> gap_trace;       // aligned with objective_trace
  int iters = 0;
  bool converged = false;
  double kkt_spectral = 0.0;  // ||G||_2 at the final iterate
  double kkt_inf = 0.0;       // ||G||_max at the final iterate
  KktGaps gaps;
};

void validate(const PcpConfig& cfg);

// 0.5*||P_Omega(Y - X - O)||_F^2 + lambda_star*||X||_* + lambda_1*||O||_1
double objective(const Matrix& x, const Matrix& o, const ObservationSet& obs,
                 const PcpConfig& cfg);

// Exact minimizer over O with X fixed: soft-threshold of the masked residual.
Matrix o_step(const Matrix& x, const ObservationSet& obs, double lambda_1);

// One proximal-gradient step on the low-rank block:
// X' = svt(X + step*P_Omega(Y - X - O), step*lambda_star).
Matrix x_step(const Matrix& x, const Matrix& o, const ObservationSet& obs,
              const PcpConfig& cfg);

KktGaps optimality_gap(const Matrix& x, const Matrix& o, const ObservationSet& obs,
                       const PcpConfig& cfg);

// Alternates x_step with the exact O-block until the relative objective
// change drops below tol_rel or max_iters is hit (converged=false then).
PcpSolution solve(const ObservationSet& obs, const PcpConfig& cfg);

// Tuning helper: lambda_1 = c1*scale*sqrt(2*sigma2_hat),
// lambda_star = sqrt(max(N,T))*lambda_1. Exposed for callers; nothing applies
// it implicitly.
std::pair<double, double> suggest_lambdas(Index n, Index t, double sigma2_hat,
                                          double c1 = 1.0, double scale = 1.0);

}  // namespace dpcp
