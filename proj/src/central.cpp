#include "dpcp/central.hpp"

#include <cmath>

#include "dpcp/kernels.hpp"

namespace dpcp {
namespace {

void check_shapes(const Matrix& x, const Matrix& o, const ObservationSet& obs) {
  if (x.rows() != obs.rows() || x.cols() != obs.cols() || o.rows() != obs.rows() ||
      o.cols() != obs.cols())
    throw ValidationError("pcp: iterate shape does not match observations");
}

Matrix residual(const Matrix& x, const Matrix& o, const ObservationSet& obs) {
  return obs.mask.cwiseProduct(obs.values - x - o);
}

}  // namespace

void validate(const PcpConfig& cfg) {
  if (!(cfg.lambda_star >= 0.0 && cfg.lambda_1 >= 0.0))
    throw ValidationError("pcp: regularization weights must be >= 0");
  if (!(cfg.step > 0.0 && cfg.step <= 1.0))
    throw ValidationError("pcp: step must lie in (0, 1]");
  if (!(cfg.tol_rel > 0.0)) throw ValidationError("pcp: tol_rel must be positive");
  if (cfg.max_iters < 0) throw ValidationError("pcp: max_iters must be >= 0");
}

double objective(const Matrix& x, const Matrix& o, const ObservationSet& obs,
                 const PcpConfig& cfg) {
  check_shapes(x, o, obs);
  const double fit = 0.5 * residual(x, o, obs).squaredNorm();
  return fit + cfg.lambda_star * nuclear_norm(x) + cfg.lambda_1 * o.lpNorm<1>();
}

Matrix o_step(const Matrix& x, const ObservationSet& obs, double lambda_1) {
  if (x.rows() != obs.rows() || x.cols() != obs.cols())
    throw ValidationError("pcp: iterate shape does not match observations");
  // Off-mask entries enter the threshold as exact zeros and stay exact zeros.
  return soft_threshold(obs.mask.cwiseProduct(obs.values - x), lambda_1);
}

Matrix x_step(const Matrix& x, const Matrix& o, const ObservationSet& obs,
              const PcpConfig& cfg) {
  check_shapes(x, o, obs);
  return svt(x + cfg.step * residual(x, o, obs), cfg.step * cfg.lambda_star);
}

KktGaps optimality_gap(const Matrix& x, const Matrix& o, const ObservationSet& obs,
                       const PcpConfig& cfg) {
  check_shapes(x, o, obs);
  const Matrix g = residual(x, o, obs);
  KktGaps gaps;
  gaps.spectral_gap = std::max(0.0, spectral_norm(g) - cfg.lambda_star);
  gaps.inf_gap = std::max(0.0, g.cwiseAbs().maxCoeff() - cfg.lambda_1);
  double support = 0.0;
  for (Index j = 0; j < o.cols(); ++j)
    for (Index i = 0; i < o.rows(); ++i)
      if (o(i, j) != 0.0) {
        const double sign = o(i, j) > 0.0 ? 1.0 : -1.0;
        support = std::max(support, std::abs(g(i, j) - cfg.lambda_1 * sign));
      }
  gaps.support_gap = support;
  const double nn = cfg.lambda_star * nuclear_norm(x);
  gaps.alignment_gap = std::abs((g.cwiseProduct(x)).sum() - nn) / std::max(1.0, nn);
  return gaps;
}

PcpSolution solve(const ObservationSet& obs, const PcpConfig& cfg) {
  validate(cfg);
  if (obs.values.rows() != obs.mask.rows() || obs.values.cols() != obs.mask.cols())
    throw ValidationError("pcp: observation value/mask shape mismatch");

  PcpSolution sol;
  sol.X_hat = obs.mask.cwiseProduct(obs.values);
  sol.O_hat = Matrix::Zero(obs.rows(), obs.cols());

  double f = objective(sol.X_hat, sol.O_hat, obs, cfg);
  sol.objective_trace.push_back(f);
  sol.gap_trace.push_back(optimality_gap(sol.X_hat, sol.O_hat, obs, cfg));
  for (int it = 0; it < cfg.max_iters; ++it) {
    sol.X_hat = x_step(sol.X_hat, sol.O_hat, obs, cfg);
    sol.O_hat = o_step(sol.X_hat, obs, cfg.lambda_1);
    const double f_next = objective(sol.X_hat, sol.O_hat, obs, cfg);
    if (!std::isfinite(f_next)) throw NumericalError("pcp: objective became non-finite");
    sol.objective_trace.push_back(f_next);
    sol.gap_trace.push_back(optimality_gap(sol.X_hat, sol.O_hat, obs, cfg));
    sol.iters = it + 1;
    if (std::abs(f - f_next) / std::max(1.0, f) < cfg.tol_rel) {
      sol.converged = true;
      f = f_next;
      break;
    }
    f = f_next;
  }

  const Matrix g = residual(sol.X_hat, sol.O_hat, obs);
  sol.kkt_spectral = spectral_norm(g);
  sol.kkt_inf = g.size() == 0 ? 0.0 : g.cwiseAbs().maxCoeff();
  sol.gaps = sol.gap_trace.back();
  return sol;
}

std::pair<double, double> suggest_lambdas(Index n, Index t, double sigma2_hat,
                                          double c1, double scale) {
  const double l1 = c1 * scale * std::sqrt(2.0 * sigma2_hat);
  const double ls = std::sqrt(static_cast<double>(std::max(n, t))) * l1;
  return {l1, ls};
}

}  // namespace dpcp
