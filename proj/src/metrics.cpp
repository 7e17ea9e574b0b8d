#include "dpcp/metrics.hpp"

#include <cmath>

namespace dpcp {

double relative_error(const Matrix& a_hat, const Matrix& a_true) {
  if (a_hat.rows() != a_true.rows() || a_hat.cols() != a_true.cols())
    throw ValidationError("metrics: shape mismatch");
  const double ref = a_true.norm();
  if (ref == 0.0) throw ValidationError("metrics: zero-norm reference");
  return (a_hat - a_true).norm() / ref;
}

double imputation_error(const Matrix& x_hat, const Matrix& x_true, const Matrix& mask) {
  if (x_hat.rows() != x_true.rows() || x_hat.cols() != x_true.cols() ||
      mask.rows() != x_true.rows() || mask.cols() != x_true.cols())
    throw ValidationError("metrics: shape mismatch");
  double num = 0.0, den = 0.0;
  bool any_hidden = false;
  for (Index j = 0; j < mask.cols(); ++j)
    for (Index i = 0; i < mask.rows(); ++i)
      if (mask(i, j) == 0.0) {
        any_hidden = true;
        const double d = x_hat(i, j) - x_true(i, j);
        num += d * d;
        den += x_true(i, j) * x_true(i, j);
      }
  if (!any_hidden) throw ValidationError("metrics: mask hides no entries");
  if (den == 0.0) throw ValidationError("metrics: zero-norm reference on hidden entries");
  return std::sqrt(num / den);
}

SupportScore support_detection(const Matrix& o_hat, const Matrix& o_true,
                               double threshold) {
  if (o_hat.rows() != o_true.rows() || o_hat.cols() != o_true.cols())
    throw ValidationError("metrics: shape mismatch");
  if (!(threshold >= 0.0)) throw ValidationError("metrics: threshold must be >= 0");
  long tp = 0, fp = 0, fn = 0;
  for (Index j = 0; j < o_hat.cols(); ++j)
    for (Index i = 0; i < o_hat.rows(); ++i) {
      const bool detected = std::abs(o_hat(i, j)) > threshold;
      const bool truth = o_true(i, j) != 0.0;
      if (detected && truth) ++tp;
      else if (detected) ++fp;
      else if (truth) ++fn;
    }
  SupportScore s;
  s.precision = (tp + fp) == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  s.recall = (tp + fn) == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  s.f1 = (s.precision * s.recall == 0.0)
             ? 0.0
             : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

ErrorReport make_report(const Matrix& x_hat, const Matrix& o_hat, const Matrix& x_true,
                        const Matrix& o_true, const Matrix& mask,
                        double support_threshold) {
  ErrorReport r;
  r.e_X = relative_error(x_hat, x_true);
  r.e_O = o_true.norm() == 0.0 ? o_hat.norm() : relative_error(o_hat, o_true);
  if ((mask.array() == 0.0).any())
    r.imputation_rel = imputation_error(x_hat, x_true, mask);
  r.support = support_detection(o_hat, o_true, support_threshold);
  r.support_threshold = support_threshold;
  return r;
}

}  // namespace dpcp
