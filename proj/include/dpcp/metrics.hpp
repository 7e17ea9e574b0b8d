#pragma once

#include <optional>

#include "dpcp/common.hpp"

namespace dpcp {

struct SupportScore {
  double precision = 1.0;
  double recall = 1.0;
  double f1 = 1.0;
};

struct ErrorReport {
  double e_X = 0.0;
  double e_O = 0.0;
  std::optional<double> imputation_rel;  // absent when the mask hides nothing
  SupportScore support;
  double support_threshold = 0.0;
};

// ||A_hat - A_true||_F / ||A_true||_F; the reference must have nonzero norm.
double relative_error(const Matrix& a_hat, const Matrix& a_true);

// Relative Frobenius error restricted to entries with mask == 0.
double imputation_error(const Matrix& x_hat, const Matrix& x_true, const Matrix& mask);

// Detected support is {|o_hat| > threshold}; scored against {o_true != 0}.
// No detections gives precision 1; no true outliers gives recall 1.
SupportScore support_detection(const Matrix& o_hat, const Matrix& o_true,
                               double threshold);

ErrorReport make_report(const Matrix& x_hat, const Matrix& o_hat, const Matrix& x_true,
                        const Matrix& o_true, const Matrix& mask,
                        double support_threshold);

}  // namespace dpcp
