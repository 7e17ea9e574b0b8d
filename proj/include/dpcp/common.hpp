#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace dpcp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Malformed input text (CSV/JSON); message carries the location when known.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Structurally invalid data or configuration: dimension mismatch,
// disconnected graph, out-of-range parameter.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical breakdown: factorization failure, non-finite iterates, divergence.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Incomplete observations: values is N x T with zeros wherever mask is zero,
// mask is N x T with entries in {0,1}.
struct ObservationSet {
  Matrix values;
  Matrix mask;

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }
};

inline void validate(const ObservationSet& obs) {
  if (obs.values.rows() != obs.mask.rows() || obs.values.cols() != obs.mask.cols())
    throw ValidationError("observations: value/mask shape mismatch");
  if (!obs.values.allFinite()) throw ValidationError("observations: non-finite value");
  for (Index j = 0; j < obs.mask.cols(); ++j)
    for (Index i = 0; i < obs.mask.rows(); ++i) {
      const double m = obs.mask(i, j);
      if (m != 0.0 && m != 1.0)
        throw ValidationError("observations: mask entry not in {0,1}");
      if (m == 0.0 && obs.values(i, j) != 0.0)
        throw ValidationError("observations: nonzero value off the mask");
    }
}

}  // namespace dpcp
