#include "dpcp/kernels.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

namespace dpcp {

double soft_threshold(double x, double tau) {
  if (x > tau) return x - tau;
  if (x < -tau) return x + tau;
  return 0.0;
}

Matrix soft_threshold(const Matrix& x, double tau) {
  return x.unaryExpr([tau](double v) { return soft_threshold(v, tau); });
}

Svd thin_svd(const Matrix& a) {
  if (!a.allFinite()) throw NumericalError("thin_svd: non-finite input");
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Svd out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  const Matrix rec = out.u * out.s.asDiagonal() * out.v.transpose();
  const double scale = std::max(1.0, a.norm());
  if (!rec.allFinite() || (rec - a).norm() > 1e-10 * scale)
    throw NumericalError("thin_svd: decomposition failed to reconstruct input");
  return out;
}

Matrix svt(const Matrix& a, double tau) {
  const Svd f = thin_svd(a);
  Vector s = f.s;
  for (Index i = 0; i < s.size(); ++i) s(i) = soft_threshold(s(i), tau);
  return f.u * s.asDiagonal() * f.v.transpose();
}

double nuclear_norm(const Matrix& a) { return thin_svd(a).s.sum(); }

double spectral_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  const Svd f = thin_svd(a);
  return f.s.size() == 0 ? 0.0 : f.s(0);
}

Matrix apply_mask(const Matrix& a, const Matrix& mask) {
  if (a.rows() != mask.rows() || a.cols() != mask.cols())
    throw ValidationError("apply_mask: shape mismatch");
  return a.cwiseProduct(mask);
}

Vector solve_small_spd(const Matrix& a, const Vector& b, double reg) {
  if (a.rows() != a.cols() || a.rows() != b.size())
    throw ValidationError("solve_small_spd: shape mismatch");
  Matrix m = a;
  if (reg != 0.0) m.diagonal().array() += reg;
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success)
    throw NumericalError("solve_small_spd: matrix not positive definite");
  Vector x = llt.solve(b);
  x += llt.solve(b - m * x);
  if (!x.allFinite()) throw NumericalError("solve_small_spd: non-finite solution");
  return x;
}

}  // namespace dpcp
