#include "rmpfusion/numerics.hpp"

#include <cmath>
#include <string>

#include "rmpfusion/errors.hpp"

namespace rmpfusion {

void require_finite(const Matrix& m, std::string_view what) {
  if (!m.allFinite()) {
    throw NumericError(std::string(what) + ": non-finite entry");
  }
}

void require_finite(const Vector& v, std::string_view what) {
  if (!v.allFinite()) {
    throw NumericError(std::string(what) + ": non-finite entry");
  }
}

void require_square(const Matrix& m, std::string_view what) {
  if (m.rows() != m.cols()) {
    throw DimensionError(std::string(what) + ": expected a square matrix, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

bool is_symmetric(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

Matrix pseudo_inverse(const Matrix& m, double tol) {
  require_square(m, "pseudo_inverse");
  require_finite(m, "pseudo_inverse");
  if (m.size() == 0) return m;
  if (!is_symmetric(m, std::max(tol, 1e-12))) {
    throw DimensionError("pseudo_inverse: matrix is not symmetric");
  }
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  const Vector& lambda = eig.eigenvalues();
  const double largest = lambda.cwiseAbs().maxCoeff();
  if (largest == 0.0) return Matrix::Zero(m.rows(), m.cols());
  Vector inv(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    inv[i] = std::abs(lambda[i]) <= tol * largest ? 0.0 : 1.0 / lambda[i];
  }
  const Matrix& v = eig.eigenvectors();
  return v * inv.asDiagonal() * v.transpose();
}

bool is_psd(const Matrix& m, double tol) {
  require_square(m, "is_psd");
  if (m.size() == 0) return true;
  if (!m.allFinite() || !is_symmetric(m, tol)) return false;
  return min_eigenvalue(m) >= -tol * std::max(1.0, m.cwiseAbs().maxCoeff());
}

double min_eigenvalue(const Matrix& m) {
  require_square(m, "min_eigenvalue");
  if (m.size() == 0) return 0.0;
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

Vector finite_diff_grad(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  if (!(h > 0.0)) throw NumericError("finite_diff_grad: step must be positive");
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_diff_grad: non-finite value at coordinate " + std::to_string(i));
    }
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

Matrix finite_diff_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x,
                            double h) {
  if (!(h > 0.0)) throw NumericError("finite_diff_jacobian: step must be positive");
  Vector probe = x;
  Matrix jac;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const Vector up = f(probe);
    probe[i] = x[i] - h;
    const Vector down = f(probe);
    probe[i] = x[i];
    if (i == 0) jac.resize(up.size(), x.size());
    if (!up.allFinite() || !down.allFinite()) {
      throw NumericError("finite_diff_jacobian: non-finite value at coordinate " +
                         std::to_string(i));
    }
    jac.col(i) = (up - down) / (2.0 * h);
  }
  return jac;
}

}  // namespace rmpfusion
