#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string_view>

namespace rmpfusion {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Relative eigenvalue cutoff used when truncating rank in pseudo_inverse.
inline constexpr double kDefaultRankTol = 1e-10;

// Throws NumericError naming `what` if any entry is NaN or infinite.
void require_finite(const Matrix& m, std::string_view what);
void require_finite(const Vector& v, std::string_view what);

// Throws DimensionError unless m is square.
void require_square(const Matrix& m, std::string_view what);

bool is_symmetric(const Matrix& m, double tol);

// Moore-Penrose inverse of a symmetric matrix through its eigendecomposition.
// Eigenvalues with |lambda| <= tol * max|lambda| are treated as zero.
Matrix pseudo_inverse(const Matrix& m, double tol = kDefaultRankTol);

// Symmetric within tol and smallest eigenvalue >= -tol.
bool is_psd(const Matrix& m, double tol = 1e-9);

// Smallest eigenvalue of the symmetric part of m.
double min_eigenvalue(const Matrix& m);

// Central differences, one coordinate at a time.
Vector finite_diff_grad(const std::function<double(const Vector&)>& f, const Vector& x, double h);

// Column j holds the central difference of f along coordinate j.
Matrix finite_diff_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x,
                            double h);

}  // namespace rmpfusion
