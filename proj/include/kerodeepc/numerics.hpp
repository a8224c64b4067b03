#pragma once

#include <Eigen/Dense>

#include "kerodeepc/errors.hpp"

namespace kerodeepc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

namespace numerics {

/// Dense Kronecker product. Only meant for tests and tiny instances; the
/// operator path goes through KroneckerOperator.
[[nodiscard]] Matrix kron(const Matrix& a, const Matrix& b);

/// Represents left ⊗ right without forming it.
class KroneckerOperator {
public:
    KroneckerOperator(Matrix left, Matrix right);

    [[nodiscard]] const Matrix& left() const noexcept { return left_; }
    [[nodiscard]] const Matrix& right() const noexcept { return right_; }
    [[nodiscard]] Index rows() const noexcept { return left_.rows() * right_.rows(); }
    [[nodiscard]] Index cols() const noexcept { return left_.cols() * right_.cols(); }

    /// Dense copy of the represented matrix.
    [[nodiscard]] Matrix materialize() const { return kron(left_, right_); }

private:
    Matrix left_;
    Matrix right_;
};

/// (left ⊗ right)·v through vec(right·X·leftᵀ), where X is v reshaped
/// column-major into right.cols() × left.cols().
[[nodiscard]] Vector kron_apply(const KroneckerOperator& op, const Eigen::Ref<const Vector>& v);

/// Applies the operator to every column of `rhs`.
[[nodiscard]] Matrix kron_apply_columns(const KroneckerOperator& op, const Matrix& rhs);

/// Default numerical-rank cutoff: eps · max(rows, cols) · σ_max.
[[nodiscard]] double default_rank_tolerance(const Matrix& a, const Vector& singular_values);

/// Moore–Penrose pseudo-inverse by SVD. A negative `tol` selects the default cutoff.
[[nodiscard]] Matrix pinv(const Matrix& a, double tol = -1.0);

/// Orthonormal basis (as columns) of the right null space of `a`. Singular
/// values at or below `tol` count as zero; a negative `tol` selects the
/// default cutoff. Returns a cols×0 matrix when the null space is trivial.
[[nodiscard]] Matrix nullspace_basis(const Matrix& a, double tol = -1.0);

/// Numerical rank from singular values.
[[nodiscard]] Index numerical_rank(const Matrix& a, double tol = -1.0);

/// Cholesky factorization of source + jitter·I.
class SpdFactorization {
public:
    /// Throws FactorizationError if source + jitter·I is not numerically
    /// positive definite.
    SpdFactorization(Matrix source, double jitter = 0.0);

    [[nodiscard]] const Matrix& source() const noexcept { return source_; }
    [[nodiscard]] double jitter() const noexcept { return jitter_; }
    [[nodiscard]] Index size() const noexcept { return source_.rows(); }

    /// Lower-triangular L with L·Lᵀ = source + jitter·I.
    [[nodiscard]] Matrix factor() const;

    [[nodiscard]] Vector solve(const Eigen::Ref<const Vector>& rhs) const;
    [[nodiscard]] Matrix solve_matrix(const Matrix& rhs) const;

    /// Explicit inverse of source + jitter·I.
    [[nodiscard]] Matrix inverse() const;

private:
    Matrix source_;
    double jitter_;
    Eigen::LLT<Matrix> llt_;
};

/// Solves (A ⊗ B)·v = rhs given Cholesky factors of A and B, without forming
/// the Kronecker product: v = vec(B⁻¹·R·A⁻¹) with R = rhs reshaped
/// column-major into B.size() × A.size().
[[nodiscard]] Vector kron_solve(const SpdFactorization& a, const SpdFactorization& b,
                                const Eigen::Ref<const Vector>& rhs);

/// Smallest eigenvalue of a symmetric matrix.
[[nodiscard]] double min_eigenvalue(const Matrix& symmetric);

}  // namespace numerics
}  // namespace kerodeepc
