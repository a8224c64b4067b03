#include "kerodeepc/numerics.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace kerodeepc::numerics {

namespace {

void require_finite(const Matrix& a, const char* what) {
    if (!a.allFinite()) {
        throw FactorizationError(std::string(what) + ": matrix has non-finite entries",
                                 std::numeric_limits<double>::quiet_NaN());
    }
}

}  // namespace

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

KroneckerOperator::KroneckerOperator(Matrix left, Matrix right)
    : left_(std::move(left)), right_(std::move(right)) {}

Vector kron_apply(const KroneckerOperator& op, const Eigen::Ref<const Vector>& v) {
    if (v.size() != op.cols()) {
        throw DimensionError("kron_apply: vector length " + std::to_string(v.size()) +
                             " does not match operator columns " + std::to_string(op.cols()));
    }
    const Matrix& a = op.left();
    const Matrix& b = op.right();
    Eigen::Map<const Matrix> x(v.data(), b.cols(), a.cols());
    Matrix bx = b * x;
    Matrix out = bx * a.transpose();
    return Eigen::Map<const Vector>(out.data(), out.size());
}

Matrix kron_apply_columns(const KroneckerOperator& op, const Matrix& rhs) {
    if (rhs.rows() != op.cols()) {
        throw DimensionError("kron_apply: rhs rows do not match operator columns");
    }
    Matrix out(op.rows(), rhs.cols());
    for (Index c = 0; c < rhs.cols(); ++c) {
        out.col(c) = kron_apply(op, rhs.col(c));
    }
    return out;
}

double default_rank_tolerance(const Matrix& a, const Vector& singular_values) {
    const double smax = singular_values.size() > 0 ? singular_values.maxCoeff() : 0.0;
    return std::numeric_limits<double>::epsilon() *
           static_cast<double>(std::max(a.rows(), a.cols())) * smax;
}

Matrix pinv(const Matrix& a, double tol) {
    require_finite(a, "pinv");
    if (a.size() == 0) {
        return Matrix::Zero(a.cols(), a.rows());
    }
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const double cutoff = tol < 0.0 ? default_rank_tolerance(a, s) : tol;
    Vector s_inv = Vector::Zero(s.size());
    for (Index i = 0; i < s.size(); ++i) {
        if (s(i) > cutoff) {
            s_inv(i) = 1.0 / s(i);
        }
    }
    return svd.matrixV() * s_inv.asDiagonal() * svd.matrixU().transpose();
}

Matrix nullspace_basis(const Matrix& a, double tol) {
    require_finite(a, "nullspace_basis");
    const Index n = a.cols();
    if (a.rows() == 0) {
        return Matrix::Identity(n, n);
    }
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
    const Vector& s = svd.singularValues();
    const double cutoff = tol < 0.0 ? default_rank_tolerance(a, s) : tol;
    Index rank = 0;
    for (Index i = 0; i < s.size(); ++i) {
        if (s(i) > cutoff) {
            ++rank;
        }
    }
    return svd.matrixV().rightCols(n - rank);
}

Index numerical_rank(const Matrix& a, double tol) {
    require_finite(a, "numerical_rank");
    if (a.size() == 0) {
        return 0;
    }
    Eigen::JacobiSVD<Matrix> svd(a);
    const Vector& s = svd.singularValues();
    const double cutoff = tol < 0.0 ? default_rank_tolerance(a, s) : tol;
    return static_cast<Index>((s.array() > cutoff).count());
}

double min_eigenvalue(const Matrix& symmetric) {
    if (symmetric.size() == 0) {
        return 0.0;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

SpdFactorization::SpdFactorization(Matrix source, double jitter)
    : source_(std::move(source)), jitter_(jitter) {
    if (source_.rows() != source_.cols()) {
        throw DimensionError("SpdFactorization: matrix is not square");
    }
    if (jitter_ < 0.0) {
        throw InvalidArgument("SpdFactorization: jitter must be non-negative");
    }
    require_finite(source_, "SpdFactorization");
    Matrix shifted = source_;
    shifted.diagonal().array() += jitter_;
    llt_.compute(shifted);
    // LLT only reports failure on a non-positive pivot; a tiny pivot still
    // yields a useless factor, so the diagonal is checked as well.
    bool ok = llt_.info() == Eigen::Success;
    if (ok) {
        const auto d = llt_.matrixLLT().diagonal();
        ok = d.allFinite() && d.minCoeff() > 0.0;
    }
    if (!ok) {
        const double lam = min_eigenvalue(shifted);
        throw FactorizationError("Cholesky factorization failed for " +
                                     std::to_string(source_.rows()) + "x" +
                                     std::to_string(source_.rows()) +
                                     " matrix (smallest eigenvalue ~ " + std::to_string(lam) +
                                     "); increase the jitter",
                                 lam);
    }
}

Matrix SpdFactorization::factor() const {
    return llt_.matrixL();
}

Vector SpdFactorization::solve(const Eigen::Ref<const Vector>& rhs) const {
    if (rhs.size() != size()) {
        throw DimensionError("SpdFactorization::solve: rhs length mismatch");
    }
    return llt_.solve(rhs);
}

Matrix SpdFactorization::solve_matrix(const Matrix& rhs) const {
    if (rhs.rows() != size()) {
        throw DimensionError("SpdFactorization::solve: rhs rows mismatch");
    }
    return llt_.solve(rhs);
}

Matrix SpdFactorization::inverse() const {
    return llt_.solve(Matrix::Identity(size(), size()));
}

Vector kron_solve(const SpdFactorization& a, const SpdFactorization& b,
                  const Eigen::Ref<const Vector>& rhs) {
    if (rhs.size() != a.size() * b.size()) {
        throw DimensionError("kron_solve: rhs length does not match the operator size");
    }
    Eigen::Map<const Matrix> r(rhs.data(), b.size(), a.size());
    const Matrix left = b.solve_matrix(r);
    // A is symmetric, so B⁻¹·R·A⁻¹ = (A⁻¹·(B⁻¹·R)ᵀ)ᵀ.
    const Matrix x = a.solve_matrix(left.transpose()).transpose();
    return Eigen::Map<const Vector>(x.data(), x.size());
}

}  // namespace kerodeepc::numerics
