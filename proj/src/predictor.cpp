#include "kerodeepc/predictor.hpp"

#include <string>

namespace kerodeepc::predictor {

double default_jitter(const Matrix& gram) {
    if (gram.rows() == 0) return 0.0;
    return 1e-8 * static_cast<double>(gram.rows()) * gram.diagonal().mean();
}

namespace {

numerics::SpdFactorization factorize(const Matrix& k, double jitter, const char* name) {
    try {
        return numerics::SpdFactorization(k, jitter);
    } catch (const FactorizationError& e) {
        throw FactorizationError(std::string(name) + " Gram matrix: " + e.what(),
                                 e.min_eigenvalue());
    }
}

}  // namespace

ProductPredictor ProductPredictor::fit(datagen::Dataset dataset, const kernels::KernelSpec& ku_spec,
                                       const kernels::KernelSpec& kx_spec, double jitter_u,
                                       double jitter_x) {
    dataset.validate();
    if (dataset.tu() < 1 || dataset.tx() < 1) {
        throw InvalidArgument("fit_product: dataset is empty");
    }
    ku_spec.validate();
    kx_spec.validate();

    ProductPredictor p;
    p.data_ = std::move(dataset);
    p.ku_spec_ = ku_spec;
    p.kx_spec_ = kx_spec;

    const Matrix ku = kernels::gram(ku_spec, p.data_.u).matrix;
    const Matrix kx = kernels::gram(kx_spec, p.data_.x0).matrix;
    if (jitter_u < 0.0) jitter_u = default_jitter(ku);
    if (jitter_x < 0.0) jitter_x = default_jitter(kx);
    p.fu_.emplace(factorize(ku, jitter_u, "input"));
    p.fx_.emplace(factorize(kx, jitter_x, "state"));
    p.ku_eff_ = ku;
    p.ku_eff_.diagonal().array() += jitter_u;
    p.kx_eff_ = kx;
    p.kx_eff_.diagonal().array() += jitter_x;

    const Matrix& y = p.data_.y;
    Eigen::JacobiSVD<Matrix> svd(y);
    const Vector& s = svd.singularValues();
    p.y_sigma_min_ = y.rows() <= y.cols() && s.size() == y.rows() ? s(s.size() - 1) : 0.0;
    p.y_full_row_rank_ =
        y.rows() <= y.cols() && p.y_sigma_min_ > numerics::default_rank_tolerance(y, s);
    p.y_pinv_ = numerics::pinv(y);
    return p;
}

Vector ProductPredictor::ku_vector(const Eigen::Ref<const Vector>& u_seq) const {
    return kernels::kernel_vector(ku_spec_, u_seq, data_.u);
}

Vector ProductPredictor::kx_vector(const Eigen::Ref<const Vector>& x) const {
    return kernels::kernel_vector(kx_spec_, x, data_.x0);
}

Matrix ProductPredictor::ku_jacobian(const Eigen::Ref<const Vector>& u_seq) const {
    return kernels::kernel_vector_jacobian(ku_spec_, u_seq, data_.u);
}

Vector ProductPredictor::predict_product(const Eigen::Ref<const Vector>& u_seq,
                                         const Eigen::Ref<const Vector>& x) const {
    const Vector k = kernels::product_kernel_vector(ku_vector(u_seq), kx_vector(x));
    return data_.y * numerics::kron_solve(*fu_, *fx_, k);
}

OmegaOperator ProductPredictor::omega(const Eigen::Ref<const Vector>& x) const {
    OmegaOperator om;
    om.x = x;
    om.kx_vec = kx_vector(x);
    om.norm_sq = om.kx_vec.squaredNorm();
    if (!(om.norm_sq > 0.0)) {
        throw InvalidArgument("omega: state kernel vector vanishes at the query state");
    }
    om.row = kx_eff_ * om.kx_vec / om.norm_sq;
    om.col = fx_->solve(om.kx_vec);
    return om;
}

Matrix ProductPredictor::reduced_map(const OmegaOperator& om) const {
    // Y·(Ku⁻¹ ⊗ c) = W·Ku⁻¹ with W(:, j) = Y_j·c, Y_j the j-th block of Tx columns.
    const Index tx_ = tx();
    Matrix w(output_length(), tu());
    for (Index j = 0; j < tu(); ++j) {
        w.col(j) = data_.y.middleCols(j * tx_, tx_) * om.col;
    }
    return fu_->solve_matrix(w.transpose()).transpose();
}

Matrix ProductPredictor::omega_times_y_pinv(const OmegaOperator& om) const {
    // (Ku ⊗ rowᵀ)·Y† = Ku·H with H(j, :) = rowᵀ·Y†_j.
    const Index tx_ = tx();
    Matrix h(tu(), y_pinv_.cols());
    for (Index j = 0; j < tu(); ++j) {
        h.row(j) = om.row.transpose() * y_pinv_.middleRows(j * tx_, tx_);
    }
    return ku_eff_ * h;
}

Vector ProductPredictor::predict_reduced(const Eigen::Ref<const Vector>& u_seq,
                                         const Eigen::Ref<const Vector>& x) const {
    return reduced_map(omega(x)) * ku_vector(u_seq);
}

Matrix ProductPredictor::omega_matrix(const OmegaOperator& om) const {
    return numerics::kron(ku_eff_, om.row.transpose());
}

Matrix ProductPredictor::omega_pinv_matrix(const OmegaOperator& om) const {
    return numerics::kron(fu_->inverse(), om.col);
}

Matrix ProductPredictor::product_gram() const {
    return numerics::kron(ku_eff_, kx_eff_);
}

// ---------------------------------------------------------------------------

StackedPredictor StackedPredictor::fit(datagen::StackedData data, const kernels::KernelSpec& kernel,
                                       double jitter) {
    if (data.z.cols() < 1 || data.z.cols() != data.y.cols()) {
        throw DimensionError("fit_stacked: Z and Y must have the same, nonzero number of columns");
    }
    if (data.state_dim < 0 || data.state_dim > data.z.rows()) {
        throw DimensionError("fit_stacked: state dimension exceeds the stacked dimension");
    }
    kernel.validate();
    StackedPredictor p;
    p.data_ = std::move(data);
    p.kernel_ = kernel;
    const Matrix kz = kernels::gram(kernel, p.data_.z).matrix;
    if (jitter < 0.0) jitter = default_jitter(kz);
    p.fz_.emplace(factorize(kz, jitter, "stacked"));
    p.kz_eff_ = kz;
    p.kz_eff_.diagonal().array() += jitter;
    return p;
}

Vector StackedPredictor::stack(const Eigen::Ref<const Vector>& u_seq,
                               const Eigen::Ref<const Vector>& x) const {
    if (x.size() != state_dim() || u_seq.size() != input_length()) {
        throw DimensionError("stacked predictor: query dimensions do not match the data");
    }
    Vector z(data_.z.rows());
    z << x, u_seq;
    return z;
}

Vector StackedPredictor::kz_vector(const Eigen::Ref<const Vector>& u_seq,
                                   const Eigen::Ref<const Vector>& x) const {
    return kernels::kernel_vector(kernel_, stack(u_seq, x), data_.z);
}

Matrix StackedPredictor::kz_jacobian_u(const Eigen::Ref<const Vector>& u_seq,
                                       const Eigen::Ref<const Vector>& x) const {
    return kernels::kernel_vector_jacobian(kernel_, stack(u_seq, x), data_.z)
        .rightCols(input_length());
}

Vector StackedPredictor::predict(const Eigen::Ref<const Vector>& u_seq,
                                 const Eigen::Ref<const Vector>& x) const {
    return data_.y * fz_->solve(kz_vector(u_seq, x));
}

}  // namespace kerodeepc::predictor
