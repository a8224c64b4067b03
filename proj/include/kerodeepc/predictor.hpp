#pragma once

#include <optional>

#include "kerodeepc/datagen.hpp"
#include "kerodeepc/kernels.hpp"
#include "kerodeepc/numerics.hpp"

namespace kerodeepc::predictor {

/// 1e-8 · T · mean(diag K), the default diagonal shift for a T×T Gram matrix.
[[nodiscard]] double default_jitter(const Matrix& gram);

/// The state-conditioned reduced operators in factored form:
///   Ω(x)  = Ku ⊗ rowᵀ,  row = Kx·kx / ‖kx‖²
///   Ω†(x) = Ku⁻¹ ⊗ col, col = Kx⁻¹·kx
/// where Ku, Kx are the (jittered) Gram matrices of the fitted predictor.
struct OmegaOperator {
    Vector x;
    Vector kx_vec;
    Vector row;
    Vector col;
    double norm_sq = 0.0;
};

/// Product-kernel operator y = Y·(Ku⊗Kx)⁻¹·(ku(u)⊗kx(x)). The Kronecker
/// Gram is never formed; every solve goes through the two small factorizations.
class ProductPredictor {
public:
    /// Negative jitter selects default_jitter() for that factor.
    /// Throws FactorizationError if either jittered Gram is not positive definite.
    static ProductPredictor fit(datagen::Dataset dataset, const kernels::KernelSpec& ku_spec,
                                const kernels::KernelSpec& kx_spec, double jitter_u = -1.0,
                                double jitter_x = -1.0);

    [[nodiscard]] const datagen::Dataset& dataset() const noexcept { return data_; }
    [[nodiscard]] const kernels::KernelSpec& ku_spec() const noexcept { return ku_spec_; }
    [[nodiscard]] const kernels::KernelSpec& kx_spec() const noexcept { return kx_spec_; }
    [[nodiscard]] const numerics::SpdFactorization& ku() const noexcept { return *fu_; }
    [[nodiscard]] const numerics::SpdFactorization& kx() const noexcept { return *fx_; }
    /// Gram matrices including their jitter.
    [[nodiscard]] const Matrix& ku_matrix() const noexcept { return ku_eff_; }
    [[nodiscard]] const Matrix& kx_matrix() const noexcept { return kx_eff_; }
    [[nodiscard]] const Matrix& y() const noexcept { return data_.y; }

    [[nodiscard]] Index tu() const noexcept { return data_.tu(); }
    [[nodiscard]] Index tx() const noexcept { return data_.tx(); }
    [[nodiscard]] Index output_length() const noexcept { return data_.y.rows(); }
    [[nodiscard]] Index input_length() const noexcept { return data_.u.rows(); }
    [[nodiscard]] Index state_dim() const noexcept { return data_.x0.rows(); }

    /// Smallest singular value of Y and whether Y has full row rank.
    [[nodiscard]] double y_min_singular_value() const noexcept { return y_sigma_min_; }
    [[nodiscard]] bool y_full_row_rank() const noexcept { return y_full_row_rank_; }
    /// Moore–Penrose inverse of Y, (Tu·Tx) × (p·N).
    [[nodiscard]] const Matrix& y_pinv() const noexcept { return y_pinv_; }

    [[nodiscard]] Vector ku_vector(const Eigen::Ref<const Vector>& u_seq) const;
    [[nodiscard]] Vector kx_vector(const Eigen::Ref<const Vector>& x) const;
    /// ∂ku(u)/∂u, Tu × (m·N).
    [[nodiscard]] Matrix ku_jacobian(const Eigen::Ref<const Vector>& u_seq) const;

    /// Full product predictor through the Kronecker solve.
    [[nodiscard]] Vector predict_product(const Eigen::Ref<const Vector>& u_seq,
                                         const Eigen::Ref<const Vector>& x) const;

    /// Throws InvalidArgument if kx(x) = 0.
    [[nodiscard]] OmegaOperator omega(const Eigen::Ref<const Vector>& x) const;

    /// Y·Ω†(x), (p·N) × Tu.
    [[nodiscard]] Matrix reduced_map(const OmegaOperator& om) const;
    /// Ω(x)·Y†, Tu × (p·N).
    [[nodiscard]] Matrix omega_times_y_pinv(const OmegaOperator& om) const;

    /// Y·Ω†(x)·ku(u).
    [[nodiscard]] Vector predict_reduced(const Eigen::Ref<const Vector>& u_seq,
                                         const Eigen::Ref<const Vector>& x) const;

    /// Dense Ω(x), Tu × (Tu·Tx). For tests and small instances.
    [[nodiscard]] Matrix omega_matrix(const OmegaOperator& om) const;
    /// Dense Ω†(x), (Tu·Tx) × Tu. For tests and small instances.
    [[nodiscard]] Matrix omega_pinv_matrix(const OmegaOperator& om) const;
    /// Dense Ku⊗Kx. Only the full-formulation baseline uses this.
    [[nodiscard]] Matrix product_gram() const;

private:
    ProductPredictor() = default;

    datagen::Dataset data_;
    kernels::KernelSpec ku_spec_;
    kernels::KernelSpec kx_spec_;
    Matrix ku_eff_;
    Matrix kx_eff_;
    std::optional<numerics::SpdFactorization> fu_;
    std::optional<numerics::SpdFactorization> fx_;
    Matrix y_pinv_;
    double y_sigma_min_ = 0.0;
    bool y_full_row_rank_ = false;
};

/// Baseline predictor with one kernel on z = col(x, u).
class StackedPredictor {
public:
    static StackedPredictor fit(datagen::StackedData data, const kernels::KernelSpec& kernel,
                                double jitter = -1.0);

    [[nodiscard]] const datagen::StackedData& data() const noexcept { return data_; }
    [[nodiscard]] const kernels::KernelSpec& kernel() const noexcept { return kernel_; }
    [[nodiscard]] const numerics::SpdFactorization& kz() const noexcept { return *fz_; }
    /// Gram matrix including jitter.
    [[nodiscard]] const Matrix& kz_matrix() const noexcept { return kz_eff_; }
    [[nodiscard]] const Matrix& y() const noexcept { return data_.y; }
    [[nodiscard]] Index size() const noexcept { return data_.z.cols(); }
    [[nodiscard]] Index state_dim() const noexcept { return data_.state_dim; }
    [[nodiscard]] Index output_length() const noexcept { return data_.y.rows(); }
    [[nodiscard]] Index input_length() const noexcept { return data_.z.rows() - data_.state_dim; }

    [[nodiscard]] Vector stack(const Eigen::Ref<const Vector>& u_seq,
                               const Eigen::Ref<const Vector>& x) const;
    [[nodiscard]] Vector kz_vector(const Eigen::Ref<const Vector>& u_seq,
                                   const Eigen::Ref<const Vector>& x) const;
    /// ∂kz/∂u, T × (m·N).
    [[nodiscard]] Matrix kz_jacobian_u(const Eigen::Ref<const Vector>& u_seq,
                                       const Eigen::Ref<const Vector>& x) const;

    [[nodiscard]] Vector predict(const Eigen::Ref<const Vector>& u_seq,
                                 const Eigen::Ref<const Vector>& x) const;

private:
    StackedPredictor() = default;

    datagen::StackedData data_;
    kernels::KernelSpec kernel_;
    Matrix kz_eff_;
    std::optional<numerics::SpdFactorization> fz_;
};

}  // namespace kerodeepc::predictor
