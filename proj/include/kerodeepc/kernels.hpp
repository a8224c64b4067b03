#pragma once

#include <string>

#include "kerodeepc/numerics.hpp"

namespace kerodeepc::kernels {

enum class Family { Gaussian, HardyReverseMultiquadric, Linear, WeightedGaussian };

[[nodiscard]] std::string to_string(Family family);
[[nodiscard]] Family family_from_string(const std::string& name);

/// Kernel family plus its parameters.
///
/// Gaussian:          exp(-|a-b|^2 / sigma^2)
/// Hardy:             (1 + |a-b|^2 / sigma^2)^exponent   (exponent defaults to +1/2)
/// Linear:            a'b
/// WeightedGaussian:  exp(-sum_i w_i (a_i-b_i)^2), w_i = 1/sigma_i^2
struct KernelSpec {
    Family family = Family::Gaussian;
    double sigma = 1.0;
    double exponent = 0.5;
    Vector weights;

    static KernelSpec gaussian(double sigma);
    static KernelSpec hardy(double sigma, double exponent = 0.5);
    static KernelSpec linear();
    /// Builds weights 1/sigma_i^2 from per-coordinate length scales.
    static KernelSpec weighted_gaussian(const Vector& sigmas);

    /// Throws InvalidArgument if the parameters are out of range.
    void validate() const;
};

/// Kernel value k(a, b).
[[nodiscard]] double eval_kernel(const KernelSpec& spec, const Eigen::Ref<const Vector>& a,
                                 const Eigen::Ref<const Vector>& b);

/// Gram matrix over a point set. Points are the columns of `points`.
struct GramMatrix {
    Matrix points;
    Matrix matrix;
    KernelSpec kernel;

    [[nodiscard]] Index size() const noexcept { return matrix.rows(); }
};

/// Upper triangle is evaluated and mirrored, so the result is exactly symmetric.
[[nodiscard]] GramMatrix gram(const KernelSpec& spec, const Matrix& points);

/// Component i is k(z, points.col(i)).
[[nodiscard]] Vector kernel_vector(const KernelSpec& spec, const Eigen::Ref<const Vector>& z,
                                   const Matrix& points);

/// Jacobian of kernel_vector with respect to z: row i is the gradient of
/// k(z, points.col(i)).
[[nodiscard]] Matrix kernel_vector_jacobian(const KernelSpec& spec,
                                            const Eigen::Ref<const Vector>& z,
                                            const Matrix& points);

/// ku ⊗ kx with u-outer / x-inner ordering.
[[nodiscard]] Vector product_kernel_vector(const Eigen::Ref<const Vector>& ku_vec,
                                           const Eigen::Ref<const Vector>& kx_vec);

}  // namespace kerodeepc::kernels
