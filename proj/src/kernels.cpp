#include "kerodeepc/kernels.hpp"

#include <cmath>

namespace kerodeepc::kernels {

std::string to_string(Family family) {
    switch (family) {
        case Family::Gaussian: return "gaussian";
        case Family::HardyReverseMultiquadric: return "hardy";
        case Family::Linear: return "linear";
        case Family::WeightedGaussian: return "weighted_gaussian";
    }
    return "unknown";
}

Family family_from_string(const std::string& name) {
    if (name == "gaussian") return Family::Gaussian;
    if (name == "hardy") return Family::HardyReverseMultiquadric;
    if (name == "linear") return Family::Linear;
    if (name == "weighted_gaussian") return Family::WeightedGaussian;
    throw InvalidArgument("unknown kernel family '" + name + "'");
}

KernelSpec KernelSpec::gaussian(double sigma) {
    KernelSpec s;
    s.family = Family::Gaussian;
    s.sigma = sigma;
    s.validate();
    return s;
}

KernelSpec KernelSpec::hardy(double sigma, double exponent) {
    KernelSpec s;
    s.family = Family::HardyReverseMultiquadric;
    s.sigma = sigma;
    s.exponent = exponent;
    s.validate();
    return s;
}

KernelSpec KernelSpec::linear() {
    KernelSpec s;
    s.family = Family::Linear;
    return s;
}

KernelSpec KernelSpec::weighted_gaussian(const Vector& sigmas) {
    KernelSpec s;
    s.family = Family::WeightedGaussian;
    if ((sigmas.array() <= 0.0).any()) {
        throw InvalidArgument("weighted gaussian: length scales must be positive");
    }
    s.weights = sigmas.array().square().inverse();
    s.validate();
    return s;
}

void KernelSpec::validate() const {
    switch (family) {
        case Family::Gaussian:
        case Family::HardyReverseMultiquadric:
            if (!(sigma > 0.0) || !std::isfinite(sigma)) {
                throw InvalidArgument("kernel sigma must be positive and finite");
            }
            break;
        case Family::WeightedGaussian:
            if (weights.size() == 0 || !weights.allFinite() || (weights.array() <= 0.0).any()) {
                throw InvalidArgument("weighted gaussian weights must be positive and finite");
            }
            break;
        case Family::Linear:
            break;
    }
}

namespace {

void check_dims(const KernelSpec& spec, Index a, Index b) {
    if (a != b) {
        throw DimensionError("kernel arguments have different lengths (" + std::to_string(a) +
                             " vs " + std::to_string(b) + ")");
    }
    if (spec.family == Family::WeightedGaussian && spec.weights.size() != a) {
        throw DimensionError("weighted gaussian has " + std::to_string(spec.weights.size()) +
                             " weights for " + std::to_string(a) + "-dimensional points");
    }
}

double eval_unchecked(const KernelSpec& spec, const Eigen::Ref<const Vector>& a,
                      const Eigen::Ref<const Vector>& b) {
    switch (spec.family) {
        case Family::Gaussian:
            return std::exp(-(a - b).squaredNorm() / (spec.sigma * spec.sigma));
        case Family::HardyReverseMultiquadric:
            return std::pow(1.0 + (a - b).squaredNorm() / (spec.sigma * spec.sigma),
                            spec.exponent);
        case Family::Linear:
            return a.dot(b);
        case Family::WeightedGaussian:
            return std::exp(-(spec.weights.array() * (a - b).array().square()).sum());
    }
    return 0.0;
}

}  // namespace

double eval_kernel(const KernelSpec& spec, const Eigen::Ref<const Vector>& a,
                   const Eigen::Ref<const Vector>& b) {
    check_dims(spec, a.size(), b.size());
    return eval_unchecked(spec, a, b);
}

GramMatrix gram(const KernelSpec& spec, const Matrix& points) {
    if (points.cols() < 1) {
        throw InvalidArgument("gram: need at least one point");
    }
    check_dims(spec, points.rows(), points.rows());
    const Index t = points.cols();
    Matrix k(t, t);
    for (Index j = 0; j < t; ++j) {
        k(j, j) = eval_unchecked(spec, points.col(j), points.col(j));
        for (Index i = 0; i < j; ++i) {
            k(i, j) = eval_unchecked(spec, points.col(i), points.col(j));
        }
    }
    k.triangularView<Eigen::StrictlyLower>() = k.transpose();
    return GramMatrix{points, std::move(k), spec};
}

Vector kernel_vector(const KernelSpec& spec, const Eigen::Ref<const Vector>& z,
                     const Matrix& points) {
    check_dims(spec, z.size(), points.rows());
    Vector out(points.cols());
    for (Index i = 0; i < points.cols(); ++i) {
        out(i) = eval_unchecked(spec, z, points.col(i));
    }
    return out;
}

Matrix kernel_vector_jacobian(const KernelSpec& spec, const Eigen::Ref<const Vector>& z,
                              const Matrix& points) {
    check_dims(spec, z.size(), points.rows());
    Matrix jac(points.cols(), z.size());
    const double inv_s2 = 1.0 / (spec.sigma * spec.sigma);
    for (Index i = 0; i < points.cols(); ++i) {
        const Vector diff = z - points.col(i);
        switch (spec.family) {
            case Family::Gaussian: {
                const double k = std::exp(-diff.squaredNorm() * inv_s2);
                jac.row(i) = (-2.0 * inv_s2 * k) * diff.transpose();
                break;
            }
            case Family::HardyReverseMultiquadric: {
                const double base = 1.0 + diff.squaredNorm() * inv_s2;
                const double scale =
                    spec.exponent * std::pow(base, spec.exponent - 1.0) * 2.0 * inv_s2;
                jac.row(i) = scale * diff.transpose();
                break;
            }
            case Family::Linear:
                jac.row(i) = points.col(i).transpose();
                break;
            case Family::WeightedGaussian: {
                const double k = std::exp(-(spec.weights.array() * diff.array().square()).sum());
                jac.row(i) = (-2.0 * k) * (spec.weights.array() * diff.array()).matrix().transpose();
                break;
            }
        }
    }
    return jac;
}

Vector product_kernel_vector(const Eigen::Ref<const Vector>& ku_vec,
                             const Eigen::Ref<const Vector>& kx_vec) {
    const Index tx = kx_vec.size();
    Vector out(ku_vec.size() * tx);
    for (Index j = 0; j < ku_vec.size(); ++j) {
        out.segment(j * tx, tx) = ku_vec(j) * kx_vec;
    }
    return out;
}

}  // namespace kerodeepc::kernels
