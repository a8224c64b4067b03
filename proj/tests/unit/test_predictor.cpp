#include <gtest/gtest.h>

#include "kerodeepc/predictor.hpp"
#include "test_support.hpp"

using namespace kerodeepc;
using namespace kerodeepc::predictor;
using kerodeepc::kernels::KernelSpec;
using kerodeepc::testing::kron_loops;
using kerodeepc::testing::random_matrix;
using kerodeepc::testing::random_vector;
using kerodeepc::testing::small_vdp_dataset;

namespace {

ProductPredictor small_predictor(Index tu, Index tx, Index horizon, double jitter = -1.0) {
    return ProductPredictor::fit(small_vdp_dataset(tu, tx, horizon, 42), KernelSpec::gaussian(2.0),
                                 KernelSpec::gaussian(1.0), jitter, jitter);
}

/// Y · K⊗⁻¹ · k⊗ with K⊗ formed entry by entry and inverted densely.
Vector dense_oracle(const ProductPredictor& p, const Vector& u, const Vector& x) {
    const Matrix k = kron_loops(p.ku_matrix(), p.kx_matrix());
    const Vector kv = kron_loops(p.ku_vector(u), p.kx_vector(x)).col(0);
    return p.y() * k.fullPivLu().solve(kv);
}

}  // namespace

TEST(ProductPredictor, ScalarCase) {
    auto d = small_vdp_dataset(1, 1, 3, 1);
    const auto p = ProductPredictor::fit(d, KernelSpec::gaussian(1.0), KernelSpec::gaussian(1.0), 0.0, 0.0);
    // Θ* = Y / (ku11 · kx11) = Y, and a query at the training pair reproduces Y.
    EXPECT_LT((p.predict_product(d.u.col(0), d.x0.col(0)) - d.y.col(0)).norm(), 1e-15);
}

TEST(ProductPredictor, MatchesDenseOracle) {
    const auto p = small_predictor(5, 5, 4);
    std::mt19937_64 rng(1);
    for (int q = 0; q < 10; ++q) {
        const Vector u = random_vector(4, rng), x = random_vector(2, rng, 2.0);
        const Vector ref = dense_oracle(p, u, x);
        EXPECT_LT((p.predict_product(u, x) - ref).norm(), 1e-8 * std::max(1.0, ref.norm()));
    }
}

TEST(ProductPredictor, InterpolatesTrainingPairsAtZeroJitter) {
    const auto p = small_predictor(4, 3, 3, 0.0);
    const auto& d = p.dataset();
    for (Index j = 0; j < d.tu(); ++j)
        for (Index i = 0; i < d.tx(); ++i)
            EXPECT_LT((p.predict_product(d.u.col(j), d.x0.col(i)) - d.y.col(d.column_index(j, i)))
                          .lpNorm<Eigen::Infinity>(),
                      1e-8 * d.y.lpNorm<Eigen::Infinity>());
}

TEST(ProductPredictor, DuplicateInputSequenceWithoutJitterFails) {
    auto d = small_vdp_dataset(3, 2, 3, 2);
    d.u.col(2) = d.u.col(0);
    d.y = datagen::generate_dataset(plant::VanDerPolPlant(), d.x0, d.u, 3).y;
    EXPECT_THROW((void)ProductPredictor::fit(d, KernelSpec::gaussian(1.0), KernelSpec::gaussian(1.0), 0.0, 0.0),
                 FactorizationError);
    EXPECT_NO_THROW((void)ProductPredictor::fit(d, KernelSpec::gaussian(1.0), KernelSpec::gaussian(1.0), 1e-6, 0.0));
}

TEST(ProductPredictor, JitterIsAppliedPerFactor) {
    const auto p = small_predictor(4, 3, 2, 1e-3);
    const auto raw = kernels::gram(KernelSpec::gaussian(2.0), p.dataset().u).matrix;
    EXPECT_LT((p.ku_matrix() - raw - 1e-3 * Matrix::Identity(4, 4)).norm(), 1e-15);
    EXPECT_DOUBLE_EQ(p.ku().jitter(), 1e-3);
}

TEST(Omega, FactoredFormMatchesDefinition) {
    const auto p = small_predictor(4, 4, 3);
    std::mt19937_64 rng(2);
    const Vector x = random_vector(2, rng);
    const auto om = p.omega(x);
    const Vector kx = p.kx_vector(x);
    const Matrix lhs = kron_loops(Matrix::Identity(4, 4), (kx / kx.squaredNorm()).transpose());
    const Matrix definition = lhs * kron_loops(p.ku_matrix(), p.kx_matrix());
    EXPECT_LT((p.omega_matrix(om) - definition).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Omega, RightInverseIdentity) {
    const auto p = small_predictor(6, 5, 3);
    std::mt19937_64 rng(3);
    for (int q = 0; q < 20; ++q) {
        const auto om = p.omega(random_vector(2, rng, 2.0));
        const Matrix prod = p.omega_matrix(om) * p.omega_pinv_matrix(om);
        EXPECT_LT((prod - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Omega, PinvMatchesSvdOracleOnRowSpace) {
    const auto p = small_predictor(4, 4, 3);
    std::mt19937_64 rng(4);
    const auto om = p.omega(random_vector(2, rng));
    const Matrix omega = p.omega_matrix(om);
    const Matrix svd_pinv = numerics::pinv(omega);
    // Both are right inverses; they agree once projected onto the row space of Ω.
    const Matrix proj = svd_pinv * omega;
    EXPECT_LT((proj * p.omega_pinv_matrix(om) - svd_pinv).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Omega, SingleInitialStateCollapsesToKu) {
    const auto d = small_vdp_dataset(4, 1, 3, 5);
    const auto p = ProductPredictor::fit(d, KernelSpec::gaussian(2.0), KernelSpec::gaussian(1.0), -1.0, 0.0);
    const auto om = p.omega(d.x0.col(0));
    EXPECT_LT((p.omega_matrix(om) - p.ku_matrix()).norm(), 1e-14);
    EXPECT_LT((p.omega_pinv_matrix(om) - p.ku().inverse()).norm(), 1e-9);
}

TEST(ReducedPredictor, EqualsProductPredictor) {
    const auto p = small_predictor(8, 6, 4);
    std::mt19937_64 rng(5);
    for (int q = 0; q < 100; ++q) {
        const Vector u = random_vector(4, rng), x = random_vector(2, rng, 2.0);
        const Vector a = p.predict_product(u, x), b = p.predict_reduced(u, x);
        EXPECT_LT((a - b).norm(), 1e-9 * std::max(1.0, a.norm()));
    }
}

TEST(ReducedPredictor, ReducedMapMatchesDenseProduct) {
    const auto p = small_predictor(4, 3, 2);
    std::mt19937_64 rng(6);
    const auto om = p.omega(random_vector(2, rng));
    EXPECT_LT((p.reduced_map(om) - p.y() * p.omega_pinv_matrix(om)).norm(), 1e-10);
    EXPECT_LT((p.omega_times_y_pinv(om) - p.omega_matrix(om) * p.y_pinv()).norm(), 1e-10);
}

TEST(ReducedPredictor, LinearKernelRecoversLtiPredictionsExactly) {
    // Tx = 1 at the origin, linear ku, Tu = m·N generic input sequences.
    std::mt19937_64 rng(7);
    plant::LtiPlant lti((Matrix(2, 2) << 0.9, 0.2, -0.1, 0.8).finished(),
                        (Matrix(2, 1) << 0.0, 1.0).finished(), (Matrix(1, 2) << 1.0, 0.0).finished());
    const Index horizon = 5;
    const Matrix u = random_matrix(horizon, horizon, rng);
    const auto d = datagen::generate_dataset(lti, Vector::Zero(2), u, horizon);
    const auto p = ProductPredictor::fit(d, KernelSpec::linear(), KernelSpec::gaussian(1.0), 0.0, 0.0);
    for (int q = 0; q < 10; ++q) {
        const Vector uq = random_vector(horizon, rng);
        const Vector truth = plant::simulate_stacked(lti, Vector::Zero(2), uq).stacked_outputs();
        EXPECT_LT((p.predict_reduced(uq, Vector::Zero(2)) - truth).norm(), 1e-8);
        EXPECT_LT((p.predict_product(uq, Vector::Zero(2)) - truth).norm(), 1e-8);
    }
}

TEST(ProductPredictor, KuJacobianMatchesFiniteDifferences) {
    const auto p = small_predictor(6, 3, 4);
    std::mt19937_64 rng(8);
    const Vector u = random_vector(4, rng);
    const Matrix jac = p.ku_jacobian(u);
    for (Index d = 0; d < 4; ++d) {
        Vector up = u, um = u;
        up(d) += 1e-6;
        um(d) -= 1e-6;
        const Vector fd = (p.ku_vector(up) - p.ku_vector(um)) / 2e-6;
        EXPECT_LT((jac.col(d) - fd).lpNorm<Eigen::Infinity>(), 1e-8);
    }
}

TEST(ProductPredictor, YRankDiagnostics) {
    const auto p = small_predictor(4, 3, 3);
    EXPECT_TRUE(p.y_full_row_rank());
    EXPECT_GT(p.y_min_singular_value(), 0.0);
    EXPECT_LT((p.y() * p.y_pinv() - Matrix::Identity(3, 3)).norm(), 1e-10);
}

TEST(Omega, RejectsVanishingKernelVector) {
    const auto d = small_vdp_dataset(3, 2, 2, 9);
    const auto p = ProductPredictor::fit(d, KernelSpec::gaussian(1.0), KernelSpec::linear(), -1.0, 1e-3);
    EXPECT_THROW((void)p.omega(Vector::Zero(2)), InvalidArgument);
}

TEST(StackedPredictor, InterpolatesAndMatchesDenseOracle) {
    plant::VanDerPolPlant vdp;
    std::mt19937_64 rng(10);
    const Matrix signal = random_matrix(1, 7, rng);
    auto data = datagen::generate_stacked_data(vdp, (Vector(2) << 0.3, 0.1).finished(), signal, 3);
    ASSERT_EQ(data.z.cols(), 5);
    const auto spec = KernelSpec::weighted_gaussian((Vector(5) << 1.0, 1.0, 2.0, 2.0, 2.0).finished());
    const auto p = StackedPredictor::fit(data, spec, 0.0);
    for (Index i = 0; i < 5; ++i) {
        const Vector x = data.z.col(i).head(2), u = data.z.col(i).tail(3);
        EXPECT_LT((p.predict(u, x) - data.y.col(i)).norm(), 1e-8);
    }
    const Vector x = random_vector(2, rng), u = random_vector(3, rng);
    const Matrix k = kernels::gram(spec, data.z).matrix;
    const Vector kz = kernels::kernel_vector(spec, p.stack(u, x), data.z);
    EXPECT_LT((p.predict(u, x) - data.y * k.fullPivLu().solve(kz)).norm(), 1e-8);
}

TEST(StackedPredictor, InputJacobianMatchesFiniteDifferences) {
    plant::VanDerPolPlant vdp;
    std::mt19937_64 rng(11);
    auto data = datagen::generate_stacked_data(vdp, Vector::Zero(2), random_matrix(1, 12, rng), 3);
    const auto p = StackedPredictor::fit(data, KernelSpec::weighted_gaussian(Vector::Constant(5, 1.5)));
    const Vector x = random_vector(2, rng), u = random_vector(3, rng);
    const Matrix jac = p.kz_jacobian_u(u, x);
    for (Index d = 0; d < 3; ++d) {
        Vector up = u, um = u;
        up(d) += 1e-6;
        um(d) -= 1e-6;
        EXPECT_LT((jac.col(d) - (p.kz_vector(up, x) - p.kz_vector(um, x)) / 2e-6).lpNorm<Eigen::Infinity>(),
                  1e-8);
    }
}
