#include <cmath>

#include <gtest/gtest.h>

#include "kerodeepc/controller.hpp"
#include "test_support.hpp"

using namespace kerodeepc;
using namespace kerodeepc::controller;
using kerodeepc::kernels::KernelSpec;
using kerodeepc::predictor::ProductPredictor;
using kerodeepc::testing::random_vector;
using kerodeepc::testing::small_vdp_dataset;

namespace {

Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }

/// Tu < p·N so that the null space of Ω(x)·Y† is nontrivial.
ProductPredictor wide_predictor(Index tu = 3, Index tx = 4, Index horizon = 6) {
    return ProductPredictor::fit(small_vdp_dataset(tu, tx, horizon, 21), KernelSpec::gaussian(2.0),
                                 KernelSpec::gaussian(1.0));
}

ControlConfig config_for(Index horizon, double lambda = 1.0) {
    auto cfg = ControlConfig::defaults(1, 1, horizon);
    cfg.lambda = lambda;
    cfg.solver.tol_kkt = 1e-9;
    cfg.solver.tol_eq = 1e-9;
    cfg.solver.max_inner = 2000;
    return cfg;
}

}  // namespace

TEST(Reference, PiecewiseConstantWindow) {
    PiecewiseConstantReference ref{{0, 3}, {Vector::Constant(1, 0.5), Vector::Constant(1, -0.5)}};
    EXPECT_EQ(ref.at(2)(0), 0.5);
    EXPECT_EQ(ref.at(3)(0), -0.5);
    const Vector w = ref.window(0, 4);
    EXPECT_EQ(w, (Vector(4) << 0.5, 0.5, -0.5, -0.5).finished());
}

TEST(ControlConfig, RejectsBadWeights) {
    auto cfg = ControlConfig::defaults(1, 1, 5);
    cfg.r(0, 0) = 0.0;
    EXPECT_THROW(cfg.validate(1, 1), InvalidArgument);
    cfg = ControlConfig::defaults(1, 1, 5);
    cfg.lambda = 0.0;
    EXPECT_THROW(cfg.validate(1, 1), InvalidArgument);
    cfg = ControlConfig::defaults(1, 1, 5);
    cfg.u_lower(0) = 2.0;
    EXPECT_THROW(cfg.validate(1, 1), InvalidArgument);
}

TEST(TrackingCost, HandValueAndGradient) {
    auto cfg = ControlConfig::defaults(1, 1, 2);
    cfg.p(0, 0) = 3.0;
    const Vector u = v2(0.5, -1.0), y = v2(1.0, 2.0), r = v2(0.0, 1.0);
    // 1·1² + 3·1² + 0.01·(0.25 + 1)
    EXPECT_NEAR(tracking_cost(cfg, u, y, r), 4.0125, 1e-14);
    Vector gu, gy;
    (void)tracking_cost(cfg, u, y, r, &gu, &gy);
    for (Index i = 0; i < 2; ++i) {
        Vector up = u, um = u, yp = y, ym = y;
        up(i) += 1e-6;
        um(i) -= 1e-6;
        yp(i) += 1e-6;
        ym(i) -= 1e-6;
        EXPECT_NEAR(gu(i), (tracking_cost(cfg, up, y, r) - tracking_cost(cfg, um, y, r)) / 2e-6, 1e-7);
        EXPECT_NEAR(gy(i), (tracking_cost(cfg, u, yp, r) - tracking_cost(cfg, u, ym, r)) / 2e-6, 1e-7);
    }
}

TEST(EfficientStep, NullSpaceBasisAnnihilatesConstraint) {
    const auto pred = wide_predictor();
    const auto ops = efficient_operators(pred, v2(0.2, -0.3));
    ASSERT_EQ(ops.null_basis.cols(), 3);
    EXPECT_LT((ops.constraint * ops.null_basis).lpNorm<Eigen::Infinity>(), 1e-10);
    const auto sol = solve_efficient_step(pred, v2(0.2, -0.3), config_for(6), Vector::Constant(6, 0.3));
    EXPECT_LT((ops.constraint * sol.g).lpNorm<Eigen::Infinity>(), 1e-10);
    EXPECT_FALSE(sol.pure_prediction);
}

TEST(EfficientStep, PlanIsConsistentWithReducedPrediction) {
    const auto pred = wide_predictor();
    const Vector x = v2(-0.4, 0.1);
    const auto sol = solve_efficient_step(pred, x, config_for(6), Vector::Constant(6, 0.4));
    EXPECT_LT((sol.y_plan - pred.predict_reduced(sol.u_plan, x) - sol.g).norm(), 1e-10);
}

TEST(EfficientStep, LargeLambdaRecoversPrediction) {
    const auto pred = wide_predictor();
    const Vector x = v2(0.3, 0.2);
    const Vector ref = Vector::Constant(6, -0.4);
    double previous = std::numeric_limits<double>::infinity();
    for (double lambda : {1e-2, 1.0, 1e2, 1e4, 1e6}) {
        const auto sol = solve_efficient_step(pred, x, config_for(6, lambda), ref);
        ASSERT_TRUE(sol.result.converged()) << "lambda " << lambda;
        const double gnorm = sol.g.norm();
        EXPECT_LE(gnorm, previous + 1e-8) << "lambda " << lambda;
        previous = gnorm;
        if (lambda >= 1e6) {
            EXPECT_LT((sol.y_plan - pred.predict_reduced(sol.u_plan, x)).norm(), 1e-5);
        }
    }
}

TEST(EfficientStep, TrivialNullSpaceIsPurePrediction) {
    const auto pred = ProductPredictor::fit(small_vdp_dataset(8, 3, 4, 5), KernelSpec::gaussian(2.0),
                                            KernelSpec::gaussian(1.0));
    const auto sol = solve_efficient_step(pred, v2(0, 0), config_for(4), Vector::Constant(4, 0.2));
    EXPECT_TRUE(sol.pure_prediction);
    EXPECT_EQ(sol.null_dim, 0);
    EXPECT_EQ(sol.g.norm(), 0.0);
}

TEST(EfficientStep, RespectsInputBox) {
    const auto pred = wide_predictor();
    auto cfg = config_for(6);
    cfg.u_lower(0) = -0.1;
    cfg.u_upper(0) = 0.1;
    const auto sol = solve_efficient_step(pred, v2(0.5, 0), cfg, Vector::Constant(6, 3.0));
    EXPECT_LE(sol.u_plan.maxCoeff(), 0.1 + 1e-12);
    EXPECT_GE(sol.u_plan.minCoeff(), -0.1 - 1e-12);
}

TEST(EfficientStep, WarmStartDoesNotIncreaseObjective) {
    const auto pred = wide_predictor();
    const Vector x = v2(0.1, 0.1), ref = Vector::Constant(6, 0.25);
    const auto cfg = config_for(6);
    const auto first = solve_efficient_step(pred, x, cfg, ref);
    const auto second = solve_efficient_step(pred, x, cfg, ref, &first);
    EXPECT_LE(second.result.objective_value, first.result.objective_value + 1e-9);
}

TEST(EfficientStep, OutputBoundsAreEnforced) {
    const auto pred = wide_predictor();
    auto cfg = config_for(6);
    cfg.y_lower = Vector::Constant(1, -std::numeric_limits<double>::infinity());
    cfg.y_upper = Vector::Constant(1, 0.05);
    const auto sol = solve_efficient_step(pred, v2(0, 0), cfg, Vector::Constant(6, 1.0));
    EXPECT_LE(sol.y_plan.maxCoeff(), 0.05 + 1e-5);
}

TEST(FullStep, AgreesWithEfficientOnSmallProblem) {
    const auto pred = ProductPredictor::fit(small_vdp_dataset(4, 4, 3, 8), KernelSpec::gaussian(2.0),
                                            KernelSpec::gaussian(1.0), 1e-3, 1e-3);
    const Vector x = v2(0.2, 0.0), ref = Vector::Constant(3, 0.3);
    auto cfg = config_for(3, 1e-6);
    cfg.solver.tol_kkt = 1e-7;
    cfg.solver.tol_eq = 1e-8;
    const auto eff = solve_efficient_step(pred, x, cfg, ref);
    const auto full = solve_full_step(pred, x, cfg, ref);
    EXPECT_LT((full.y_plan - pred.predict_product(full.u_plan, x)).norm(), 1e-4);
    EXPECT_LT((eff.u_plan - full.u_plan).lpNorm<Eigen::Infinity>(), 1e-2);
}

TEST(FullStep, StackedPlanSatisfiesDataConsistency) {
    plant::VanDerPolPlant vdp;
    std::mt19937_64 rng(9);
    auto data = datagen::generate_stacked_data(vdp, v2(0.1, 0), kerodeepc::testing::random_matrix(1, 14, rng), 3);
    const auto pred = predictor::StackedPredictor::fit(
        data, KernelSpec::weighted_gaussian((Vector(5) << 3, 3, 2, 2, 2).finished()), 1e-3);
    const Vector x = v2(0.1, 0.0);
    const auto sol = solve_full_step(pred, x, config_for(3, 1e-4), Vector::Constant(3, 0.2));
    EXPECT_LT((pred.kz_matrix() * sol.g - pred.kz_vector(sol.u_plan, x)).lpNorm<Eigen::Infinity>(), 1e-5);
    EXPECT_LT((pred.y() * sol.g - sol.y_plan).lpNorm<Eigen::Infinity>(), 1e-5);
}

TEST(Nmpc, RolloutJacobianMatchesFiniteDifferences) {
    plant::VanDerPolPlant vdp;
    std::mt19937_64 rng(10);
    const Vector x = v2(0.6, -0.2), u = random_vector(5, rng, 0.5);
    Matrix jac;
    (void)rollout_outputs(vdp, x, u, &jac);
    for (Index d = 0; d < 5; ++d) {
        Vector up = u, um = u;
        up(d) += 1e-6;
        um(d) -= 1e-6;
        const Vector fd = (rollout_outputs(vdp, x, up) - rollout_outputs(vdp, x, um)) / 2e-6;
        EXPECT_LT((jac.col(d) - fd).lpNorm<Eigen::Infinity>(), 1e-7);
    }
}

TEST(Nmpc, StaysAtEquilibrium) {
    plant::VanDerPolPlant vdp;
    const auto sol = solve_nmpc_step(vdp, v2(0, 0), config_for(8), Vector::Zero(8));
    EXPECT_LT(sol.u_plan.lpNorm<Eigen::Infinity>(), 1e-8);
}

TEST(Nmpc, RecoversFeasibleReference) {
    plant::VanDerPolPlant vdp;
    std::mt19937_64 rng(11);
    const Vector x = v2(0.3, 0.1), u_true = random_vector(6, rng, 0.5);
    const Vector ref = rollout_outputs(vdp, x, u_true);
    auto cfg = config_for(6);
    cfg.r(0, 0) = 1e-10;
    const auto sol = solve_nmpc_step(vdp, x, cfg, ref);
    EXPECT_LT(sol.cost, 1e-8);
}

TEST(ClosedLoop, NmpcDrivesOutputToZero) {
    plant::VanDerPolPlant vdp;
    NmpcController ctrl(vdp, config_for(10));
    const auto res = run_receding_horizon(vdp, ctrl, PiecewiseConstantReference::constant(Vector::Zero(1)),
                                          60, v2(0.5, 0.0));
    EXPECT_LT(std::abs(res.measured_outputs(0, 59)), 0.05);
    EXPECT_EQ(res.states.cols(), 61);
    EXPECT_EQ(res.applied_inputs.cols(), 60);
}

TEST(ClosedLoop, AppliedInputsStayInBox) {
    plant::VanDerPolPlant vdp;
    const auto pred = wide_predictor(4, 5, 6);
    auto cfg = config_for(6);
    cfg.u_lower(0) = -0.3;
    cfg.u_upper(0) = 0.3;
    EfficientController ctrl(pred, cfg);
    PiecewiseConstantReference ref{{0, 10}, {Vector::Constant(1, 2.0), Vector::Constant(1, -2.0)}};
    const auto res = run_receding_horizon(vdp, ctrl, ref, 20, v2(0.0, 0.0));
    EXPECT_LE(res.applied_inputs.maxCoeff(), 0.3);
    EXPECT_GE(res.applied_inputs.minCoeff(), -0.3);
    EXPECT_EQ(res.statuses.size(), 20u);
    double err = 0.0;
    for (Index k = 0; k < 20; ++k) err += std::abs(res.measured_outputs(0, k) - res.references(0, k));
    EXPECT_NEAR(res.mean_tracking_error, err / 20.0, 1e-12);
}

TEST(ClosedLoop, ShiftMovesPlanForward) {
    plant::VanDerPolPlant vdp;
    NmpcController ctrl(vdp, config_for(3));
    StepSolution prev;
    prev.u_plan = (Vector(3) << 1, 2, 3).finished();
    const auto next = ctrl.shift(prev);
    EXPECT_EQ(next.u_plan, (Vector(3) << 2, 3, 3).finished());
}
