#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kerodeepc/numerics.hpp"
#include "kerodeepc/plant.hpp"
#include "kerodeepc/predictor.hpp"
#include "kerodeepc/solver.hpp"

namespace kerodeepc::controller {

/// Output reference that holds values[i] from steps[i] (inclusive) onward.
struct PiecewiseConstantReference {
    std::vector<Index> steps;
    std::vector<Vector> values;

    /// Reference at time k; values[0] before steps[0].
    [[nodiscard]] Vector at(Index k) const;
    /// Stacked col(r_{k+1}, ..., r_{k+N}).
    [[nodiscard]] Vector window(Index k, Index horizon) const;
    /// Single constant value for every k.
    static PiecewiseConstantReference constant(const Vector& value);
};

struct ControlConfig {
    Index horizon = 10;
    Matrix q;  ///< p × p stage weight
    Matrix r;  ///< m × m input weight
    Matrix p;  ///< p × p terminal weight
    double lambda = 1.0;
    Vector u_lower, u_upper;  ///< per input coordinate
    Vector y_lower, y_upper;  ///< per output coordinate, ±inf for none; empty means unbounded
    Vector ref_u;             ///< input reference, default zero
    solver::SolverOptions solver;

    /// Weights Q = P = I, R = 0.01·I, λ = 1, |u| ≤ 1, no output bounds.
    static ControlConfig defaults(Index m, Index p, Index horizon);

    /// Throws InvalidArgument unless P, Q, R ≻ 0, λ > 0 and the bounds are consistent.
    void validate(Index m, Index p) const;
    [[nodiscard]] bool has_output_bounds() const;
};

/// Result of one receding-horizon optimization.
struct StepSolution {
    Vector u_plan;   ///< col(u_{0|k}, ..., u_{N-1|k})
    Vector y_plan;   ///< col(y_{1|k}, ..., y_{N|k})
    Vector g;        ///< g̃ (efficient) or g (full); empty for NMPC
    Vector xi;       ///< null-space coordinates of g̃ (efficient only)
    Index null_dim = 0;
    /// Efficient formulation with a trivial null space: g̃ ≡ 0 and the problem is
    /// plain operator-prediction MPC.
    bool pure_prediction = false;
    double solve_time = 0.0;
    double cost = 0.0;  ///< tracking cost without the regularizer
    solver::NlpResult result;
};

/// Tracking cost Σ_{i<N}(y_i−r_i)ᵀQ(·) + (y_N−r_N)ᵀP(·) + Σ(u_i−r^u)ᵀR(·).
[[nodiscard]] double tracking_cost(const ControlConfig& cfg, const Vector& u, const Vector& y,
                                   const Vector& ref, Vector* grad_u = nullptr,
                                   Vector* grad_y = nullptr);

/// Efficient (reduced) formulation. g̃ is parameterized as Nb·ξ with Nb an
/// orthonormal basis of N(Ω(x)·Y†), and y is eliminated as M(x)·ku(u) + g̃.
/// `warm` supplies the initial u (and g̃, which is re-projected onto the new basis).
[[nodiscard]] StepSolution solve_efficient_step(const predictor::ProductPredictor& pred,
                                                const Eigen::Ref<const Vector>& x,
                                                const ControlConfig& cfg, const Vector& ref,
                                                const StepSolution* warm = nullptr);

/// The building blocks of the efficient problem at state x.
struct EfficientOperators {
    Matrix reduced_map;  ///< M(x) = Y·Ω†(x)
    Matrix constraint;   ///< A(x) = Ω(x)·Y†
    Matrix null_basis;   ///< orthonormal basis of N(A(x))
};
[[nodiscard]] EfficientOperators efficient_operators(const predictor::ProductPredictor& pred,
                                                     const Eigen::Ref<const Vector>& x);

/// Full formulation in (u, y, g) with K⊗·g = k⊗(u, x) and Y·g = y, K⊗ materialized.
[[nodiscard]] StepSolution solve_full_step(const predictor::ProductPredictor& pred,
                                           const Eigen::Ref<const Vector>& x,
                                           const ControlConfig& cfg, const Vector& ref,
                                           const StepSolution* warm = nullptr);

/// Full formulation with the stacked kernel: Kz·g = kz(col(x, u)), Y·g = y.
[[nodiscard]] StepSolution solve_full_step(const predictor::StackedPredictor& pred,
                                           const Eigen::Ref<const Vector>& x,
                                           const ControlConfig& cfg, const Vector& ref,
                                           const StepSolution* warm = nullptr);

/// Single-shooting NMPC on the true plant model.
[[nodiscard]] StepSolution solve_nmpc_step(const plant::Plant& plant,
                                           const Eigen::Ref<const Vector>& x,
                                           const ControlConfig& cfg, const Vector& ref,
                                           const StepSolution* warm = nullptr);

/// Simulated outputs over the horizon and their Jacobian with respect to the stacked inputs.
[[nodiscard]] Vector rollout_outputs(const plant::Plant& plant, const Eigen::Ref<const Vector>& x,
                                     const Vector& u, Matrix* jac = nullptr);

/// Common interface for the closed-loop runner.
class Controller {
public:
    virtual ~Controller() = default;
    [[nodiscard]] virtual std::string name() const = 0;
    [[nodiscard]] virtual StepSolution solve(const Eigen::Ref<const Vector>& x, const Vector& ref,
                                             const StepSolution* warm) const = 0;
    /// Shifted warm start for the next step.
    [[nodiscard]] virtual StepSolution shift(const StepSolution& previous) const;
    [[nodiscard]] const ControlConfig& config() const noexcept { return cfg_; }

protected:
    explicit Controller(ControlConfig cfg) : cfg_(std::move(cfg)) {}
    ControlConfig cfg_;
};

class EfficientController final : public Controller {
public:
    EfficientController(const predictor::ProductPredictor& pred, ControlConfig cfg);
    [[nodiscard]] std::string name() const override { return "efficient"; }
    [[nodiscard]] StepSolution solve(const Eigen::Ref<const Vector>& x, const Vector& ref,
                                     const StepSolution* warm) const override;

private:
    const predictor::ProductPredictor& pred_;
};

class FullProductController final : public Controller {
public:
    FullProductController(const predictor::ProductPredictor& pred, ControlConfig cfg);
    [[nodiscard]] std::string name() const override { return "full-product"; }
    [[nodiscard]] StepSolution solve(const Eigen::Ref<const Vector>& x, const Vector& ref,
                                     const StepSolution* warm) const override;

private:
    const predictor::ProductPredictor& pred_;
};

class FullStackedController final : public Controller {
public:
    FullStackedController(const predictor::StackedPredictor& pred, ControlConfig cfg);
    [[nodiscard]] std::string name() const override { return "full-stacked"; }
    [[nodiscard]] StepSolution solve(const Eigen::Ref<const Vector>& x, const Vector& ref,
                                     const StepSolution* warm) const override;

private:
    const predictor::StackedPredictor& pred_;
};

class NmpcController final : public Controller {
public:
    NmpcController(const plant::Plant& model, ControlConfig cfg);
    [[nodiscard]] std::string name() const override { return "nmpc"; }
    [[nodiscard]] StepSolution solve(const Eigen::Ref<const Vector>& x, const Vector& ref,
                                     const StepSolution* warm) const override;

private:
    const plant::Plant& model_;
};

struct TrackingResult {
    Matrix applied_inputs;    ///< m × steps
    Matrix measured_outputs;  ///< p × steps, y_{k+1} after applying u_k
    Matrix references;        ///< p × steps, r_{k+1}
    Matrix states;            ///< n × (steps + 1), starting with x_init
    std::vector<double> solve_times;
    std::vector<solver::Status> statuses;
    std::vector<std::string> failures;  ///< empty string when the step solved without exception
    double mean_tracking_error = 0.0;   ///< (1/steps)·Σ‖y_{k+1} − r_{k+1}‖₂
    double mean_solve_time = 0.0;
    Index non_converged = 0;
};

/// Receding-horizon loop: measure x_k, solve, apply the (box-clamped) first input.
/// A step whose solve throws or yields a non-finite plan holds the previous input.
[[nodiscard]] TrackingResult run_receding_horizon(const plant::Plant& plant,
                                                  const Controller& controller,
                                                  const PiecewiseConstantReference& reference,
                                                  Index steps, const Eigen::Ref<const Vector>& x_init);

}  // namespace kerodeepc::controller
