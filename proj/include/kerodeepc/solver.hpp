#pragma once

#include <functional>
#include <string>

#include "kerodeepc/numerics.hpp"

namespace kerodeepc::solver {

/// min f(v)  s.t.  c(v) = 0,  lower <= v <= upper.
struct NlpProblem {
    /// Returns f(v); writes ∇f(v) into `grad` when it is non-null.
    using Objective = std::function<double(const Vector& v, Vector* grad)>;
    /// Writes c(v) into `c`; writes the (num_eq × dim) Jacobian into `jac` when non-null.
    using Constraints = std::function<void(const Vector& v, Vector& c, Matrix* jac)>;

    Index dim = 0;
    Objective objective;
    Index num_eq = 0;
    Constraints constraints;  ///< may be empty when num_eq == 0
    Vector lower;             ///< -inf allowed; empty means unbounded
    Vector upper;             ///< +inf allowed; empty means unbounded
    Vector v0;

    void validate() const;
};

enum class Status { Converged, MaxIter, Infeasible };

[[nodiscard]] std::string to_string(Status status);

struct NlpResult {
    Vector v_star;
    double objective_value = 0.0;
    double eq_residual = 0.0;   ///< ‖c(v*)‖∞
    double kkt_residual = 0.0;  ///< ‖P(v − ∇L) − v‖∞ with the final multipliers
    Status status = Status::MaxIter;
    Index iterations = 0;        ///< outer iterations
    Index inner_iterations = 0;  ///< total quasi-Newton iterations
    Vector multipliers;
    std::string message;

    [[nodiscard]] bool converged() const noexcept { return status == Status::Converged; }
};

struct SolverOptions {
    double tol_eq = 1e-6;
    double tol_kkt = 1e-6;
    Index max_outer = 200;
    Index max_inner = 500;
    double rho0 = 10.0;
    double rho_max = 1e10;
    Index lbfgs_memory = 10;
};

/// Augmented-Lagrangian outer loop with a projected L-BFGS inner solver.
/// Multipliers follow λ ← λ + ρ·c(v); ρ grows tenfold (capped at rho_max)
/// whenever ‖c‖∞ fails to shrink by a factor of 4. Deterministic.
[[nodiscard]] NlpResult solve_nlp(const NlpProblem& problem, const SolverOptions& options = {});

/// Largest relative mismatch between the supplied derivatives and central
/// differences at v: max over the objective gradient and every Jacobian entry
/// of |analytic − numeric| / max(1, |numeric|).
struct DerivativeCheck {
    double objective_error = 0.0;
    double constraint_error = 0.0;

    [[nodiscard]] double max_error() const noexcept {
        return objective_error > constraint_error ? objective_error : constraint_error;
    }
};

[[nodiscard]] DerivativeCheck check_derivatives(const NlpProblem& problem, const Vector& v,
                                                double step = 1e-6);

}  // namespace kerodeepc::solver
