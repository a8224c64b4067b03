#include "kerodeepc/controller.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace kerodeepc::controller {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool is_positive_definite(const Matrix& m) {
    if (m.rows() == 0 || m.rows() != m.cols()) return false;
    if (!m.isApprox(m.transpose(), 1e-12)) return false;
    Eigen::LLT<Matrix> llt(m);
    return llt.info() == Eigen::Success;
}

Vector repeat(const Vector& v, Index times) {
    Vector out(v.size() * times);
    for (Index i = 0; i < times; ++i) out.segment(i * v.size(), v.size()) = v;
    return out;
}

/// Box for the stacked input sequence.
void input_box(const ControlConfig& cfg, Vector& lo, Vector& hi) {
    lo = repeat(cfg.u_lower, cfg.horizon);
    hi = repeat(cfg.u_upper, cfg.horizon);
}

Vector initial_inputs(const ControlConfig& cfg, Index m, const StepSolution* warm) {
    Vector u;
    if (warm != nullptr && warm->u_plan.size() == m * cfg.horizon) {
        u = warm->u_plan;
    } else {
        u = repeat(cfg.ref_u.size() == m ? cfg.ref_u : Vector::Zero(m), cfg.horizon);
    }
    Vector lo, hi;
    input_box(cfg, lo, hi);
    return u.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace

// ---------------------------------------------------------------------------

Vector PiecewiseConstantReference::at(Index k) const {
    if (values.empty()) throw InvalidArgument("reference has no values");
    size_t idx = 0;
    for (size_t i = 0; i < steps.size() && i < values.size(); ++i) {
        if (k >= steps[i]) idx = i;
    }
    return values[idx];
}

Vector PiecewiseConstantReference::window(Index k, Index horizon) const {
    const Index p = at(k).size();
    Vector out(p * horizon);
    for (Index i = 0; i < horizon; ++i) out.segment(i * p, p) = at(k + 1 + i);
    return out;
}

PiecewiseConstantReference PiecewiseConstantReference::constant(const Vector& value) {
    return PiecewiseConstantReference{{0}, {value}};
}

ControlConfig ControlConfig::defaults(Index m, Index p, Index horizon) {
    ControlConfig c;
    c.horizon = horizon;
    c.q = Matrix::Identity(p, p);
    c.p = Matrix::Identity(p, p);
    c.r = 0.01 * Matrix::Identity(m, m);
    c.lambda = 1.0;
    c.u_lower = Vector::Constant(m, -1.0);
    c.u_upper = Vector::Constant(m, 1.0);
    c.ref_u = Vector::Zero(m);
    return c;
}

void ControlConfig::validate(Index m, Index p_dim) const {
    if (horizon < 1) throw InvalidArgument("control: horizon must be >= 1");
    if (q.rows() != p_dim || this->p.rows() != p_dim || r.rows() != m) {
        throw DimensionError("control: weight matrices have the wrong size");
    }
    if (!is_positive_definite(q) || !is_positive_definite(this->p) || !is_positive_definite(r)) {
        throw InvalidArgument("control: P, Q and R must be symmetric positive definite");
    }
    if (!(lambda > 0.0)) throw InvalidArgument("control: lambda must be positive");
    if (u_lower.size() != m || u_upper.size() != m) {
        throw DimensionError("control: input bounds must have one entry per input");
    }
    if ((u_lower.array() > u_upper.array()).any()) {
        throw InvalidArgument("control: input lower bound exceeds upper bound");
    }
    if (ref_u.size() != 0 && ref_u.size() != m) {
        throw DimensionError("control: input reference has the wrong size");
    }
    if (y_lower.size() != 0 || y_upper.size() != 0) {
        if (y_lower.size() != p_dim || y_upper.size() != p_dim) {
            throw DimensionError("control: output bounds must have one entry per output");
        }
        if ((y_lower.array() > y_upper.array()).any()) {
            throw InvalidArgument("control: output lower bound exceeds upper bound");
        }
    }
}

bool ControlConfig::has_output_bounds() const {
    return (y_lower.size() > 0 && (y_lower.array() > -kInf).any()) ||
           (y_upper.size() > 0 && (y_upper.array() < kInf).any());
}

double tracking_cost(const ControlConfig& cfg, const Vector& u, const Vector& y, const Vector& ref,
                     Vector* grad_u, Vector* grad_y) {
    const Index n = cfg.horizon;
    const Index p = cfg.q.rows();
    const Index m = cfg.r.rows();
    const Vector ru = cfg.ref_u.size() == m ? cfg.ref_u : Vector::Zero(m);
    double cost = 0.0;
    if (grad_u) grad_u->resize(m * n);
    if (grad_y) grad_y->resize(p * n);
    for (Index i = 0; i < n; ++i) {
        const Matrix& w = (i + 1 == n) ? cfg.p : cfg.q;
        const Vector ey = y.segment(i * p, p) - ref.segment(i * p, p);
        const Vector wy = w * ey;
        cost += ey.dot(wy);
        if (grad_y) grad_y->segment(i * p, p) = 2.0 * wy;
        const Vector eu = u.segment(i * m, m) - ru;
        const Vector wu = cfg.r * eu;
        cost += eu.dot(wu);
        if (grad_u) grad_u->segment(i * m, m) = 2.0 * wu;
    }
    return cost;
}

// ---------------------------------------------------------------------------
// Efficient formulation

EfficientOperators efficient_operators(const predictor::ProductPredictor& pred,
                                       const Eigen::Ref<const Vector>& x) {
    if (!pred.y_full_row_rank()) {
        throw InvalidArgument("efficient formulation needs Y with full row rank (smallest "
                              "singular value " +
                              std::to_string(pred.y_min_singular_value()) + ")");
    }
    const auto om = pred.omega(x);
    EfficientOperators ops;
    ops.reduced_map = pred.reduced_map(om);
    ops.constraint = pred.omega_times_y_pinv(om);
    ops.null_basis = numerics::nullspace_basis(ops.constraint);
    return ops;
}

StepSolution solve_efficient_step(const predictor::ProductPredictor& pred,
                                  const Eigen::Ref<const Vector>& x, const ControlConfig& cfg,
                                  const Vector& ref, const StepSolution* warm) {
    const auto t0 = Clock::now();
    const Index m = pred.dataset().m;
    const Index p = pred.dataset().p;
    cfg.validate(m, p);
    const Index mn = m * cfg.horizon;
    const Index pn = p * cfg.horizon;
    if (pred.input_length() != mn || pred.output_length() != pn) {
        throw DimensionError("efficient step: controller horizon does not match the dataset");
    }
    if (ref.size() != pn) throw DimensionError("efficient step: reference window has the wrong size");

    const auto ops = efficient_operators(pred, x);
    const Matrix& mx = ops.reduced_map;
    const Matrix& nb = ops.null_basis;
    const Index d = nb.cols();
    const bool bounded_y = cfg.has_output_bounds();
    const Index ns = bounded_y ? pn : 0;

    // v = (u, ξ, s)
    solver::NlpProblem prob;
    prob.dim = mn + d + ns;
    auto outputs = [&](const Vector& v, Matrix* dy_du) {
        const Vector u = v.head(mn);
        Vector y = mx * pred.ku_vector(u);
        if (d > 0) y.noalias() += nb * v.segment(mn, d);
        if (dy_du) *dy_du = mx * pred.ku_jacobian(u);
        return y;
    };
    prob.objective = [&, d, mn](const Vector& v, Vector* grad) {
        Matrix dy_du;
        const Vector y = outputs(v, grad ? &dy_du : nullptr);
        const Vector u = v.head(mn);
        Vector gu, gy;
        double f = tracking_cost(cfg, u, y, ref, grad ? &gu : nullptr, grad ? &gy : nullptr);
        const Vector xi = v.segment(mn, d);
        f += cfg.lambda * xi.squaredNorm();
        if (grad) {
            grad->setZero(v.size());
            grad->head(mn) = gu + dy_du.transpose() * gy;
            if (d > 0) grad->segment(mn, d) = nb.transpose() * gy + 2.0 * cfg.lambda * xi;
        }
        return f;
    };
    if (bounded_y) {
        prob.num_eq = pn;
        prob.constraints = [&, d, mn, pn](const Vector& v, Vector& c, Matrix* jac) {
            Matrix dy_du;
            c = outputs(v, jac ? &dy_du : nullptr) - v.tail(pn);
            if (jac) {
                jac->setZero(pn, v.size());
                jac->leftCols(mn) = dy_du;
                if (d > 0) jac->middleCols(mn, d) = nb;
                jac->rightCols(pn) = -Matrix::Identity(pn, pn);
            }
        };
    }
    Vector ulo, uhi;
    input_box(cfg, ulo, uhi);
    prob.lower = Vector::Constant(prob.dim, -kInf);
    prob.upper = Vector::Constant(prob.dim, kInf);
    prob.lower.head(mn) = ulo;
    prob.upper.head(mn) = uhi;
    if (bounded_y) {
        prob.lower.tail(pn) = repeat(cfg.y_lower, cfg.horizon);
        prob.upper.tail(pn) = repeat(cfg.y_upper, cfg.horizon);
    }
    prob.v0 = Vector::Zero(prob.dim);
    prob.v0.head(mn) = initial_inputs(cfg, m, warm);
    if (d > 0 && warm != nullptr && warm->g.size() == pn) {
        prob.v0.segment(mn, d) = nb.transpose() * warm->g;
    }
    if (bounded_y) prob.v0.tail(pn) = outputs(prob.v0, nullptr);

    StepSolution sol;
    sol.result = solver::solve_nlp(prob, cfg.solver);
    const Vector& v = sol.result.v_star;
    sol.u_plan = v.head(mn);
    sol.xi = v.segment(mn, d);
    sol.g = d > 0 ? Vector(nb * sol.xi) : Vector::Zero(pn);
    sol.y_plan = outputs(v, nullptr);
    sol.null_dim = d;
    sol.pure_prediction = d == 0;
    sol.cost = tracking_cost(cfg, sol.u_plan, sol.y_plan, ref);
    sol.solve_time = seconds_since(t0);
    return sol;
}

// ---------------------------------------------------------------------------
// Full formulation, shared between the product and stacked kernels

namespace {

/// Data-consistency system K·g = k(u), Y·g = y for the full formulation.
struct FullSystem {
    const Matrix& gram;
    const Matrix& ydata;
    std::function<Vector(const Vector&)> kvec;
    std::function<Matrix(const Vector&)> kjac;  ///< ∂k/∂u, T × (m·N)
    std::function<Vector(const Vector&)> consistent_g;  ///< K⁻¹·k(u)
};

StepSolution solve_full(const FullSystem& sys, Index m, Index p, const ControlConfig& cfg,
                        const Vector& ref, const StepSolution* warm, Clock::time_point t0) {
    cfg.validate(m, p);
    const Index mn = m * cfg.horizon;
    const Index pn = p * cfg.horizon;
    const Index t = sys.gram.rows();
    if (ref.size() != pn) throw DimensionError("full step: reference window has the wrong size");

    // v = (u, y, g)
    solver::NlpProblem prob;
    prob.dim = mn + pn + t;
    prob.objective = [&, mn, pn, t](const Vector& v, Vector* grad) {
        Vector gu, gy;
        const Vector g = v.tail(t);
        double f = tracking_cost(cfg, v.head(mn), v.segment(mn, pn), ref, grad ? &gu : nullptr,
                                 grad ? &gy : nullptr);
        f += cfg.lambda * g.squaredNorm();
        if (grad) {
            grad->resize(v.size());
            grad->head(mn) = gu;
            grad->segment(mn, pn) = gy;
            grad->tail(t) = 2.0 * cfg.lambda * g;
        }
        return f;
    };
    prob.num_eq = t + pn;
    prob.constraints = [&, mn, pn, t](const Vector& v, Vector& c, Matrix* jac) {
        const Vector u = v.head(mn);
        const Vector g = v.tail(t);
        c.resize(t + pn);
        c.head(t) = sys.gram * g - sys.kvec(u);
        c.tail(pn) = sys.ydata * g - v.segment(mn, pn);
        if (jac) {
            jac->setZero(t + pn, v.size());
            jac->topLeftCorner(t, mn) = -sys.kjac(u);
            jac->topRightCorner(t, t) = sys.gram;
            jac->block(t, mn, pn, pn) = -Matrix::Identity(pn, pn);
            jac->bottomRightCorner(pn, t) = sys.ydata;
        }
    };
    Vector ulo, uhi;
    input_box(cfg, ulo, uhi);
    prob.lower = Vector::Constant(prob.dim, -kInf);
    prob.upper = Vector::Constant(prob.dim, kInf);
    prob.lower.head(mn) = ulo;
    prob.upper.head(mn) = uhi;
    if (cfg.y_lower.size() == p) prob.lower.segment(mn, pn) = repeat(cfg.y_lower, cfg.horizon);
    if (cfg.y_upper.size() == p) prob.upper.segment(mn, pn) = repeat(cfg.y_upper, cfg.horizon);

    // Start on the data-consistent manifold.
    prob.v0.resize(prob.dim);
    const Vector u0 = initial_inputs(cfg, m, warm);
    const Vector g0 = sys.consistent_g(u0);
    prob.v0 << u0, sys.ydata * g0, g0;

    StepSolution sol;
    sol.result = solver::solve_nlp(prob, cfg.solver);
    const Vector& v = sol.result.v_star;
    sol.u_plan = v.head(mn);
    sol.y_plan = v.segment(mn, pn);
    sol.g = v.tail(t);
    sol.cost = tracking_cost(cfg, sol.u_plan, sol.y_plan, ref);
    sol.solve_time = seconds_since(t0);
    return sol;
}

}  // namespace

StepSolution solve_full_step(const predictor::ProductPredictor& pred,
                             const Eigen::Ref<const Vector>& x, const ControlConfig& cfg,
                             const Vector& ref, const StepSolution* warm) {
    const auto t0 = Clock::now();
    const Matrix gram = pred.product_gram();
    const Vector kx = pred.kx_vector(x);
    FullSystem sys{
        gram, pred.y(),
        [&](const Vector& u) { return kernels::product_kernel_vector(pred.ku_vector(u), kx); },
        [&](const Vector& u) {
            const Matrix ju = pred.ku_jacobian(u);
            Matrix j(ju.rows() * kx.size(), ju.cols());
            for (Index a = 0; a < ju.rows(); ++a) {
                j.middleRows(a * kx.size(), kx.size()) = kx * ju.row(a);
            }
            return j;
        },
        [&](const Vector& u) {
            return numerics::kron_solve(pred.ku(), pred.kx(),
                                        kernels::product_kernel_vector(pred.ku_vector(u), kx));
        }};
    return solve_full(sys, pred.dataset().m, pred.dataset().p, cfg, ref, warm, t0);
}

StepSolution solve_full_step(const predictor::StackedPredictor& pred,
                             const Eigen::Ref<const Vector>& x, const ControlConfig& cfg,
                             const Vector& ref, const StepSolution* warm) {
    const auto t0 = Clock::now();
    const Index mn = pred.input_length();
    const Index m = mn / cfg.horizon;
    const Index p = pred.output_length() / cfg.horizon;
    if (m * cfg.horizon != mn || p * cfg.horizon != pred.output_length()) {
        throw DimensionError("full stacked step: controller horizon does not match the data");
    }
    const Vector xs = x;
    FullSystem sys{pred.kz_matrix(), pred.y(),
                   [&](const Vector& u) { return pred.kz_vector(u, xs); },
                   [&](const Vector& u) { return pred.kz_jacobian_u(u, xs); },
                   [&](const Vector& u) { return pred.kz().solve(pred.kz_vector(u, xs)); }};
    return solve_full(sys, m, p, cfg, ref, warm, t0);
}

// ---------------------------------------------------------------------------
// NMPC

Vector rollout_outputs(const plant::Plant& plant, const Eigen::Ref<const Vector>& x,
                       const Vector& u, Matrix* jac) {
    const Index n = plant.state_dim();
    const Index m = plant.input_dim();
    const Index p = plant.output_dim();
    const Index horizon = u.size() / m;
    Vector y(p * horizon);
    Matrix sens = Matrix::Zero(n, m * horizon);  // ∂x_k/∂u
    if (jac) jac->setZero(p * horizon, m * horizon);
    Vector xk = x;
    Matrix fx, fu;
    for (Index k = 0; k < horizon; ++k) {
        const Vector uk = u.segment(k * m, m);
        if (jac) {
            plant.step_jacobians(xk, uk, fx, fu);
            sens = fx * sens;
            sens.middleCols(k * m, m) += fu;
        }
        xk = plant.step(xk, uk);
        if (!xk.allFinite() || xk.lpNorm<Eigen::Infinity>() > plant::kDivergenceBound) {
            throw DivergenceError("NMPC rollout diverged");
        }
        y.segment(k * p, p) = plant.output(xk);
        if (jac) jac->middleRows(k * p, p) = plant.output_jacobian(xk) * sens;
    }
    return y;
}

StepSolution solve_nmpc_step(const plant::Plant& plant, const Eigen::Ref<const Vector>& x,
                             const ControlConfig& cfg, const Vector& ref, const StepSolution* warm) {
    const auto t0 = Clock::now();
    const Index m = plant.input_dim();
    const Index p = plant.output_dim();
    cfg.validate(m, p);
    const Index mn = m * cfg.horizon;
    const Index pn = p * cfg.horizon;
    if (ref.size() != pn) throw DimensionError("nmpc step: reference window has the wrong size");
    const Vector x0 = x;
    const bool bounded_y = cfg.has_output_bounds();

    solver::NlpProblem prob;
    prob.dim = mn + (bounded_y ? pn : 0);
    prob.objective = [&, mn](const Vector& v, Vector* grad) {
        const Vector u = v.head(mn);
        Matrix jac;
        Vector y;
        try {
            y = rollout_outputs(plant, x0, u, grad ? &jac : nullptr);
        } catch (const DivergenceError&) {
            if (grad) grad->setZero(v.size());
            return kInf;
        }
        Vector gu, gy;
        const double f = tracking_cost(cfg, u, y, ref, grad ? &gu : nullptr, grad ? &gy : nullptr);
        if (grad) {
            grad->setZero(v.size());
            grad->head(mn) = gu + jac.transpose() * gy;
        }
        return f;
    };
    if (bounded_y) {
        prob.num_eq = pn;
        prob.constraints = [&, mn, pn](const Vector& v, Vector& c, Matrix* jac) {
            Matrix dy;
            c = rollout_outputs(plant, x0, v.head(mn), jac ? &dy : nullptr) - v.tail(pn);
            if (jac) {
                jac->resize(pn, v.size());
                jac->leftCols(mn) = dy;
                jac->rightCols(pn) = -Matrix::Identity(pn, pn);
            }
        };
    }
    Vector ulo, uhi;
    input_box(cfg, ulo, uhi);
    prob.lower = Vector::Constant(prob.dim, -kInf);
    prob.upper = Vector::Constant(prob.dim, kInf);
    prob.lower.head(mn) = ulo;
    prob.upper.head(mn) = uhi;
    prob.v0 = Vector::Zero(prob.dim);
    prob.v0.head(mn) = initial_inputs(cfg, m, warm);
    if (bounded_y) {
        prob.lower.tail(pn) = repeat(cfg.y_lower, cfg.horizon);
        prob.upper.tail(pn) = repeat(cfg.y_upper, cfg.horizon);
        prob.v0.tail(pn) = rollout_outputs(plant, x0, prob.v0.head(mn));
    }

    StepSolution sol;
    sol.result = solver::solve_nlp(prob, cfg.solver);
    sol.u_plan = sol.result.v_star.head(mn);
    sol.y_plan = rollout_outputs(plant, x0, sol.u_plan);
    sol.cost = tracking_cost(cfg, sol.u_plan, sol.y_plan, ref);
    sol.solve_time = seconds_since(t0);
    return sol;
}

// ---------------------------------------------------------------------------
// Controllers and the closed loop

StepSolution Controller::shift(const StepSolution& previous) const {
    StepSolution next;
    const Index len = previous.u_plan.size();
    const Index m = cfg_.r.rows();
    if (len >= m && m > 0) {
        next.u_plan.resize(len);
        next.u_plan.head(len - m) = previous.u_plan.tail(len - m);
        next.u_plan.tail(m) = previous.u_plan.tail(m);
    }
    const Index pg = previous.g.size();
    const Index p = cfg_.q.rows();
    if (pg > 0 && previous.y_plan.size() == pg && pg >= p) {
        // g̃ lives in output space; shift it like the outputs.
        next.g.resize(pg);
        next.g.head(pg - p) = previous.g.tail(pg - p);
        next.g.tail(p) = previous.g.tail(p);
    }
    return next;
}

EfficientController::EfficientController(const predictor::ProductPredictor& pred, ControlConfig cfg)
    : Controller(std::move(cfg)), pred_(pred) {
    cfg_.validate(pred.dataset().m, pred.dataset().p);
}

StepSolution EfficientController::solve(const Eigen::Ref<const Vector>& x, const Vector& ref,
                                        const StepSolution* warm) const {
    return solve_efficient_step(pred_, x, cfg_, ref, warm);
}

FullProductController::FullProductController(const predictor::ProductPredictor& pred,
                                             ControlConfig cfg)
    : Controller(std::move(cfg)), pred_(pred) {
    cfg_.validate(pred.dataset().m, pred.dataset().p);
}

StepSolution FullProductController::solve(const Eigen::Ref<const Vector>& x, const Vector& ref,
                                          const StepSolution* warm) const {
    return solve_full_step(pred_, x, cfg_, ref, warm);
}

FullStackedController::FullStackedController(const predictor::StackedPredictor& pred,
                                             ControlConfig cfg)
    : Controller(std::move(cfg)), pred_(pred) {}

StepSolution FullStackedController::solve(const Eigen::Ref<const Vector>& x, const Vector& ref,
                                          const StepSolution* warm) const {
    return solve_full_step(pred_, x, cfg_, ref, warm);
}

NmpcController::NmpcController(const plant::Plant& model, ControlConfig cfg)
    : Controller(std::move(cfg)), model_(model) {
    cfg_.validate(model.input_dim(), model.output_dim());
}

StepSolution NmpcController::solve(const Eigen::Ref<const Vector>& x, const Vector& ref,
                                   const StepSolution* warm) const {
    return solve_nmpc_step(model_, x, cfg_, ref, warm);
}

TrackingResult run_receding_horizon(const plant::Plant& plant, const Controller& controller,
                                    const PiecewiseConstantReference& reference, Index steps,
                                    const Eigen::Ref<const Vector>& x_init) {
    if (steps < 1) throw InvalidArgument("closed loop: steps must be >= 1");
    const ControlConfig& cfg = controller.config();
    const Index m = plant.input_dim();
    const Index p = plant.output_dim();

    TrackingResult res;
    res.applied_inputs.resize(m, steps);
    res.measured_outputs.resize(p, steps);
    res.references.resize(p, steps);
    res.states.resize(plant.state_dim(), steps + 1);
    res.states.col(0) = x_init;

    Vector x = x_init;
    Vector u_prev = cfg.ref_u.size() == m ? cfg.ref_u : Vector::Zero(m);
    u_prev = u_prev.cwiseMax(cfg.u_lower).cwiseMin(cfg.u_upper);
    std::optional<StepSolution> warm;
    double err_sum = 0.0;
    double time_sum = 0.0;

    for (Index k = 0; k < steps; ++k) {
        const Vector ref = reference.window(k, cfg.horizon);
        Vector u_apply = u_prev;
        std::string failure;
        solver::Status status = solver::Status::Infeasible;
        try {
            StepSolution sol = controller.solve(x, ref, warm ? &*warm : nullptr);
            status = sol.result.status;
            time_sum += sol.solve_time;
            res.solve_times.push_back(sol.solve_time);
            if (sol.u_plan.allFinite()) {
                u_apply = sol.u_plan.head(m);
                warm = controller.shift(sol);
            } else {
                failure = "non-finite plan";
            }
            if (status != solver::Status::Converged) ++res.non_converged;
        } catch (const Error& e) {
            failure = e.what();
            res.solve_times.push_back(0.0);
            ++res.non_converged;
        }
        res.statuses.push_back(status);
        res.failures.push_back(failure);

        // Final guard: the applied input always lies in the input box.
        u_apply = u_apply.cwiseMax(cfg.u_lower).cwiseMin(cfg.u_upper);
        x = plant.step(x, u_apply);
        const Vector y = plant.output(x);
        const Vector r = reference.at(k + 1);
        res.applied_inputs.col(k) = u_apply;
        res.measured_outputs.col(k) = y;
        res.references.col(k) = r;
        res.states.col(k + 1) = x;
        err_sum += (y - r).norm();
        u_prev = u_apply;
    }
    res.mean_tracking_error = err_sum / static_cast<double>(steps);
    res.mean_solve_time = time_sum / static_cast<double>(steps);
    return res;
}

}  // namespace kerodeepc::controller
