#include "kerodeepc/solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace kerodeepc::solver {

std::string to_string(Status status) {
    switch (status) {
        case Status::Converged: return "converged";
        case Status::MaxIter: return "max_iter";
        case Status::Infeasible: return "infeasible";
    }
    return "unknown";
}

void NlpProblem::validate() const {
    if (dim < 0) throw InvalidArgument("nlp: negative dimension");
    if (!objective) throw InvalidArgument("nlp: objective is missing");
    if (num_eq > 0 && !constraints) throw InvalidArgument("nlp: constraints are missing");
    if (v0.size() != dim) throw DimensionError("nlp: initial guess has the wrong length");
    if ((lower.size() != 0 && lower.size() != dim) || (upper.size() != 0 && upper.size() != dim)) {
        throw DimensionError("nlp: bound vectors have the wrong length");
    }
    if (lower.size() == dim && upper.size() == dim && (lower.array() > upper.array()).any()) {
        throw InvalidArgument("nlp: lower bound exceeds upper bound");
    }
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Bounds {
    Vector lo;
    Vector hi;

    [[nodiscard]] Vector project(const Vector& v) const { return v.cwiseMax(lo).cwiseMin(hi); }

    /// ‖P(v − g) − v‖∞
    [[nodiscard]] double projected_gradient_norm(const Vector& v, const Vector& g) const {
        if (v.size() == 0) return 0.0;
        return (project(v - g) - v).lpNorm<Eigen::Infinity>();
    }
};

/// Evaluates the augmented Lagrangian f + μᵀc + ρ/2‖c‖² and its gradient.
class AugmentedLagrangian {
public:
    AugmentedLagrangian(const NlpProblem& p, const Vector& mu, double rho)
        : p_(p), mu_(mu), rho_(rho) {}

    double operator()(const Vector& v, Vector& grad, bool& finite) const {
        Vector g;
        double f = p_.objective(v, &g);
        finite = std::isfinite(f) && g.allFinite();
        if (p_.num_eq > 0) {
            Vector c;
            Matrix j;
            p_.constraints(v, c, &j);
            finite = finite && c.allFinite() && j.allFinite();
            const Vector w = mu_ + rho_ * c;
            f += mu_.dot(c) + 0.5 * rho_ * c.squaredNorm();
            g.noalias() += j.transpose() * w;
        }
        grad = std::move(g);
        return f;
    }

private:
    const NlpProblem& p_;
    const Vector& mu_;
    double rho_;
};

struct InnerResult {
    Vector v;
    Index iterations = 0;
    bool finite = true;
};

/// Projected L-BFGS on a box. Bound-active coordinates whose gradient points
/// outward are frozen; the quasi-Newton step acts on the rest, and an Armijo
/// backtracking search runs along the projected path.
InnerResult minimize_box(const AugmentedLagrangian& fn, const Bounds& box, Vector v, double tol,
                         Index max_iter, Index memory) {
    InnerResult res;
    const Index n = v.size();
    Vector g;
    bool finite = true;
    double f = fn(v, g, finite);
    if (!finite) {
        res.v = v;
        res.finite = false;
        return res;
    }
    std::deque<std::pair<Vector, Vector>> pairs;
    Index stall = 0;

    for (Index it = 0; it < max_iter; ++it) {
        if (box.projected_gradient_norm(v, g) <= tol) break;
        res.iterations = it + 1;

        // Free set: coordinates not pinned at a bound by the gradient.
        Eigen::Array<bool, Eigen::Dynamic, 1> free(n);
        const double eps_b = 1e-12;
        for (Index i = 0; i < n; ++i) {
            const bool at_lo = v(i) <= box.lo(i) + eps_b * (1.0 + std::abs(box.lo(i))) && g(i) > 0.0;
            const bool at_hi = v(i) >= box.hi(i) - eps_b * (1.0 + std::abs(box.hi(i))) && g(i) < 0.0;
            free(i) = !(at_lo || at_hi);
        }
        const Vector mask = free.cast<double>().matrix();

        // Two-loop recursion restricted to the free coordinates.
        Vector q = g.cwiseProduct(mask);
        std::vector<double> alpha(pairs.size());
        for (size_t k = pairs.size(); k-- > 0;) {
            const Vector s = pairs[k].first.cwiseProduct(mask);
            const Vector y = pairs[k].second.cwiseProduct(mask);
            const double sy = s.dot(y);
            if (sy <= 1e-16 * s.norm() * y.norm()) {
                alpha[k] = 0.0;
                continue;
            }
            alpha[k] = s.dot(q) / sy;
            q -= alpha[k] * y;
        }
        if (!pairs.empty()) {
            const Vector s = pairs.back().first.cwiseProduct(mask);
            const Vector y = pairs.back().second.cwiseProduct(mask);
            const double yy = y.squaredNorm();
            if (yy > 0.0 && s.dot(y) > 0.0) q *= s.dot(y) / yy;
        }
        for (size_t k = 0; k < pairs.size(); ++k) {
            const Vector s = pairs[k].first.cwiseProduct(mask);
            const Vector y = pairs[k].second.cwiseProduct(mask);
            const double sy = s.dot(y);
            if (sy <= 1e-16 * s.norm() * y.norm()) continue;
            const double beta = y.dot(q) / sy;
            q += (alpha[k] - beta) * s;
        }
        Vector d = -q.cwiseProduct(mask);
        if (!(g.dot(d) < 0.0) || !d.allFinite()) {
            pairs.clear();
            d = -g.cwiseProduct(mask);
            if (!(g.dot(d) < 0.0)) d = -g;
        }

        double step = 1.0;
        if (pairs.empty()) {
            const double dn = d.lpNorm<Eigen::Infinity>();
            if (dn > 0.0) step = std::min(1.0, 1.0 / dn);
        }

        // Projected Armijo backtracking.
        Vector v_new, g_new;
        double f_new = f;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            v_new = box.project(v + step * d);
            bool fin = true;
            f_new = fn(v_new, g_new, fin);
            if (fin && f_new <= f + 1e-4 * g.dot(v_new - v)) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (!pairs.empty()) {
                pairs.clear();
                continue;
            }
            break;
        }

        const Vector s = v_new - v;
        const Vector y = g_new - g;
        if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
            pairs.emplace_back(s, y);
            if (static_cast<Index>(pairs.size()) > memory) pairs.pop_front();
        }
        const double decrease = f - f_new;
        v = std::move(v_new);
        g = std::move(g_new);
        f = f_new;
        if (decrease <= 1e-15 * (1.0 + std::abs(f))) {
            if (++stall >= 10) break;
        } else {
            stall = 0;
        }
    }
    res.v = std::move(v);
    return res;
}

}  // namespace

NlpResult solve_nlp(const NlpProblem& problem, const SolverOptions& opt) {
    problem.validate();
    const Index n = problem.dim;
    Bounds box{problem.lower.size() == n ? problem.lower : Vector::Constant(n, -kInf),
               problem.upper.size() == n ? problem.upper : Vector::Constant(n, kInf)};

    NlpResult res;
    Vector v = box.project(problem.v0);
    Vector mu = Vector::Zero(problem.num_eq);
    double rho = problem.num_eq > 0 ? opt.rho0 : 0.0;
    double prev_violation = kInf;

    auto eval_constraints = [&](const Vector& x, Vector& c, Matrix* j) {
        if (problem.num_eq > 0) {
            problem.constraints(x, c, j);
        } else {
            c.resize(0);
            if (j) j->resize(0, n);
        }
    };

    res.status = Status::MaxIter;
    double inner_tol = std::max(opt.tol_kkt, 1e-2);
    for (Index outer = 0; outer < std::max<Index>(opt.max_outer, 1); ++outer) {
        AugmentedLagrangian al(problem, mu, rho);
        auto inner = minimize_box(al, box, v, problem.num_eq > 0 ? inner_tol : opt.tol_kkt,
                                  opt.max_inner, opt.lbfgs_memory);
        res.inner_iterations += inner.iterations;
        res.iterations = outer + 1;
        if (!inner.finite) {
            res.status = Status::Infeasible;
            res.message = "objective or constraints are not finite at the iterate";
            break;
        }
        v = std::move(inner.v);

        Vector c;
        Matrix jac;
        eval_constraints(v, c, &jac);
        const double violation = c.size() > 0 ? c.lpNorm<Eigen::Infinity>() : 0.0;
        if (!std::isfinite(violation)) {
            res.status = Status::Infeasible;
            res.message = "constraint evaluation is not finite";
            break;
        }
        const Vector mu_next = mu + rho * c;
        Vector grad;
        problem.objective(v, &grad);
        if (problem.num_eq > 0) grad.noalias() += jac.transpose() * mu_next;
        const double kkt = box.projected_gradient_norm(v, grad);

        mu = mu_next;
        res.eq_residual = violation;
        res.kkt_residual = kkt;
        if (violation <= opt.tol_eq && kkt <= opt.tol_kkt) {
            res.status = Status::Converged;
            break;
        }
        if (problem.num_eq == 0 && inner.iterations == 0) {
            // Unconstrained and the inner solver cannot improve further.
            break;
        }
        if (problem.num_eq > 0) {
            if (violation > 0.25 * prev_violation) rho = std::min(10.0 * rho, opt.rho_max);
            prev_violation = violation;
            inner_tol = std::max(opt.tol_kkt, 0.1 * inner_tol);
        }
    }

    res.v_star = v;
    res.multipliers = mu;
    res.objective_value = problem.objective(v, nullptr);
    if (res.status == Status::MaxIter && res.message.empty()) {
        res.message = "iteration limit reached (eq residual " + std::to_string(res.eq_residual) +
                      ", kkt residual " + std::to_string(res.kkt_residual) + ")";
    }
    return res;
}

DerivativeCheck check_derivatives(const NlpProblem& problem, const Vector& v, double step) {
    problem.validate();
    DerivativeCheck out;
    Vector g;
    problem.objective(v, &g);
    Vector c0;
    Matrix jac;
    if (problem.num_eq > 0) problem.constraints(v, c0, &jac);
    for (Index i = 0; i < problem.dim; ++i) {
        Vector vp = v, vm = v;
        const double h = step * std::max(1.0, std::abs(v(i)));
        vp(i) += h;
        vm(i) -= h;
        const double fd = (problem.objective(vp, nullptr) - problem.objective(vm, nullptr)) / (2 * h);
        out.objective_error =
            std::max(out.objective_error, std::abs(g(i) - fd) / std::max(1.0, std::abs(fd)));
        if (problem.num_eq > 0) {
            Vector cp, cm;
            problem.constraints(vp, cp, nullptr);
            problem.constraints(vm, cm, nullptr);
            const Vector col = (cp - cm) / (2 * h);
            for (Index r = 0; r < problem.num_eq; ++r) {
                out.constraint_error = std::max(
                    out.constraint_error,
                    std::abs(jac(r, i) - col(r)) / std::max(1.0, std::abs(col(r))));
            }
        }
    }
    return out;
}

}  // namespace kerodeepc::solver
