#include "kerodeepc/plant.hpp"

#include <string>

namespace kerodeepc::plant {

Vector Plant::step(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& u) const {
    if (x.size() != state_dim() || u.size() != input_dim()) {
        throw DimensionError("plant step: expected state of size " +
                             std::to_string(state_dim()) + " and input of size " +
                             std::to_string(input_dim()));
    }
    return do_step(x, u);
}

Vector Plant::output(const Eigen::Ref<const Vector>& x) const {
    if (x.size() != state_dim()) {
        throw DimensionError("plant output: state size mismatch");
    }
    return do_output(x);
}

VanDerPolPlant::VanDerPolPlant(double mu, double ts) : mu_(mu), ts_(ts) {
    if (!(ts > 0.0)) {
        throw InvalidArgument("Van der Pol sampling time must be positive");
    }
}

Vector VanDerPolPlant::do_step(const Eigen::Ref<const Vector>& x,
                               const Eigen::Ref<const Vector>& u) const {
    Vector next(2);
    next(0) = x(0) + ts_ * x(1);
    next(1) = -ts_ * x(0) + x(1) + ts_ * u(0) + ts_ * mu_ * (1.0 - x(0) * x(0)) * x(1);
    return next;
}

Vector VanDerPolPlant::do_output(const Eigen::Ref<const Vector>& x) const {
    return x.head(1);
}

void VanDerPolPlant::step_jacobians(const Eigen::Ref<const Vector>& x,
                                    const Eigen::Ref<const Vector>& /*u*/, Matrix& fx,
                                    Matrix& fu) const {
    fx.resize(2, 2);
    fx << 1.0, ts_,
        -ts_ - 2.0 * ts_ * mu_ * x(0) * x(1), 1.0 + ts_ * mu_ * (1.0 - x(0) * x(0));
    fu.resize(2, 1);
    fu << 0.0, ts_;
}

Matrix VanDerPolPlant::output_jacobian(const Eigen::Ref<const Vector>& /*x*/) const {
    Matrix h(1, 2);
    h << 1.0, 0.0;
    return h;
}

LtiPlant::LtiPlant(Matrix a, Matrix b, Matrix c)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)) {
    if (a_.rows() != a_.cols() || b_.rows() != a_.rows() || c_.cols() != a_.rows()) {
        throw DimensionError("LTI plant: inconsistent A, B, C dimensions");
    }
}

Vector LtiPlant::do_step(const Eigen::Ref<const Vector>& x,
                         const Eigen::Ref<const Vector>& u) const {
    return a_ * x + b_ * u;
}

Vector LtiPlant::do_output(const Eigen::Ref<const Vector>& x) const {
    return c_ * x;
}

void LtiPlant::step_jacobians(const Eigen::Ref<const Vector>& /*x*/,
                              const Eigen::Ref<const Vector>& /*u*/, Matrix& fx,
                              Matrix& fu) const {
    fx = a_;
    fu = b_;
}

Matrix LtiPlant::output_jacobian(const Eigen::Ref<const Vector>& /*x*/) const {
    return c_;
}

Vector Trajectory::stacked_outputs() const {
    return Eigen::Map<const Vector>(outputs.data(), outputs.size());
}

Trajectory simulate(const Plant& plant, const Eigen::Ref<const Vector>& x0, const Matrix& inputs) {
    const Index steps = inputs.cols();
    if (steps < 1) {
        throw InvalidArgument("simulate: need at least one input");
    }
    if (inputs.rows() != plant.input_dim()) {
        throw DimensionError("simulate: input rows do not match plant input dimension");
    }
    Trajectory traj{Matrix(plant.state_dim(), steps), Matrix(plant.output_dim(), steps)};
    Vector x = x0;
    for (Index k = 0; k < steps; ++k) {
        x = plant.step(x, inputs.col(k));
        if (!x.allFinite() || x.lpNorm<Eigen::Infinity>() > kDivergenceBound) {
            throw DivergenceError("simulation diverged at step " + std::to_string(k + 1));
        }
        traj.states.col(k) = x;
        traj.outputs.col(k) = plant.output(x);
    }
    return traj;
}

Trajectory simulate_stacked(const Plant& plant, const Eigen::Ref<const Vector>& x0,
                            const Eigen::Ref<const Vector>& u_stacked) {
    const Index m = plant.input_dim();
    if (u_stacked.size() % m != 0) {
        throw DimensionError("simulate: stacked input length is not a multiple of m");
    }
    Eigen::Map<const Matrix> inputs(u_stacked.data(), m, u_stacked.size() / m);
    return simulate(plant, x0, Matrix(inputs));
}

}  // namespace kerodeepc::plant
