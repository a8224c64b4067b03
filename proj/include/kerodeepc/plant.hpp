#pragma once

#include <memory>

#include "kerodeepc/numerics.hpp"

namespace kerodeepc::plant {

/// Discrete-time system x+ = f(x, u), y = h(x).
class Plant {
public:
    virtual ~Plant() = default;

    [[nodiscard]] virtual Index state_dim() const = 0;
    [[nodiscard]] virtual Index input_dim() const = 0;
    [[nodiscard]] virtual Index output_dim() const = 0;

    [[nodiscard]] Vector step(const Eigen::Ref<const Vector>& x,
                              const Eigen::Ref<const Vector>& u) const;
    [[nodiscard]] Vector output(const Eigen::Ref<const Vector>& x) const;

    /// ∂f/∂x and ∂f/∂u at (x, u).
    virtual void step_jacobians(const Eigen::Ref<const Vector>& x,
                                const Eigen::Ref<const Vector>& u, Matrix& fx,
                                Matrix& fu) const = 0;
    /// ∂h/∂x at x.
    [[nodiscard]] virtual Matrix output_jacobian(const Eigen::Ref<const Vector>& x) const = 0;

protected:
    virtual Vector do_step(const Eigen::Ref<const Vector>& x,
                           const Eigen::Ref<const Vector>& u) const = 0;
    virtual Vector do_output(const Eigen::Ref<const Vector>& x) const = 0;
};

/// Forward-Euler Van der Pol oscillator with y = x1.
class VanDerPolPlant final : public Plant {
public:
    explicit VanDerPolPlant(double mu = 1.0, double ts = 0.1);

    [[nodiscard]] Index state_dim() const override { return 2; }
    [[nodiscard]] Index input_dim() const override { return 1; }
    [[nodiscard]] Index output_dim() const override { return 1; }

    [[nodiscard]] double mu() const noexcept { return mu_; }
    [[nodiscard]] double ts() const noexcept { return ts_; }

    void step_jacobians(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& u,
                        Matrix& fx, Matrix& fu) const override;
    [[nodiscard]] Matrix output_jacobian(const Eigen::Ref<const Vector>& x) const override;

protected:
    Vector do_step(const Eigen::Ref<const Vector>& x,
                   const Eigen::Ref<const Vector>& u) const override;
    Vector do_output(const Eigen::Ref<const Vector>& x) const override;

private:
    double mu_;
    double ts_;
};

/// x+ = A x + B u, y = C x.
class LtiPlant final : public Plant {
public:
    LtiPlant(Matrix a, Matrix b, Matrix c);

    [[nodiscard]] Index state_dim() const override { return a_.rows(); }
    [[nodiscard]] Index input_dim() const override { return b_.cols(); }
    [[nodiscard]] Index output_dim() const override { return c_.rows(); }

    void step_jacobians(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& u,
                        Matrix& fx, Matrix& fu) const override;
    [[nodiscard]] Matrix output_jacobian(const Eigen::Ref<const Vector>& x) const override;

protected:
    Vector do_step(const Eigen::Ref<const Vector>& x,
                   const Eigen::Ref<const Vector>& u) const override;
    Vector do_output(const Eigen::Ref<const Vector>& x) const override;

private:
    Matrix a_;
    Matrix b_;
    Matrix c_;
};

/// States x_1..x_N (columns) and outputs y_k = h(x_k) for k = 1..N.
struct Trajectory {
    Matrix states;
    Matrix outputs;

    /// Outputs stacked as col(y_1, ..., y_N).
    [[nodiscard]] Vector stacked_outputs() const;
};

/// States above this magnitude are treated as divergence.
inline constexpr double kDivergenceBound = 1e6;

/// Simulates N = inputs.cols() steps from x0. `inputs` holds one input per column.
/// Throws DivergenceError when ‖x‖∞ exceeds kDivergenceBound or turns non-finite.
[[nodiscard]] Trajectory simulate(const Plant& plant, const Eigen::Ref<const Vector>& x0,
                                  const Matrix& inputs);

/// Same, for an input sequence stacked as col(u_0, ..., u_{N-1}).
[[nodiscard]] Trajectory simulate_stacked(const Plant& plant, const Eigen::Ref<const Vector>& x0,
                                          const Eigen::Ref<const Vector>& u_stacked);

}  // namespace kerodeepc::plant
