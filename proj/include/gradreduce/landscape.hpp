#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>

namespace gradreduce {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A finite gradient system x' = -grad W(x) on R^m. The stochastic and
/// large-deviation layers only see W through this interface.
class GradientSystem {
public:
    virtual ~GradientSystem() = default;

    virtual int dimension() const = 0;
    virtual double value(const Vector& x) const = 0;
    virtual Vector gradient(const Vector& x) const = 0;
    virtual Matrix hessian(const Vector& x) const = 0;
    /// Global upper bound on the Lipschitz constant of grad W.
    virtual double gradient_lipschitz() const = 0;

    Vector drift(const Vector& x) const { return -gradient(x); }
};

using GradientSystemPtr = std::shared_ptr<const GradientSystem>;

/// Newton iteration for grad W = 0 started at `guess`; throws NoConvergence.
Vector critical_point(const GradientSystem& landscape, const Vector& guess, double tol = 1e-12,
                      int max_iter = 50);

/// W(x) = 1/2 sum k_i x_i^2 + offset, an Ornstein-Uhlenbeck landscape.
class QuadraticLandscape final : public GradientSystem {
public:
    explicit QuadraticLandscape(Vector stiffness, double offset = 0.0);

    int dimension() const override { return static_cast<int>(stiffness_.size()); }
    double value(const Vector& x) const override;
    Vector gradient(const Vector& x) const override;
    Matrix hessian(const Vector& x) const override;
    double gradient_lipschitz() const override;

    const Vector& stiffness() const noexcept { return stiffness_; }

private:
    Vector stiffness_;
    double offset_;
};

/// Piecewise-cubic Hermite table of another landscape on a box (m = 1 or 2).
/// Values and first derivatives (plus the mixed second derivative in 2-D)
/// are sampled once, so evaluation costs a few flops instead of a tail solve.
/// Outside the box the nearest cell's cubic is extrapolated.
class TabulatedLandscape final : public GradientSystem {
public:
    struct Axis {
        double min;
        double max;
        int intervals;
    };

    TabulatedLandscape(const GradientSystem& source, std::vector<Axis> axes);

    int dimension() const override { return static_cast<int>(axes_.size()); }
    double value(const Vector& x) const override;
    Vector gradient(const Vector& x) const override;
    Matrix hessian(const Vector& x) const override;
    double gradient_lipschitz() const override { return lipschitz_; }

    double value1(double x) const;
    double gradient1(double x) const;

private:
    struct Cell {
        int index;
        double t;
        double h;
    };
    Cell locate(int axis, double x) const;
    void eval2(const Vector& x, double* v, double* gx, double* gy, Matrix* hess) const;

    std::vector<Axis> axes_;
    std::vector<double> w_;   // W at nodes
    std::vector<double> wx_;  // dW/dx
    std::vector<double> wy_;  // dW/dy (2-D)
    std::vector<double> wxy_; // d2W/dxdy (2-D)
    double lipschitz_;
};

} // namespace gradreduce
