#include "gradreduce/landscape.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "gradreduce/errors.hpp"

namespace gradreduce {

QuadraticLandscape::QuadraticLandscape(Vector stiffness, double offset)
    : stiffness_(std::move(stiffness)), offset_(offset) {
    require(stiffness_.size() >= 1, ErrorCode::InvalidArgument, "empty quadratic landscape");
}

double QuadraticLandscape::value(const Vector& x) const {
    return 0.5 * stiffness_.dot(x.cwiseAbs2()) + offset_;
}

Vector QuadraticLandscape::gradient(const Vector& x) const { return stiffness_.cwiseProduct(x); }

Matrix QuadraticLandscape::hessian(const Vector&) const { return stiffness_.asDiagonal(); }

double QuadraticLandscape::gradient_lipschitz() const { return stiffness_.cwiseAbs().maxCoeff(); }

Vector critical_point(const GradientSystem& landscape, const Vector& guess, double tol,
                      int max_iter) {
    require(guess.size() == landscape.dimension(), ErrorCode::InvalidArgument,
            "guess has wrong dimension");
    Vector x = guess;
    for (int it = 0; it < max_iter; ++it) {
        const Vector g = landscape.gradient(x);
        if (g.norm() <= tol) return x;
        x -= landscape.hessian(x).fullPivLu().solve(g);
    }
    const double residual = landscape.gradient(x).norm();
    if (residual <= tol) return x;
    fail(ErrorCode::NoConvergence,
         "critical point search stalled at |grad W| = " + std::to_string(residual));
}

namespace {

// Cubic Hermite shape functions on [0, 1] ordered (value@0, value@1, slope@0, slope@1)
// together with their first and second derivatives.
struct Shape {
    std::array<double, 4> f;
    std::array<double, 4> df;
    std::array<double, 4> ddf;
};

Shape hermite(double t) {
    const double t2 = t * t;
    const double t3 = t2 * t;
    Shape s;
    s.f = {2 * t3 - 3 * t2 + 1, -2 * t3 + 3 * t2, t3 - 2 * t2 + t, t3 - t2};
    s.df = {6 * t2 - 6 * t, -6 * t2 + 6 * t, 3 * t2 - 4 * t + 1, 3 * t2 - 2 * t};
    s.ddf = {12 * t - 6, -12 * t + 6, 6 * t - 4, 6 * t - 2};
    return s;
}

} // namespace

TabulatedLandscape::TabulatedLandscape(const GradientSystem& source, std::vector<Axis> axes)
    : axes_(std::move(axes)), lipschitz_(source.gradient_lipschitz()) {
    const int d = static_cast<int>(axes_.size());
    require(d == source.dimension(), ErrorCode::InvalidArgument,
            "table axes must match landscape dimension");
    require(d == 1 || d == 2, ErrorCode::InvalidArgument, "tables support dimension 1 or 2");
    for (const auto& a : axes_)
        require(a.max > a.min && a.intervals >= 1, ErrorCode::InvalidArgument, "bad table axis");

    const int nx = axes_[0].intervals + 1;
    const int ny = d == 2 ? axes_[1].intervals + 1 : 1;
    w_.resize(nx * ny);
    wx_.resize(nx * ny);
    if (d == 2) {
        wy_.resize(nx * ny);
        wxy_.resize(nx * ny);
    }
    Vector x(d);
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            const auto& ax = axes_[0];
            x[0] = ax.min + (ax.max - ax.min) * ix / ax.intervals;
            if (d == 2) {
                const auto& ay = axes_[1];
                x[1] = ay.min + (ay.max - ay.min) * iy / ay.intervals;
            }
            const int k = iy * nx + ix;
            w_[k] = source.value(x);
            if (d == 1) {
                wx_[k] = source.gradient(x)[0];
            } else {
                const Vector g = source.gradient(x);
                wx_[k] = g[0];
                wy_[k] = g[1];
                wxy_[k] = source.hessian(x)(0, 1);
            }
        }
    }
}

TabulatedLandscape::Cell TabulatedLandscape::locate(int axis, double x) const {
    const auto& a = axes_[axis];
    const double h = (a.max - a.min) / a.intervals;
    int i = static_cast<int>(std::floor((x - a.min) / h));
    i = std::clamp(i, 0, a.intervals - 1);
    return {i, (x - (a.min + i * h)) / h, h};
}

double TabulatedLandscape::value1(double x) const {
    const Cell c = locate(0, x);
    const Shape s = hermite(c.t);
    return s.f[0] * w_[c.index] + s.f[1] * w_[c.index + 1] +
           c.h * (s.f[2] * wx_[c.index] + s.f[3] * wx_[c.index + 1]);
}

double TabulatedLandscape::gradient1(double x) const {
    const Cell c = locate(0, x);
    const Shape s = hermite(c.t);
    return (s.df[0] * w_[c.index] + s.df[1] * w_[c.index + 1]) / c.h +
           s.df[2] * wx_[c.index] + s.df[3] * wx_[c.index + 1];
}

void TabulatedLandscape::eval2(const Vector& x, double* v, double* gx, double* gy,
                               Matrix* hess) const {
    const Cell cx = locate(0, x[0]);
    const Cell cy = locate(1, x[1]);
    const Shape sx = hermite(cx.t);
    const Shape sy = hermite(cy.t);
    const int nx = axes_[0].intervals + 1;

    double val = 0, dx = 0, dy = 0, dxx = 0, dyy = 0, dxy = 0;
    for (int b = 0; b < 2; ++b) {
        for (int a = 0; a < 2; ++a) {
            const int k = (cy.index + b) * nx + (cx.index + a);
            // Coefficients of the four tensor-product shape families at this corner.
            const std::array<double, 4> coef = {w_[k], cx.h * wx_[k], cy.h * wy_[k],
                                                cx.h * cy.h * wxy_[k]};
            const std::array<int, 4> ia = {a, a + 2, a, a + 2};
            const std::array<int, 4> ib = {b, b, b + 2, b + 2};
            for (int q = 0; q < 4; ++q) {
                const double fx = sx.f[ia[q]], fy = sy.f[ib[q]];
                const double dfx = sx.df[ia[q]], dfy = sy.df[ib[q]];
                val += coef[q] * fx * fy;
                dx += coef[q] * dfx * fy;
                dy += coef[q] * fx * dfy;
                dxx += coef[q] * sx.ddf[ia[q]] * fy;
                dyy += coef[q] * fx * sy.ddf[ib[q]];
                dxy += coef[q] * dfx * dfy;
            }
        }
    }
    if (v) *v = val;
    if (gx) *gx = dx / cx.h;
    if (gy) *gy = dy / cy.h;
    if (hess) {
        hess->resize(2, 2);
        (*hess)(0, 0) = dxx / (cx.h * cx.h);
        (*hess)(1, 1) = dyy / (cy.h * cy.h);
        (*hess)(0, 1) = (*hess)(1, 0) = dxy / (cx.h * cy.h);
    }
}

double TabulatedLandscape::value(const Vector& x) const {
    if (axes_.size() == 1) return value1(x[0]);
    double v;
    eval2(x, &v, nullptr, nullptr, nullptr);
    return v;
}

Vector TabulatedLandscape::gradient(const Vector& x) const {
    if (axes_.size() == 1) return Vector::Constant(1, gradient1(x[0]));
    Vector g(2);
    eval2(x, nullptr, &g[0], &g[1], nullptr);
    return g;
}

Matrix TabulatedLandscape::hessian(const Vector& x) const {
    if (axes_.size() == 1) {
        const Cell c = locate(0, x[0]);
        const Shape s = hermite(c.t);
        const double second = (s.ddf[0] * w_[c.index] + s.ddf[1] * w_[c.index + 1]) / (c.h * c.h) +
                              (s.ddf[2] * wx_[c.index] + s.ddf[3] * wx_[c.index + 1]) / c.h;
        return Matrix::Constant(1, 1, second);
    }
    Matrix h;
    eval2(x, nullptr, nullptr, nullptr, &h);
    return h;
}

} // namespace gradreduce
