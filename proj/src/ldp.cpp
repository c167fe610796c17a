#include "gradreduce/ldp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/tools/minima.hpp>
#include <ceres/ceres.h>

#include "gradreduce/errors.hpp"

namespace gradreduce {

void DiscretePath::validate() const {
    require(points.rows() >= 3, ErrorCode::InvalidArgument, "a path needs at least 2 segments");
    require(points.cols() >= 1, ErrorCode::InvalidArgument, "a path needs dimension >= 1");
    require(dt > 0.0 && std::isfinite(dt), ErrorCode::InvalidArgument, "path dt must be positive");
    require(points.allFinite(), ErrorCode::InvalidArgument, "path has non-finite points");
}

const char* to_string(Optimizer o) {
    return o == Optimizer::QuasiNewton ? "quasi_newton" : "gradient_descent_momentum";
}

Optimizer optimizer_from_string(const std::string& name) {
    if (name == "quasi_newton") return Optimizer::QuasiNewton;
    if (name == "gradient_descent_momentum") return Optimizer::GradientDescentMomentum;
    fail(ErrorCode::InvalidArgument, "unknown optimizer '" + name + "'");
}

namespace {

void check_dims(const DiscretePath& path, const GradientSystem& landscape) {
    path.validate();
    require(path.dim() == landscape.dimension(), ErrorCode::InvalidArgument,
            "path dimension differs from the landscape dimension");
}

double action_and_gradient(const DiscretePath& path, const GradientSystem& landscape, double alpha,
                           Matrix* grad) {
    const int K = path.segments();
    const double dt = path.dt;
    double value = 0.0;
    if (grad) grad->setZero(path.points.rows(), path.dim());
    for (int k = 0; k < K; ++k) {
        const Vector a = path.points.row(k).transpose();
        const Vector b = path.points.row(k + 1).transpose();
        const Vector mid = 0.5 * (a + b);
        const Vector r = (b - a) / dt + landscape.gradient(mid);
        value += r.squaredNorm();
        if (grad) {
            // d|r|^2/da = 2 (-I/dt + H/2) r, d|r|^2/db = 2 (I/dt + H/2) r
            const Vector hr = 0.5 * landscape.hessian(mid) * r;
            if (k > 0) grad->row(k) += 2.0 * alpha * dt * (hr - r / dt).transpose();
            if (k + 1 < K) grad->row(k + 1) += 2.0 * alpha * dt * (hr + r / dt).transpose();
        }
    }
    return alpha * dt * value;
}

double scaled_norm(const Matrix& grad, double dt) { return grad.norm() / std::sqrt(dt); }

// One segment of the action as a least-squares residual
// sqrt(2 alpha dt) (v_k + grad W(mid_k)), so that Ceres' 1/2 |res|^2 sums to the action.
class SegmentCost final : public ceres::CostFunction {
public:
    SegmentCost(const GradientSystem& landscape, double dt, double alpha)
        : landscape_(landscape), dt_(dt), scale_(std::sqrt(2.0 * alpha * dt)) {
        const int m = landscape.dimension();
        set_num_residuals(m);
        mutable_parameter_block_sizes()->push_back(m);
        mutable_parameter_block_sizes()->push_back(m);
    }

    bool Evaluate(double const* const* params, double* residuals,
                  double** jacobians) const override {
        const int m = landscape_.dimension();
        const Eigen::Map<const Vector> a(params[0], m);
        const Eigen::Map<const Vector> b(params[1], m);
        const Vector mid = 0.5 * (a + b);
        Eigen::Map<Vector>(residuals, m) = scale_ * ((b - a) / dt_ + landscape_.gradient(mid));
        if (jacobians && (jacobians[0] || jacobians[1])) {
            const Matrix half_h = 0.5 * landscape_.hessian(mid);
            const Matrix eye = Matrix::Identity(m, m) / dt_;
            using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
            if (jacobians[0]) Eigen::Map<RowMajor>(jacobians[0], m, m) = scale_ * (half_h - eye);
            if (jacobians[1]) Eigen::Map<RowMajor>(jacobians[1], m, m) = scale_ * (half_h + eye);
        }
        return std::isfinite(residuals[0]);
    }

private:
    const GradientSystem& landscape_;
    double dt_;
    double scale_;
};

// Levenberg-Marquardt on the least-squares form: the Gauss-Newton matrix is a
// block-tridiagonal Hessian approximation, solved by sparse Cholesky.
int run_quasi_newton(DiscretePath& path, const GradientSystem& landscape,
                     const ActionSettings& settings, std::string& message) {
    const int K = path.segments();
    const int m = path.dim();
    std::vector<double> x(static_cast<std::size_t>((K + 1) * m));
    for (int k = 0; k <= K; ++k)
        for (int i = 0; i < m; ++i) x[k * m + i] = path.points(k, i);

    ceres::Problem problem;
    for (int k = 0; k < K; ++k)
        problem.AddResidualBlock(new SegmentCost(landscape, path.dt, settings.alpha), nullptr,
                                 &x[k * m], &x[(k + 1) * m]);
    problem.SetParameterBlockConstant(&x[0]);
    problem.SetParameterBlockConstant(&x[K * m]);

    ceres::Solver::Options options;
    options.linear_solver_type = ceres::SPARSE_NORMAL_CHOLESKY;
    options.max_num_iterations = settings.max_iter;
    options.logging_type = ceres::SILENT;
    options.minimizer_progress_to_stdout = false;
    options.num_threads = 1;
    // max-norm bound that implies the scaled Euclidean tolerance
    options.gradient_tolerance = 1e-3 * settings.tol * std::sqrt(path.dt / ((K - 1) * m));
    options.function_tolerance = 1e-18;
    options.parameter_tolerance = 1e-16;
    ceres::Solver::Summary summary;
    ceres::Solve(options, &problem, &summary);

    for (int k = 0; k <= K; ++k)
        for (int i = 0; i < m; ++i) path.points(k, i) = x[k * m + i];
    message = summary.message;
    return static_cast<int>(summary.iterations.size());
}

// Nesterov momentum with adaptive restart and a backtracked step.
int run_momentum(DiscretePath& path, const GradientSystem& landscape,
                 const ActionSettings& settings, std::string& message) {
    const double alpha = settings.alpha;
    double step = path.dt / (8.0 * alpha);
    DiscretePath x = path, previous = path, y = path;
    Matrix g;
    double fx = action_and_gradient(x, landscape, alpha, nullptr);
    double momentum_age = 0.0;
    int it = 0;
    for (; it < settings.max_iter; ++it) {
        const double beta = momentum_age / (momentum_age + 3.0);
        y.points = x.points + beta * (x.points - previous.points);
        const double fy = action_and_gradient(y, landscape, alpha, &g);
        if (scaled_norm(g, path.dt) <= settings.tol && beta == 0.0) break;
        DiscretePath trial = y;
        double ft = 0.0;
        for (int tries = 0; tries < 60; ++tries) {
            trial.points = y.points - step * g;
            ft = action_and_gradient(trial, landscape, alpha, nullptr);
            if (ft <= fy - 0.5 * step * g.squaredNorm()) break;
            step *= 0.5;
        }
        if (ft > fx) {
            // restart the momentum from the current iterate
            momentum_age = 0.0;
            previous = x;
            continue;
        }
        previous = x;
        x = trial;
        fx = ft;
        momentum_age += 1.0;
        step *= 1.05;
    }
    path = x;
    message = it < settings.max_iter ? "gradient tolerance reached" : "iteration limit reached";
    return it;
}

} // namespace

double action(const DiscretePath& path, const GradientSystem& landscape,
              const ActionSettings& settings) {
    check_dims(path, landscape);
    require(settings.alpha > 0.0, ErrorCode::InvalidArgument, "alpha must be positive");
    return action_and_gradient(path, landscape, settings.alpha, nullptr);
}

Matrix action_gradient(const DiscretePath& path, const GradientSystem& landscape,
                       const ActionSettings& settings) {
    check_dims(path, landscape);
    Matrix g;
    action_and_gradient(path, landscape, settings.alpha, &g);
    return g;
}

DiscretePath initial_path(const Vector& x0, const Vector& x1, double T, int K,
                          const GradientSystem& landscape) {
    require(x0.size() == landscape.dimension() && x1.size() == x0.size(),
            ErrorCode::InvalidArgument, "endpoint dimension mismatch");
    require(K >= 2 && T > 0.0, ErrorCode::InvalidArgument, "need K >= 2 and T > 0");
    DiscretePath path;
    path.dt = T / K;
    path.points.resize(K + 1, x0.size());
    if (landscape.value(x1) < landscape.value(x0)) {
        // relaxation witness by RK4, then a linear correction onto x1
        Vector y = x0;
        const double h = path.dt;
        path.points.row(0) = y.transpose();
        for (int k = 1; k <= K; ++k) {
            const Vector k1 = landscape.drift(y);
            const Vector k2 = landscape.drift(y + 0.5 * h * k1);
            const Vector k3 = landscape.drift(y + 0.5 * h * k2);
            const Vector k4 = landscape.drift(y + h * k3);
            y += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
            path.points.row(k) = y.transpose();
        }
        const Vector miss = x1 - y;
        for (int k = 0; k <= K; ++k) path.points.row(k) += (double(k) / K) * miss.transpose();
    } else {
        for (int k = 0; k <= K; ++k)
            path.points.row(k) = (x0 + (x1 - x0) * (double(k) / K)).transpose();
    }
    return path;
}

QuasiPotentialResult minimize_action(const Vector& x0, const Vector& x1, double T, int K,
                                     const GradientSystem& landscape,
                                     const ActionSettings& settings, const DiscretePath* start) {
    require(K >= 8, ErrorCode::InvalidArgument, "minimize_action needs K >= 8");
    require(settings.alpha > 0.0 && settings.tol > 0.0 && settings.max_iter >= 1,
            ErrorCode::InvalidArgument, "bad action settings");
    DiscretePath path = start ? *start : initial_path(x0, x1, T, K, landscape);
    check_dims(path, landscape);
    require(path.segments() == K && std::abs(path.horizon() - T) <= 1e-12 * T,
            ErrorCode::InvalidArgument, "start path does not match K and T");
    path.points.row(0) = x0.transpose();
    path.points.row(K) = x1.transpose();

    QuasiPotentialResult result;
    result.horizon = T;
    result.iterations = settings.optimizer == Optimizer::QuasiNewton
                            ? run_quasi_newton(path, landscape, settings, result.message)
                            : run_momentum(path, landscape, settings, result.message);
    Matrix g;
    result.value = action_and_gradient(path, landscape, settings.alpha, &g);
    result.gradient_norm = scaled_norm(g, path.dt);
    result.path = std::move(path);
    result.converged = result.gradient_norm <= settings.tol;
    if (!result.converged) {
        std::ostringstream os;
        os << "minimum action search did not converge (" << to_string(settings.optimizer) << ", "
           << result.iterations << " iterations, |grad| = " << result.gradient_norm
           << " > tol = " << settings.tol << ", action = " << result.value << "): "
           << result.message;
        fail(ErrorCode::NoConvergence, os.str());
    }
    return result;
}

QuasiPotentialResult quasi_potential_infty(const Vector& x, const Vector& x_hat,
                                           const GradientSystem& landscape,
                                           const ActionSettings& settings,
                                           const HorizonSettings& horizon) {
    require(x.size() == landscape.dimension() && x_hat.size() == x.size(),
            ErrorCode::InvalidArgument, "point dimension mismatch");
    require(horizon.T0 > 0.0 && horizon.dt > 0.0 && horizon.tol_rel > 0.0,
            ErrorCode::InvalidArgument, "bad horizon settings");
    const double grad_norm = landscape.gradient(x_hat).norm();
    if (grad_norm > 1e-10) {
        std::ostringstream os;
        os << "x_hat is not an equilibrium: |grad W(x_hat)| = " << grad_norm << " > 1e-10";
        fail(ErrorCode::InvalidArgument, os.str());
    }

    int K = std::max(8, static_cast<int>(std::lround(horizon.T0 / horizon.dt)));
    double T = K * horizon.dt;
    if ((x - x_hat).norm() == 0.0) {
        QuasiPotentialResult r;
        r.path = initial_path(x_hat, x, T, K, landscape);
        r.horizon = T;
        r.converged = true;
        r.horizon_values = {0.0};
        r.message = "target is the equilibrium";
        return r;
    }

    QuasiPotentialResult best = minimize_action(x_hat, x, T, K, landscape, settings);
    std::vector<double> values = {best.value};
    for (int n = 1; n <= horizon.max_doublings; ++n) {
        // double the horizon; the new first half idles at x_hat
        DiscretePath start;
        start.dt = best.path.dt;
        start.points.resize(2 * K + 1, x.size());
        for (int k = 0; k < K; ++k) start.points.row(k) = x_hat.transpose();
        start.points.bottomRows(K + 1) = best.path.points;
        K *= 2;
        T = K * start.dt;
        QuasiPotentialResult next = minimize_action(x_hat, x, T, K, landscape, settings, &start);
        values.push_back(next.value);
        const double change = std::abs(next.value - best.value);
        best = std::move(next);
        if (change <= horizon.tol_rel * std::abs(best.value)) {
            best.horizon_values = values;
            return best;
        }
    }
    best.horizon_values = values;
    std::ostringstream os;
    os << "horizon continuation did not settle after " << horizon.max_doublings
       << " doublings (last values " << values[values.size() - 2] << ", " << values.back() << ")";
    fail(ErrorCode::NoConvergence, os.str());
}

double hamiltonian(const Vector& x, const Vector& p, const GradientSystem& landscape,
                   const ActionSettings& settings) {
    return p.squaredNorm() / (4.0 * settings.alpha) + p.dot(landscape.drift(x));
}

double lagrangian(const Vector& x, const Vector& v, const GradientSystem& landscape,
                  const ActionSettings& settings) {
    return settings.alpha * (v - landscape.drift(x)).squaredNorm();
}

namespace {

// Central differences on the cell centres, second-order one-sided at the walls.
Vector grid_gradient(const GridFunction& f, std::size_t cell) {
    const GridSpec& spec = f.spec;
    Vector g(spec.dim());
    std::size_t s = 1;
    for (int d = 0; d < spec.dim(); ++d) {
        const int n = spec.axes[d].n_cells;
        const int i = static_cast<int>((cell / s) % n);
        const double h = spec.axes[d].width();
        auto at = [&](int offset) { return f.values[cell + offset * static_cast<long>(s)]; };
        if (i > 0 && i + 1 < n)
            g[d] = (at(1) - at(-1)) / (2 * h);
        else if (n < 3)
            g[d] = i == 0 ? (at(1) - at(0)) / h : (at(0) - at(-1)) / h;
        else if (i == 0)
            g[d] = (-3 * at(0) + 4 * at(1) - at(2)) / (2 * h);
        else
            g[d] = (3 * at(0) - 4 * at(-1) + at(-2)) / (2 * h);
        s *= n;
    }
    return g;
}

void check_grid(const GridSpec& spec, const GradientSystem& landscape) {
    spec.validate();
    require(spec.dim() == landscape.dimension(), ErrorCode::GridMismatch,
            "grid dimension differs from the landscape dimension");
}

} // namespace

double stationary_hj_residual(const GradientField& grad_s, const GridSpec& grid,
                              const GradientSystem& landscape, const ActionSettings& settings) {
    check_grid(grid, landscape);
    double worst = 0.0;
    for (std::size_t c = 0; c < grid.cells(); ++c) {
        const Vector x = grid.center(c);
        worst = std::max(worst, std::abs(hamiltonian(x, grad_s(x), landscape, settings)));
    }
    return worst;
}

double stationary_hj_residual(const GridFunction& s, const GradientSystem& landscape,
                              const ActionSettings& settings) {
    check_grid(s.spec, landscape);
    require(s.values.size() == static_cast<Eigen::Index>(s.spec.cells()), ErrorCode::GridMismatch,
            "value count does not match the grid");
    double worst = 0.0;
    for (std::size_t c = 0; c < s.spec.cells(); ++c)
        worst = std::max(worst, std::abs(hamiltonian(s.spec.center(c), grid_gradient(s, c),
                                                     landscape, settings)));
    return worst;
}

double mane_upper_bound(const GradientField& grad_u, const std::vector<Vector>& points,
                        const GradientSystem& landscape, const ActionSettings& settings) {
    require(!points.empty(), ErrorCode::InvalidArgument, "no evaluation points");
    double sup = -std::numeric_limits<double>::infinity();
    for (const Vector& x : points) {
        require(x.size() == landscape.dimension(), ErrorCode::InvalidArgument,
                "point dimension does not match the landscape");
        sup = std::max(sup, hamiltonian(x, grad_u(x), landscape, settings));
    }
    return sup;
}

double mane_upper_bound(const GradientField& grad_u, const GridSpec& grid,
                        const GradientSystem& landscape, const ActionSettings& settings,
                        const std::vector<Vector>& extra_points) {
    check_grid(grid, landscape);
    std::vector<Vector> points;
    points.reserve(grid.cells() + extra_points.size());
    for (std::size_t c = 0; c < grid.cells(); ++c) points.push_back(grid.center(c));
    points.insert(points.end(), extra_points.begin(), extra_points.end());
    return mane_upper_bound(grad_u, points, landscape, settings);
}

double mane_upper_bound(const GridFunction& u, const GradientSystem& landscape,
                        const ActionSettings& settings, const std::vector<Vector>& extra_points) {
    check_grid(u.spec, landscape);
    require(u.values.size() == static_cast<Eigen::Index>(u.spec.cells()), ErrorCode::GridMismatch,
            "value count does not match the grid");
    double sup = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < u.spec.cells(); ++c)
        sup = std::max(sup, hamiltonian(u.spec.center(c), grid_gradient(u, c), landscape, settings));
    for (const Vector& x : extra_points) {
        const long c = u.spec.locate(x);
        if (c >= 0)
            sup = std::max(sup, hamiltonian(x, grid_gradient(u, c), landscape, settings));
    }
    return sup;
}

ManeFamilyResult mane_family_minimum(const GradientField& grad_phi, double lo, double hi,
                                     const std::vector<Vector>& points,
                                     const GradientSystem& landscape,
                                     const ActionSettings& settings) {
    require(lo < hi, ErrorCode::InvalidArgument, "empty parameter interval");
    // grad phi does not depend on theta, so sample it once
    std::vector<Vector> grads;
    grads.reserve(points.size());
    for (const Vector& x : points) grads.push_back(grad_phi(x));
    auto bound = [&](double theta) {
        double sup = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < points.size(); ++i)
            sup = std::max(sup, hamiltonian(points[i], theta * grads[i], landscape, settings));
        return sup;
    };
    require(!points.empty(), ErrorCode::InvalidArgument, "no evaluation points");
    const auto [theta, value] = boost::math::tools::brent_find_minima(bound, lo, hi, 52);
    return ManeFamilyResult{theta, value};
}

ManeFamilyResult mane_family_minimum(const GradientField& grad_phi, double lo, double hi,
                                     const GridSpec& grid, const GradientSystem& landscape,
                                     const ActionSettings& settings,
                                     const std::vector<Vector>& extra_points) {
    check_grid(grid, landscape);
    std::vector<Vector> points;
    for (std::size_t c = 0; c < grid.cells(); ++c) points.push_back(grid.center(c));
    points.insert(points.end(), extra_points.begin(), extra_points.end());
    return mane_family_minimum(grad_phi, lo, hi, points, landscape, settings);
}

GridFunction cole_hopf_rate(const DensityGrid& p, double nu) {
    require(nu > 0.0, ErrorCode::InvalidArgument, "nu must be positive");
    for (Eigen::Index c = 0; c < p.values.size(); ++c) {
        if (!(p.values[c] > 0.0)) {
            std::ostringstream os;
            os << "density is not positive at cell " << c << " (value " << p.values[c] << ")";
            fail(ErrorCode::NonPositiveDensity, os.str());
        }
    }
    Vector s = -nu * p.values.array().log();
    s.array() -= s.minCoeff();
    return GridFunction{p.spec, s};
}

} // namespace gradreduce
