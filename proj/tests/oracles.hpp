#pragma once

// Independent reference computations used only by tests. Nothing here calls
// into the collocation matrices or the Picard solver of the library.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>
#include <random>

#include <Eigen/Dense>

#include "gradreduce/potential.hpp"

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline double mode(double length, int j, double x) {
    return std::sqrt(2.0 / length) * std::sin(j * M_PI * x / length);
}

/// u(x) = sum a_j u_j(x) by direct summation.
inline double field_at(double length, const VectorXd& a, double x) {
    double s = 0.0;
    for (int j = 0; j < a.size(); ++j) s += a[j] * mode(length, j + 1, x);
    return s;
}

/// Composite Simpson rule with `intervals` (even) sub-intervals.
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      int intervals = 10000) {
    const double h = (b - a) / intervals;
    double s = f(a) + f(b);
    for (int i = 1; i < intervals; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

/// Dense uniform trapezoid grid on [0, L] used by the Newton oracles.
struct DenseGrid {
    double length;
    int n_modes;
    int points;
    VectorXd x;
    MatrixXd modes; // points x n_modes
    double h;

    DenseGrid(double length_, int n_modes_, int points_)
        : length(length_), n_modes(n_modes_), points(points_) {
        h = length / (points + 1);
        x.resize(points);
        modes.resize(points, n_modes);
        for (int i = 0; i < points; ++i) {
            x[i] = (i + 1) * h;
            for (int j = 0; j < n_modes; ++j) modes(i, j) = mode(length, j + 1, x[i]);
        }
    }
};

inline VectorXd eigenvalues(double length, int n) {
    VectorXd lam(n);
    for (int j = 0; j < n; ++j) lam[j] = std::pow((j + 1) * M_PI / length, 2);
    return lam;
}

/// Damped Newton on F(a)_j = lambda_j a_j + <gamma(u), u_j> for the modes
/// listed as free (all others frozen at their value in `start`).
inline VectorXd newton_solve(const gradreduce::Potential& pot, double length, int n_modes,
                             VectorXd start, int first_free, int dense_points = 4096,
                             double tol = 1e-13) {
    DenseGrid g(length, n_modes, dense_points);
    const VectorXd lam = eigenvalues(length, n_modes);
    const int nf = n_modes - first_free;
    auto F = [&](const VectorXd& a, MatrixXd* jac) {
        const VectorXd u = g.modes * a;
        VectorXd gam(u.size()), dgam(u.size());
        for (int i = 0; i < u.size(); ++i) {
            gam[i] = pot.gamma(u[i]);
            dgam[i] = pot.gamma_prime(u[i]);
        }
        const VectorXd proj = g.h * (g.modes.transpose() * gam);
        VectorXd r = (lam.cwiseProduct(a) + proj).tail(nf);
        if (jac) {
            const MatrixXd right = g.modes.rightCols(nf);
            MatrixXd full = g.h * (right.transpose() * dgam.asDiagonal() * right);
            full.diagonal() += lam.tail(nf);
            *jac = full;
        }
        return r;
    };
    VectorXd a = start;
    for (int it = 0; it < 100; ++it) {
        MatrixXd jac;
        const VectorXd r = F(a, &jac);
        if (r.norm() < tol) break;
        const VectorXd step = jac.lu().solve(-r);
        double t = 1.0;
        while (t > 1e-6) {
            VectorXd trial = a;
            trial.tail(nf) += t * step;
            if (F(trial, nullptr).norm() < r.norm()) {
                a = trial;
                break;
            }
            t *= 0.5;
        }
        if (t <= 1e-6) break;
    }
    return a;
}

/// Energy J(u) by direct dense quadrature of the strong form.
inline double dense_energy(const gradreduce::Potential& pot, double length, const VectorXd& a) {
    auto integrand = [&](double x) {
        double du = 0.0;
        for (int j = 0; j < a.size(); ++j) {
            const double k = (j + 1) * M_PI / length;
            du += a[j] * std::sqrt(2.0 / length) * k * std::cos(k * x);
        }
        return 0.5 * du * du + pot.value(field_at(length, a, x));
    };
    return simpson(integrand, 0.0, length, 10000);
}

inline VectorXd random_vector(std::mt19937_64& rng, int n, double scale) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = dist(rng);
    return v;
}

/// Action alpha * int |xdot + W'(x)|^2 dt of the piecewise-linear path through
/// `nodes` (equally spaced in [0, T]) by dense midpoint sampling, m = 1.
inline double dense_path_action(const std::function<double(double)>& w_prime,
                                const std::vector<double>& nodes, double T, double alpha,
                                int samples_per_piece = 200) {
    const int pieces = static_cast<int>(nodes.size()) - 1;
    const double tau = T / pieces;
    const double h = tau / samples_per_piece;
    double sum = 0.0;
    for (int p = 0; p < pieces; ++p) {
        const double v = (nodes[p + 1] - nodes[p]) / tau;
        for (int s = 0; s < samples_per_piece; ++s) {
            const double x = nodes[p] + v * (s + 0.5) * h;
            const double r = v + w_prime(x);
            sum += r * r * h;
        }
    }
    return alpha * sum;
}

/// Brute-force minimum action: exhaustive grid search over the interior nodes
/// of a 4-piece path, then repeated node doubling with a shrinking compass
/// search. No gradients are used.
inline double brute_force_min_action(const std::function<double(double)>& w_prime, double x0,
                                     double x1, double T, double alpha) {
    std::vector<double> nodes(5);
    nodes.front() = x0;
    nodes.back() = x1;
    const double lo = std::min(x0, x1) - 0.5, hi = std::max(x0, x1) + 0.5;
    const int n = 40;
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> trial = nodes;
    for (int a = 0; a <= n; ++a)
        for (int b = 0; b <= n; ++b)
            for (int c = 0; c <= n; ++c) {
                trial[1] = lo + (hi - lo) * a / n;
                trial[2] = lo + (hi - lo) * b / n;
                trial[3] = lo + (hi - lo) * c / n;
                const double v = dense_path_action(w_prime, trial, T, alpha, 50);
                if (v < best) {
                    best = v;
                    nodes = trial;
                }
            }
    for (int level = 0; level < 4; ++level) {
        std::vector<double> finer;
        for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
            finer.push_back(nodes[i]);
            finer.push_back(0.5 * (nodes[i] + nodes[i + 1]));
        }
        finer.push_back(nodes.back());
        nodes = finer;
        best = dense_path_action(w_prime, nodes, T, alpha, 50);
        for (double step = 0.05; step > 1e-5; step *= 0.5) {
            bool improved = true;
            while (improved) {
                improved = false;
                for (std::size_t i = 1; i + 1 < nodes.size(); ++i) {
                    for (double dir : {1.0, -1.0}) {
                        const double keep = nodes[i];
                        nodes[i] = keep + dir * step;
                        const double v = dense_path_action(w_prime, nodes, T, alpha, 50);
                        if (v < best - 1e-15) {
                            best = v;
                            improved = true;
                        } else {
                            nodes[i] = keep;
                        }
                    }
                }
            }
        }
    }
    return dense_path_action(w_prime, nodes, T, alpha, 200);
}

} // namespace oracle
