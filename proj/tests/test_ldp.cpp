#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "gradreduce/errors.hpp"
#include "gradreduce/ldp.hpp"
#include "oracles.hpp"

using namespace gradreduce;

namespace {

ActionSettings with_alpha(double alpha) {
    ActionSettings s;
    s.alpha = alpha;
    return s;
}

Vector v1(double x) { return Vector::Constant(1, x); }

// Relaxation orbit x' = -grad W sampled by a fine RK4 run.
DiscretePath relaxation(const GradientSystem& w, const Vector& x0, double T, int K) {
    DiscretePath p;
    p.dt = T / K;
    p.points.resize(K + 1, x0.size());
    Vector y = x0;
    p.points.row(0) = y.transpose();
    const int sub = 20;
    const double h = p.dt / sub;
    for (int k = 1; k <= K; ++k) {
        for (int s = 0; s < sub; ++s) {
            const Vector k1 = w.drift(y);
            const Vector k2 = w.drift(y + 0.5 * h * k1);
            const Vector k3 = w.drift(y + 0.5 * h * k2);
            const Vector k4 = w.drift(y + h * k3);
            y += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        }
        p.points.row(k) = y.transpose();
    }
    return p;
}

} // namespace

TEST_CASE("discrete action") {
    QuadraticLandscape ou(Vector::Ones(1));
    const auto s = with_alpha(0.25);

    SUBCASE("relaxation orbits are nearly free, second order in dt") {
        const double a1 = action(relaxation(ou, v1(1.0), 2.0, 50), ou, s);
        const double a2 = action(relaxation(ou, v1(1.0), 2.0, 100), ou, s);
        CHECK(a1 < 1e-4);
        CHECK(a1 / a2 == doctest::Approx(16.0).epsilon(0.05)); // |r|^2 ~ dt^4
    }
    SUBCASE("constant path at an equilibrium") {
        DiscretePath p{0.1, Matrix::Zero(11, 1)};
        CHECK(action(p, ou, s) == 0.0);
    }
    SUBCASE("straight line against the closed-form integral") {
        const auto p = initial_path(v1(0.0), v1(1.0), 1.0, 1000, ou);
        CHECK(std::abs(action(p, ou, s) - 0.25 * 7.0 / 3.0) < 1e-6);
    }
    SUBCASE("non-negative on random paths") {
        std::mt19937_64 rng(3);
        for (int trial = 0; trial < 20; ++trial) {
            DiscretePath p{0.05, Matrix::Random(21, 1)};
            CHECK(action(p, ou, s) >= 0.0);
        }
    }
    SUBCASE("invalid paths") {
        DiscretePath p{0.1, Matrix::Zero(2, 1)};
        CHECK_THROWS_AS(action(p, ou, s), Error);
        DiscretePath q{0.1, Matrix::Zero(5, 2)};
        CHECK_THROWS_AS(action(q, ou, s), Error);
    }
}

TEST_CASE("analytic path gradient matches finite differences") {
    const auto table = fixture::shallow_table(2, 2.0, 80);
    QuadraticLandscape ou((Vector(2) << 1.0, 3.0).finished());
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (const GradientSystem* w : {static_cast<const GradientSystem*>(&ou),
                                    static_cast<const GradientSystem*>(table.get())}) {
        for (double alpha : {0.25, 0.5}) {
            const auto s = with_alpha(alpha);
            for (int trial = 0; trial < 5; ++trial) {
                DiscretePath p{0.05, Matrix(13, 2)};
                for (int k = 0; k < 13; ++k) p.points.row(k) << u(rng), u(rng);
                const Matrix g = action_gradient(p, *w, s);
                CHECK(g.row(0).norm() == 0.0);
                CHECK(g.row(12).norm() == 0.0);
                Matrix fd = Matrix::Zero(13, 2);
                for (int k = 1; k < 12; ++k) {
                    for (int i = 0; i < 2; ++i) {
                        DiscretePath a = p, b = p;
                        a.points(k, i) += 1e-6;
                        b.points(k, i) -= 1e-6;
                        fd(k, i) = (action(a, *w, s) - action(b, *w, s)) / 2e-6;
                    }
                }
                CHECK((g - fd).norm() <= 1e-6 * g.norm());
            }
        }
    }
}

TEST_CASE("minimum action paths") {
    QuadraticLandscape ou(Vector::Ones(1));
    const auto s = with_alpha(0.25);

    SUBCASE("equilibrium to itself") {
        const auto r = minimize_action(v1(0.0), v1(0.0), 2.0, 20, ou, s);
        CHECK(r.value == 0.0);
        CHECK(r.path.points.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("downhill in one basin is nearly free") {
        const auto table = fixture::shallow_table(1, 3.0, 600);
        const double well = critical_point(*table, v1(0.6))[0];
        const auto r = minimize_action(v1(1.4), v1(well + 0.01), 8.0, 400, *table, s);
        CHECK(r.value <= 1e-4);
        CHECK(r.converged);
    }
    SUBCASE("brute-force coarse path oracle") {
        const double ref =
            oracle::brute_force_min_action([](double x) { return x; }, 0.0, 1.0, 4.0, 0.25);
        const auto r = minimize_action(v1(0.0), v1(1.0), 4.0, 200, ou, s);
        CHECK(r.value == doctest::Approx(ref).epsilon(0.02));
        // the continuous minimum is 1 / (2 (1 - e^{-8}))
        CHECK(r.value == doctest::Approx(0.5 / (1 - std::exp(-8.0))).epsilon(1e-3));
    }
    SUBCASE("richer path spaces do not raise the action") {
        // K-piece linear paths are nested under doubling, so the continuous
        // action of the optimum cannot increase; the midpoint value itself
        // carries an O(dt^2) bias and is only checked to that order.
        double previous = std::numeric_limits<double>::infinity();
        double previous_discrete = 0.0;
        for (int K : {25, 50, 100, 200, 400}) {
            const auto r = minimize_action(v1(0.0), v1(1.0), 4.0, K, ou, s);
            std::vector<double> nodes(r.path.points.data(), r.path.points.data() + K + 1);
            const double dense =
                oracle::dense_path_action([](double x) { return x; }, nodes, 4.0, 0.25, 400);
            CHECK(dense <= previous + s.tol);
            if (previous_discrete > 0.0)
                CHECK(std::abs(r.value - previous_discrete) <= 4.0 * std::pow(4.0 / K, 2));
            previous = dense;
            previous_discrete = r.value;
        }
    }
    SUBCASE("momentum gradient descent agrees with the quasi-Newton optimizer") {
        ActionSettings gd = s;
        gd.optimizer = Optimizer::GradientDescentMomentum;
        gd.tol = 1e-6;
        gd.max_iter = 100000;
        const auto a = minimize_action(v1(0.0), v1(1.0), 2.0, 40, ou, s);
        const auto b = minimize_action(v1(0.0), v1(1.0), 2.0, 40, ou, gd);
        CHECK(b.value == doctest::Approx(a.value).epsilon(1e-9));
        CHECK((a.path.points - b.path.points).cwiseAbs().maxCoeff() < 1e-5);
    }
    SUBCASE("iteration limit reports NoConvergence") {
        ActionSettings tight = s;
        tight.max_iter = 2;
        try {
            minimize_action(v1(0.0), v1(1.0), 4.0, 200, ou, tight);
            FAIL("expected NoConvergence");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::NoConvergence);
        }
        CHECK_THROWS_AS(minimize_action(v1(0.0), v1(1.0), 4.0, 4, ou, s), Error);
    }
}

TEST_CASE("infinite-horizon quasi-potential") {
    QuadraticLandscape ou(Vector::Ones(1));
    SUBCASE("target at the equilibrium") {
        CHECK(quasi_potential_infty(v1(0.0), v1(0.0), ou, with_alpha(0.25)).value == 0.0);
    }
    SUBCASE("Ornstein-Uhlenbeck: V = W under alpha = 1/4, 2W under alpha = 1/2") {
        const auto quarter = quasi_potential_infty(v1(1.0), v1(0.0), ou, with_alpha(0.25));
        CHECK(quarter.value == doctest::Approx(0.5).epsilon(0.01));
        const auto half = quasi_potential_infty(v1(1.0), v1(0.0), ou, with_alpha(0.5));
        CHECK(half.value == doctest::Approx(1.0).epsilon(0.01));
        CHECK(quarter.horizon_values.size() >= 2);
    }
    SUBCASE("two-mode double well against the reduced energy") {
        const auto rp = fixture::shallow_reduction(2);
        const auto table = fixture::shallow_table(2, 2.0, 80);
        const Vector x_hat = critical_point(*table, (Vector(2) << 0.65, 0.0).finished());
        const Vector x = (Vector(2) << 0.25, 0.2).finished();
        const double expected = rp->value(x) - rp->value(x_hat);
        const auto r = quasi_potential_infty(x, x_hat, *table, with_alpha(0.25));
        CHECK(r.value == doctest::Approx(expected).epsilon(0.01));

        // the reversed optimal path is (almost) a relaxation orbit
        DiscretePath reversed = r.path;
        reversed.points = r.path.points.colwise().reverse();
        CHECK(action(reversed, *table, with_alpha(0.25)) <= 1e-3 * r.value);
    }
    SUBCASE("x_hat must be an equilibrium") {
        CHECK_THROWS_AS(quasi_potential_infty(v1(1.0), v1(0.1), ou, with_alpha(0.25)), Error);
    }
}

TEST_CASE("Hamiltonian") {
    const auto table = fixture::shallow_table(2, 2.0, 80);
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    CHECK(hamiltonian((Vector(2) << 0.3, 0.4).finished(), Vector::Zero(2), *table,
                      with_alpha(0.25)) == 0.0);
    QuadraticLandscape ou(Vector::Ones(2));
    CHECK(hamiltonian(Vector::Zero(2), (Vector(2) << 0.6, 0.8).finished(), ou, with_alpha(0.5)) ==
          doctest::Approx(0.5).epsilon(1e-15));
    for (double alpha : {0.25, 0.5}) {
        const auto s = with_alpha(alpha);
        for (int trial = 0; trial < 100; ++trial) {
            const Vector x = (Vector(2) << u(rng), u(rng)).finished();
            const Vector v = (Vector(2) << u(rng), u(rng)).finished();
            const Vector p = 2 * alpha * (v - table->drift(x)); // dL/dv
            const double legendre = p.dot(v) - lagrangian(x, v, *table, s);
            CHECK(std::abs(hamiltonian(x, p, *table, s) - legendre) <= 1e-12);
        }
    }
}

TEST_CASE("stationary Hamilton-Jacobi residual") {
    const auto table = fixture::shallow_table(2, 2.0, 80);
    const GridSpec grid{{GridAxis{-1.5, 1.5, 40}, GridAxis{-1.5, 1.5, 40}}};
    for (double alpha : {0.25, 0.5}) {
        const auto s = with_alpha(alpha);
        const double res = stationary_hj_residual(
            [&](const Vector& x) -> Vector { return 4 * alpha * table->gradient(x); }, grid, *table,
            s);
        CHECK(res <= 1e-10);
    }
    // negative control: S = W under alpha = 1/2 leaves -|grad W|^2 / 2
    double expected = 0.0;
    for (std::size_t c = 0; c < grid.cells(); ++c)
        expected = std::max(expected, 0.5 * table->gradient(grid.center(c)).squaredNorm());
    const double res = stationary_hj_residual(
        [&](const Vector& x) -> Vector { return table->gradient(x); }, grid, *table, with_alpha(0.5));
    CHECK(res == doctest::Approx(expected).epsilon(1e-12));
    CHECK(res > 0.01);

    // tabulated S = W: grid gradient error only
    const GridSpec fine{{GridAxis{-1.5, 1.5, 300}, GridAxis{-1.5, 1.5, 300}}};
    GridFunction w{fine, sample_landscape(*table, fine)};
    GridFunction s_hat{fine, w.values};
    CHECK(stationary_hj_residual(s_hat, *table, with_alpha(0.25)) < 5e-3);
}

TEST_CASE("Mane critical value bound") {
    const auto table = fixture::shallow_table(2, 2.0, 80);
    const GridSpec grid{{GridAxis{-1.5, 1.5, 30}, GridAxis{-1.5, 1.5, 30}}};
    const std::vector<Vector> critical = {
        critical_point(*table, Vector::Zero(2)),
        critical_point(*table, (Vector(2) << 0.65, 0.0).finished()),
        critical_point(*table, (Vector(2) << -0.65, 0.0).finished())};
    const auto s = with_alpha(0.25);

    CHECK(mane_upper_bound([](const Vector& x) -> Vector { return Vector::Zero(x.size()); }, grid,
                           *table, s, critical) == 0.0);

    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        // u = sum a_k sin(k1 x + k2 y + phase)
        std::vector<std::array<double, 4>> terms(4);
        for (auto& t : terms) t = {coef(rng), 3 * coef(rng), 3 * coef(rng), M_PI * coef(rng)};
        auto grad_u = [&](const Vector& x) -> Vector {
            Vector g = Vector::Zero(2);
            for (const auto& t : terms) {
                const double c = t[0] * std::cos(t[1] * x[0] + t[2] * x[1] + t[3]);
                g[0] += c * t[1];
                g[1] += c * t[2];
            }
            return g;
        };
        CHECK(mane_upper_bound(grad_u, grid, *table, s, critical) >= -1e-8);
    }
    const auto family = mane_family_minimum(
        [](const Vector& x) -> Vector { return (Vector(2) << std::cos(x[0]), x[1]).finished(); },
        -1.0, 2.0, grid, *table, s, critical);
    CHECK(std::abs(family.value) <= 1e-8);
    CHECK(std::abs(family.theta) <= 1e-6);
}

TEST_CASE("Cole-Hopf rate") {
    const double nu = 0.05;
    const auto table = fixture::shallow_table(1, 3.0, 600);
    const GridSpec spec{{GridAxis{-2.5, 2.5, 200}}};
    const auto peq = stationary_density(*table, nu, spec);
    const auto rate = cole_hopf_rate(peq, nu);
    const Vector w = sample_landscape(*table, spec);
    CHECK((rate.values - (w.array() - w.minCoeff()).matrix()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(rate.values.minCoeff() == 0.0);

    QuadraticLandscape ou(Vector::Ones(1));
    const auto gauss = stationary_density(ou, 0.3, GridSpec{{GridAxis{-6, 6, 120}}});
    const auto q = cole_hopf_rate(gauss, 0.3);
    for (std::size_t c = 0; c < 120; ++c) {
        const double x = gauss.spec.center(c)[0];
        CHECK(q.values[c] == doctest::Approx(0.5 * x * x - 0.5 * 0.05 * 0.05).epsilon(1e-9));
    }
    DensityGrid hole = peq;
    hole.values[3] = 0.0;
    try {
        cole_hopf_rate(hole, nu);
        FAIL("expected NonPositiveDensity");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonPositiveDensity);
    }
}
