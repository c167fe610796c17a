#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "gradreduce/dynamics.hpp"
#include "gradreduce/errors.hpp"
#include "gradreduce/stochastic.hpp"

using namespace gradreduce;

namespace {

GridSpec line(double r, int cells) { return GridSpec{{GridAxis{-r, r, cells}}}; }

GridSpec square(double r, int cells) {
    return GridSpec{{GridAxis{-r, r, cells}, GridAxis{-r, r, cells}}};
}

DensityGrid gaussian(const GridSpec& spec, const Vector& mean, double variance) {
    Vector v(spec.cells());
    for (std::size_t c = 0; c < spec.cells(); ++c) {
        const Vector x = spec.center(c) - mean;
        v[c] = std::exp(-x.squaredNorm() / (2 * variance)) /
               std::pow(2 * M_PI * variance, 0.5 * spec.dim());
    }
    return make_density(spec, v);
}

double second_moment(const DensityGrid& p, int axis) {
    double s = 0.0;
    for (std::size_t c = 0; c < p.spec.cells(); ++c) {
        const double x = p.spec.center(c)[axis];
        s += p.values[c] * x * x;
    }
    return s * p.cell_volume;
}

} // namespace

TEST_CASE("reduced potential with no force is the quadratic landscape") {
    ReducedPotential rp(make_basis(M_PI, 16), Potential::zero(), 2);
    QuadraticLandscape ou(rp.basis().eigenvalues().head(2));
    const Vector mu = (Vector(2) << 0.3, -0.7).finished();
    CHECK(rp.value(mu) == doctest::Approx(ou.value(mu)).epsilon(1e-14));
    CHECK((rp.gradient(mu) - ou.gradient(mu)).norm() < 1e-14);
}

TEST_CASE("Euler-Maruyama ensembles") {
    QuadraticLandscape ou((Vector(2) << 1.0, 4.0).finished());

    SUBCASE("noiseless limit follows the reduced flow") {
        ReducedPotential rp(make_basis(M_PI, 16), Potential::zero(), 2);
        SdeConfig cfg;
        cfg.nu = 0.0;
        cfg.dt = 1e-3;
        cfg.n_paths = 3;
        const Vector mu0 = (Vector(2) << 1.0, -0.5).finished();
        const auto ens = simulate_sde(mu0, ou, cfg, 1.0);
        StepSettings s;
        s.dt = 1e-3;
        s.T = 1.0;
        const Vector ref = integrate_reduced(rp, mu0, s).back();
        for (int p = 0; p < 3; ++p) {
            CHECK((ens.endpoints.row(p).transpose() - ref).norm() < 5e-3);
            CHECK(ens.endpoints.row(p) == ens.endpoints.row(0));
        }
        // and the error is first order in dt
        cfg.dt = 5e-4;
        const auto finer = simulate_sde(mu0, ou, cfg, 1.0);
        const double e1 = (ens.endpoints.row(0).transpose() - ref).norm();
        const double e2 = (finer.endpoints.row(0).transpose() - ref).norm();
        CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.05));
    }
    SUBCASE("Ornstein-Uhlenbeck endpoint variance") {
        SdeConfig cfg;
        cfg.nu = 0.3;
        cfg.dt = 1e-3;
        cfg.n_paths = 100000;
        cfg.master_seed = 20240607;
        const double T = 0.5;
        const auto ens = simulate_sde(Vector::Zero(2), ou, cfg, T);
        CHECK(ens.n_blowups == 0);
        for (int j = 0; j < 2; ++j) {
            const double lambda = ou.stiffness()[j];
            const double expected = cfg.nu / lambda * (1 - std::exp(-2 * lambda * T));
            const auto col = ens.endpoints.col(j);
            const double mean = col.mean();
            const double var = (col.array() - mean).square().sum() / (cfg.n_paths - 1);
            const double sigma = expected * std::sqrt(2.0 / cfg.n_paths);
            CHECK(std::abs(var - expected) <= 3 * sigma);
            CHECK(std::abs(mean) <= 3 * std::sqrt(expected / cfg.n_paths));
        }
    }
    SUBCASE("bit-identical across seeds and worker counts") {
        SdeConfig cfg;
        cfg.nu = 0.5;
        cfg.n_paths = 257;
        cfg.master_seed = 99;
        const Vector mu0 = Vector::Ones(2);
        const auto a = simulate_sde(mu0, ou, cfg, 0.2);
        cfg.workers = 4;
        const auto b = simulate_sde(mu0, ou, cfg, 0.2);
        CHECK(a.endpoints == b.endpoints);
        cfg.master_seed = 100;
        const auto c = simulate_sde(mu0, ou, cfg, 0.2);
        CHECK(a.endpoints != c.endpoints);
    }
    SUBCASE("stored paths and empty ensembles") {
        SdeConfig cfg;
        cfg.n_paths = 2;
        cfg.store_every = 10;
        const auto ens = simulate_sde(Vector::Zero(2), ou, cfg, 0.1);
        REQUIRE(ens.paths.size() == 2);
        CHECK(ens.paths[0].size() == 11);
        CHECK(ens.paths[1].back() == ens.endpoints.row(1).transpose());
        cfg.n_paths = 0;
        CHECK(simulate_sde(Vector::Zero(2), ou, cfg, 0.1).endpoints.rows() == 0);
    }
    SUBCASE("stability guard and blow-up accounting") {
        SdeConfig cfg;
        cfg.dt = 0.2;
        try {
            simulate_sde(Vector::Zero(2), ou, cfg, 1.0);
            FAIL("expected a stability failure");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::CflViolation);
        }
        cfg.dt = 0.01;
        cfg.n_paths = 5;
        cfg.blowup_bound = 0.5;
        const auto ens = simulate_sde((Vector(2) << 0.45, 0.0).finished(), ou, cfg, 1.0);
        CHECK(ens.n_blowups > 0);
        for (int p = 0; p < 5; ++p)
            if (ens.blown_up[p]) CHECK(std::isnan(ens.endpoints(p, 0)));
    }
}

TEST_CASE("Gibbs stationary density") {
    QuadraticLandscape half(Vector::Ones(1));
    SUBCASE("Gaussian against the closed form") {
        const auto p = stationary_density(half, 0.5, line(8.0, 400));
        for (std::size_t c = 0; c < p.spec.cells(); ++c) {
            const double x = p.spec.center(c)[0];
            CHECK(std::abs(p.values[c] - std::exp(-x * x) / std::sqrt(M_PI)) < 1e-6);
        }
        CHECK(std::abs(second_moment(p, 0) - 0.5) < 1e-6);
        CHECK(std::abs(p.mass() - 1.0) < 1e-12);
        CHECK(equilibrium_free_energy(half, 0.5, line(8.0, 400)) ==
              doctest::Approx(-0.5 * std::log(std::sqrt(M_PI))).epsilon(1e-9));
    }
    SUBCASE("box too small") {
        try {
            stationary_density(half, 0.5, line(2.0, 50));
            FAIL("expected BoxTooSmall");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::BoxTooSmall);
        }
    }
    SUBCASE("symmetric double well gives a symmetric density") {
        const auto rp = fixture::shallow_reduction(1);
        const auto p = stationary_density(*rp, 0.05, line(2.5, 100));
        for (int i = 0; i < 50; ++i) CHECK(std::abs(p.values[i] - p.values[99 - i]) <= 1e-12);
        CHECK(std::abs(p.mass() - 1.0) < 1e-10);
        // bimodal: the origin is a saddle of W
        CHECK(p.values[50] < p.values.maxCoeff());
    }
    SUBCASE("two dimensions") {
        QuadraticLandscape ou((Vector(2) << 1.0, 4.0).finished());
        const auto p = stationary_density(ou, 0.2, square(4.0, 80));
        CHECK(std::abs(p.mass() - 1.0) < 1e-10);
        CHECK(second_moment(p, 0) == doctest::Approx(0.2).epsilon(1e-6));
        CHECK(second_moment(p, 1) == doctest::Approx(0.05).epsilon(1e-4));
    }
}

TEST_CASE("Fokker-Planck evolution") {
    SUBCASE("Gibbs density is a fixed point") {
        const auto table = fixture::shallow_table(1, 3.0, 600);
        const GridSpec spec = line(2.5, 200);
        const double nu = 0.05;
        const auto peq = stationary_density(*table, nu, spec);
        FokkerPlanckSettings s;
        s.dt = 0.9 * fokker_planck_max_dt(*table, nu, spec);
        s.T = 2000 * s.dt;
        s.save_every = 500;
        const auto run = fokker_planck_evolve(peq, *table, nu, s);
        CHECK(l1_distance(run.densities.back(), peq) <= 1e-12);
        CHECK(run.max_step_mass_change <= 1e-12);
        CHECK(run.min_value >= 0.0);
    }
    SUBCASE("pure diffusion second moment grows as 2 nu t") {
        QuadraticLandscape flat(Vector::Zero(2));
        const double nu = 0.5, s0 = 0.05;
        const GridSpec spec = square(5.0, 100);
        const auto p0 = gaussian(spec, Vector::Zero(2), s0);
        FokkerPlanckSettings s;
        s.dt = fokker_planck_max_dt(flat, nu, spec);
        s.T = 0.5;
        s.save_every = 100000;
        const auto run = fokker_planck_evolve(p0, flat, nu, s);
        const auto& pT = run.densities.back();
        for (int d = 0; d < 2; ++d) {
            const double grown = second_moment(pT, d) - second_moment(p0, d);
            CHECK(grown == doctest::Approx(2 * nu * s.T).epsilon(0.01));
        }
        CHECK(run.min_value >= 0.0);
    }
    SUBCASE("off-centre Gaussian relaxes to the Gibbs density, entropy decays") {
        QuadraticLandscape ou(Vector::Ones(1));
        const double nu = 0.3;
        const GridSpec spec = line(6.0, 240);
        const auto peq = stationary_density(ou, nu, spec);
        const auto p0 = gaussian(spec, Vector::Constant(1, 1.5), 0.1);
        FokkerPlanckSettings s;
        s.dt = fokker_planck_max_dt(ou, nu, spec);
        s.T = 10.0;
        s.save_every = 200;
        const auto run = fokker_planck_evolve(p0, ou, nu, s);
        CHECK(l1_distance(run.densities.back(), peq) <= 1e-3);
        double previous = relative_entropy(run.densities.front(), peq);
        for (const auto& p : run.densities) {
            const double h = relative_entropy(p, peq);
            CHECK(h <= previous + 1e-10);
            previous = h;
        }
        CHECK(run.max_step_mass_change <= 1e-12);
        CHECK(run.min_value >= 0.0);
    }
    SUBCASE("time step guard") {
        QuadraticLandscape ou(Vector::Ones(1));
        const GridSpec spec = line(6.0, 240);
        FokkerPlanckSettings s;
        s.dt = 1.01 * fokker_planck_max_dt(ou, 0.3, spec);
        try {
            fokker_planck_evolve(stationary_density(ou, 0.3, spec), ou, 0.3, s);
            FAIL("expected CflViolation");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::CflViolation);
        }
    }
}

TEST_CASE("relative entropy") {
    const GridSpec spec = line(14.0, 2800);
    const auto p = gaussian(spec, Vector::Zero(1), 1.0);
    const auto q = gaussian(spec, Vector::Ones(1), 2.0);
    CHECK(relative_entropy(p, p) == 0.0);
    CHECK(relative_entropy(p, q) > 0.0);
    CHECK(std::abs(relative_entropy(p, q) - (std::log(std::sqrt(2.0)) + 2.0 / 4 - 0.5)) < 1e-4);

    DensityGrid hole = q;
    hole.values[1400] = 0.0;
    try {
        relative_entropy(p, hole);
        FAIL("expected SupportMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SupportMismatch);
    }
    // 0 ln 0 = 0 on the other side
    DensityGrid sparse = p;
    sparse.values[0] = 0.0;
    CHECK(std::isfinite(relative_entropy(sparse, q)));
    CHECK_THROWS_AS(relative_entropy(p, gaussian(line(14.0, 100), Vector::Zero(1), 1.0)), Error);
}

TEST_CASE("free energy identity") {
    const auto rp = fixture::shallow_reduction(1);
    const auto table = fixture::shallow_table(1, 3.0, 600);
    const double nu = 0.05;
    const GridSpec spec = line(2.5, 200);
    const auto peq = stationary_density(*table, nu, spec);
    const double psi_eq = free_energy(peq, *table, nu);
    CHECK(std::abs(psi_eq - equilibrium_free_energy(*table, nu, spec)) <= 1e-10);

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.2, 1.8);
    for (int trial = 0; trial < 20; ++trial) {
        Vector v = peq.values;
        for (Eigen::Index c = 0; c < v.size(); ++c) v[c] *= u(rng);
        v /= v.sum() * peq.cell_volume;
        const auto p = make_density(spec, v);
        const double lhs = free_energy(p, *table, nu) - psi_eq;
        const double rhs = nu * relative_entropy(p, peq);
        CHECK(std::abs(lhs - rhs) <= 1e-8);
        CHECK(lhs >= 0.0);
    }
}

TEST_CASE("empirical density") {
    const GridSpec spec = line(3.0, 30);
    SUBCASE("single point") {
        Matrix pts(1, 1);
        pts << 0.42;
        const auto p = empirical_density(pts, spec);
        CHECK(p.mass() == doctest::Approx(1.0).epsilon(1e-15));
        CHECK((p.values.array() > 0).count() == 1);
    }
    SUBCASE("identical points land in one cell, outliers are counted") {
        Matrix pts = Matrix::Constant(50, 1, -1.234);
        pts(0, 0) = 10.0;
        pts(1, 0) = std::nan("");
        long outside = 0;
        const auto p = empirical_density(pts, spec, &outside);
        CHECK(outside == 1);
        CHECK((p.values.array() > 0).count() == 1);
        CHECK(p.mass() == doctest::Approx(1.0));
    }
    SUBCASE("stationary OU ensemble") {
        QuadraticLandscape ou(Vector::Ones(1));
        SdeConfig cfg;
        cfg.nu = 0.5;
        cfg.dt = 5e-3;
        cfg.n_paths = 100000;
        cfg.master_seed = 7;
        const auto ens = simulate_sde(Vector::Zero(1), ou, cfg, 6.0);
        const GridSpec box = line(4.0, 40);
        long outside = 0;
        const auto p = empirical_density(ens.endpoints, box, &outside);
        CHECK(outside < 10);
        Vector exact(box.cells());
        for (std::size_t c = 0; c < box.cells(); ++c) {
            const double a = box.center(c)[0] - 0.5 * box.axes[0].width();
            const double b = a + box.axes[0].width();
            exact[c] = 0.5 * (std::erf(b) - std::erf(a)) / box.cell_volume();
        }
        CHECK(l1_distance(p, make_density(box, exact)) <= 0.05);
    }
}

TEST_CASE("coarsening keeps mass") {
    const auto p = gaussian(square(3.0, 40), Vector::Zero(2), 0.3);
    const auto c = coarsen(p, 5);
    CHECK(c.spec.axes[0].n_cells == 8);
    CHECK(c.mass() == doctest::Approx(p.mass()).epsilon(1e-14));
    CHECK_THROWS_AS(coarsen(p, 3), Error);
}
