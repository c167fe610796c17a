#include "gradreduce/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gradreduce/errors.hpp"
#include "gradreduce/parallel.hpp"

namespace gradreduce {

namespace {

long step_count(const StepSettings& s) {
    require(s.dt > 0.0 && s.T > 0.0, ErrorCode::InvalidArgument, "dt and T must be positive");
    require(s.save_every >= 1, ErrorCode::InvalidArgument, "save_every must be >= 1");
    return std::max(1L, std::lround(s.T / s.dt));
}

void check_blowup(const Vector& state, double bound, double t) {
    const double n = state.norm();
    if (!std::isfinite(n) || n > bound) {
        std::ostringstream os;
        os << "state norm " << n << " exceeded " << bound << " at t = " << t
           << " (time step too large?)";
        fail(ErrorCode::BlowUp, os.str());
    }
}

// phi_2(z) = (e^z - 1 - z) / z^2 for z = -lambda h <= 0
double phi2(double z) {
    if (std::abs(z) < 1e-4) return 0.5 + z / 6.0 + z * z / 24.0;
    return (std::expm1(z) - z) / (z * z);
}

Trajectory integrate_etd2(const SpectralBasis& basis, const Potential& potential, int n_active,
                          const Vector& a0, const StepSettings& s, const char* method) {
    require(a0.size() == n_active, ErrorCode::InvalidArgument, "initial state has wrong length");
    const long steps = step_count(s);
    const double h = s.T / static_cast<double>(steps);

    const Vector lam = basis.eigenvalues().head(n_active);
    Vector decay(n_active), phi1h(n_active), phi2h(n_active);
    for (int j = 0; j < n_active; ++j) {
        const double z = -lam[j] * h;
        decay[j] = std::exp(z);
        phi1h[j] = std::abs(z) < 1e-12 ? h : -std::expm1(z) / lam[j];
        phi2h[j] = h * phi2(z);
    }
    auto reaction = [&](const Vector& a) -> Vector {
        return -basis.nonlinearity(a, potential).head(n_active);
    };

    Trajectory traj;
    traj.dt = h;
    traj.method = method;
    traj.times.push_back(0.0);
    traj.states.push_back(a0);
    Vector a = a0;
    for (long k = 1; k <= steps; ++k) {
        const Vector n0 = reaction(a);
        const Vector predictor = decay.cwiseProduct(a) + phi1h.cwiseProduct(n0);
        const Vector n1 = reaction(predictor);
        a = predictor + phi2h.cwiseProduct(n1 - n0);
        const double t = static_cast<double>(k) * h;
        check_blowup(a, s.blowup_bound, t);
        if (k % s.save_every == 0 || k == steps) {
            traj.times.push_back(t);
            traj.states.push_back(a);
        }
    }
    return traj;
}

} // namespace

Trajectory integrate_full(const BasisPtr& basis, const Potential& potential, const Vector& u0,
                          const StepSettings& settings) {
    return integrate_etd2(*basis, potential, basis->n_modes(), u0, settings, "etdrk2-full");
}

Trajectory integrate_flat(const BasisPtr& basis, const Potential& potential, int m,
                          const Vector& mu0, const StepSettings& settings) {
    require(m >= 1 && m <= basis->n_modes(), ErrorCode::IndexOutOfRange, "cutoff m out of range");
    return integrate_etd2(*basis, potential, m, mu0, settings,
                          m == basis->n_modes() ? "etdrk2-full" : "etdrk2-flat");
}

Trajectory integrate_reduced(const ReducedPotential& rp, const Vector& mu0,
                             const StepSettings& s) {
    require(mu0.size() == rp.m(), ErrorCode::InvalidArgument, "initial state has wrong length");
    const long steps = step_count(s);
    const double h = s.T / static_cast<double>(steps);

    Trajectory traj;
    traj.dt = h;
    traj.method = "rk4-reduced";
    traj.times.push_back(0.0);
    traj.states.push_back(mu0);
    Vector mu = mu0;
    for (long k = 1; k <= steps; ++k) {
        const Vector k1 = -rp.gradient(mu);
        const Vector k2 = -rp.gradient(mu + 0.5 * h * k1);
        const Vector k3 = -rp.gradient(mu + 0.5 * h * k2);
        const Vector k4 = -rp.gradient(mu + h * k3);
        mu += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        const double t = static_cast<double>(k) * h;
        check_blowup(mu, s.blowup_bound, t);
        if (k % s.save_every == 0 || k == steps) {
            traj.times.push_back(t);
            traj.states.push_back(mu);
        }
    }
    return traj;
}

double distance_to_manifold(const Vector& u, const ManifoldKind& kind, const ReducedPotential& rp) {
    const int m = rp.m();
    require(u.size() == rp.basis().n_modes(), ErrorCode::InvalidArgument,
            "field has wrong number of modes");
    const Vector mu = u.head(m);
    Vector diff = u - manifold_map(kind, rp, mu);
    diff.head(m).setZero();
    return diff.norm();
}

std::vector<double> energy_series(const SpectralBasis& basis, const Potential& potential,
                                  const Trajectory& traj) {
    std::vector<double> out;
    out.reserve(traj.size());
    for (const auto& a : traj.states) out.push_back(energy(basis, a, potential));
    return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 2) return std::nan("");
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) return std::nan("");
    return (n * sxy - sx * sy) / denom;
}

ScalingReport aim_scaling_experiment(const ScalingConfig& config) {
    require(config.basis != nullptr, ErrorCode::InvalidArgument, "scaling experiment needs a basis");
    require(!config.cutoffs.empty(), ErrorCode::InvalidArgument, "no cutoffs given");
    const SpectralBasis& basis = *config.basis;

    // Build every reduction first so an invalid cutoff fails before integrating.
    std::vector<ReducedPotential> reductions;
    reductions.reserve(config.cutoffs.size());
    for (int m : config.cutoffs) reductions.emplace_back(config.basis, config.potential, m, config.tail);

    const Trajectory traj = integrate_full(config.basis, config.potential, config.u0, config.steps);
    const std::vector<double> energies = energy_series(basis, config.potential, traj);

    ScalingReport report;
    const double t_end = traj.times.back();
    report.t_star = 0.5 * t_end;
    for (size_t k = 1; k < traj.size(); ++k) {
        const double rate = (energies[k - 1] - energies[k]) / (traj.times[k] - traj.times[k - 1]);
        if (rate < config.burn_in_rate) {
            report.t_star = std::min(traj.times[k], 0.5 * t_end);
            break;
        }
    }
    std::vector<size_t> window;
    for (size_t k = 1; k + 1 < traj.size(); ++k)
        if (traj.times[k] >= report.t_star) window.push_back(k);
    require(!window.empty(), ErrorCode::InvalidArgument,
            "no stored states after the burn-in time; lower save_every or raise T");

    report.rows.resize(reductions.size());
    parallel_for(reductions.size(), config.workers, [&](size_t i) {
        const ReducedPotential& rp = reductions[i];
        const int m = rp.m();
        ScalingRow row;
        row.m = m;
        row.delta = basis.eigenvalue(1) / basis.eigenvalue(m + 1);
        const int tail = basis.n_modes() - m;
        for (size_t k : window) {
            const Vector& u = traj.states[k];
            row.dist_flat = std::max(row.dist_flat, distance_to_manifold(u, ManifoldKind::flat(), rp));
            row.dist_phi0 = std::max(row.dist_phi0, distance_to_manifold(u, ManifoldKind::phi0(), rp));
            row.dist_static =
                std::max(row.dist_static, distance_to_manifold(u, ManifoldKind::static_tail(), rp));
            row.eta_norm = std::max(row.eta_norm, u.tail(tail).norm());
            const Vector du = (traj.states[k + 1] - traj.states[k - 1]) /
                              (traj.times[k + 1] - traj.times[k - 1]);
            row.etaprime_norm = std::max(row.etaprime_norm, du.tail(tail).norm());
        }
        report.rows[i] = row;
    });

    std::vector<double> delta, flat, phi0, stat, eta, etap;
    for (const auto& r : report.rows) {
        delta.push_back(r.delta);
        flat.push_back(r.dist_flat);
        phi0.push_back(r.dist_phi0);
        stat.push_back(r.dist_static);
        eta.push_back(r.eta_norm);
        etap.push_back(r.etaprime_norm);
        report.kappa_static = std::max(report.kappa_static, r.dist_static / (r.delta * r.delta));
        report.kappa_eta = std::max(report.kappa_eta, r.eta_norm / r.delta);
    }
    report.slopes.flat = loglog_slope(delta, flat);
    report.slopes.phi0 = loglog_slope(delta, phi0);
    report.slopes.static_tail = loglog_slope(delta, stat);
    report.slopes.eta = loglog_slope(delta, eta);
    report.slopes.etaprime = loglog_slope(delta, etap);
    return report;
}

} // namespace gradreduce
