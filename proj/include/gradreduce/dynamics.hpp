#pragma once

#include <string>
#include <vector>

#include "gradreduce/reduction.hpp"

namespace gradreduce {

/// Sampled orbit. States are coefficient vectors: full fields for the PDE,
/// head coordinates for the reduced and flat systems.
struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> states;
    double dt = 0.0;
    std::string method;

    std::size_t size() const { return times.size(); }
    const Vector& back() const { return states.back(); }
};

struct StepSettings {
    double dt = 1e-3;
    double T = 1.0;
    int save_every = 1;
    double blowup_bound = 1e6;
};

/// Full Galerkin system a' = -lambda a - P_N gamma(u) by second-order
/// exponential time differencing (ETDRK2): the diagonal stiff part is
/// integrated exactly, the reaction explicitly.
Trajectory integrate_full(const BasisPtr& basis, const Potential& potential, const Vector& u0,
                          const StepSettings& settings);

/// Reduced gradient flow mu' = -grad W(mu) by classical RK4.
Trajectory integrate_reduced(const ReducedPotential& rp, const Vector& mu0,
                             const StepSettings& settings);

/// Flat-manifold Galerkin system mu' = Delta mu - P_m V'(mu): the ETDRK2
/// scheme of integrate_full restricted to the first m modes. m = N
/// reproduces integrate_full.
Trajectory integrate_flat(const BasisPtr& basis, const Potential& potential, int m,
                          const Vector& mu0, const StepSettings& settings);

/// ||Q_m u - Phi(P_m u)|| for a full coefficient vector u.
double distance_to_manifold(const Vector& u, const ManifoldKind& kind, const ReducedPotential& rp);

/// Energy J along a full trajectory.
std::vector<double> energy_series(const SpectralBasis& basis, const Potential& potential,
                                  const Trajectory& traj);

struct ScalingConfig {
    BasisPtr basis;
    Potential potential = Potential::zero();
    Vector u0;
    StepSettings steps;
    std::vector<int> cutoffs;
    TailSettings tail;
    double burn_in_rate = 1e-6; // t* = first time -dJ/dt drops below this (capped at T/2)
    int workers = 1;
};

struct ScalingRow {
    int m = 0;
    double delta = 0.0; // lambda_1 / lambda_{m+1}
    double dist_flat = 0.0;
    double dist_phi0 = 0.0;
    double dist_static = 0.0;
    double eta_norm = 0.0;
    double etaprime_norm = 0.0;
};

struct ScalingSlopes {
    double flat = 0.0;
    double phi0 = 0.0;
    double static_tail = 0.0;
    double eta = 0.0;
    double etaprime = 0.0;
};

struct ScalingReport {
    std::vector<ScalingRow> rows;
    ScalingSlopes slopes;
    double t_star = 0.0;
    /// Empirical constant max dist_static / delta^2 over the rows.
    double kappa_static = 0.0;
    /// Empirical constant max |eta| / delta.
    double kappa_eta = 0.0;
};

/// Integrates the full PDE once and records, for every cutoff m, the sup over
/// t in [t*, T] of the distance of the orbit to each approximate manifold and
/// of |Q_m u|, |Q_m u'|; then fits log-log slopes against delta.
ScalingReport aim_scaling_experiment(const ScalingConfig& config);

/// Least-squares slope of log(y) against log(x) over the positive entries.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace gradreduce
