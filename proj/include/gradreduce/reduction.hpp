#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gradreduce/landscape.hpp"
#include "gradreduce/spectral.hpp"

namespace gradreduce {

/// Fixed point eta = Q_m g(V'(mu + eta)) on the tail modes.
struct TailSolution {
    Vector eta; // full length N, head entries exactly zero
    int iterations = 0;
    double final_update_norm = 0.0;
    std::vector<double> update_norms;
};

struct TailSettings {
    double tol = 1e-12;
    int max_iter = 200;
};

/// Lipschitz constant C / lambda_{m+1} of the tail map on Q_m H.
double contraction_margin(const Potential& potential, const SpectralBasis& basis, int m);

/// Exact finite reduction W(mu) = J(mu + eta~(mu)) of the energy onto the
/// first m modes. Construction refuses cutoffs whose contraction margin is
/// not strictly below one.
class ReducedPotential final : public GradientSystem {
public:
    ReducedPotential(BasisPtr basis, Potential potential, int m, TailSettings settings = {});

    int m() const noexcept { return m_; }
    const SpectralBasis& basis() const noexcept { return *basis_; }
    const BasisPtr& basis_ptr() const noexcept { return basis_; }
    const Potential& potential() const noexcept { return potential_; }
    const TailSettings& settings() const noexcept { return settings_; }

    /// q = C / lambda_{m+1}.
    double margin() const noexcept { return margin_; }
    /// C / lambda_m, the cruder bound quoted alongside q in reports.
    double head_margin() const;

    TailSolution solve_tail(const Vector& mu) const;
    /// Full coefficient vector mu + eta~(mu).
    Vector lift(const Vector& mu) const;
    Vector embed(const Vector& mu) const;

    int dimension() const override { return m_; }
    double value(const Vector& mu) const override;
    Vector gradient(const Vector& mu) const override;
    /// Exact Hessian through the linearised tail equation.
    Matrix hessian(const Vector& mu) const override;
    double gradient_lipschitz() const override;

    /// Tail map applied once: Q_m g(V'(mu + eta)).
    Vector tail_map(const Vector& full) const;

private:
    void check_mu(const Vector& mu) const;

    BasisPtr basis_;
    Potential potential_;
    int m_;
    TailSettings settings_;
    double margin_;
};

double reduced_energy(const ReducedPotential& rp, const Vector& mu);
Vector reduced_gradient(const ReducedPotential& rp, const Vector& mu);

struct Equilibrium {
    Vector mu;
    Vector u; // lifted full coefficients
    double residual_norm = 0.0;
    double gradient_norm = 0.0;
    double energy = 0.0;
    int seed_index = -1;
    int newton_iterations = 0;
};

struct SeedFailure {
    int seed_index;
    std::string reason;
};

struct EquilibriaResult {
    std::vector<Equilibrium> found; // one per converged seed, seed order
    std::vector<SeedFailure> failures;
};

struct NewtonSettings {
    double gradient_tol = 1e-10;
    int max_iter = 100;
    double fd_step = 1e-6;
};

/// Damped Newton on grad W from every seed.
EquilibriaResult find_equilibria(const ReducedPotential& rp, const std::vector<Vector>& seeds,
                                 const NewtonSettings& settings = {});

/// Drops duplicates (Euclidean distance below `tol` in mu), keeping first occurrence.
std::vector<Equilibrium> distinct_equilibria(const std::vector<Equilibrium>& all,
                                             double tol = 1e-6);

struct ManifoldKind {
    enum class Type { Flat, Phi0, PhiK, StaticTail };
    Type type = Type::Flat;
    int k = 0;

    static ManifoldKind flat() { return {Type::Flat, 0}; }
    static ManifoldKind phi0() { return {Type::Phi0, 0}; }
    static ManifoldKind phi_k(int k);
    static ManifoldKind static_tail() { return {Type::StaticTail, 0}; }

    std::string name() const;
};

/// Tail field Phi(mu) (full length, zero head) of an approximate inertial manifold.
Vector manifold_map(const ManifoldKind& kind, const ReducedPotential& rp, const Vector& mu);

/// Norm of the invariance-equation residual
///   Phi'(mu)[Delta mu - P_m V'(mu + Phi)] - Delta Phi + Q_m V'(mu + Phi)
/// with Phi' by central differences. Requires m <= 3.
double invariance_defect(const ManifoldKind& kind, const ReducedPotential& rp, const Vector& mu,
                         double fd_step = 1e-5);

} // namespace gradreduce
