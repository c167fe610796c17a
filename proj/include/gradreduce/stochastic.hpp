#pragma once

#include <cstdint>
#include <vector>

#include "gradreduce/landscape.hpp"

namespace gradreduce {

/// Euler-Maruyama settings. Increments have variance 2 nu dt per coordinate,
/// so the stationary law is exp(-W/nu)/Z.
struct SdeConfig {
    double nu = 0.1;
    double dt = 1e-3;
    long n_paths = 1000;
    std::uint64_t master_seed = 1;
    int workers = 1;
    /// Store every k-th state of each path (0 = endpoints only).
    int store_every = 0;
    double blowup_bound = 1e6;
};

struct Ensemble {
    int dim = 0;
    /// n_paths x dim; rows of blown-up paths hold NaN.
    Matrix endpoints;
    std::vector<char> blown_up;
    long n_blowups = 0;
    /// Per path, the stored states (only when store_every > 0).
    std::vector<std::vector<Vector>> paths;
};

/// mu_{k+1} = mu_k - grad W(mu_k) dt + sqrt(2 nu dt) xi_k. Each path draws
/// from its own generator seeded by (master_seed, path index), so the result
/// does not depend on the worker count or scheduling.
Ensemble simulate_sde(const Vector& mu0, const GradientSystem& landscape, const SdeConfig& config,
                      double T);

struct GridAxis {
    double min = -1.0;
    double max = 1.0;
    int n_cells = 100;

    double width() const { return (max - min) / n_cells; }
    double center(int i) const { return min + (i + 0.5) * width(); }
};

/// Cell-centred box in dimension 1 or 2. Cells are numbered with the first
/// axis fastest.
struct GridSpec {
    std::vector<GridAxis> axes;

    int dim() const { return static_cast<int>(axes.size()); }
    std::size_t cells() const;
    double cell_volume() const;
    Vector center(std::size_t index) const;
    /// Cell index of x, or -1 when x lies outside the box.
    long locate(const Vector& x) const;
    void validate() const;
    bool operator==(const GridSpec& other) const;
};

struct GridFunction {
    GridSpec spec;
    Vector values;
};

struct DensityGrid {
    GridSpec spec;
    Vector values;
    double cell_volume = 0.0;

    double mass() const { return values.sum() * cell_volume; }
};

DensityGrid make_density(const GridSpec& spec, Vector values);

/// W sampled at the cell centres.
Vector sample_landscape(const GradientSystem& landscape, const GridSpec& spec);

/// Gibbs density exp(-W/nu)/Z with Z by the cell-centre rule. Throws
/// BoxTooSmall when a boundary cell carries more than 1e-12 of the peak.
DensityGrid stationary_density(const GradientSystem& landscape, double nu, const GridSpec& spec);

/// -nu ln Z with the quadrature of stationary_density.
double equilibrium_free_energy(const GradientSystem& landscape, double nu, const GridSpec& spec);

struct FokkerPlanckSettings {
    double T = 1.0;
    double dt = 1e-4;
    /// Store every k-th density (the final one is always stored).
    int save_every = 100;
};

struct FokkerPlanckRun {
    std::vector<double> times;
    std::vector<DensityGrid> densities;
    /// Largest |mass change| observed in a single step.
    double max_step_mass_change = 0.0;
    /// Smallest cell value seen at any step.
    double min_value = 0.0;
    long steps = 0;
};

/// Largest dt allowed for the explicit fitted-flux scheme on this grid.
double fokker_planck_max_dt(const GradientSystem& landscape, double nu, const GridSpec& spec);

/// dp/dt = div(p grad W) + nu lap p on the box with zero-flux walls.
/// Scharfetter-Gummel (exponentially fitted) face fluxes with explicit Euler
/// steps; the discrete Gibbs density is an exact fixed point.
FokkerPlanckRun fokker_planck_evolve(const DensityGrid& p0, const GradientSystem& landscape,
                                     double nu, const FokkerPlanckSettings& settings);

/// Sum p ln(p/q) dV with 0 ln 0 = 0.
double relative_entropy(const DensityGrid& p, const DensityGrid& q);

/// E_p W + nu sum p ln p dV.
double free_energy(const DensityGrid& p, const GradientSystem& landscape, double nu);

/// Normalised histogram of the finite endpoints that fall inside the box.
/// Points outside are counted in *outside when given.
DensityGrid empirical_density(const Matrix& points, const GridSpec& spec, long* outside = nullptr);

/// Sum |p - q| dV on a common grid.
double l1_distance(const DensityGrid& p, const DensityGrid& q);

/// Sums blocks of `factor` cells per axis into a coarser grid.
DensityGrid coarsen(const DensityGrid& p, int factor);

} // namespace gradreduce
