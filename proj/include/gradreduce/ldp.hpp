#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gradreduce/landscape.hpp"
#include "gradreduce/stochastic.hpp"

namespace gradreduce {

/// x_0 .. x_K on a uniform time grid, stored as rows of `points`. The
/// endpoints are held fixed by the optimizers.
struct DiscretePath {
    double dt = 0.0;
    Matrix points;

    int segments() const { return static_cast<int>(points.rows()) - 1; }
    int dim() const { return static_cast<int>(points.cols()); }
    double horizon() const { return dt * segments(); }
    void validate() const;
};

enum class Optimizer { GradientDescentMomentum, QuasiNewton };

const char* to_string(Optimizer o);
Optimizer optimizer_from_string(const std::string& name);

/// alpha = 1/4 matches the Gibbs density exp(-W/nu) of the SDE convention;
/// alpha = 1/2 is the other common normalisation of the Lagrangian.
struct ActionSettings {
    double alpha = 0.25;
    Optimizer optimizer = Optimizer::QuasiNewton;
    /// Stop when |grad| / sqrt(dt), the L2 norm of the functional derivative, is below tol.
    double tol = 1e-8;
    int max_iter = 20000;
};

/// alpha * sum_k |(x_{k+1} - x_k)/dt + grad W(x_{k+1/2})|^2 dt with the drift
/// evaluated at segment midpoints.
double action(const DiscretePath& path, const GradientSystem& landscape,
              const ActionSettings& settings);

/// Gradient of the discrete action with respect to every point; the rows of
/// the two endpoints are zero.
Matrix action_gradient(const DiscretePath& path, const GradientSystem& landscape,
                       const ActionSettings& settings);

struct QuasiPotentialResult {
    double value = 0.0;
    DiscretePath path;
    double horizon = 0.0;
    int iterations = 0;
    /// |grad| / sqrt(dt) at the returned path.
    double gradient_norm = 0.0;
    bool converged = false;
    std::string message;
    /// Values seen along the horizon continuation (infinite-horizon only).
    std::vector<double> horizon_values;
};

/// Straight line from x0 to x1, or (when W(x1) < W(x0)) the relaxation orbit
/// from x0 bent linearly onto x1.
DiscretePath initial_path(const Vector& x0, const Vector& x1, double T, int K,
                          const GradientSystem& landscape);

/// Minimum of the discrete action over paths with fixed endpoints and horizon.
/// Throws NoConvergence (with diagnostics in the message) when the gradient
/// tolerance is not met within max_iter.
QuasiPotentialResult minimize_action(const Vector& x0, const Vector& x1, double T, int K,
                                     const GradientSystem& landscape,
                                     const ActionSettings& settings,
                                     const DiscretePath* start = nullptr);

struct HorizonSettings {
    double T0 = 4.0;
    /// Time step of every horizon: K = T / dt.
    double dt = 0.02;
    double tol_rel = 1e-3;
    int max_doublings = 8;
};

/// Quasi-potential V(x) from an equilibrium x_hat: horizons T0, 2 T0, ...
/// until the minimal action changes by less than tol_rel. Each horizon is
/// warm-started with the previous optimum, padded at x_hat.
QuasiPotentialResult quasi_potential_infty(const Vector& x, const Vector& x_hat,
                                           const GradientSystem& landscape,
                                           const ActionSettings& settings,
                                           const HorizonSettings& horizon = {});

/// H(x, p) = |p|^2 / (4 alpha) + p . X(x), X = -grad W.
double hamiltonian(const Vector& x, const Vector& p, const GradientSystem& landscape,
                   const ActionSettings& settings);

/// L(x, v) = alpha |v - X(x)|^2.
double lagrangian(const Vector& x, const Vector& v, const GradientSystem& landscape,
                  const ActionSettings& settings);

using GradientField = std::function<Vector(const Vector&)>;

/// sup over the grid cell centres of |H(x, grad S(x))| for an analytic gradient.
double stationary_hj_residual(const GradientField& grad_s, const GridSpec& grid,
                              const GradientSystem& landscape, const ActionSettings& settings);

/// Same, with grad S from central differences of grid values (one-sided at walls).
double stationary_hj_residual(const GridFunction& s, const GradientSystem& landscape,
                              const ActionSettings& settings);

/// sup_x H(x, grad u(x)) over the grid cell centres and the given extra points
/// (typically critical points of W). Bounded below by zero whenever a critical
/// point is included.
double mane_upper_bound(const GradientField& grad_u, const GridSpec& grid,
                        const GradientSystem& landscape, const ActionSettings& settings,
                        const std::vector<Vector>& extra_points = {});

/// Same over an explicit point set (any dimension).
double mane_upper_bound(const GradientField& grad_u, const std::vector<Vector>& points,
                        const GradientSystem& landscape, const ActionSettings& settings);

double mane_upper_bound(const GridFunction& u, const GradientSystem& landscape,
                        const ActionSettings& settings,
                        const std::vector<Vector>& extra_points = {});

struct ManeFamilyResult {
    double theta = 0.0;
    double value = 0.0;
};

/// Minimises mane_upper_bound(theta * grad phi) over theta in [lo, hi] with
/// Brent's method.
ManeFamilyResult mane_family_minimum(const GradientField& grad_phi, double lo, double hi,
                                     const GridSpec& grid, const GradientSystem& landscape,
                                     const ActionSettings& settings,
                                     const std::vector<Vector>& extra_points = {});

ManeFamilyResult mane_family_minimum(const GradientField& grad_phi, double lo, double hi,
                                     const std::vector<Vector>& points,
                                     const GradientSystem& landscape,
                                     const ActionSettings& settings);

/// S = -nu ln p shifted so that its minimum is zero. Throws NonPositiveDensity.
GridFunction cole_hopf_rate(const DensityGrid& p, double nu);

} // namespace gradreduce
