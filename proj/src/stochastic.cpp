#include "gradreduce/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>

#include "gradreduce/errors.hpp"
#include "gradreduce/parallel.hpp"

namespace gradreduce {

namespace {

// Independent generator per path: the seed sequence mixes the master seed
// with the path index, so streams do not depend on scheduling.
boost::random::mt19937_64 path_generator(std::uint64_t master, std::uint64_t path) {
    std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                      static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32),
                      0x9e3779b9u};
    return boost::random::mt19937_64(seq);
}

// Bernoulli function B(z) = z / (e^z - 1).
double bernoulli(double z) {
    if (std::abs(z) < 1e-8) return 1.0 - 0.5 * z;
    return z / std::expm1(z);
}

std::size_t stride(const GridSpec& spec, int axis) {
    return axis == 0 ? 1 : static_cast<std::size_t>(spec.axes[0].n_cells);
}

int axis_index(const GridSpec& spec, std::size_t cell, int axis) {
    if (axis == 0) return static_cast<int>(cell % spec.axes[0].n_cells);
    return static_cast<int>(cell / spec.axes[0].n_cells);
}

void check_same_grid(const DensityGrid& p, const DensityGrid& q) {
    require(p.spec == q.spec && p.values.size() == q.values.size(), ErrorCode::GridMismatch,
            "densities live on different grids");
}

} // namespace

Ensemble simulate_sde(const Vector& mu0, const GradientSystem& landscape, const SdeConfig& config,
                      double T) {
    const int m = landscape.dimension();
    require(mu0.size() == m, ErrorCode::InvalidArgument, "initial state has wrong length");
    require(config.nu >= 0.0, ErrorCode::InvalidArgument, "nu must be non-negative");
    require(config.dt > 0.0 && T >= 0.0, ErrorCode::InvalidArgument, "dt must be positive, T >= 0");
    require(config.n_paths >= 0, ErrorCode::InvalidArgument, "n_paths must be >= 0");
    const double lip = landscape.gradient_lipschitz();
    if (!(config.dt * lip < 0.5)) {
        std::ostringstream os;
        os << "Euler-Maruyama stability guard: dt * Lip(grad W) = " << config.dt * lip
           << " must be < 0.5";
        fail(ErrorCode::CflViolation, os.str());
    }

    const long steps = std::lround(T / config.dt);
    const double amplitude = std::sqrt(2.0 * config.nu * config.dt);

    Ensemble out;
    out.dim = m;
    out.endpoints.resize(config.n_paths, m);
    out.blown_up.assign(config.n_paths, 0);
    if (config.store_every > 0) out.paths.resize(config.n_paths);

    parallel_for(static_cast<std::size_t>(config.n_paths), config.workers, [&](std::size_t p) {
        auto gen = path_generator(config.master_seed, p);
        boost::random::normal_distribution<double> normal;
        Vector mu = mu0;
        Vector xi(m);
        if (config.store_every > 0) out.paths[p].push_back(mu);
        for (long k = 1; k <= steps; ++k) {
            for (int i = 0; i < m; ++i) xi[i] = normal(gen);
            mu += -config.dt * landscape.gradient(mu) + amplitude * xi;
            if (!std::isfinite(mu.norm()) || mu.norm() > config.blowup_bound) {
                out.blown_up[p] = 1;
                mu.setConstant(std::nan(""));
                break;
            }
            if (config.store_every > 0 && k % config.store_every == 0) out.paths[p].push_back(mu);
        }
        out.endpoints.row(p) = mu.transpose();
    });
    out.n_blowups = std::count(out.blown_up.begin(), out.blown_up.end(), 1);
    return out;
}

std::size_t GridSpec::cells() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= static_cast<std::size_t>(a.n_cells);
    return n;
}

double GridSpec::cell_volume() const {
    double v = 1.0;
    for (const auto& a : axes) v *= a.width();
    return v;
}

Vector GridSpec::center(std::size_t index) const {
    Vector x(dim());
    for (int d = 0; d < dim(); ++d) x[d] = axes[d].center(axis_index(*this, index, d));
    return x;
}

long GridSpec::locate(const Vector& x) const {
    long index = 0;
    long scale = 1;
    for (int d = 0; d < dim(); ++d) {
        const auto& a = axes[d];
        if (!(x[d] >= a.min && x[d] < a.max)) return -1;
        const long i = std::min<long>(a.n_cells - 1, static_cast<long>((x[d] - a.min) / a.width()));
        index += i * scale;
        scale *= a.n_cells;
    }
    return index;
}

void GridSpec::validate() const {
    require(dim() == 1 || dim() == 2, ErrorCode::InvalidArgument, "grids support dimension 1 or 2");
    for (const auto& a : axes)
        require(a.max > a.min && a.n_cells >= 2, ErrorCode::InvalidArgument, "bad grid axis");
}

bool GridSpec::operator==(const GridSpec& other) const {
    if (axes.size() != other.axes.size()) return false;
    for (std::size_t d = 0; d < axes.size(); ++d) {
        if (axes[d].min != other.axes[d].min || axes[d].max != other.axes[d].max ||
            axes[d].n_cells != other.axes[d].n_cells)
            return false;
    }
    return true;
}

DensityGrid make_density(const GridSpec& spec, Vector values) {
    spec.validate();
    require(values.size() == static_cast<Eigen::Index>(spec.cells()), ErrorCode::GridMismatch,
            "value count does not match the grid");
    return DensityGrid{spec, std::move(values), spec.cell_volume()};
}

Vector sample_landscape(const GradientSystem& landscape, const GridSpec& spec) {
    spec.validate();
    require(landscape.dimension() == spec.dim(), ErrorCode::GridMismatch,
            "grid dimension differs from the landscape dimension");
    Vector w(spec.cells());
    for (std::size_t c = 0; c < spec.cells(); ++c) w[c] = landscape.value(spec.center(c));
    return w;
}

namespace {

struct Gibbs {
    Vector weights; // exp(-(W - W_min)/nu)
    double w_min;
    double z_shifted;
};

Gibbs gibbs_weights(const GradientSystem& landscape, double nu, const GridSpec& spec) {
    require(nu > 0.0, ErrorCode::InvalidArgument, "nu must be positive");
    const Vector w = sample_landscape(landscape, spec);
    Gibbs g;
    g.w_min = w.minCoeff();
    g.weights = (-(w.array() - g.w_min) / nu).exp();
    g.z_shifted = g.weights.sum() * spec.cell_volume();
    return g;
}

} // namespace

DensityGrid stationary_density(const GradientSystem& landscape, double nu, const GridSpec& spec) {
    Gibbs g = gibbs_weights(landscape, nu, spec);
    const double peak = g.weights.maxCoeff();
    double boundary = 0.0;
    for (std::size_t c = 0; c < spec.cells(); ++c) {
        bool edge = false;
        for (int d = 0; d < spec.dim(); ++d) {
            const int i = axis_index(spec, c, d);
            edge = edge || i == 0 || i == spec.axes[d].n_cells - 1;
        }
        if (edge) boundary = std::max(boundary, g.weights[c]);
    }
    if (boundary > 1e-12 * peak) {
        std::ostringstream os;
        os << "box too small: boundary Gibbs weight " << boundary / peak
           << " of the peak exceeds 1e-12; enlarge the grid box";
        fail(ErrorCode::BoxTooSmall, os.str());
    }
    return make_density(spec, g.weights / g.z_shifted);
}

double equilibrium_free_energy(const GradientSystem& landscape, double nu, const GridSpec& spec) {
    const Gibbs g = gibbs_weights(landscape, nu, spec);
    return g.w_min - nu * std::log(g.z_shifted);
}

double fokker_planck_max_dt(const GradientSystem& landscape, double nu, const GridSpec& spec) {
    const Vector w = sample_landscape(landscape, spec);
    double h = spec.axes[0].width();
    double slope = 0.0;
    for (int d = 0; d < spec.dim(); ++d) {
        h = std::min(h, spec.axes[d].width());
        const std::size_t s = stride(spec, d);
        for (std::size_t c = 0; c < spec.cells(); ++c) {
            if (axis_index(spec, c, d) + 1 >= spec.axes[d].n_cells) continue;
            slope = std::max(slope, std::abs(w[c + s] - w[c]) / spec.axes[d].width());
        }
    }
    return 0.4 * h * h / (spec.dim() * (2.0 * nu + h * slope));
}

FokkerPlanckRun fokker_planck_evolve(const DensityGrid& p0, const GradientSystem& landscape,
                                     double nu, const FokkerPlanckSettings& settings) {
    const GridSpec& spec = p0.spec;
    require(nu > 0.0, ErrorCode::InvalidArgument, "nu must be positive");
    require(settings.T > 0.0 && settings.dt > 0.0, ErrorCode::InvalidArgument,
            "T and dt must be positive");
    require(settings.save_every >= 1, ErrorCode::InvalidArgument, "save_every must be >= 1");
    require((p0.values.array() >= 0.0).all(), ErrorCode::InvalidArgument,
            "initial density has negative cells");

    const double dt_max = fokker_planck_max_dt(landscape, nu, spec);
    if (settings.dt > dt_max) {
        std::ostringstream os;
        os << "Fokker-Planck time step " << settings.dt << " exceeds the stability limit " << dt_max;
        fail(ErrorCode::CflViolation, os.str());
    }
    const long steps = std::max(1L, std::lround(settings.T / settings.dt));
    const double dt = settings.T / static_cast<double>(steps);

    // Face coefficients: flux J = forward * p_left - backward * p_right.
    const Vector w = sample_landscape(landscape, spec);
    struct Faces {
        std::vector<std::size_t> left;
        std::vector<double> forward;
        std::vector<double> backward;
        std::size_t stride;
        double factor; // dt / h
    };
    std::vector<Faces> faces(spec.dim());
    for (int d = 0; d < spec.dim(); ++d) {
        Faces& f = faces[d];
        f.stride = stride(spec, d);
        const double h = spec.axes[d].width();
        f.factor = dt / h;
        for (std::size_t c = 0; c < spec.cells(); ++c) {
            if (axis_index(spec, c, d) + 1 >= spec.axes[d].n_cells) continue;
            const double delta = (w[c + f.stride] - w[c]) / nu;
            f.left.push_back(c);
            f.forward.push_back(nu / h * bernoulli(delta));
            f.backward.push_back(nu / h * bernoulli(-delta));
        }
    }

    FokkerPlanckRun run;
    run.steps = steps;
    run.times.push_back(0.0);
    run.densities.push_back(p0);
    run.min_value = p0.values.minCoeff();

    Vector p = p0.values;
    Vector next(p.size());
    double mass = p.sum();
    for (long k = 1; k <= steps; ++k) {
        next = p;
        for (const Faces& f : faces) {
            for (std::size_t i = 0; i < f.left.size(); ++i) {
                const std::size_t a = f.left[i];
                const std::size_t b = a + f.stride;
                const double moved = f.factor * (f.forward[i] * p[a] - f.backward[i] * p[b]);
                next[a] -= moved;
                next[b] += moved;
            }
        }
        p.swap(next);
        const double new_mass = p.sum();
        run.max_step_mass_change =
            std::max(run.max_step_mass_change, std::abs(new_mass - mass) * p0.cell_volume);
        mass = new_mass;
        run.min_value = std::min(run.min_value, p.minCoeff());
        if (k % settings.save_every == 0 || k == steps) {
            run.times.push_back(k * dt);
            run.densities.push_back(DensityGrid{spec, p, p0.cell_volume});
        }
    }
    return run;
}

double relative_entropy(const DensityGrid& p, const DensityGrid& q) {
    check_same_grid(p, q);
    double sum = 0.0;
    for (Eigen::Index c = 0; c < p.values.size(); ++c) {
        if (p.values[c] <= 0.0) continue;
        require(q.values[c] > 0.0, ErrorCode::SupportMismatch,
                "reference density vanishes where the density is positive");
        sum += p.values[c] * std::log(p.values[c] / q.values[c]);
    }
    return sum * p.cell_volume;
}

double free_energy(const DensityGrid& p, const GradientSystem& landscape, double nu) {
    const Vector w = sample_landscape(landscape, p.spec);
    double mean_w = 0.0, neg_entropy = 0.0;
    for (Eigen::Index c = 0; c < p.values.size(); ++c) {
        const double v = p.values[c];
        require(v >= 0.0, ErrorCode::SupportMismatch, "density has negative cells");
        mean_w += v * w[c];
        if (v > 0.0) neg_entropy += v * std::log(v);
    }
    return (mean_w + nu * neg_entropy) * p.cell_volume;
}

DensityGrid empirical_density(const Matrix& points, const GridSpec& spec, long* outside) {
    spec.validate();
    require(points.cols() == spec.dim(), ErrorCode::GridMismatch,
            "point dimension differs from the grid dimension");
    Vector counts = Vector::Zero(spec.cells());
    long inside = 0, missed = 0;
    for (Eigen::Index r = 0; r < points.rows(); ++r) {
        const Vector x = points.row(r).transpose();
        if (!x.allFinite()) continue;
        const long c = spec.locate(x);
        if (c < 0) {
            ++missed;
            continue;
        }
        counts[c] += 1.0;
        ++inside;
    }
    if (outside) *outside = missed;
    if (inside > 0) counts /= inside * spec.cell_volume();
    return make_density(spec, counts);
}

double l1_distance(const DensityGrid& p, const DensityGrid& q) {
    check_same_grid(p, q);
    return (p.values - q.values).cwiseAbs().sum() * p.cell_volume;
}

DensityGrid coarsen(const DensityGrid& p, int factor) {
    require(factor >= 1, ErrorCode::InvalidArgument, "coarsening factor must be >= 1");
    GridSpec coarse = p.spec;
    for (auto& a : coarse.axes) {
        require(a.n_cells % factor == 0, ErrorCode::GridMismatch,
                "cell count not divisible by the coarsening factor");
        a.n_cells /= factor;
    }
    Vector values = Vector::Zero(coarse.cells());
    for (std::size_t c = 0; c < p.spec.cells(); ++c) {
        std::size_t target = 0, scale = 1;
        for (int d = 0; d < p.spec.dim(); ++d) {
            target += (axis_index(p.spec, c, d) / factor) * scale;
            scale *= coarse.axes[d].n_cells;
        }
        values[target] += p.values[c] * p.cell_volume;
    }
    values /= coarse.cell_volume();
    return make_density(coarse, values);
}

} // namespace gradreduce
