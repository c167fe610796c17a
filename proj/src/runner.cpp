#include "gradreduce/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "gradreduce/checksum.hpp"
#include "gradreduce/dynamics.hpp"
#include "gradreduce/ldp.hpp"
#include "gradreduce/parallel.hpp"
#include "gradreduce/stochastic.hpp"

namespace gradreduce {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Collects one CSV in memory; written in a single call so partial files are rare.
class Csv {
public:
    explicit Csv(const std::vector<std::string>& header) { row_strings(header); }

    Csv& row(const std::vector<double>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) text_ += ',';
            text_ += format_number(cells[i]);
        }
        text_ += '\n';
        return *this;
    }
    void row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) text_ += ',';
            text_ += cells[i];
        }
        text_ += '\n';
    }
    const std::string& text() const { return text_; }

private:
    std::string text_;
};

std::vector<std::string> coord_names(int m) {
    std::vector<std::string> out;
    for (int j = 1; j <= m; ++j) out.push_back("mu_" + std::to_string(j));
    return out;
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

std::vector<double> cells_of(const Vector& v) { return {v.data(), v.data() + v.size()}; }

std::vector<double> concat(std::vector<double> a, const std::vector<double>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

class Outputs {
public:
    explicit Outputs(fs::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) fail(ErrorCode::Io, "cannot create output directory " + dir_.string());
    }

    void write(const std::string& name, const std::string& text) {
        const fs::path path = dir_ / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << text;
        out.close();
        if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
        names_.push_back(name);
    }
    void write(const std::string& name, const Csv& csv) { write(name, csv.text()); }

    const fs::path& dir() const { return dir_; }
    const std::vector<std::string>& names() const { return names_; }

private:
    fs::path dir_;
    std::vector<std::string> names_;
};

Csv density_csv(const DensityGrid& p) {
    const int m = p.spec.dim();
    Csv csv(concat(concat({"cell_index"}, coord_names(m)), {"p"}));
    for (std::size_t c = 0; c < p.spec.cells(); ++c)
        csv.row(concat(concat({static_cast<double>(c)}, cells_of(p.spec.center(c))), {p.values[c]}));
    return csv;
}

Vector point_or_zero(const std::vector<double>& v, int m) {
    if (v.empty()) return Vector::Zero(m);
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

GridSpec fp_grid(const ExperimentConfig& c, const char* command) {
    if (c.fp.box.empty())
        fail(ErrorCode::ConfigInvalid, std::string(command) + " needs fp.box (one axis per coordinate)");
    GridSpec spec{c.fp.box};
    spec.validate();
    return spec;
}

std::vector<Vector> reduction_seeds(const ExperimentConfig& c) {
    const int m = c.reduction.m;
    std::vector<Vector> seeds;
    if (!c.reduction.seeds.empty()) {
        for (const auto& s : c.reduction.seeds) seeds.push_back(point_or_zero(s, m));
        return seeds;
    }
    seeds.push_back(Vector::Zero(m));
    for (int j = 0; j < m; ++j)
        for (double s : {0.5, 1.0, 2.0})
            for (double sign : {1.0, -1.0}) {
                Vector v = Vector::Zero(m);
                v[j] = sign * s;
                seeds.push_back(v);
            }
    return seeds;
}

ActionSettings action_settings(const ExperimentConfig& c) {
    ActionSettings s;
    s.alpha = c.ldp.alpha;
    s.optimizer = optimizer_from_string(c.ldp.optimizer);
    s.tol = c.ldp.tol;
    s.max_iter = c.ldp.max_iter;
    return s;
}

// Critical points of the landscape reached by Newton from the reduction seeds.
std::vector<Vector> landscape_critical_points(const ExperimentConfig& c, const GradientSystem& w) {
    std::vector<Vector> found;
    for (const Vector& seed : reduction_seeds(c)) {
        Vector x;
        try {
            x = critical_point(w, seed);
        } catch (const Error&) {
            continue;
        }
        const bool dup = std::any_of(found.begin(), found.end(),
                                     [&](const Vector& y) { return (x - y).norm() < 1e-6; });
        if (!dup) found.push_back(x);
    }
    return found;
}

// Relaxes x along -grad W by RK4 and reports whether it settles at `target`.
bool flows_to(const GradientSystem& w, Vector x, const Vector& target) {
    const double h = 0.01;
    for (int k = 0; k < 20000; ++k) {
        const Vector k1 = -w.gradient(x);
        const Vector k2 = -w.gradient(x + 0.5 * h * k1);
        const Vector k3 = -w.gradient(x + 0.5 * h * k2);
        const Vector k4 = -w.gradient(x + h * k3);
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if ((x - target).norm() < 1e-6) return true;
        if (!x.allFinite() || x.norm() > 1e6) return false;
    }
    return false;
}

using Command = std::function<bool(const ExperimentConfig&, const Model&, const RunOptions&,
                                   Outputs&, std::ostream&)>;

// ---- reduce ---------------------------------------------------------------

bool cmd_reduce(const ExperimentConfig& c, const Model& model, const RunOptions& opt, Outputs& out,
                std::ostream& log) {
    const ReducedPotential& rp = *model.reduced;
    const int m = rp.m();
    log << "contraction margin q = C/lambda_" << m + 1 << " = " << format_number(rp.margin())
        << "\nhead ratio C/lambda_" << m << " = " << format_number(rp.head_margin()) << "\n";

    NewtonSettings newton;
    const EquilibriaResult result = find_equilibria(rp, reduction_seeds(c), newton);
    std::vector<Equilibrium> eqs = distinct_equilibria(result.found);
    std::sort(eqs.begin(), eqs.end(), [](const Equilibrium& a, const Equilibrium& b) {
        if (a.energy != b.energy) return a.energy < b.energy;
        return std::lexicographical_compare(a.mu.data(), a.mu.data() + a.mu.size(), b.mu.data(),
                                            b.mu.data() + b.mu.size());
    });

    Csv eq_csv(concat(concat({"index"}, coord_names(m)),
                      {"W", "gradient_norm", "residual_norm", "morse_index"}));
    bool ok = true;
    for (std::size_t i = 0; i < eqs.size(); ++i) {
        const Equilibrium& e = eqs[i];
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(rp.hessian(e.mu));
        const auto morse = (eig.eigenvalues().array() < 0.0).count();
        eq_csv.row(concat(concat({static_cast<double>(i)}, cells_of(e.mu)),
                          {e.energy, e.gradient_norm, e.residual_norm, static_cast<double>(morse)}));
        ok = ok && e.residual_norm <= 1e-8;
    }
    log << eqs.size() << " distinct equilibria from " << result.found.size() << " converged seeds, "
        << result.failures.size() << " failed\n";
    out.write("equilibria.csv", eq_csv);

    Csv scan(concat(coord_names(m), {"W"}));
    const int n = c.reduction.scan_points;
    for (int i = 0; i < n; ++i) {
        Vector mu = Vector::Zero(m);
        mu[0] = c.reduction.scan_min + (c.reduction.scan_max - c.reduction.scan_min) * i / (n - 1);
        scan.row(concat(cells_of(mu), {rp.value(mu)}));
    }
    out.write("w_scan.csv", scan);
    return !opt.check || ok;
}

// ---- aim-scaling ----------------------------------------------------------

bool cmd_aim_scaling(const ExperimentConfig& c, const Model& model, const RunOptions& opt,
                     Outputs& out, std::ostream& log) {
    const DynamicsConfig& d = c.dynamics;
    ScalingConfig sc;
    sc.basis = model.basis;
    sc.potential = model.potential;
    sc.u0 = Vector::Zero(model.basis->n_modes());
    for (std::size_t j = 0; j < d.u0.size(); ++j) sc.u0[static_cast<Eigen::Index>(j)] = d.u0[j];
    sc.steps = StepSettings{d.dt, d.T, d.save_every, 1e6};
    sc.cutoffs = d.cutoffs;
    sc.tail = TailSettings{c.reduction.tol, c.reduction.max_iter};
    sc.burn_in_rate = d.burn_in_rate;
    sc.workers = opt.workers;
    const ScalingReport report = aim_scaling_experiment(sc);

    Csv rows({"m", "delta", "dist_flat", "dist_phi0", "dist_static", "eta_norm", "etaprime_norm"});
    for (const ScalingRow& r : report.rows)
        rows.row({static_cast<double>(r.m), r.delta, r.dist_flat, r.dist_phi0, r.dist_static,
                  r.eta_norm, r.etaprime_norm});
    out.write("aim_scaling.csv", rows);

    struct Entry {
        const char* name;
        double slope;
        SlopeWindow window;
    };
    const Entry entries[] = {{"flat", report.slopes.flat, d.flat},
                             {"phi0", report.slopes.phi0, d.phi0},
                             {"static", report.slopes.static_tail, d.static_tail},
                             {"eta", report.slopes.eta, d.eta},
                             {"etaprime", report.slopes.etaprime, d.etaprime}};
    Csv slopes({"quantity", "slope", "lower", "upper", "within"});
    bool ok = true;
    for (const Entry& e : entries) {
        const bool within = e.slope >= e.window.lower && e.slope <= e.window.upper;
        ok = ok && within;
        slopes.row_strings({e.name, format_number(e.slope), format_number(e.window.lower),
                            format_number(e.window.upper), within ? "1" : "0"});
        log << "slope " << e.name << " = " << format_number(e.slope) << (within ? "" : "  (outside window)")
            << "\n";
    }
    log << "t* = " << format_number(report.t_star) << "\n";
    out.write("aim_slopes.csv", slopes);
    return !opt.check || ok;
}

// ---- sde ------------------------------------------------------------------

bool cmd_sde(const ExperimentConfig& c, const Model& model, const RunOptions& opt, Outputs& out,
             std::ostream& log) {
    const GradientSystem& w = *model.landscape;
    const int m = w.dimension();
    SdeConfig cfg;
    cfg.nu = c.sde.nu;
    cfg.dt = c.sde.dt;
    cfg.n_paths = c.sde.n_paths;
    cfg.master_seed = c.sde.seed;
    cfg.workers = opt.workers;
    const Ensemble ens = simulate_sde(point_or_zero(c.sde.mu0, m), w, cfg, c.sde.T);

    Csv csv(concat({"path_id"}, coord_names(m)));
    for (Eigen::Index i = 0; i < ens.endpoints.rows(); ++i)
        csv.row(concat({static_cast<double>(i)}, cells_of(ens.endpoints.row(i).transpose())));
    out.write("sde_ensemble.csv", csv);
    log << ens.endpoints.rows() << " paths, " << ens.n_blowups << " blow-ups\n";

    if (!c.fp.box.empty() && ens.endpoints.rows() > ens.n_blowups) {
        long outside = 0;
        const DensityGrid p = empirical_density(ens.endpoints, fp_grid(c, "sde"), &outside);
        out.write("sde_density.csv", density_csv(p));
        log << outside << " endpoints outside the box\n";
    }
    if (ens.n_blowups > 0)
        fail(ErrorCode::BlowUp, std::to_string(ens.n_blowups) + " paths left |mu| <= " +
                                    format_number(cfg.blowup_bound));
    return true;
}

// ---- fokker-planck --------------------------------------------------------

bool cmd_fokker_planck(const ExperimentConfig& c, const Model& model, const RunOptions& opt,
                       Outputs& out, std::ostream& log) {
    const GradientSystem& w = *model.landscape;
    const double nu = c.sde.nu;
    const GridSpec spec = fp_grid(c, "fokker-planck");
    const int m = spec.dim();
    const DensityGrid eq = stationary_density(w, nu, spec);

    DensityGrid p0;
    const Vector x0 = point_or_zero(c.fp.x0, m);
    if (c.fp.initial == "gibbs") {
        p0 = eq;
    } else if (c.fp.initial == "delta") {
        const long cell = spec.locate(x0);
        if (cell < 0) fail(ErrorCode::ConfigInvalid, "config fp.x0: outside fp.box");
        Vector v = Vector::Zero(static_cast<Eigen::Index>(spec.cells()));
        v[cell] = 1.0;
        p0 = make_density(spec, v);
    } else {
        Vector v(static_cast<Eigen::Index>(spec.cells()));
        for (std::size_t i = 0; i < spec.cells(); ++i)
            v[static_cast<Eigen::Index>(i)] =
                std::exp(-(spec.center(i) - x0).squaredNorm() / (2.0 * c.fp.variance));
        p0 = make_density(spec, v);
    }
    p0.values /= p0.mass();

    FokkerPlanckSettings fs_;
    fs_.T = c.fp.T;
    fs_.dt = c.fp.dt > 0.0 ? c.fp.dt : 0.9 * fokker_planck_max_dt(w, nu, spec);
    fs_.save_every = c.fp.save_every;
    const FokkerPlanckRun run = fokker_planck_evolve(p0, w, nu, fs_);

    Csv series({"t", "mass", "relative_entropy", "free_energy"});
    bool h_theorem = true;
    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < run.densities.size(); ++k) {
        const DensityGrid& p = run.densities[k];
        const double h = relative_entropy(p, eq);
        h_theorem = h_theorem && h <= previous + 1e-10;
        previous = h;
        series.row({run.times[k], p.mass(), h, free_energy(p, w, nu)});
    }
    out.write("fp_series.csv", series);
    out.write("fp_density.csv", density_csv(run.densities.back()));
    out.write("fp_stationary.csv", density_csv(eq));

    const bool mass_ok = run.max_step_mass_change <= 1e-12;
    const bool positive = run.min_value >= 0.0;
    log << run.steps << " steps of dt = " << format_number(fs_.dt) << "; max step mass change "
        << format_number(run.max_step_mass_change) << "; min value " << format_number(run.min_value)
        << "; relative entropy " << (h_theorem ? "non-increasing" : "INCREASED") << "\n";
    return !opt.check || (mass_ok && positive && h_theorem);
}

// ---- quasipotential -------------------------------------------------------

bool cmd_quasipotential(const ExperimentConfig& c, const Model& model, const RunOptions& opt,
                        Outputs& out, std::ostream& log) {
    const GradientSystem& w = *model.landscape;
    const int m = w.dimension();
    const ActionSettings settings = action_settings(c);
    HorizonSettings horizon;
    horizon.T0 = c.ldp.T0;
    horizon.dt = c.ldp.dt;
    horizon.tol_rel = c.ldp.tol_rel;
    horizon.max_doublings = c.ldp.max_doublings;

    const Vector x_hat = critical_point(w, point_or_zero(c.ldp.x_hat, m));
    const double w_hat = w.value(x_hat);
    log << "base equilibrium W = " << format_number(w_hat) << "\n";

    std::vector<Vector> targets;
    for (const auto& t : c.ldp.targets) targets.push_back(point_or_zero(t, m));
    if (targets.empty()) {
        // default scan: points of the mu_1 scan range inside the basin of x_hat
        for (int i = 0; i < 9; ++i) {
            Vector x = x_hat;
            x[0] = c.reduction.scan_min + (c.reduction.scan_max - c.reduction.scan_min) * i / 8.0;
            if (flows_to(w, x, x_hat)) targets.push_back(x);
        }
        if (targets.empty()) targets.push_back(x_hat);
    }

    std::vector<QuasiPotentialResult> results(targets.size());
    parallel_for(targets.size(), opt.workers, [&](std::size_t i) {
        results[i] = quasi_potential_infty(targets[i], x_hat, w, settings, horizon);
    });

    Csv scan(concat(coord_names(m), {"V", "W_minus_W_hat"}));
    bool ok = true;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const double dw = w.value(targets[i]) - w_hat;
        const double v = results[i].value;
        scan.row(concat(cells_of(targets[i]), {v, dw}));
        const double expected = 4.0 * settings.alpha * dw;
        ok = ok && std::abs(v - expected) <= std::max(0.01 * std::abs(expected), 1e-8);
    }
    out.write("qp_scan.csv", scan);

    // the optimal path of the last target
    const DiscretePath& path = results.back().path;
    Csv pcsv(concat({"k", "t"}, coord_names(m)));
    for (int k = 0; k <= path.segments(); ++k)
        pcsv.row(concat({static_cast<double>(k), k * path.dt}, cells_of(path.points.row(k).transpose())));
    out.write("qp_path.csv", pcsv);
    log << targets.size() << " targets; identity V = 4 alpha (W - W_hat) "
        << (ok ? "holds within 1%" : "FAILS") << "\n";
    return !opt.check || ok;
}

// ---- mane -----------------------------------------------------------------

bool cmd_mane(const ExperimentConfig& c, const Model& model, const RunOptions& opt, Outputs& out,
              std::ostream& log) {
    const GradientSystem& w = *model.landscape;
    const int m = w.dimension();
    const ActionSettings settings = action_settings(c);

    // Evaluation set: the fp grid when given, otherwise a lattice over the scan
    // range, plus every critical point Newton finds.
    std::vector<Vector> points;
    if (!c.fp.box.empty()) {
        const GridSpec spec = fp_grid(c, "mane");
        for (std::size_t i = 0; i < spec.cells(); ++i) points.push_back(spec.center(i));
    } else {
        const int per_axis = m == 1 ? 81 : (m == 2 ? 21 : 7);
        long total = 1;
        for (int j = 0; j < m; ++j) total *= per_axis;
        const double lo = c.reduction.scan_min;
        const double step = (c.reduction.scan_max - lo) / (per_axis - 1);
        for (long idx = 0; idx < total; ++idx) {
            Vector x(m);
            long r = idx;
            for (int j = 0; j < m; ++j, r /= per_axis) x[j] = lo + step * static_cast<double>(r % per_axis);
            points.push_back(x);
        }
    }
    const std::vector<Vector> critical = landscape_critical_points(c, w);
    points.insert(points.end(), critical.begin(), critical.end());
    log << points.size() << " evaluation points, " << critical.size() << " critical points\n";

    // the family u = theta W
    const GradientField grad_w = [&](const Vector& x) { return w.gradient(x); };
    const double zero_bound =
        mane_upper_bound([&](const Vector&) -> Vector { return Vector::Zero(m); }, points, w, settings);
    const ManeFamilyResult best =
        mane_family_minimum(grad_w, c.ldp.theta_min, c.ldp.theta_max, points, w, settings);

    std::vector<Vector> grads;
    for (const Vector& x : points) grads.push_back(w.gradient(x));
    Csv csv({"theta", "upper_bound"});
    const int samples = 21;
    for (int i = 0; i < samples; ++i) {
        const double theta = c.ldp.theta_min + (c.ldp.theta_max - c.ldp.theta_min) * i / (samples - 1);
        double sup = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < points.size(); ++k)
            sup = std::max(sup, hamiltonian(points[k], theta * grads[k], w, settings));
        csv.row({theta, sup});
    }
    out.write("mane.csv", csv);

    const double c_estimate = std::min(best.value, zero_bound);
    Csv summary({"c_estimate", "theta_star", "family_minimum", "zero_function_bound"});
    summary.row({c_estimate, best.theta, best.value, zero_bound});
    out.write("mane_summary.csv", summary);
    log << "c estimate = " << format_number(c_estimate) << " (family minimum "
        << format_number(best.value) << " at theta = " << format_number(best.theta) << ")\n";
    return !opt.check || std::abs(c_estimate) <= 1e-8;
}

const std::map<std::string, Command>& commands() {
    static const std::map<std::string, Command> table = {
        {"reduce", cmd_reduce},
        {"aim-scaling", cmd_aim_scaling},
        {"sde", cmd_sde},
        {"fokker-planck", cmd_fokker_planck},
        {"quasipotential", cmd_quasipotential},
        {"mane", cmd_mane},
    };
    return table;
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot read " + path);
    try {
        return Json::parse(in);
    } catch (const std::exception& e) {
        fail(ErrorCode::Io, path + " is not valid JSON: " + e.what());
    }
}

} // namespace

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    if (value == 0.0) return "0"; // folds -0
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

int exit_code_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::ConfigInvalid:
    case ErrorCode::InvalidArgument:
    case ErrorCode::IndexOutOfRange:
    case ErrorCode::GridMismatch:
        return kExitConfig;
    case ErrorCode::ContractionViolated:
        return kExitContraction;
    case ErrorCode::NoConvergence:
    case ErrorCode::MaxIterations:
        return kExitNoConvergence;
    case ErrorCode::BlowUp:
        return kExitBlowUp;
    case ErrorCode::CflViolation:
        return kExitCfl;
    case ErrorCode::BoxTooSmall:
        return kExitBoxTooSmall;
    case ErrorCode::SupportMismatch:
    case ErrorCode::NonPositiveDensity:
        return kExitDensity;
    case ErrorCode::Io:
        return kExitIo;
    }
    return kExitInternal;
}

Model build_model(const ExperimentConfig& c) {
    Model model;
    model.basis = make_basis(c.domain.length, c.basis.n_modes, c.basis.n_quad);
    const PotentialConfig& p = c.potential;
    if (p.kind == "linear") model.potential = Potential::linear(p.slope);
    if (p.kind == "double_well")
        model.potential = Potential::clamped_double_well(p.epsilon, p.r_core, p.r_cut, p.lipschitz_bound);
    auto rp = std::make_shared<const ReducedPotential>(
        model.basis, model.potential, c.reduction.m,
        TailSettings{c.reduction.tol, c.reduction.max_iter});
    model.reduced = rp;
    model.landscape = rp;
    if (c.landscape.tabulate) {
        std::vector<TabulatedLandscape::Axis> axes(
            static_cast<std::size_t>(c.reduction.m),
            TabulatedLandscape::Axis{-c.landscape.radius, c.landscape.radius, c.landscape.intervals});
        model.landscape = std::make_shared<const TabulatedLandscape>(*rp, axes);
    }
    return model;
}

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names = {"reduce", "aim-scaling", "sde",
                                                   "fokker-planck", "quasipotential", "mane"};
    return names;
}

RunResult run_command(const std::string& command, const ExperimentConfig& config,
                      const RunOptions& options, std::ostream& log) {
    const auto it = commands().find(command);
    require(it != commands().end(), ErrorCode::InvalidArgument, "unknown command " + command);

    const std::string started = utc_now();
    const Model model = build_model(config);
    Outputs out(options.out_dir.empty() ? config.output.directory : options.out_dir);
    const bool passed = it->second(config, model, options, out, log);

    Json manifest;
    manifest["artifact"] = "grad-reduce";
    manifest["version"] = kVersion;
    manifest["command"] = command;
    manifest["config_hash"] = config_hash(config);
    manifest["seed"] = config.sde.seed;
    manifest["workers"] = options.workers;
    manifest["started"] = started;
    manifest["finished"] = utc_now();
    manifest["config"] = Json::parse(serialize_config(config));
    Json files = Json::array();
    RunResult result;
    for (const std::string& name : out.names()) {
        const fs::path path = out.dir() / name;
        files.push_back({{"file", name},
                         {"sha256", sha256_file(path.string())},
                         {"bytes", static_cast<std::uint64_t>(fs::file_size(path))}});
        result.outputs.push_back(name);
    }
    manifest["outputs"] = files;
    const fs::path manifest_path = out.dir() / "manifest.json";
    {
        std::ofstream mf(manifest_path, std::ios::trunc);
        mf << manifest.dump(2) << "\n";
        if (!mf) fail(ErrorCode::Io, "cannot write " + manifest_path.string());
    }
    result.manifest_path = manifest_path.string();
    result.exit_code = passed ? kExitOk : kExitAssert;
    if (!passed) log << "assertion checks FAILED\n";
    return result;
}

int verify_manifest(const std::string& manifest_path, const std::string& out_dir, int workers,
                    std::ostream& log) {
    const Json manifest = read_json_file(manifest_path);
    for (const char* key : {"command", "config", "config_hash", "outputs"})
        if (!manifest.contains(key)) fail(ErrorCode::Io, manifest_path + " lacks \"" + key + "\"");
    const ExperimentConfig config = parse_config(manifest.at("config").dump());
    if (config_hash(config) != manifest.at("config_hash").get<std::string>())
        fail(ErrorCode::Io, "embedded config does not match the recorded hash");

    RunOptions options;
    options.out_dir = out_dir;
    options.workers = workers;
    std::ostringstream quiet;
    const RunResult rerun = run_command(manifest.at("command").get<std::string>(), config, options, quiet);

    int mismatches = 0;
    for (const auto& entry : manifest.at("outputs")) {
        const std::string name = entry.at("file").get<std::string>();
        const fs::path path = fs::path(out_dir) / name;
        const std::string want = entry.at("sha256").get<std::string>();
        const std::string got = fs::exists(path) ? sha256_file(path.string()) : "missing";
        const bool same = got == want;
        mismatches += same ? 0 : 1;
        log << (same ? "match    " : "MISMATCH ") << name << "\n";
    }
    if (rerun.outputs.size() != manifest.at("outputs").size()) {
        log << "output inventory differs: " << rerun.outputs.size() << " files vs "
            << manifest.at("outputs").size() << " recorded\n";
        ++mismatches;
    }
    return mismatches == 0 ? kExitOk : kExitAssert;
}

} // namespace gradreduce
