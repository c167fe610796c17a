#include "gradreduce/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gradreduce/checksum.hpp"
#include "gradreduce/errors.hpp"
#include "gradreduce/potential.hpp"
#include "gradreduce/reduction.hpp"

namespace gradreduce {

using Json = nlohmann::ordered_json;

namespace {

[[noreturn]] void invalid(const std::string& where, const std::string& what) {
    fail(ErrorCode::ConfigInvalid, "config " + where + ": " + what);
}

// Walks one JSON object, remembers which keys were read and rejects the rest.
class Section {
public:
    Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) invalid(path_, "expected an object");
    }

    bool has(const char* key) const { return j_.contains(key); }

    Section child(const char* key) {
        used_.insert(key);
        static const Json empty = Json::object();
        return Section(j_.contains(key) ? j_.at(key) : empty, where(key));
    }

    void read(const char* key, double& out) {
        if (!take(key)) return;
        const Json& v = j_.at(key);
        if (!v.is_number()) invalid(where(key), "expected a number");
        out = v.get<double>();
    }
    void read(const char* key, int& out) {
        long wide = out;
        read(key, wide);
        if (wide < INT32_MIN || wide > INT32_MAX) invalid(where(key), "integer out of range");
        out = static_cast<int>(wide);
    }
    void read(const char* key, long& out) {
        if (!take(key)) return;
        const Json& v = j_.at(key);
        if (!v.is_number_integer()) invalid(where(key), "expected an integer");
        out = v.get<long>();
    }
    void read(const char* key, std::uint64_t& out) {
        if (!take(key)) return;
        const Json& v = j_.at(key);
        if (!v.is_number_unsigned()) invalid(where(key), "expected a non-negative integer");
        out = v.get<std::uint64_t>();
    }
    void read(const char* key, bool& out) {
        if (!take(key)) return;
        const Json& v = j_.at(key);
        if (!v.is_boolean()) invalid(where(key), "expected true or false");
        out = v.get<bool>();
    }
    void read(const char* key, std::string& out) {
        if (!take(key)) return;
        const Json& v = j_.at(key);
        if (!v.is_string()) invalid(where(key), "expected a string");
        out = v.get<std::string>();
    }
    void read(const char* key, std::vector<double>& out) {
        if (!take(key)) return;
        out = numbers(j_.at(key), where(key));
    }
    void read(const char* key, std::vector<int>& out) {
        if (!take(key)) return;
        const Json& v = j_.at(key);
        if (!v.is_array()) invalid(where(key), "expected an array of integers");
        out.clear();
        for (const auto& e : v) {
            if (!e.is_number_integer()) invalid(where(key), "expected an array of integers");
            out.push_back(e.get<int>());
        }
    }
    void read(const char* key, std::vector<std::string>& out) {
        if (!take(key)) return;
        const Json& v = j_.at(key);
        if (!v.is_array()) invalid(where(key), "expected an array of strings");
        out.clear();
        for (const auto& e : v) {
            if (!e.is_string()) invalid(where(key), "expected an array of strings");
            out.push_back(e.get<std::string>());
        }
    }
    void read(const char* key, std::vector<std::vector<double>>& out) {
        if (!take(key)) return;
        const Json& v = j_.at(key);
        if (!v.is_array()) invalid(where(key), "expected an array of points");
        out.clear();
        for (const auto& e : v) out.push_back(numbers(e, where(key)));
    }
    void read(const char* key, SlopeWindow& out) {
        if (!take(key)) return;
        Section s(j_.at(key), where(key));
        s.read("lower", out.lower);
        s.read("upper", out.upper);
        s.finish();
    }
    void read(const char* key, std::vector<GridAxis>& out) {
        if (!take(key)) return;
        const Json& v = j_.at(key);
        if (!v.is_array()) invalid(where(key), "expected an array of axes");
        out.clear();
        for (std::size_t i = 0; i < v.size(); ++i) {
            Section s(v[i], where(key) + "[" + std::to_string(i) + "]");
            GridAxis a;
            s.read("min", a.min);
            s.read("max", a.max);
            s.read("n_cells", a.n_cells);
            s.finish();
            out.push_back(a);
        }
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) invalid(where(it.key().c_str()), "unknown key");
    }

private:
    bool take(const char* key) {
        used_.insert(key);
        return j_.contains(key);
    }
    std::string where(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

    static std::vector<double> numbers(const Json& v, const std::string& where) {
        if (!v.is_array()) invalid(where, "expected an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) invalid(where, "expected an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    const Json& j_;
    std::string path_;
    std::set<std::string> used_;
};

void check(bool ok, const std::string& where, const std::string& what) {
    if (!ok) invalid(where, what);
}

void validate(const ExperimentConfig& c) {
    check(c.schema_version == 1, "schema_version", "only version 1 is supported");
    check(c.domain.length > 0.0, "domain.length", "must be positive");
    check(c.basis.n_modes >= 4, "basis.n_modes", "must be >= 4");
    check(c.basis.n_quad == 0 || c.basis.n_quad >= 2 * c.basis.n_modes, "basis.n_quad",
          "must be 0 or >= 2 n_modes");

    const auto& p = c.potential;
    check(p.kind == "zero" || p.kind == "linear" || p.kind == "double_well", "potential.kind",
          "must be zero, linear or double_well");
    if (p.kind == "double_well") {
        check(p.epsilon > 0.0, "potential.epsilon", "must be positive");
        check(p.r_core > 0.0 && p.r_cut > p.r_core, "potential", "need 0 < r_core < r_cut");
        check(p.lipschitz_bound >= 0.0, "potential.lipschitz_bound", "must be >= 0");
    }

    const int n = c.basis.n_modes;
    const int m = c.reduction.m;
    check(m >= 1 && m < n, "reduction.m", "must satisfy 1 <= m < n_modes");
    check(c.reduction.tol > 0.0, "reduction.tol", "must be positive");
    check(c.reduction.max_iter >= 1, "reduction.max_iter", "must be >= 1");
    for (const auto& s : c.reduction.seeds)
        check(static_cast<int>(s.size()) == m, "reduction.seeds", "every seed needs m entries");
    check(c.reduction.scan_min < c.reduction.scan_max, "reduction.scan_min",
          "must be below scan_max");
    check(c.reduction.scan_points >= 2, "reduction.scan_points", "must be >= 2");

    const auto& d = c.dynamics;
    check(d.dt > 0.0 && d.T > 0.0, "dynamics", "dt and T must be positive");
    check(d.save_every >= 1, "dynamics.save_every", "must be >= 1");
    check(static_cast<int>(d.u0.size()) <= n, "dynamics.u0", "more entries than modes");
    for (int k : d.cutoffs)
        check(k >= 1 && k < n, "dynamics.cutoffs", "each cutoff must lie in [1, n_modes)");
    for (const SlopeWindow* w : {&d.flat, &d.phi0, &d.static_tail, &d.eta, &d.etaprime})
        check(w->lower <= w->upper, "dynamics", "slope window lower > upper");

    check(c.landscape.radius > 0.0, "landscape.radius", "must be positive");
    check(c.landscape.intervals >= 4, "landscape.intervals", "must be >= 4");
    check(!c.landscape.tabulate || m <= 2, "landscape.tabulate", "tables need m <= 2");

    const auto& s = c.sde;
    check(s.nu >= 0.0, "sde.nu", "must be >= 0");
    check(s.dt > 0.0, "sde.dt", "must be positive");
    check(s.n_paths >= 0, "sde.n_paths", "must be >= 0");
    check(s.T >= 0.0, "sde.T", "must be >= 0");
    check(s.mu0.empty() || static_cast<int>(s.mu0.size()) == m, "sde.mu0", "needs m entries");

    const auto& f = c.fp;
    if (!f.box.empty()) {
        check(static_cast<int>(f.box.size()) == m && m <= 2, "fp.box",
              "needs one axis per reduced coordinate and m <= 2");
        for (const auto& a : f.box)
            check(a.max > a.min && a.n_cells >= 2, "fp.box", "axes need max > min, n_cells >= 2");
    }
    check(f.dt >= 0.0, "fp.dt", "must be >= 0");
    check(f.T > 0.0, "fp.T", "must be positive");
    check(f.save_every >= 1, "fp.save_every", "must be >= 1");
    check(f.initial == "gibbs" || f.initial == "gaussian" || f.initial == "delta", "fp.initial",
          "must be gibbs, gaussian or delta");
    check(f.x0.empty() || static_cast<int>(f.x0.size()) == m, "fp.x0", "needs m entries");
    check(f.variance > 0.0, "fp.variance", "must be positive");

    const auto& l = c.ldp;
    check(l.alpha > 0.0, "ldp.alpha", "must be positive");
    check(l.optimizer == "quasi_newton" || l.optimizer == "gradient_descent_momentum",
          "ldp.optimizer", "must be quasi_newton or gradient_descent_momentum");
    check(l.K >= 8, "ldp.K", "must be >= 8");
    check(l.T0 > 0.0 && l.dt > 0.0, "ldp", "T0 and dt must be positive");
    check(l.tol > 0.0 && l.tol_rel > 0.0, "ldp", "tolerances must be positive");
    check(l.max_iter >= 1 && l.max_doublings >= 1, "ldp", "iteration limits must be >= 1");
    check(l.x_hat.empty() || static_cast<int>(l.x_hat.size()) == m, "ldp.x_hat",
          "needs m entries");
    for (const auto& t : l.targets)
        check(static_cast<int>(t.size()) == m, "ldp.targets", "every target needs m entries");
    check(l.theta_min <= 0.0 && 0.0 <= l.theta_max && l.theta_min < l.theta_max, "ldp.theta_min",
          "the family range must contain 0");

    check(!c.output.directory.empty(), "output.directory", "must not be empty");
    for (const auto& fmt : c.output.formats)
        check(fmt == "csv", "output.formats", "only csv is supported");

    // module guards: the potential certificate and the contraction margin
    Potential pot = Potential::zero();
    try {
        if (p.kind == "linear") pot = Potential::linear(p.slope);
        if (p.kind == "double_well")
            pot = Potential::clamped_double_well(p.epsilon, p.r_core, p.r_cut, p.lipschitz_bound);
    } catch (const Error& e) {
        invalid("potential", e.what());
    }
    const double q =
        contraction_margin(pot, SpectralBasis(c.domain.length, n, c.basis.n_quad), m);
    if (!(q < 1.0)) {
        std::ostringstream os;
        os << "contraction margin q = C/lambda_{m+1} = " << q << " >= 1 for m = " << m
           << "; raise reduction.m";
        fail(ErrorCode::ContractionViolated, os.str());
    }
}

Json axes_json(const std::vector<GridAxis>& axes) {
    Json out = Json::array();
    for (const auto& a : axes) out.push_back({{"min", a.min}, {"max", a.max}, {"n_cells", a.n_cells}});
    return out;
}

Json window_json(const SlopeWindow& w) { return {{"lower", w.lower}, {"upper", w.upper}}; }

} // namespace

ExperimentConfig parse_config(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const std::exception& e) {
        fail(ErrorCode::ConfigInvalid, std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig c;
    Section root(j, "");
    root.read("schema_version", c.schema_version);
    {
        Section s = root.child("domain");
        s.read("length", c.domain.length);
        s.finish();
    }
    {
        Section s = root.child("basis");
        s.read("n_modes", c.basis.n_modes);
        s.read("n_quad", c.basis.n_quad);
        s.finish();
    }
    {
        Section s = root.child("potential");
        s.read("kind", c.potential.kind);
        s.read("epsilon", c.potential.epsilon);
        s.read("r_core", c.potential.r_core);
        s.read("r_cut", c.potential.r_cut);
        s.read("lipschitz_bound", c.potential.lipschitz_bound);
        s.read("slope", c.potential.slope);
        s.finish();
    }
    {
        Section s = root.child("reduction");
        s.read("m", c.reduction.m);
        s.read("tol", c.reduction.tol);
        s.read("max_iter", c.reduction.max_iter);
        s.read("seeds", c.reduction.seeds);
        s.read("scan_min", c.reduction.scan_min);
        s.read("scan_max", c.reduction.scan_max);
        s.read("scan_points", c.reduction.scan_points);
        s.finish();
    }
    {
        Section s = root.child("dynamics");
        auto& d = c.dynamics;
        s.read("dt", d.dt);
        s.read("T", d.T);
        s.read("save_every", d.save_every);
        s.read("u0", d.u0);
        s.read("cutoffs", d.cutoffs);
        s.read("burn_in_rate", d.burn_in_rate);
        Section w = s.child("slope_windows");
        w.read("flat", d.flat);
        w.read("phi0", d.phi0);
        w.read("static", d.static_tail);
        w.read("eta", d.eta);
        w.read("etaprime", d.etaprime);
        w.finish();
        s.finish();
    }
    {
        Section s = root.child("landscape");
        s.read("tabulate", c.landscape.tabulate);
        s.read("radius", c.landscape.radius);
        s.read("intervals", c.landscape.intervals);
        s.finish();
    }
    {
        Section s = root.child("sde");
        s.read("nu", c.sde.nu);
        s.read("dt", c.sde.dt);
        s.read("n_paths", c.sde.n_paths);
        s.read("seed", c.sde.seed);
        s.read("T", c.sde.T);
        s.read("mu0", c.sde.mu0);
        s.finish();
    }
    {
        Section s = root.child("fp");
        s.read("box", c.fp.box);
        s.read("dt", c.fp.dt);
        s.read("T", c.fp.T);
        s.read("save_every", c.fp.save_every);
        s.read("initial", c.fp.initial);
        s.read("x0", c.fp.x0);
        s.read("variance", c.fp.variance);
        s.finish();
    }
    {
        Section s = root.child("ldp");
        auto& l = c.ldp;
        s.read("alpha", l.alpha);
        s.read("optimizer", l.optimizer);
        s.read("K", l.K);
        s.read("T0", l.T0);
        s.read("dt", l.dt);
        s.read("tol", l.tol);
        s.read("tol_rel", l.tol_rel);
        s.read("max_iter", l.max_iter);
        s.read("max_doublings", l.max_doublings);
        s.read("x_hat", l.x_hat);
        s.read("targets", l.targets);
        s.read("theta_min", l.theta_min);
        s.read("theta_max", l.theta_max);
        s.finish();
    }
    {
        Section s = root.child("output");
        s.read("directory", c.output.directory);
        s.read("formats", c.output.formats);
        s.finish();
    }
    root.finish();
    validate(c);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::ConfigInvalid, "cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
    Json j;
    j["schema_version"] = c.schema_version;
    j["domain"] = {{"length", c.domain.length}};
    j["basis"] = {{"n_modes", c.basis.n_modes}, {"n_quad", c.basis.n_quad}};
    j["potential"] = {{"kind", c.potential.kind},
                      {"epsilon", c.potential.epsilon},
                      {"r_core", c.potential.r_core},
                      {"r_cut", c.potential.r_cut},
                      {"lipschitz_bound", c.potential.lipschitz_bound},
                      {"slope", c.potential.slope}};
    j["reduction"] = {{"m", c.reduction.m},
                      {"tol", c.reduction.tol},
                      {"max_iter", c.reduction.max_iter},
                      {"seeds", c.reduction.seeds},
                      {"scan_min", c.reduction.scan_min},
                      {"scan_max", c.reduction.scan_max},
                      {"scan_points", c.reduction.scan_points}};
    const auto& d = c.dynamics;
    j["dynamics"] = {{"dt", d.dt},
                     {"T", d.T},
                     {"save_every", d.save_every},
                     {"u0", d.u0},
                     {"cutoffs", d.cutoffs},
                     {"burn_in_rate", d.burn_in_rate},
                     {"slope_windows",
                      {{"flat", window_json(d.flat)},
                       {"phi0", window_json(d.phi0)},
                       {"static", window_json(d.static_tail)},
                       {"eta", window_json(d.eta)},
                       {"etaprime", window_json(d.etaprime)}}}};
    j["landscape"] = {{"tabulate", c.landscape.tabulate},
                      {"radius", c.landscape.radius},
                      {"intervals", c.landscape.intervals}};
    j["sde"] = {{"nu", c.sde.nu}, {"dt", c.sde.dt},   {"n_paths", c.sde.n_paths},
                {"seed", c.sde.seed}, {"T", c.sde.T}, {"mu0", c.sde.mu0}};
    j["fp"] = {{"box", axes_json(c.fp.box)}, {"dt", c.fp.dt},
               {"T", c.fp.T},                {"save_every", c.fp.save_every},
               {"initial", c.fp.initial},    {"x0", c.fp.x0},
               {"variance", c.fp.variance}};
    const auto& l = c.ldp;
    j["ldp"] = {{"alpha", l.alpha},         {"optimizer", l.optimizer},
                {"K", l.K},                 {"T0", l.T0},
                {"dt", l.dt},               {"tol", l.tol},
                {"tol_rel", l.tol_rel},     {"max_iter", l.max_iter},
                {"max_doublings", l.max_doublings}, {"x_hat", l.x_hat},
                {"targets", l.targets},     {"theta_min", l.theta_min},
                {"theta_max", l.theta_max}};
    j["output"] = {{"directory", c.output.directory}, {"formats", c.output.formats}};
    return j.dump(2) + "\n";
}

std::string config_hash(const ExperimentConfig& config) {
    return sha256_hex(serialize_config(config));
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    return serialize_config(a) == serialize_config(b);
}

} // namespace gradreduce
