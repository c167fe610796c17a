#include "gradreduce/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>

#include "gradreduce/errors.hpp"

namespace gradreduce {

namespace {

constexpr int kShellPanels = 32;
constexpr int kLipschitzSamples = 400001;

double bump_edge(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }

double bump_edge_prime(double t) { return t > 0.0 ? std::exp(-1.0 / t) / (t * t) : 0.0; }

// Smooth step from 1 (t <= 0) to 0 (t >= 1).
double smooth_step(double t) {
    if (t <= 0.0) return 1.0;
    if (t >= 1.0) return 0.0;
    const double a = bump_edge(1.0 - t);
    const double b = bump_edge(t);
    return a / (a + b);
}

double smooth_step_prime(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double a = bump_edge(1.0 - t);
    const double b = bump_edge(t);
    const double da = -bump_edge_prime(1.0 - t);
    const double db = bump_edge_prime(t);
    const double s = a + b;
    return (da * b - a * db) / (s * s);
}

double core_value(double u, double epsilon) {
    const double u2 = u * u;
    return (0.25 * u2 * u2 - 0.5 * u2) / epsilon;
}

} // namespace

Potential Potential::zero() {
    Potential p;
    p.kind_ = Kind::Zero;
    return p;
}

Potential Potential::linear(double c) {
    require(std::isfinite(c), ErrorCode::InvalidArgument, "linear potential slope must be finite");
    Potential p;
    p.kind_ = Kind::Linear;
    p.slope_ = c;
    p.lipschitz_ = std::abs(c);
    p.lower_bound_ = c >= 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
    p.support_radius_ = c == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return p;
}

Potential Potential::clamped_double_well(double epsilon, double r_core, double r_cut,
                                         double certified_lipschitz) {
    require(epsilon > 0.0, ErrorCode::InvalidArgument, "double well: epsilon must be positive");
    require(r_core > 0.0 && r_cut > r_core, ErrorCode::InvalidArgument,
            "double well: need 0 < r_core < r_cut");
    Potential p;
    p.kind_ = Kind::ClampedDoubleWell;
    p.epsilon_ = epsilon;
    p.r_core_ = r_core;
    p.r_cut_ = r_cut;
    p.support_radius_ = r_cut;

    p.panel_edges_.resize(kShellPanels + 1);
    p.panel_values_.resize(kShellPanels + 1);
    const double width = (r_cut - r_core) / kShellPanels;
    p.panel_edges_[0] = r_core;
    p.panel_values_[0] = core_value(r_core, epsilon);
    for (int k = 1; k <= kShellPanels; ++k) {
        p.panel_edges_[k] = r_core + k * width;
        p.panel_values_[k] =
            p.panel_values_[k - 1] + p.shell_integral(p.panel_edges_[k - 1], p.panel_edges_[k]);
    }
    p.panel_edges_.back() = r_cut;

    // Dense sampling of gamma' and V over the support; gamma is odd and V even.
    double max_slope = 0.0;
    double min_value = std::min(0.0, p.panel_values_.back());
    for (int i = 0; i < kLipschitzSamples; ++i) {
        const double u = r_cut * static_cast<double>(i) / (kLipschitzSamples - 1);
        max_slope = std::max(max_slope, std::abs(p.gamma_prime(u)));
        min_value = std::min(min_value, p.value(u));
    }
    if (r_core >= 1.0) min_value = std::min(min_value, core_value(1.0, epsilon));
    const double sampled = max_slope * (1.0 + 1e-3);
    if (certified_lipschitz > 0.0) {
        require(certified_lipschitz >= sampled, ErrorCode::InvalidArgument,
                "certified Lipschitz bound is below the sampled slope of gamma");
        p.lipschitz_ = certified_lipschitz;
    } else {
        p.lipschitz_ = sampled;
    }
    p.lower_bound_ = min_value;
    return p;
}

Potential Potential::custom(std::function<double(double)> gamma,
                            std::function<double(double)> gamma_prime,
                            std::function<double(double)> value, double lipschitz,
                            double lower_bound) {
    Potential p;
    p.kind_ = Kind::Custom;
    p.custom_gamma_ = std::move(gamma);
    p.custom_gamma_prime_ = std::move(gamma_prime);
    p.custom_value_ = std::move(value);
    p.lipschitz_ = lipschitz;
    p.lower_bound_ = lower_bound;
    p.support_radius_ = std::numeric_limits<double>::infinity();
    return p;
}

double Potential::cutoff(double u) const {
    return smooth_step((std::abs(u) - r_core_) / (r_cut_ - r_core_));
}

double Potential::cutoff_prime(double u) const {
    const double t = (std::abs(u) - r_core_) / (r_cut_ - r_core_);
    const double sign = u < 0.0 ? -1.0 : 1.0;
    return sign * smooth_step_prime(t) / (r_cut_ - r_core_);
}

double Potential::gamma(double u) const {
    switch (kind_) {
    case Kind::Zero: return 0.0;
    case Kind::Linear: return slope_ * u;
    case Kind::ClampedDoubleWell:
        if (std::abs(u) >= r_cut_) return 0.0;
        return cutoff(u) * (u * u * u - u) / epsilon_;
    case Kind::Custom: return custom_gamma_(u);
    }
    return 0.0;
}

double Potential::gamma_prime(double u) const {
    switch (kind_) {
    case Kind::Zero: return 0.0;
    case Kind::Linear: return slope_;
    case Kind::ClampedDoubleWell: {
        const double a = std::abs(u);
        if (a >= r_cut_) return 0.0;
        const double cubic = (u * u * u - u) / epsilon_;
        const double dcubic = (3.0 * u * u - 1.0) / epsilon_;
        if (a <= r_core_) return dcubic;
        return cutoff_prime(u) * cubic + cutoff(u) * dcubic;
    }
    case Kind::Custom: return custom_gamma_prime_(u);
    }
    return 0.0;
}

double Potential::shell_integral(double a, double b) const {
    using boost::math::quadrature::gauss;
    return gauss<double, 20>::integrate([this](double s) { return gamma(s); }, a, b);
}

double Potential::value(double u) const {
    switch (kind_) {
    case Kind::Zero: return 0.0;
    case Kind::Linear: return 0.5 * slope_ * u * u;
    case Kind::ClampedDoubleWell: {
        const double a = std::abs(u);
        if (a <= r_core_) return core_value(a, epsilon_);
        if (a >= r_cut_) return panel_values_.back();
        const double width = (r_cut_ - r_core_) / kShellPanels;
        const int k = std::min(static_cast<int>((a - r_core_) / width), kShellPanels - 1);
        return panel_values_[k] + shell_integral(panel_edges_[k], a);
    }
    case Kind::Custom: return custom_value_(u);
    }
    return 0.0;
}

std::string Potential::describe() const {
    std::ostringstream os;
    switch (kind_) {
    case Kind::Zero: os << "zero"; break;
    case Kind::Linear: os << "linear(c=" << slope_ << ")"; break;
    case Kind::ClampedDoubleWell:
        os << "clamped_double_well(epsilon=" << epsilon_ << ", r_core=" << r_core_
           << ", r_cut=" << r_cut_ << ")";
        break;
    case Kind::Custom: os << "custom"; break;
    }
    os << " C=" << lipschitz_;
    return os.str();
}

} // namespace gradreduce
