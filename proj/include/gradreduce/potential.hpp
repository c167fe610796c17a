#pragma once

#include <functional>
#include <string>
#include <vector>

namespace gradreduce {

/// Scalar reaction nonlinearity. `gamma` is the pointwise force V'(u) acting on
/// the field and `value` is the potential V itself.
///
/// The clamped double well is
///
///     gamma(u) = psi(u) * (u^3 - u) / epsilon
///
/// with psi a C-infinity cutoff equal to 1 on [-r_core, r_core] and 0 outside
/// [-r_cut, r_cut], so gamma has compact support and a finite Lipschitz
/// constant. V is exact on the core and integrated by composite Gauss-Legendre
/// quadrature across the cutoff shell.
class Potential {
public:
    enum class Kind { Zero, Linear, ClampedDoubleWell, Custom };

    static Potential zero();
    static Potential linear(double c);
    /// `certified_lipschitz` (if > 0) replaces the sampled constant; it must
    /// not be smaller than the sampled one.
    static Potential clamped_double_well(double epsilon, double r_core, double r_cut,
                                         double certified_lipschitz = 0.0);
    /// Arbitrary force, used by tests (for instance an uncapped gamma(u) = u^2).
    static Potential custom(std::function<double(double)> gamma,
                            std::function<double(double)> gamma_prime,
                            std::function<double(double)> value, double lipschitz,
                            double lower_bound);

    Kind kind() const noexcept { return kind_; }
    double gamma(double u) const;
    double gamma_prime(double u) const;
    double value(double u) const;

    double lipschitz() const noexcept { return lipschitz_; }
    /// Certified infimum of V (may be -inf for an unbounded linear force).
    double lower_bound() const noexcept { return lower_bound_; }
    /// Radius outside which gamma vanishes; +inf when not compactly supported.
    double support_radius() const noexcept { return support_radius_; }

    bool is_zero() const noexcept { return kind_ == Kind::Zero; }

    double epsilon() const noexcept { return epsilon_; }
    double r_core() const noexcept { return r_core_; }
    double r_cut() const noexcept { return r_cut_; }
    double slope() const noexcept { return slope_; }

    std::string describe() const;

private:
    Potential() = default;

    double cutoff(double u) const;
    double cutoff_prime(double u) const;
    double shell_integral(double a, double b) const;

    Kind kind_ = Kind::Zero;
    double slope_ = 0.0;
    double epsilon_ = 1.0;
    double r_core_ = 0.0;
    double r_cut_ = 0.0;
    double lipschitz_ = 0.0;
    double lower_bound_ = 0.0;
    double support_radius_ = 0.0;

    // V at the shell panel boundaries r_core = b_0 < ... < b_P = r_cut.
    std::vector<double> panel_edges_;
    std::vector<double> panel_values_;

    std::function<double(double)> custom_gamma_;
    std::function<double(double)> custom_gamma_prime_;
    std::function<double(double)> custom_value_;
};

} // namespace gradreduce
