#include "gradreduce/spectral.hpp"

#include <cmath>
#include <string>

#include <boost/math/constants/constants.hpp>

#include "gradreduce/errors.hpp"

namespace gradreduce {

namespace {
constexpr double kPi = boost::math::constants::pi<double>();

void check_same_basis(const SpectralField& a, const SpectralField& b) {
    require(a.basis_ptr() == b.basis_ptr() || (a.basis().length() == b.basis().length() &&
                                               a.basis().n_modes() == b.basis().n_modes()),
            ErrorCode::GridMismatch, "fields live on different bases");
}
} // namespace

SpectralBasis::SpectralBasis(double length, int n_modes, int n_quad)
    : length_(length), n_modes_(n_modes), n_quad_(n_quad > 0 ? n_quad : 2 * n_modes) {
    require(length > 0.0, ErrorCode::InvalidArgument, "domain length must be positive");
    require(n_modes >= 4, ErrorCode::InvalidArgument, "need at least 4 modes");
    require(n_quad_ >= 2 * n_modes, ErrorCode::InvalidArgument,
            "quadrature grid must oversample the modes at least twice");

    eigenvalues_.resize(n_modes_);
    for (int j = 1; j <= n_modes_; ++j) {
        const double k = j * kPi / length_;
        eigenvalues_[j - 1] = k * k;
    }

    const int intervals = n_quad_ + 1;
    weight_ = length_ / intervals;
    grid_.resize(n_quad_);
    for (int i = 0; i < n_quad_; ++i) grid_[i] = (i + 1) * weight_;

    const double scale = std::sqrt(2.0 / length_);
    synthesis_.resize(n_quad_, n_modes_);
    for (int i = 0; i < n_quad_; ++i) {
        for (int j = 0; j < n_modes_; ++j) {
            // sin(j pi i / M) with exact integer phase reduction
            const long phase = static_cast<long>(j + 1) * (i + 1) % (2L * intervals);
            synthesis_(i, j) = scale * std::sin(kPi * static_cast<double>(phase) / intervals);
        }
    }
    analysis_ = weight_ * synthesis_.transpose();
}

double SpectralBasis::eigenvalue(int j) const {
    require(j >= 1 && j <= n_modes_, ErrorCode::IndexOutOfRange,
            "eigenvalue index " + std::to_string(j) + " outside 1.." + std::to_string(n_modes_));
    return eigenvalues_[j - 1];
}

double SpectralBasis::mode(int j, double x) const {
    return std::sqrt(2.0 / length_) * std::sin(j * kPi * x / length_);
}

Vector SpectralBasis::synthesize(const Vector& coeffs) const {
    require(coeffs.size() <= n_modes_, ErrorCode::GridMismatch, "too many coefficients");
    const auto k = coeffs.size();
    return synthesis_.leftCols(k) * coeffs;
}

Vector SpectralBasis::analyze(const Vector& values) const {
    require(values.size() == n_quad_, ErrorCode::GridMismatch,
            "grid size " + std::to_string(values.size()) + " does not match quadrature size " +
                std::to_string(n_quad_));
    return analysis_ * values;
}

Vector SpectralBasis::nonlinearity(const Vector& coeffs, const Potential& potential) const {
    if (potential.is_zero()) return Vector::Zero(n_modes_);
    Vector values = synthesize(coeffs);
    for (Eigen::Index i = 0; i < values.size(); ++i) values[i] = potential.gamma(values[i]);
    return analysis_ * values;
}

SpectralField::SpectralField(BasisPtr basis)
    : basis_(std::move(basis)), coeffs_(Vector::Zero(basis_->n_modes())) {}

SpectralField::SpectralField(BasisPtr basis, Vector coeffs)
    : basis_(std::move(basis)), coeffs_(std::move(coeffs)) {
    require(coeffs_.size() == basis_->n_modes(), ErrorCode::GridMismatch,
            "coefficient count does not match basis size");
}

SpectralField SpectralField::unit(BasisPtr basis, int j) {
    require(j >= 1 && j <= basis->n_modes(), ErrorCode::IndexOutOfRange, "mode index out of range");
    SpectralField f(std::move(basis));
    f.coeffs_[j - 1] = 1.0;
    return f;
}

double SpectralField::inner(const SpectralField& other) const {
    check_same_basis(*this, other);
    return coeffs_.dot(other.coeffs_);
}

SpectralField SpectralField::operator+(const SpectralField& other) const {
    check_same_basis(*this, other);
    return SpectralField(basis_, coeffs_ + other.coeffs_);
}

SpectralField SpectralField::operator-(const SpectralField& other) const {
    check_same_basis(*this, other);
    return SpectralField(basis_, coeffs_ - other.coeffs_);
}

SpectralField SpectralField::operator*(double s) const { return SpectralField(basis_, coeffs_ * s); }

double eigenvalue(const SpectralBasis& basis, int j) { return basis.eigenvalue(j); }

Vector synthesize(const SpectralField& field) { return field.basis().synthesize(field.coeffs()); }

SpectralField analyze(const BasisPtr& basis, const Vector& values) {
    return SpectralField(basis, basis->analyze(values));
}

SpectralField project_head(const SpectralField& field, int m) {
    require(m >= 1 && m < field.size(), ErrorCode::IndexOutOfRange, "cutoff m out of range");
    Vector c = field.coeffs();
    c.tail(c.size() - m).setZero();
    return SpectralField(field.basis_ptr(), std::move(c));
}

SpectralField project_tail(const SpectralField& field, int m) {
    require(m >= 1 && m < field.size(), ErrorCode::IndexOutOfRange, "cutoff m out of range");
    Vector c = field.coeffs();
    c.head(m).setZero();
    return SpectralField(field.basis_ptr(), std::move(c));
}

SpectralField laplacian(const SpectralField& field) {
    return SpectralField(field.basis_ptr(),
                         -field.basis().eigenvalues().cwiseProduct(field.coeffs()));
}

SpectralField inv_laplacian(const SpectralField& field) {
    return SpectralField(field.basis_ptr(),
                         -field.coeffs().cwiseQuotient(field.basis().eigenvalues()));
}

SpectralField apply_nonlinearity(const SpectralField& u, const Potential& potential) {
    return SpectralField(u.basis_ptr(), u.basis().nonlinearity(u.coeffs(), potential));
}

double energy(const SpectralBasis& basis, const Vector& coeffs, const Potential& potential) {
    const auto n = coeffs.size();
    const double gradient_part =
        0.5 * basis.eigenvalues().head(n).dot(coeffs.cwiseAbs2());
    if (potential.is_zero()) return gradient_part;
    Vector values = basis.synthesize(coeffs);
    double reaction = 0.0;
    for (Eigen::Index i = 0; i < values.size(); ++i) reaction += potential.value(values[i]);
    return gradient_part + basis.weight() * reaction;
}

double energy(const SpectralField& u, const Potential& potential) {
    return energy(u.basis(), u.coeffs(), potential);
}

Vector residual(const SpectralBasis& basis, const Vector& coeffs, const Potential& potential) {
    return -basis.eigenvalues().cwiseProduct(coeffs) - basis.nonlinearity(coeffs, potential);
}

SpectralField residual(const SpectralField& u, const Potential& potential) {
    return SpectralField(u.basis_ptr(), residual(u.basis(), u.coeffs(), potential));
}

} // namespace gradreduce
