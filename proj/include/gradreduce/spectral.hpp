#pragma once

#include <memory>

#include <Eigen/Dense>

#include "gradreduce/potential.hpp"

namespace gradreduce {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Dirichlet sine eigenbasis u_j(x) = sqrt(2/L) sin(j pi x / L) on [0, L],
/// -u_j'' = lambda_j u_j with lambda_j = (j pi / L)^2, j = 1..N.
///
/// Nonlinear terms are evaluated by collocation on the N_q interior points
/// x_i = i L / (N_q + 1). The trapezoidal weights make the discrete sine
/// transform exactly orthonormal for every mode j <= N_q.
class SpectralBasis {
public:
    SpectralBasis(double length, int n_modes, int n_quad = 0);

    double length() const noexcept { return length_; }
    int n_modes() const noexcept { return n_modes_; }
    int n_quad() const noexcept { return n_quad_; }

    /// lambda_j for 1 <= j <= N.
    double eigenvalue(int j) const;
    const Vector& eigenvalues() const noexcept { return eigenvalues_; }

    const Vector& grid() const noexcept { return grid_; }
    double weight() const noexcept { return weight_; }

    /// u_j(x) at an arbitrary point (1-based j, unbounded).
    double mode(int j, double x) const;

    /// Point values on the quadrature grid from coefficients (leading entries
    /// of `coeffs`; may be shorter than N).
    Vector synthesize(const Vector& coeffs) const;
    /// Coefficients 1..N of grid values.
    Vector analyze(const Vector& values) const;

    /// Coefficients of x -> gamma(u(x)).
    Vector nonlinearity(const Vector& coeffs, const Potential& potential) const;

    double quadrature(const Vector& values) const { return weight_ * values.sum(); }

private:
    double length_;
    int n_modes_;
    int n_quad_;
    Vector eigenvalues_;
    Vector grid_;
    double weight_;
    Matrix synthesis_; // n_quad x n_modes
    Matrix analysis_;  // n_modes x n_quad
};

using BasisPtr = std::shared_ptr<const SpectralBasis>;

inline BasisPtr make_basis(double length, int n_modes, int n_quad = 0) {
    return std::make_shared<const SpectralBasis>(length, n_modes, n_quad);
}

/// Coefficient vector a_1..a_N on a shared basis.
class SpectralField {
public:
    explicit SpectralField(BasisPtr basis);
    SpectralField(BasisPtr basis, Vector coeffs);

    static SpectralField unit(BasisPtr basis, int j);

    const SpectralBasis& basis() const noexcept { return *basis_; }
    const BasisPtr& basis_ptr() const noexcept { return basis_; }
    const Vector& coeffs() const noexcept { return coeffs_; }
    int size() const noexcept { return static_cast<int>(coeffs_.size()); }
    double operator[](int j) const { return coeffs_[j - 1]; }

    /// L2 norm; Parseval makes this the Euclidean norm of the coefficients.
    double norm() const { return coeffs_.norm(); }
    double inner(const SpectralField& other) const;

    SpectralField operator+(const SpectralField& other) const;
    SpectralField operator-(const SpectralField& other) const;
    SpectralField operator*(double s) const;

private:
    BasisPtr basis_;
    Vector coeffs_;
};

double eigenvalue(const SpectralBasis& basis, int j);

Vector synthesize(const SpectralField& field);
SpectralField analyze(const BasisPtr& basis, const Vector& values);

SpectralField project_head(const SpectralField& field, int m);
SpectralField project_tail(const SpectralField& field, int m);

SpectralField laplacian(const SpectralField& field);
/// Solution of the Dirichlet Poisson problem Delta g = f (coefficients -a_j/lambda_j).
SpectralField inv_laplacian(const SpectralField& field);

SpectralField apply_nonlinearity(const SpectralField& u, const Potential& potential);

/// J(u) = 1/2 sum lambda_j a_j^2 + int_0^L V(u(x)) dx.
double energy(const SpectralField& u, const Potential& potential);
double energy(const SpectralBasis& basis, const Vector& coeffs, const Potential& potential);

/// Strong-form residual Delta u - V'(u); zero exactly at equilibria.
SpectralField residual(const SpectralField& u, const Potential& potential);
Vector residual(const SpectralBasis& basis, const Vector& coeffs, const Potential& potential);

} // namespace gradreduce
