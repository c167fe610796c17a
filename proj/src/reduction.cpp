#include "gradreduce/reduction.hpp"

#include <cmath>
#include <sstream>

#include "gradreduce/errors.hpp"

namespace gradreduce {

double contraction_margin(const Potential& potential, const SpectralBasis& basis, int m) {
    require(m >= 1 && m < basis.n_modes(), ErrorCode::IndexOutOfRange, "cutoff m out of range");
    return potential.lipschitz() / basis.eigenvalue(m + 1);
}

ReducedPotential::ReducedPotential(BasisPtr basis, Potential potential, int m,
                                   TailSettings settings)
    : basis_(std::move(basis)), potential_(std::move(potential)), m_(m), settings_(settings) {
    margin_ = contraction_margin(potential_, *basis_, m_);
    if (!(margin_ < 1.0)) {
        std::ostringstream os;
        os << "contraction margin q = C/lambda_{m+1} = " << margin_ << " >= 1 for m = " << m_;
        fail(ErrorCode::ContractionViolated, os.str());
    }
    require(settings_.tol > 0.0 && settings_.max_iter > 0, ErrorCode::InvalidArgument,
            "tail solver settings must be positive");
}

double ReducedPotential::head_margin() const {
    return potential_.lipschitz() / basis_->eigenvalue(m_);
}

void ReducedPotential::check_mu(const Vector& mu) const {
    require(mu.size() == m_, ErrorCode::InvalidArgument,
            "reduced coordinates must have length m = " + std::to_string(m_));
}

Vector ReducedPotential::embed(const Vector& mu) const {
    check_mu(mu);
    Vector full = Vector::Zero(basis_->n_modes());
    full.head(m_) = mu;
    return full;
}

Vector ReducedPotential::tail_map(const Vector& full) const {
    Vector next = -basis_->nonlinearity(full, potential_).cwiseQuotient(basis_->eigenvalues());
    next.head(m_).setZero();
    return next;
}

TailSolution ReducedPotential::solve_tail(const Vector& mu) const {
    Vector full = embed(mu);
    TailSolution sol;
    sol.eta = Vector::Zero(basis_->n_modes());
    for (int it = 1; it <= settings_.max_iter; ++it) {
        full.tail(full.size() - m_) = sol.eta.tail(full.size() - m_);
        Vector next = tail_map(full);
        const double update = (next - sol.eta).norm();
        sol.eta = std::move(next);
        sol.iterations = it;
        sol.final_update_norm = update;
        sol.update_norms.push_back(update);
        if (update <= settings_.tol) return sol;
    }
    std::ostringstream os;
    os << "tail Picard iteration did not reach tol " << settings_.tol << " in "
       << settings_.max_iter << " steps (last update " << sol.final_update_norm
       << "); the Lipschitz certificate may be violated";
    fail(ErrorCode::MaxIterations, os.str());
}

Vector ReducedPotential::lift(const Vector& mu) const {
    Vector full = embed(mu);
    full += solve_tail(mu).eta;
    return full;
}

double ReducedPotential::value(const Vector& mu) const {
    return energy(*basis_, lift(mu), potential_);
}

Vector ReducedPotential::gradient(const Vector& mu) const {
    const Vector u = lift(mu);
    const Vector force = basis_->nonlinearity(u, potential_);
    return basis_->eigenvalues().head(m_).cwiseProduct(mu) + force.head(m_);
}

Matrix ReducedPotential::hessian(const Vector& mu) const {
    const Vector u = lift(mu);
    const int n = basis_->n_modes();
    const Vector values = basis_->synthesize(u);
    Vector slope(values.size());
    for (Eigen::Index i = 0; i < values.size(); ++i) slope[i] = potential_.gamma_prime(values[i]);

    // <gamma'(u) v, u_j> for all j
    auto linearised = [&](const Vector& v) {
        return Vector(basis_->analyze(slope.cwiseProduct(basis_->synthesize(v))));
    };

    Matrix hess = Matrix::Zero(m_, m_);
    for (int k = 0; k < m_; ++k) {
        // d eta~/d mu_k solves xi = Q_m g(gamma'(u)(e_k + xi)).
        Vector dir = Vector::Zero(n);
        dir[k] = 1.0;
        Vector xi = Vector::Zero(n);
        for (int it = 0; it < settings_.max_iter; ++it) {
            Vector next = -linearised(dir + xi).cwiseQuotient(basis_->eigenvalues());
            next.head(m_).setZero();
            const double update = (next - xi).norm();
            xi = std::move(next);
            if (update <= settings_.tol) break;
        }
        const Vector col = linearised(dir + xi);
        hess.col(k) = col.head(m_);
        hess(k, k) += basis_->eigenvalue(k + 1);
    }
    return 0.5 * (hess + hess.transpose());
}

double ReducedPotential::gradient_lipschitz() const {
    return basis_->eigenvalue(m_) + potential_.lipschitz() / (1.0 - margin_);
}

double reduced_energy(const ReducedPotential& rp, const Vector& mu) { return rp.value(mu); }

Vector reduced_gradient(const ReducedPotential& rp, const Vector& mu) { return rp.gradient(mu); }

namespace {

Matrix fd_jacobian(const ReducedPotential& rp, const Vector& mu, double h) {
    const int m = rp.m();
    Matrix jac(m, m);
    for (int k = 0; k < m; ++k) {
        Vector plus = mu, minus = mu;
        plus[k] += h;
        minus[k] -= h;
        jac.col(k) = (rp.gradient(plus) - rp.gradient(minus)) / (2.0 * h);
    }
    return jac;
}

} // namespace

EquilibriaResult find_equilibria(const ReducedPotential& rp, const std::vector<Vector>& seeds,
                                 const NewtonSettings& settings) {
    EquilibriaResult result;
    for (int s = 0; s < static_cast<int>(seeds.size()); ++s) {
        Vector mu = seeds[s];
        if (mu.size() != rp.m()) {
            result.failures.push_back({s, "seed has wrong dimension"});
            continue;
        }
        try {
            Vector g = rp.gradient(mu);
            double gnorm = g.norm();
            int it = 0;
            bool stalled = false;
            while (gnorm > settings.gradient_tol && it < settings.max_iter) {
                ++it;
                const Matrix jac = fd_jacobian(rp, mu, settings.fd_step);
                const Vector step = jac.fullPivLu().solve(-g);
                double t = 1.0;
                Vector trial = mu + step;
                Vector gtrial = rp.gradient(trial);
                while (gtrial.norm() > (1.0 - 1e-4 * t) * gnorm && t > 1e-8) {
                    t *= 0.5;
                    trial = mu + t * step;
                    gtrial = rp.gradient(trial);
                }
                if (gtrial.norm() >= gnorm) {
                    stalled = true;
                    break;
                }
                mu = std::move(trial);
                g = std::move(gtrial);
                gnorm = g.norm();
            }
            if (gnorm > settings.gradient_tol) {
                std::ostringstream os;
                os << (stalled ? "line search stalled" : "iteration limit") << " with |grad W| = "
                   << gnorm;
                result.failures.push_back({s, os.str()});
                continue;
            }
            Equilibrium eq;
            eq.mu = mu;
            eq.u = rp.lift(mu);
            eq.residual_norm = residual(rp.basis(), eq.u, rp.potential()).norm();
            eq.gradient_norm = gnorm;
            eq.energy = energy(rp.basis(), eq.u, rp.potential());
            eq.seed_index = s;
            eq.newton_iterations = it;
            result.found.push_back(std::move(eq));
        } catch (const Error& e) {
            result.failures.push_back({s, e.what()});
        }
    }
    return result;
}

std::vector<Equilibrium> distinct_equilibria(const std::vector<Equilibrium>& all, double tol) {
    std::vector<Equilibrium> out;
    for (const auto& eq : all) {
        bool seen = false;
        for (const auto& kept : out) seen = seen || (kept.mu - eq.mu).norm() < tol;
        if (!seen) out.push_back(eq);
    }
    return out;
}

ManifoldKind ManifoldKind::phi_k(int k) {
    require(k >= 1, ErrorCode::InvalidArgument, "phi_k needs k >= 1");
    return {Type::PhiK, k};
}

std::string ManifoldKind::name() const {
    switch (type) {
    case Type::Flat: return "flat";
    case Type::Phi0: return "phi0";
    case Type::PhiK: return "phi_" + std::to_string(k);
    case Type::StaticTail: return "static";
    }
    return "?";
}

Vector manifold_map(const ManifoldKind& kind, const ReducedPotential& rp, const Vector& mu) {
    switch (kind.type) {
    case ManifoldKind::Type::Flat:
        rp.embed(mu);
        return Vector::Zero(rp.basis().n_modes());
    case ManifoldKind::Type::Phi0:
        return rp.tail_map(rp.embed(mu));
    case ManifoldKind::Type::PhiK: {
        Vector full = rp.embed(mu);
        Vector eta = Vector::Zero(full.size());
        for (int i = 0; i < kind.k; ++i) {
            eta = rp.tail_map(full + eta);
        }
        return eta;
    }
    case ManifoldKind::Type::StaticTail:
        return rp.solve_tail(mu).eta;
    }
    return {};
}

double invariance_defect(const ManifoldKind& kind, const ReducedPotential& rp, const Vector& mu,
                         double fd_step) {
    const int m = rp.m();
    require(m <= 3, ErrorCode::InvalidArgument, "invariance defect is restricted to m <= 3");
    const SpectralBasis& basis = rp.basis();
    const int n = basis.n_modes();

    const Vector phi = manifold_map(kind, rp, mu);
    Matrix dphi(n, m);
    for (int k = 0; k < m; ++k) {
        Vector plus = mu, minus = mu;
        plus[k] += fd_step;
        minus[k] -= fd_step;
        dphi.col(k) = (manifold_map(kind, rp, plus) - manifold_map(kind, rp, minus)) / (2 * fd_step);
    }

    const Vector u = rp.embed(mu) + phi;
    const Vector force = basis.nonlinearity(u, rp.potential());
    const Vector mu_dot =
        -basis.eigenvalues().head(m).cwiseProduct(mu) - force.head(m);

    Vector defect = dphi * mu_dot + basis.eigenvalues().cwiseProduct(phi);
    defect.tail(n - m) += force.tail(n - m);
    defect.head(m).setZero();
    return defect.norm();
}

} // namespace gradreduce
