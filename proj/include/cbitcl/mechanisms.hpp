#pragma once

#include <cmath>
#include <complex>

#include "cbitcl/errors.hpp"
#include "cbitcl/levy_spec.hpp"
#include "cbitcl/numeric.hpp"

namespace cbitcl {

/// Immigration mechanism Psi(u) = beta u + int (e^{ux} - 1) nu(dx).
/// nu must integrate x near zero (subordinator with uncompensated jumps), which
/// excludes the power families with index in (1,2); in practice nu is None.
struct ImmigrationMechanism {
    double beta = 0.0;
    LevyMeasureSpec nu = LevyMeasureSpec::none();

    void validate() const {
        if (!(beta >= 0.0)) throw DomainError("immigration: beta must be >= 0");
        nu.validate();
        if (!nu.positive_support())
            throw DomainError("immigration: nu must be supported on (0,inf)");
        if (!levy::subordinator_admissible(nu))
            throw DomainError("immigration: nu must satisfy int_0^1 x nu(dx) < inf; "
                              "the stable and tempered-stable families with index in "
                              "(1,2) do not");
    }
};

/// Branching mechanism Phi(u) = -b_x u + sigma_x^2 u^2 / 2 + int (e^{ux}-1-ux) pi(dx),
/// the Levy exponent of the spectrally positive process driving self-excitation.
struct BranchingMechanism {
    double b_x = 0.0;
    double sigma_x = 0.0;
    LevyMeasureSpec pi = LevyMeasureSpec::none();

    void validate() const {
        if (!(sigma_x >= 0.0)) throw DomainError("branching: sigma_x must be >= 0");
        pi.validate();
        if (!pi.positive_support())
            throw DomainError("branching: pi must be supported on (0,inf)");
    }

    /// True when Phi is affine in u (no diffusion, no jumps).
    bool linear() const { return sigma_x == 0.0 && pi.is_none(); }
};

/// Levy exponent of the component run on the integrated clock:
/// Xi(u) = b_z u + sigma_z^2 u^2 / 2 + int (e^{uz} - 1 - uz) gamma(dz),
/// with the jump integral fully compensated (gamma is CGMY or absent, so the
/// compensated closed form is the natural parameterization; b_z is drift on top).
struct NoiseExponent {
    double b_z = 0.0;
    double sigma_z = 0.0;
    LevyMeasureSpec gamma = LevyMeasureSpec::none();

    void validate() const {
        if (!(sigma_z >= 0.0)) throw DomainError("noise: sigma_z must be >= 0");
        gamma.validate();
        if (gamma.family != LevyFamily::None && gamma.family != LevyFamily::CGMY)
            throw DomainError("noise: gamma must be CGMY or none");
    }
};

/// A CBI-time-changed Levy model: CBI state X (mechanisms Psi, Phi), clock
/// Y = int X dt, time-changed component Z (exponent Xi), Brownian correlation rho.
struct CBITCLModel {
    double x0 = 0.0;
    ImmigrationMechanism psi;
    BranchingMechanism phi;
    NoiseExponent xi;
    double rho = 0.0;

    void validate() const {
        if (!(x0 >= 0.0)) throw DomainError("model: x0 must be >= 0");
        if (!(rho >= -1.0 && rho <= 1.0)) throw DomainError("model: rho must be in [-1,1]");
        psi.validate();
        phi.validate();
        xi.validate();
    }

    double cross_vol() const { return rho * phi.sigma_x * xi.sigma_z; }
};

struct IntervalEnd {
    double value = 0.0;
    bool closed = false;
};

/// Effective domains of the exponents. dx_upper is psi_sup ∧ phi_sup with an
/// explicit closed-endpoint flag; membership tests at endpoints compare exactly
/// on the stored parameter values, never with a floating epsilon.
struct DomainInfo {
    double psi_sup = kInf;
    double phi_sup = kInf;
    IntervalEnd dx_upper;
    IntervalEnd dz_lower;
    IntervalEnd dz_upper;

    bool in_dx(double u) const {
        return dx_upper.closed ? u <= dx_upper.value : u < dx_upper.value;
    }
    bool in_dz(double u) const {
        const bool lo = dz_lower.closed ? u >= dz_lower.value : u > dz_lower.value;
        const bool hi = dz_upper.closed ? u <= dz_upper.value : u < dz_upper.value;
        return lo && hi;
    }
};

inline DomainInfo domain_info(const CBITCLModel& model) {
    DomainInfo d;
    d.psi_sup = levy::upper_exponent_bound(model.psi.nu);
    d.phi_sup = levy::upper_exponent_bound(model.phi.pi);
    const double e = std::min(d.psi_sup, d.phi_sup);
    // each finite family bound is attained; an infinite bound reads as open
    d.dx_upper = {e, std::isfinite(e)};
    d.dz_lower = {levy::lower_exponent_bound(model.xi.gamma),
                  std::isfinite(levy::lower_exponent_bound(model.xi.gamma))};
    d.dz_upper = {levy::upper_exponent_bound(model.xi.gamma),
                  std::isfinite(levy::upper_exponent_bound(model.xi.gamma))};
    return d;
}

template <class S>
S eval_psi(const ImmigrationMechanism& mech, S u) {
    return mech.beta * u + levy::uncompensated_exponent(mech.nu, u);
}

template <class S>
S eval_phi(const BranchingMechanism& mech, S u) {
    return -mech.b_x * u + 0.5 * mech.sigma_x * mech.sigma_x * u * u +
           levy::compensated_exponent(mech.pi, u);
}

/// Phi'(u) = -b_x + sigma_x^2 u + int x (e^{ux} - 1) pi(dx). Finite up to and
/// including the domain endpoint for every supported family.
inline double eval_phi_prime(const BranchingMechanism& mech, double u) {
    return -mech.b_x + mech.sigma_x * mech.sigma_x * u +
           levy::compensated_exponent_deriv(mech.pi, u);
}

template <class S>
S eval_xi(const NoiseExponent& mech, S u) {
    return mech.b_z * u + 0.5 * mech.sigma_z * mech.sigma_z * u * u +
           levy::compensated_exponent(mech.gamma, u);
}

inline double eval_xi_prime(const NoiseExponent& mech, double u) {
    return mech.b_z + mech.sigma_z * mech.sigma_z * u +
           levy::compensated_exponent_deriv(mech.gamma, u);
}

/// Lambda(u1, u2) = Phi(u1) + rho sigma_x sigma_z u1 u2 + Xi(u2).
template <class S>
S eval_lambda(const CBITCLModel& model, S u1, S u2) {
    return eval_phi(model.phi, u1) + model.cross_vol() * u1 * u2 + eval_xi(model.xi, u2);
}

/// True when psi ∧ phi = +inf or int_1^inf x e^{(psi ∧ phi) x} pi(dx) < inf.
/// Guarantees a C1 branching mechanism up to the domain endpoint, hence a unique
/// local solution of the Riccati flow. Decided per family:
///   tempered stable: the tilt e^{theta x} cancels the tempering exactly and the
///   residual integrand x^{-alpha} is integrable at infinity;
///   stable: the endpoint is 0 and int_1^inf x pi(dx) < inf since alpha > 1.
inline bool check_assumption_lipschitz(const CBITCLModel& model) {
    const DomainInfo d = domain_info(model);
    if (!std::isfinite(d.dx_upper.value)) return true;
    switch (model.phi.pi.family) {
    case LevyFamily::None: return true;
    case LevyFamily::StablePositive: return true;            // endpoint 0, alpha > 1
    case LevyFamily::TemperedStablePositive: return true;    // exact cancellation at theta
    case LevyFamily::CGMY: return false;                     // not admissible as pi anyway
    }
    return true;
}

namespace detail {

/// Branching mechanism extended C1-linearly past the domain endpoint. Only the
/// ODE integrator uses this, for transient stage values while a step straddles
/// the boundary; accepted solutions are truncated back at the exact crossing.
inline double eval_phi_extended(const BranchingMechanism& mech, double u) {
    const double bound = levy::upper_exponent_bound(mech.pi);
    if (u <= bound) return eval_phi(mech, u);
    const double phi_b = eval_phi(mech, bound);
    const double dphi_b = eval_phi_prime(mech, bound);
    return phi_b + dphi_b * (u - bound);
}

inline double eval_psi_extended(const ImmigrationMechanism& mech, double u) {
    // nu is drift-only in every admissible configuration, so Psi is entire
    return mech.beta * u;
}

} // namespace detail

} // namespace cbitcl
