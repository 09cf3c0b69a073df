#pragma once

#include <cmath>

#include "cbitcl/errors.hpp"
#include "cbitcl/mechanisms.hpp"

namespace cbitcl {

/// Exponential tilt pair for the change of probability driven by
/// W = zeta (X - X0) + lambda Z. Domain membership is validated at
/// construction; the derived compensator coefficients are always recomputed
/// from the model they are paired with.
struct EsscherSpec {
    double zeta = 0.0;
    double lambda = 0.0;

    EsscherSpec(const CBITCLModel& model, double zeta_, double lambda_)
        : zeta(zeta_), lambda(lambda_) {
        model.validate();
        const DomainInfo d = domain_info(model);
        if (!d.in_dx(zeta))
            throw DomainError("Esscher tilt zeta = " + format_double(zeta) +
                              " outside the branching domain");
        if (!d.in_dz(lambda))
            throw DomainError("Esscher tilt lambda = " + format_double(lambda) +
                              " outside the noise domain");
    }

    /// Psi(zeta): coefficient of calendar time in the compensator.
    double time_slope(const CBITCLModel& model) const { return eval_psi(model.psi, zeta); }

    /// Phi(zeta) + zeta lambda rho sigma_x sigma_z + Xi(lambda): coefficient of
    /// the integrated clock Y in the compensator.
    double clock_slope(const CBITCLModel& model) const {
        return eval_phi(model.phi, zeta) + zeta * lambda * model.cross_vol() +
               eval_xi(model.xi, lambda);
    }
};

/// Exponential compensator K_t = t Psi(zeta) + Y_t (Phi(zeta) + zeta lambda
/// rho sigma_x sigma_z + Xi(lambda)), evaluated at clock value y.
inline double exponential_compensator(const CBITCLModel& model, const EsscherSpec& spec,
                                      double t, double y) {
    if (!(t >= 0.0) || !(y >= 0.0))
        throw DomainError("compensator requires t >= 0 and y >= 0");
    return t * spec.time_slope(model) + y * spec.clock_slope(model);
}

/// Parameters of the model under the tilted probability dP'/dP = e^{W_T - K_T}.
/// The jump measures are tilted within their families (stable <-> tempered
/// stable, CGMY shifts its tempering rates); the drifts pick up the closed-form
/// corrections
///   b_x' = b_x - zeta sigma_x^2 - lambda rho sigma_x sigma_z - int x (e^{zeta x}-1) pi(dx),
///   b_z' = b_z + zeta rho sigma_x sigma_z + lambda sigma_z^2 + int z (e^{lambda z}-1) gamma(dz),
/// the latter running over the whole line because the noise jump integral is
/// kept fully compensated. Tilts that exit the supported families raise
/// FamilyClosureError rather than falling back to numerical measures.
inline CBITCLModel esscher_transform(const CBITCLModel& model, const EsscherSpec& spec) {
    if (!check_assumption_lipschitz(model))
        throw PreconditionError("branching mechanism is not C1 up to the domain endpoint");

    CBITCLModel out = model;
    out.psi.nu = levy::exp_tilt(model.psi.nu, spec.zeta);
    out.phi.pi = levy::exp_tilt(model.phi.pi, spec.zeta);
    out.xi.gamma = levy::exp_tilt(model.xi.gamma, spec.lambda);

    const double pi_correction = levy::compensated_exponent_deriv(model.phi.pi, spec.zeta);
    out.phi.b_x = model.phi.b_x - spec.zeta * model.phi.sigma_x * model.phi.sigma_x -
                  spec.lambda * model.cross_vol() - pi_correction;

    const double gamma_correction = levy::compensated_exponent_deriv(model.xi.gamma, spec.lambda);
    out.xi.b_z = model.xi.b_z + spec.zeta * model.cross_vol() +
                 spec.lambda * model.xi.sigma_z * model.xi.sigma_z + gamma_correction;

    out.validate();
    return out;
}

/// True when exp(Z) is a martingale: 1 in the noise domain and Xi(1) = 0.
/// The closed form is exact floating-point arithmetic for the drift-diffusion
/// case; jump families use a 1e-14 band around zero.
inline bool is_exp_martingale(const CBITCLModel& model) {
    if (!check_assumption_lipschitz(model))
        throw PreconditionError("branching mechanism is not C1 up to the domain endpoint");
    const DomainInfo d = domain_info(model);
    if (!d.in_dz(1.0)) return false;
    return std::abs(eval_xi(model.xi, 1.0)) < 1e-14;
}

} // namespace cbitcl
