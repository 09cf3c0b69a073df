#pragma once

#include <cmath>
#include <functional>

#include "cbitcl/errors.hpp"
#include "cbitcl/mechanisms.hpp"
#include "cbitcl/quadrature.hpp"

namespace cbitcl {

enum class LifetimeClass { BelowChi, AboveChi };

/// Explosion time of the exponential moment E[exp(u1 X + u2 Y + u3 Z)].
/// value is +inf exactly when u1 <= chi (or, degenerately, when the branching
/// mechanism is affine on an unbounded domain, where the explosion integral
/// diverges); finite values, including 0 at the domain endpoint, arise only
/// above chi.
struct LifetimeResult {
    double value = kInf;
    LifetimeClass classification = LifetimeClass::BelowChi;
    double chi = kInf;
};

struct AsymptoticResult {
    double xi = 0.0;
    double psi_of_xi = 0.0;
};

namespace detail_moments {

struct GFn {
    const CBITCLModel* model;
    double u2, u3, xi_u3, cross_u3;

    GFn(const CBITCLModel& m, double u2_, double u3_) : model(&m), u2(u2_), u3(u3_) {
        const DomainInfo d = domain_info(m);
        if (!d.in_dz(u3_))
            throw DomainError("u3 = " + format_double(u3_) + " outside the noise domain");
        xi_u3 = eval_xi(m.xi, u3_);
        cross_u3 = m.cross_vol() * u3_;
    }

    double operator()(double x) const {
        return eval_phi(model->phi, x) + u2 + cross_u3 * x + xi_u3;
    }
    double deriv(double x) const { return eval_phi_prime(model->phi, x) + cross_u3; }

    bool superlinear() const { return !model->phi.linear(); }
    /// Slope of g when the branching mechanism is affine.
    double linear_slope() const { return -model->phi.b_x + cross_u3; }
};

/// Minimizer of the convex map g on (-inf, hi_bound]; g' is nondecreasing.
/// Assumes g eventually increases (superlinear branching, or the caller has
/// already handled the affine cases).
inline double convex_minimizer(const GFn& g, double hi_bound) {
    double hi;
    if (std::isfinite(hi_bound)) {
        if (g.deriv(hi_bound) <= 0.0) return hi_bound;
        hi = hi_bound;
    } else {
        hi = 1.0;
        int it = 0;
        while (g.deriv(hi) <= 0.0) {
            hi *= 2.0;
            if (++it > 200) throw NonconvergenceError("no increasing branch of g found");
        }
    }
    double lo = std::min(hi - 1.0, -1.0);
    int it = 0;
    while (g.deriv(lo) >= 0.0) {
        lo = lo * 2.0 - 1.0;
        if (++it > 200) throw NonconvergenceError("no decreasing branch of g found");
    }
    while (hi - lo > 1e-13 * std::max({1.0, std::abs(lo), std::abs(hi)})) {
        const double mid = 0.5 * (lo + hi);
        if (g.deriv(mid) < 0.0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

/// Rightmost root of g in [xstar, hi_bound], given g(xstar) <= 0 and g > 0 at
/// the bracket's right end (or eventually, when hi_bound = +inf).
inline double rightmost_root(const GFn& g, double xstar, double hi_bound) {
    double lo = xstar, hi;
    if (std::isfinite(hi_bound)) {
        hi = hi_bound;
    } else {
        double w = 1.0;
        hi = xstar + w;
        int it = 0;
        while (g(hi) <= 0.0) {
            lo = hi;
            w *= 2.0;
            hi = xstar + w;
            if (++it > 200) throw NonconvergenceError("no sign change found for chi");
        }
    }
    for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) <= 0.0) lo = mid;
        else hi = mid;
    }
    //upper end of the bracket: chi errs high by at most the root tolerance, so
    // an argument sitting exactly on the root still classifies as "below"
    return hi;
}

} // namespace detail_moments

/// chi^{(u2,u3)} = sup{ x in D_X : Phi(x) + u2 + rho sigma_x sigma_z u3 x + Xi(u3) <= 0 },
/// -inf when the set is empty. The map is convex in x; the sup is located by
/// evaluating the domain endpoint first and otherwise bisecting from the interior
/// minimizer, which cannot jump across a narrow sublevel set.
inline double chi(const CBITCLModel& model, double u2, double u3) {
    model.validate();
    const detail_moments::GFn g(model, u2, u3);
    const DomainInfo d = domain_info(model);
    const double e = d.dx_upper.value;

    if (std::isfinite(e)) {
        if (g(e) <= 0.0) return e;
    } else if (!g.superlinear()) {
        const double a = g.linear_slope();
        const double g0 = g(0.0);
        if (a < 0.0) return kInf;                    // g decreases to -inf
        if (a == 0.0) return g0 <= 0.0 ? kInf : -kInf;
        return -g0 / a;                              // increasing affine: exact root
    }
    // endpoint (or +inf limit) positive: locate the sublevel interval
    const double xstar = detail_moments::convex_minimizer(g, e);
    const double gmin = g(xstar);
    if (gmin > 0.0) return -kInf;
    if (gmin == 0.0) return xstar;
    return detail_moments::rightmost_root(g, xstar, e);
}

/// Explosion time of E[exp(u1 X_t + u2 Y_t + u3 Z_t)]:
///   +inf when u1 <= chi (ties included);
///   otherwise int_{u1}^{psi ∧ phi} dx / g(x), with x = u1 + s/(1-s) applied
///   when the domain is unbounded. The integrand is strictly positive there, so
///   finiteness is decided by the chi comparison alone, never by quadrature.
inline LifetimeResult lifetime(const CBITCLModel& model, double u1, double u2, double u3,
                               double quad_rel_tol = 1e-9) {
    const DomainInfo d = domain_info(model);
    if (!d.in_dx(u1))
        throw DomainError("u1 = " + format_double(u1) + " outside the branching domain");
    if (!check_assumption_lipschitz(model))
        throw PreconditionError("branching mechanism is not C1 up to the domain endpoint");

    LifetimeResult res;
    res.chi = chi(model, u2, u3);
    if (u1 <= res.chi) {
        res.value = kInf;
        res.classification = LifetimeClass::BelowChi;
        return res;
    }
    res.classification = LifetimeClass::AboveChi;

    const detail_moments::GFn g(model, u2, u3);
    const double e = d.dx_upper.value;
    quad::Options opt;
    opt.rel_tol = quad_rel_tol;
    opt.abs_tol = 1e-14;
    auto integrand = [&](double x) { return 1.0 / g(x); };

    if (std::isfinite(e)) {
        if (u1 >= e) {
            res.value = 0.0; // moment explodes instantly past the domain endpoint
            return res;
        }
        res.value = quad::integrate(integrand, u1, e, opt).value;
        return res;
    }
    if (!g.superlinear()) {
        // affine g with u1 above chi: 1/g decays at most like 1/x, the upper
        // tail diverges and the moment never explodes
        res.value = kInf;
        return res;
    }
    res.value = quad::integrate_upper_infinite(integrand, u1, opt).value;
    return res;
}

/// True when the exponential moment stays finite for every u1 in D_X at all
/// horizons: the endpoint inequality g(psi ∧ phi) <= 0, read as a limit when the
/// domain is unbounded.
inline bool moment_domain_full(const CBITCLModel& model, double u2, double u3) {
    const DomainInfo d = domain_info(model);
    if (d.psi_sup < d.phi_sup && std::isfinite(d.psi_sup)) {
        // needs int_1^inf e^{psi x} nu(dx) < inf; nu is drift-only in every
        // admissible model, so a finite psi cannot arise
        throw PreconditionError("immigration measure lacks exponential moments at psi");
    }
    const detail_moments::GFn g(model, u2, u3);
    const double e = d.dx_upper.value;
    if (std::isfinite(e)) return g(e) <= 0.0;
    if (g.superlinear()) return false;
    const double a = g.linear_slope();
    if (a < 0.0) return true;
    if (a == 0.0) return g(0.0) <= 0.0;
    return false;
}

/// Long-run limit of the Riccati flow started at zero: xi(u) solves
/// Phi(xi) + rho sigma_x sigma_z u xi + Xi(u) = 0 (leftmost such point), with
/// xi(u) = 0 when Xi(u) = 0. Also returns Psi(xi(u)), the asymptotic cumulant
/// rate of Z. Requires a strictly subcritical CBI (b_x > 0) and chi(u) >= 0.
inline AsymptoticResult xi_asymptotic(const CBITCLModel& model, double u) {
    if (!(model.phi.b_x > 0.0))
        throw DomainError("long-run limit requires b_x > 0");
    const DomainInfo d = domain_info(model);
    if (!d.in_dz(u)) throw DomainError("u outside the noise domain");
    if (chi(model, 0.0, u) < 0.0)
        throw NotInX("chi(u) < 0: exponential moment explodes at every horizon");

    const double xi_u = eval_xi(model.xi, u);
    if (xi_u == 0.0) return {0.0, 0.0};

    const detail_moments::GFn g(model, 0.0, u);
    double lo, hi; // bracket with g(lo) > 0 >= g(hi), leftmost root in between
    if (xi_u > 0.0) {
        // g(0) > 0 and the sublevel set sits strictly right of zero
        const double e = d.dx_upper.value;
        const double xstar = g.superlinear() ? detail_moments::convex_minimizer(g, e)
                                             : (std::isfinite(e) ? e : kInf);
        if (!std::isfinite(xstar) || g(xstar) > 0.0)
            throw NotInX("no root of the stationary equation in the domain");
        lo = 0.0;
        hi = xstar;
    } else {
        // g(0) < 0: expand left until g > 0 (guaranteed for subcritical models)
        hi = 0.0;
        lo = -1.0;
        int it = 0;
        while (g(lo) <= 0.0) {
            hi = lo;
            lo *= 2.0;
            if (++it > 200)
                throw NonconvergenceError("no left bracket for the stationary root");
        }
    }
    for (int i = 0; i < 300 && hi - lo > 1e-15 * std::max({1.0, std::abs(lo), std::abs(hi)});
         ++i) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) > 0.0) lo = mid;
        else hi = mid;
    }
    const double root = hi;
    return {root, eval_psi(model.psi, root)};
}

struct WingSlopes {
    double left = 0.0;   // limsup of sigma^2(T,k)/|k| as k -> -inf
    double right = 0.0;  // same as k -> +inf
    double p_plus = 0.0; // maximal u with E[S_T^u] < inf
    double p_minus = 0.0;
};

namespace detail_moments {

/// Lee's moment formula: slope multiplier from the critical moment excess.
inline double lee_beta(double x) {
    if (!std::isfinite(x)) return 0.0;
    if (x <= 1e-12) return 2.0;
    return 2.0 - 4.0 * (std::sqrt(x * x + x) - x);
}

} // namespace detail_moments

/// Asymptotic implied-variance slopes of a call surface written on the
/// exponential of the tilt combination lambda Z + zeta (X - X0), via the
/// maximal finite moment orders at maturity and Lee's moment formulas. The
/// critical orders are located by bisection on the explosion-time map of the
/// exponent pair (u zeta, u lambda).
inline WingSlopes wing_slopes(const CBITCLModel& model, double zeta, double lambda, double T,
                              double u_cap = 1e8) {
    const DomainInfo d = domain_info(model);
    if (!d.in_dx(zeta)) throw DomainError("zeta outside the branching domain");
    if (!d.in_dz(lambda)) throw DomainError("lambda outside the noise domain");
    if (!(T > 0.0)) throw DomainError("maturity must be positive");

    auto surviving = [&](double uu) -> bool {
        if (!d.in_dx(uu * zeta) || !d.in_dz(uu * lambda)) return false;
        return lifetime(model, uu * zeta, 0.0, uu * lambda).value > T;
    };

    auto critical = [&](double start, double direction) -> double {
        // largest |u| in the given direction with surviving(u); start survives
        double in = start, step = 1.0;
        double out = start + direction * step;
        int it = 0;
        while (true) {
            const double u_try = out;
            const bool past_cap = std::abs(u_try) > u_cap;
            if (!past_cap && surviving(u_try)) {
                in = u_try;
                step *= 2.0;
                out = u_try + direction * step;
                if (++it > 200) return direction > 0 ? kInf : -kInf;
            } else if (past_cap) {
                return direction > 0 ? kInf : -kInf;
            } else {
                break;
            }
        }
        for (int i = 0; i < 200 && std::abs(out - in) > 1e-9 * std::max(1.0, std::abs(in));
             ++i) {
            const double mid = 0.5 * (in + out);
            if (surviving(mid)) in = mid;
            else out = mid;
        }
        return in;
    };

    WingSlopes w;
    w.p_plus = critical(1.0, +1.0);
    w.p_minus = critical(0.0, -1.0);
    const double p_tilde = std::isfinite(w.p_plus) ? w.p_plus - 1.0 : kInf;
    const double q_tilde = std::isfinite(w.p_minus) ? -w.p_minus : kInf;
    w.right = detail_moments::lee_beta(p_tilde) / T;
    w.left = detail_moments::lee_beta(q_tilde) / T;
    return w;
}

} // namespace cbitcl
