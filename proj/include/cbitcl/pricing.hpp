#pragma once

#include <cmath>
#include <complex>
#include <map>

#include "cbitcl/errors.hpp"
#include "cbitcl/measure.hpp"
#include "cbitcl/moments.hpp"
#include "cbitcl/numeric.hpp"
#include "cbitcl/quadrature.hpp"
#include "cbitcl/riccati.hpp"

namespace cbitcl {

/// Discounted-asset construction log S = lambda Z + zeta (X - X0) - K, with K
/// the exponential compensator of the tilt pair. S0 = 1 and S is a martingale
/// by construction, so the call price needs no further normalization.
struct LogPriceSpec {
    CBITCLModel model;
    double zeta = 0.0;
    double lambda = 1.0;

    LogPriceSpec(CBITCLModel m, double zeta_, double lambda_)
        : model(std::move(m)), zeta(zeta_), lambda(lambda_) {
        model.validate();
        const DomainInfo d = domain_info(model);
        if (!d.in_dx(zeta)) throw DomainError("zeta outside the branching domain");
        if (!d.in_dz(lambda)) throw DomainError("lambda outside the noise domain");
        if (!check_assumption_lipschitz(model))
            throw PreconditionError("branching mechanism is not C1 up to the domain endpoint");
    }

    /// Compensator coefficient of calendar time: Psi(zeta).
    double time_slope() const { return eval_psi(model.psi, zeta); }
    /// Compensator coefficient of the clock Y:
    /// Phi(zeta) + zeta lambda rho sigma_x sigma_z + Xi(lambda).
    double clock_slope() const {
        return eval_phi(model.phi, zeta) + zeta * lambda * model.cross_vol() +
               eval_xi(model.xi, lambda);
    }
};

/// Characteristic function E[e^{iu log S_t}], via the Riccati flow at the triple
///   u1 = iu zeta, u2 = -iu (Phi(zeta) + zeta lambda rho sigma_x sigma_z + Xi(lambda)),
///   u3 = iu lambda:
///   phi_t(u) = exp(-iu zeta X0 - iu t Psi(zeta) + U(t) + V(t) X0).
/// Analytic on the closed strip -1 <= Im(u) <= 0 (the martingale interpolation
/// between u = 0 and u = -i); outside the strip the real-part triple must keep
/// its exponential moment alive past t, checked through the explosion time.
inline Complex char_fn_logS(const LogPriceSpec& spec, double t, Complex u,
                            const SolverConfig& cfg = {}) {
    const Complex i(0.0, 1.0);
    const Complex u1 = i * u * spec.zeta;
    const Complex u2 = -i * u * spec.clock_slope();
    const Complex u3 = i * u * spec.lambda;
    const double s = -u.imag();
    if (s < 0.0 || s > 1.0) {
        const auto lt = lifetime(spec.model, u1.real(), u2.real(), u3.real());
        if (!(t < lt.value))
            throw LifetimeExceeded("characteristic function not defined: horizon past the "
                                   "explosion time of the real-part triple");
    }
    auto sol = solve_riccati(spec.model, u1, u2, u3, t, cfg);
    if (sol.status != RiccatiStatus::CompletedHorizon)
        throw LifetimeExceeded("Riccati flow terminated at t = " + format_double(sol.stop_time));
    return std::exp(-i * u * (spec.zeta * spec.model.x0) - i * u * (t * spec.time_slope()) +
                    sol.u_end() + sol.v_end() * spec.model.x0);
}

struct PricingQuadConfig {
    double rel_tol = 1e-9;       // per-window adaptive tolerance
    double window = 5.0;         // frequency extent of one window
    double tail_fraction = 1e-12; // stop once a window adds less than this
    int max_windows = 400;

    void validate() const {
        if (!(rel_tol > 0.0) || !(window > 0.0) || !(tail_fraction > 0.0) || max_windows < 1)
            throw ConfigError("invalid pricing quadrature configuration");
    }
};

struct PriceResult {
    double price = 0.0;
    double damping = 0.0;
    int panels = 0;
    double err_estimate = 0.0;
    bool clamped = false;
};

/// Undiscounted call value E[(S_T - K)^+] on the unit-forward asset:
///   phi_T(-i) + (1/pi) int_0^inf Re( e^{-iz log K} phi_T(z - i) / (-z (z - i)) ) dx
/// along the damped contour z = x - i alpha, alpha in (-1, 0). Windows of the
/// frequency axis are integrated adaptively and extended until their
/// contribution falls below the configured fraction of the running value; the
/// Riccati solves are memoized per node within the call.
inline PriceResult price_call(const LogPriceSpec& spec, double T, double strike,
                              double damping = -0.5, const PricingQuadConfig& qcfg = {},
                              const SolverConfig& scfg = {}) {
    if (!(T > 0.0)) throw DomainError("maturity must be positive");
    if (!(strike > 0.0)) throw DomainError("strike must be positive");
    if (!(damping > -1.0 && damping < 0.0))
        throw DomainError("damping must lie strictly inside (-1, 0)");
    qcfg.validate();

    const Complex i(0.0, 1.0);
    const double lk = std::log(strike);

    std::map<double, Complex> phi_cache;
    auto phi_at = [&](double x) {
        auto it = phi_cache.find(x);
        if (it != phi_cache.end()) return it->second;
        const Complex z(x, -damping);
        const Complex val = char_fn_logS(spec, T, z - i, scfg);
        phi_cache.emplace(x, val);
        return val;
    };
    auto integrand = [&](double x) {
        const Complex z(x, -damping);
        return (std::exp(-i * z * lk) * phi_at(x) / (-z * (z - i))).real();
    };

    const double s0_term = char_fn_logS(spec, T, -i, scfg).real();

    quad::Options opt;
    opt.rel_tol = qcfg.rel_tol;
    opt.abs_tol = 1e-14;
    opt.max_panels = 2000;

    double integral = 0.0, err = 0.0;
    int panels = 0, quiet_windows = 0;
    for (int w = 0; w < qcfg.max_windows; ++w) {
        const double a = w * qcfg.window, b = (w + 1) * qcfg.window;
        const auto r = quad::integrate(integrand, a, b, opt);
        integral += r.value;
        err += r.error;
        panels += r.panels;
        const double scale = std::max(std::abs(s0_term + integral / M_PI), 1e-8);
        if (std::abs(r.value) / M_PI < qcfg.tail_fraction * scale) {
            // two consecutive negligible windows guard against oscillation nulls
            if (++quiet_windows >= 2) break;
        } else {
            quiet_windows = 0;
        }
        if (w == qcfg.max_windows - 1)
            err += std::abs(r.value); // tail truncated while still contributing
    }

    PriceResult res;
    res.damping = damping;
    res.panels = panels;
    res.err_estimate = err / M_PI;
    res.price = s0_term + integral / M_PI;

    const double lo = std::max(1.0 - strike, 0.0), hi = 1.0;
    if (res.price < lo || res.price > hi) {
        const double excess = std::max(lo - res.price, res.price - hi);
        res.clamped = excess > res.err_estimate;
        res.price = std::min(std::max(res.price, lo), hi);
    }
    return res;
}

/// Black-Scholes implied volatility on the unit forward, by safeguarded Newton
/// with a bisection fallback; relative tolerance 1e-10.
inline double implied_vol(double price, double strike, double T) {
    if (!(strike > 0.0) || !(T > 0.0)) throw DomainError("strike and maturity must be positive");
    const double lo_bound = std::max(1.0 - strike, 0.0);
    if (!(price > lo_bound) || !(price < 1.0))
        throw OutOfBounds("price " + format_double(price) +
                          " outside the open no-arbitrage bounds (" + format_double(lo_bound) +
                          ", 1)");
    const double lk = std::log(strike);
    auto bs = [&](double vol) {
        const double sq = vol * std::sqrt(T);
        const double d1 = -lk / sq + 0.5 * sq;
        return norm_cdf(d1) - strike * norm_cdf(d1 - sq);
    };
    double lo = 1e-9, hi = 20.0;
    double vol = std::sqrt(2.0 * M_PI / T) * price; // Brenner-Subrahmanyam seed
    vol = std::min(std::max(vol, 1e-4), 5.0);
    for (int it = 0; it < 100; ++it) {
        const double val = bs(vol);
        if (val > price) hi = vol;
        else lo = vol;
        const double sq = vol * std::sqrt(T);
        const double d1 = -lk / sq + 0.5 * sq;
        const double vega = norm_pdf(d1) * std::sqrt(T);
        double next = vega > 1e-14 ? vol - (val - price) / vega : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - vol) <= 1e-10 * std::max(vol, 1e-10)) return next;
        vol = next;
    }
    return vol;
}

} // namespace cbitcl
