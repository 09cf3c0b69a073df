#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <vector>

#include "cbitcl/errors.hpp"
#include "cbitcl/mechanisms.hpp"
#include "cbitcl/moments.hpp"
#include "cbitcl/numeric.hpp"

namespace cbitcl {

struct SolverConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = kInf;
    double blow_up_threshold = 1e8;
    /// Allowed overshoot of Re(V) past the domain endpoint within a single
    /// accepted step; larger overshoots force step halving before acceptance.
    double domain_exit_margin = 0.05;

    void validate() const {
        if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
            throw ConfigError("solver tolerances must be strictly positive");
        if (!(max_step > 0.0)) throw ConfigError("max_step must be positive");
        if (!(blow_up_threshold > 0.0)) throw ConfigError("blow-up threshold must be positive");
    }
};

enum class RiccatiStatus { CompletedHorizon, BlewUp, LeftDomain };

/// Solution of the extended Riccati system
///   dV/dt = Phi(V) + u2 + rho sigma_x sigma_z u3 V + Xi(u3),  V(0) = u1,
///   U(t)  = int_0^t Psi(V(s)) ds.
/// V(0) = u1 and U(0) = 0 exactly. status records whether the horizon was
/// reached, V blew up, or Re(V) crossed the domain endpoint; stop_time brackets
/// the explosion / crossing within the last accepted step.
template <class S>
struct RiccatiSolutionT {
    S u1{}, u2{}, u3{};
    std::vector<double> grid;
    std::vector<S> v;
    std::vector<S> u;
    RiccatiStatus status = RiccatiStatus::CompletedHorizon;
    double stop_time = 0.0;

    double attained_horizon() const { return grid.empty() ? 0.0 : grid.back(); }
    S v_end() const { return v.back(); }
    S u_end() const { return u.back(); }
};

using RiccatiSolution = RiccatiSolutionT<double>;
using RiccatiSolutionC = RiccatiSolutionT<Complex>;

namespace detail {

// Dormand-Prince 5(4) tableau
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                        a75 = -2187.0 / 6784, a76 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// dense-output coefficients
inline constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

template <class S>
struct Pair {
    S v{}, u{};
    Pair operator+(const Pair& o) const { return {v + o.v, u + o.u}; }
    Pair operator*(double w) const { return {v * w, u * w}; }
};

template <class S>
Pair<S> axpy(const Pair<S>& y, double h, std::initializer_list<std::pair<double, const Pair<S>*>> terms) {
    Pair<S> acc = y;
    for (auto& [w, k] : terms) {
        acc.v += h * w * k->v;
        acc.u += h * w * k->u;
    }
    return acc;
}

/// Quartic dense-output interpolant for one accepted step of length h.
template <class S>
struct DenseStep {
    Pair<S> r1, r2, r3, r4, r5;
    double t0 = 0.0, h = 0.0;

    Pair<S> eval(double t) const {
        const double th = (t - t0) / h;
        const double th1 = 1.0 - th;
        Pair<S> out;
        out.v = r1.v + th * (r2.v + th1 * (r3.v + th * (r4.v + th1 * r5.v)));
        out.u = r1.u + th * (r2.u + th1 * (r3.u + th * (r4.u + th1 * r5.u)));
        return out;
    }
};

} // namespace detail

/// Adaptive embedded Runge-Kutta 5(4) integration of the extended Riccati system
/// with PI step-size control. U is advanced with the same stage weights applied
/// to Psi(V), so both components share one error budget. Domain exit at
/// psi ∧ phi is located on the dense output of the last step to 1e-12 time
/// resolution; blow-up is declared when |V| exceeds the configured threshold
/// while the right-hand side points outward.
///
/// If output_grid is supplied, steps land exactly on the requested times and the
/// returned grid matches them; otherwise the natural accepted steps are recorded.
template <class S>
RiccatiSolutionT<S> solve_riccati(const CBITCLModel& model, S u1, S u2, S u3, double horizon,
                                  const SolverConfig& cfg = {},
                                  const std::vector<double>* output_grid = nullptr) {
    using detail::Pair;
    cfg.validate();
    model.validate();
    if (!(horizon > 0.0)) throw DomainError("horizon must be positive");
    const DomainInfo dom = domain_info(model);
    if (!dom.in_dx(detail::real_part(u1)))
        throw DomainError("Re(u1) = " + format_double(detail::real_part(u1)) +
                          " outside the branching domain");
    if (!dom.in_dz(detail::real_part(u3)))
        throw DomainError("Re(u3) = " + format_double(detail::real_part(u3)) +
                          " outside the noise domain");
    if (!check_assumption_lipschitz(model))
        throw PreconditionError("branching mechanism is not C1 up to the domain endpoint");
    const double dx_bound = dom.dx_upper.value;
    if (std::isfinite(dx_bound) && cfg.blow_up_threshold <= std::abs(dx_bound))
        throw ConfigError("blow-up threshold must exceed the domain endpoint magnitude");

    const S cross = S(model.cross_vol()) * u3;
    const S add_const = u2 + eval_xi(model.xi, u3);

    auto rhs = [&](const Pair<S>& y) -> Pair<S> {
        Pair<S> d;
        if constexpr (detail::is_complex_v<S>) {
            d.v = eval_phi(model.phi, y.v) + cross * y.v + add_const;
            d.u = eval_psi(model.psi, y.v);
        } else {
            d.v = detail::eval_phi_extended(model.phi, y.v) + cross * y.v + add_const;
            d.u = detail::eval_psi_extended(model.psi, y.v);
        }
        return d;
    };

    RiccatiSolutionT<S> sol;
    sol.u1 = u1;
    sol.u2 = u2;
    sol.u3 = u3;
    sol.grid.push_back(0.0);
    sol.v.push_back(u1);
    sol.u.push_back(S(0));

    std::vector<double> outputs;
    if (output_grid) {
        outputs = *output_grid;
        std::sort(outputs.begin(), outputs.end());
    }
    size_t next_out = 0;
    while (next_out < outputs.size() && outputs[next_out] <= 0.0) ++next_out;

    double t = 0.0;
    Pair<S> y{u1, S(0)};
    Pair<S> k1 = rhs(y);

    auto err_scale = [&](const Pair<S>& a, const Pair<S>& b, const Pair<S>& e) {
        const double sv = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(a.v), std::abs(b.v));
        const double su = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(a.u), std::abs(b.u));
        const double rv = std::abs(e.v) / sv, ru = std::abs(e.u) / su;
        return std::sqrt(0.5 * (rv * rv + ru * ru));
    };

    // initial step from the scale of the right-hand side
    double h = std::min({horizon, cfg.max_step,
                         1e-2 * (1.0 + std::abs(y.v)) / (1.0 + std::abs(k1.v))});
    double err_old = 1e-4;
    const double safety = 0.9, beta_pi = 0.04, fac_min = 0.2, fac_max = 10.0;

    auto record = [&](double tt, const Pair<S>& yy) {
        sol.grid.push_back(tt);
        sol.v.push_back(yy.v);
        sol.u.push_back(yy.u);
    };

    const double exit_margin =
        cfg.domain_exit_margin * std::max(1.0, std::isfinite(dx_bound) ? std::abs(dx_bound) : 1.0);

    while (t < horizon) {
        if (h < 1e-14 * std::max(1.0, std::abs(t)))
            throw NonconvergenceError("adaptive step size underflow at t = " + format_double(t));
        bool hit_output = false;
        if (next_out < outputs.size() && t + h >= outputs[next_out] - 1e-15 * horizon) {
            h = outputs[next_out] - t;
            hit_output = true;
        }
        if (t + h > horizon) {
            h = horizon - t;
            hit_output = false; // horizon may coincide with an output; re-checked on record
        }

        using detail::Pair;
        Pair<S> k2, k3, k4, k5, k6, k7, ynew;
        {
            using namespace detail;
            k2 = rhs(axpy(y, h, {{a21, &k1}}));
            k3 = rhs(axpy(y, h, {{a31, &k1}, {a32, &k2}}));
            k4 = rhs(axpy(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
            k5 = rhs(axpy(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
            k6 = rhs(axpy(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
            ynew = axpy(y, h, {{a71, &k1}, {a73, &k3}, {a74, &k4}, {a75, &k5}, {a76, &k6}});
            k7 = rhs(ynew);
        }
        detail::Pair<S> err_vec;
        {
            using namespace detail;
            err_vec.v = h * (e1 * k1.v + e3 * k3.v + e4 * k4.v + e5 * k5.v + e6 * k6.v + e7 * k7.v);
            err_vec.u = h * (e1 * k1.u + e3 * k3.u + e4 * k4.u + e5 * k5.u + e6 * k6.u + e7 * k7.u);
        }
        const double err = err_scale(y, ynew, err_vec);

        const double fac11 = std::pow(std::max(err, 1e-30), 0.2 - beta_pi * 0.75);
        double fac = fac11 / std::pow(err_old, beta_pi);
        fac = std::max(1.0 / fac_max, std::min(1.0 / fac_min, fac / safety));
        double h_next = std::min(h / fac, cfg.max_step);

        if (err > 1.0) {
            h = h / std::min(1.0 / fac_min, fac11 / safety);
            continue;
        }

        // overshoot control at a finite domain endpoint (real solves only)
        if constexpr (!detail::is_complex_v<S>) {
            if (std::isfinite(dx_bound) && ynew.v > dx_bound + exit_margin) {
                h *= 0.5;
                continue;
            }
        }

        // accepted: build the dense interpolant for event location
        detail::DenseStep<S> dense;
        {
            using namespace detail;
            dense.t0 = t;
            dense.h = h;
            Pair<S> dy{ynew.v - y.v, ynew.u - y.u};
            dense.r1 = y;
            dense.r2 = dy;
            dense.r3 = {h * k1.v - dy.v, h * k1.u - dy.u};
            dense.r4 = {dy.v - h * k7.v - dense.r3.v, dy.u - h * k7.u - dense.r3.u};
            dense.r5.v = h * (d1 * k1.v + d3 * k3.v + d4 * k4.v + d5 * k5.v + d6 * k6.v + d7 * k7.v);
            dense.r5.u = h * (d1 * k1.u + d3 * k3.u + d4 * k4.u + d5 * k5.u + d6 * k6.u + d7 * k7.u);
        }

        const double t_new = t + h;
        err_old = std::max(err, 1e-4);

        // domain exit: bisect the crossing time on the dense output
        if (std::isfinite(dx_bound) && detail::real_part(ynew.v) > dx_bound) {
            double lo = t, hi = t_new;
            while (hi - lo > 1e-12) {
                const double mid = 0.5 * (lo + hi);
                if (detail::real_part(dense.eval(mid).v) > dx_bound) hi = mid;
                else lo = mid;
            }
            Pair<S> ycross = dense.eval(lo);
            if constexpr (!detail::is_complex_v<S>) ycross.v = dx_bound;
            record(lo, ycross);
            sol.status = RiccatiStatus::LeftDomain;
            sol.stop_time = lo;
            return sol;
        }

        // blow-up: |V| past threshold while still diverging
        const double mag = std::abs(ynew.v);
        if (mag > cfg.blow_up_threshold) {
            bool diverging;
            if constexpr (detail::is_complex_v<S>)
                diverging = (std::conj(ynew.v) * k7.v).real() > 0.0;
            else
                diverging = ynew.v * k7.v > 0.0;
            if (diverging) {
                double lo = t, hi = t_new;
                while (hi - lo > 1e-12 * std::max(1.0, t_new)) {
                    const double mid = 0.5 * (lo + hi);
                    if (std::abs(dense.eval(mid).v) > cfg.blow_up_threshold) hi = mid;
                    else lo = mid;
                }
                record(lo, dense.eval(lo));
                sol.status = RiccatiStatus::BlewUp;
                sol.stop_time = lo;
                return sol;
            }
        }

        t = t_new;
        y = ynew;
        k1 = k7; // FSAL

        bool is_output_time = false;
        if (hit_output && next_out < outputs.size() &&
            std::abs(t - outputs[next_out]) <= 1e-12 * std::max(1.0, horizon)) {
            is_output_time = true;
            ++next_out;
        }
        if (output_grid == nullptr || is_output_time || t >= horizon) record(t, y);

        h = h_next;
    }

    sol.status = RiccatiStatus::CompletedHorizon;
    sol.stop_time = horizon;
    return sol;
}

/// Joint Fourier-Laplace transform E[exp(u1 X_T + u2 Y_T + u3 Z_T)] evaluated at
/// the state (x, y, z) held at time 0:
///   exp(U(T) + V(T) x + u2 y + u3 z).
/// For real arguments the horizon must lie strictly below the explosion time of
/// the exponential moment; for complex arguments the real-part triple is held to
/// the same condition.
inline double transform(const CBITCLModel& model, double T, double u1, double u2, double u3,
                        double x, double y, double z, const SolverConfig& cfg = {}) {
    const LifetimeResult lt = lifetime(model, u1, u2, u3);
    if (!(T < lt.value))
        throw LifetimeExceeded("T = " + format_double(T) + " >= lifetime = " +
                               format_double(lt.value));
    auto sol = solve_riccati(model, u1, u2, u3, T, cfg);
    if (sol.status != RiccatiStatus::CompletedHorizon)
        throw LifetimeExceeded("Riccati flow terminated at t = " + format_double(sol.stop_time) +
                               " before T = " + format_double(T));
    return std::exp(sol.u_end() + sol.v_end() * x + u2 * y + u3 * z);
}

inline Complex transform(const CBITCLModel& model, double T, Complex u1, Complex u2, Complex u3,
                         double x, double y, double z, const SolverConfig& cfg = {}) {
    const LifetimeResult lt = lifetime(model, u1.real(), u2.real(), u3.real());
    if (!(T < lt.value))
        throw LifetimeExceeded("T = " + format_double(T) +
                               " >= lifetime of the real-part triple = " +
                               format_double(lt.value));
    auto sol = solve_riccati(model, u1, u2, u3, T, cfg);
    if (sol.status != RiccatiStatus::CompletedHorizon)
        throw LifetimeExceeded("Riccati flow terminated at t = " + format_double(sol.stop_time) +
                               " before T = " + format_double(T));
    return std::exp(sol.u_end() + sol.v_end() * x + u2 * y + u3 * z);
}

/// Unconditional transform, evaluated at the initial state (X0, 0, 0).
inline double transform(const CBITCLModel& model, double T, double u1, double u2, double u3,
                        const SolverConfig& cfg = {}) {
    return transform(model, T, u1, u2, u3, model.x0, 0.0, 0.0, cfg);
}

inline Complex transform(const CBITCLModel& model, double T, Complex u1, Complex u2, Complex u3,
                         const SolverConfig& cfg = {}) {
    return transform(model, T, u1, u2, u3, model.x0, 0.0, 0.0, cfg);
}

/// Joint characteristic function of (X_T, Y_T, Z_T) at purely imaginary
/// arguments, evaluated at the initial state. Always admissible: the real-part
/// triple is (0,0,0), whose exponential moment never explodes.
inline Complex char_fn_joint(const CBITCLModel& model, double T, Complex w1, Complex w2,
                             Complex w3, const SolverConfig& cfg = {}) {
    if (w1.real() != 0.0 || w2.real() != 0.0 || w3.real() != 0.0)
        throw DomainError("char_fn_joint expects purely imaginary arguments");
    auto sol = solve_riccati(model, w1, w2, w3, T, cfg);
    if (sol.status != RiccatiStatus::CompletedHorizon)
        throw NonconvergenceError("characteristic-function solve terminated early at t = " +
                                  format_double(sol.stop_time));
    return std::exp(sol.u_end() + sol.v_end() * model.x0);
}

} // namespace cbitcl
