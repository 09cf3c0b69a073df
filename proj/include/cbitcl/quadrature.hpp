#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <vector>

#include "cbitcl/errors.hpp"
#include "cbitcl/numeric.hpp"

namespace cbitcl {
namespace quad {

// 15-point Kronrod extension of the 7-point Gauss rule on [-1,1].
inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct PanelResult {
    double value = 0.0;
    double error = 0.0;
};

/// One Gauss-Kronrod 15 panel over [a,b]; error from the Gauss/Kronrod difference.
template <class F>
PanelResult gk15(F&& f, double a, double b) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double fc = f(mid);
    double result_k = fc * kWgk[7];
    double result_g = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kXgk[j];
        const double f1 = f(mid - dx);
        const double f2 = f(mid + dx);
        result_k += kWgk[j] * (f1 + f2);
        if (j % 2 == 1) result_g += kWg[j / 2] * (f1 + f2);
    }
    PanelResult r;
    r.value = result_k * half;
    double diff = std::abs(result_k - result_g) * std::abs(half);
    // QUADPACK-style sharpening of the raw difference
    r.error = diff > 0.0 ? std::pow(200.0 * diff, 1.5) : 0.0;
    if (r.error > diff) r.error = diff;
    if (r.error == 0.0) r.error = std::abs(r.value) * 1e-16;
    return r;
}

struct Result {
    double value = 0.0;
    double error = 0.0;
    int panels = 0;
};

struct Options {
    double rel_tol = 1e-10;
    double abs_tol = 1e-14;
    int max_panels = 4000;
    bool throw_on_stall = true;
};

/// Adaptive integration over a finite interval, worst-panel-first refinement.
template <class F>
Result integrate(F&& f, double a, double b, const Options& opt = {}) {
    struct Panel {
        double a, b, value, error;
        bool operator<(const Panel& o) const { return error < o.error; }
    };
    std::priority_queue<Panel> heap;
    auto first = gk15(f, a, b);
    heap.push({a, b, first.value, first.error});
    double total = first.value;
    double total_err = first.error;
    int panels = 1;
    while (total_err > std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) {
        if (panels >= opt.max_panels) {
            if (opt.throw_on_stall)
                throw QuadratureError("adaptive quadrature stalled at " +
                                      std::to_string(panels) + " panels, error " +
                                      format_double(total_err));
            break;
        }
        Panel worst = heap.top();
        heap.pop();
        const double m = 0.5 * (worst.a + worst.b);
        if (m <= worst.a || m >= worst.b) {
            // interval no longer splittable in double precision
            heap.push(worst);
            break;
        }
        auto left = gk15(f, worst.a, m);
        auto right = gk15(f, m, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push({worst.a, m, left.value, left.error});
        heap.push({m, worst.b, right.value, right.error});
        ++panels;
    }
    return {total, total_err, panels};
}

/// Integration over [a, +inf) via x = a + s/(1-s), s in [0,1). Contributions
/// from the far tail where the Jacobian overflows are dropped; they matter only
/// for integrands whose tail mass is far below double resolution.
template <class F>
Result integrate_upper_infinite(F&& f, double a, const Options& opt = {}) {
    auto g = [&](double s) {
        const double om = 1.0 - s;
        const double x = a + s / om;
        const double fx = f(x);
        if (fx == 0.0) return 0.0;
        const double v = (fx / om) / om;
        return std::isfinite(v) ? v : 0.0;
    };
    return integrate(g, 0.0, 1.0, opt);
}

/// Integration over (-inf, b] via x = b - s/(1-s).
template <class F>
Result integrate_lower_infinite(F&& f, double b, const Options& opt = {}) {
    auto g = [&](double s) {
        const double om = 1.0 - s;
        const double x = b - s / om;
        const double fx = f(x);
        if (fx == 0.0) return 0.0;
        const double v = (fx / om) / om;
        return std::isfinite(v) ? v : 0.0;
    };
    return integrate(g, 0.0, 1.0, opt);
}

} // namespace quad
} // namespace cbitcl
