#include <doctest.h>

#include <cmath>
#include <complex>
#include <sstream>

#include "cbitcl/riccati.hpp"
#include "cbitcl/simulate.hpp"
#include "models.hpp"
#include "oracles.hpp"

using namespace cbitcl;

namespace {

SimConfig quick_cfg(std::size_t paths, double step, std::uint64_t seed) {
    SimConfig cfg;
    cfg.horizon = 1.0;
    cfg.step = step;
    cfg.paths = paths;
    cfg.seed = seed;
    return cfg;
}

} // namespace

TEST_CASE("path structure invariants: positivity, monotone clock, exact trapezoid") {
    auto m = fixtures::alpha_cir();
    auto ps = simulate_paths(m, quick_cfg(200, 1.0 / 64, 11));
    REQUIRE(ps.n_paths() == 200);
    REQUIRE(ps.times.size() == 65);
    for (std::size_t p = 0; p < ps.n_paths(); ++p) {
        CHECK(ps.z[p][0] == 0.0);
        CHECK(ps.y[p][0] == 0.0);
        double trap = 0.0;
        for (std::size_t k = 0; k < ps.times.size(); ++k) {
            CHECK(ps.x[p][k] >= 0.0);
            if (k > 0) {
                CHECK(ps.y[p][k] >= ps.y[p][k - 1]);
                trap += 0.5 * (ps.x[p][k - 1] + ps.x[p][k]) * (ps.times[k] - ps.times[k - 1]);
                CHECK(ps.y[p][k] == doctest::Approx(trap).epsilon(1e-14));
            }
        }
    }
}

TEST_CASE("identical seed and config reproduce the path set bit for bit") {
    auto m = fixtures::tempered_cgmy();
    auto a = simulate_paths(m, quick_cfg(50, 1.0 / 32, 77));
    auto b = simulate_paths(m, quick_cfg(50, 1.0 / 32, 77));
    auto c = simulate_paths(m, quick_cfg(50, 1.0 / 32, 78));
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);
    CHECK(a.z == b.z);
    CHECK(a.x != c.x);
}

TEST_CASE("recording stride does not alter the dynamics") {
    auto m = fixtures::alpha_cir();
    auto dense = simulate_paths(m, quick_cfg(20, 1.0 / 64, 5));
    auto cfg = quick_cfg(20, 1.0 / 64, 5);
    cfg.record_stride = 64;
    auto sparse = simulate_paths(m, cfg);
    REQUIRE(sparse.times.size() == 2);
    for (std::size_t p = 0; p < 20; ++p) {
        CHECK(sparse.x[p].back() == dense.x[p].back());
        CHECK(sparse.y[p].back() == dense.y[p].back());
        CHECK(sparse.z[p].back() == dense.z[p].back());
    }
}

TEST_CASE("CIR clock matches the first-moment ODE") {
    auto m = fixtures::cir_brownian();
    auto ps = simulate_paths(m, quick_cfg(20000, 1.0 / 128, 1001));
    auto xt = ps.terminal_x();
    auto stats = oracles::mean_stats(xt);
    // m' = beta - b m integrates to the exponential relaxation toward beta/b
    const double expected = m.x0 * std::exp(-1.0) + 0.3 * (1.0 - std::exp(-1.0));
    CHECK(std::abs(stats.mean - expected) < 3.0 * stats.stderr_ + 2e-3);
}

TEST_CASE("deterministic clock gives Brownian Z with the exact variance") {
    auto m = fixtures::bs_degenerate(0.04);
    auto ps = simulate_paths(m, quick_cfg(20000, 1.0 / 64, 2002));
    for (std::size_t p = 0; p < 50; ++p) {
        for (double xv : ps.x[p]) CHECK(xv == 0.04);
    }
    auto zt = ps.terminal_z();
    auto stats = oracles::mean_stats(zt);
    CHECK(std::abs(stats.mean - (-0.5 * 0.04)) < 3.0 * stats.stderr_);
    double var = 0.0;
    for (double zv : zt) var += (zv - stats.mean) * (zv - stats.mean);
    var /= static_cast<double>(zt.size() - 1);
    // variance of the sample variance ~ 2 var^2 / n
    const double var_se = var * std::sqrt(2.0 / static_cast<double>(zt.size()));
    CHECK(std::abs(var - 0.04) < 3.0 * var_se);
}

TEST_CASE("martingale check: mean of exp(Z) is one (uncorrelated clock)") {
    auto m = fixtures::alpha_cir();
    m.rho = 0.0; // conditional-on-clock expectation is exactly one per step
    auto ps = simulate_paths(m, quick_cfg(20000, 1.0 / 64, 3003));
    std::vector<double> ez;
    for (double zv : ps.terminal_z()) ez.push_back(std::exp(zv));
    auto stats = oracles::mean_stats(ez);
    CHECK(std::abs(stats.mean - 1.0) < 3.5 * stats.stderr_);
}

TEST_CASE("levy increment sampler: zero window and compensation bookkeeping") {
    CounterRng rng(5, 0, 9);
    auto stable = LevyMeasureSpec::stable_positive(1.5, 0.2);
    auto inc = sample_levy_increment(stable, 0.0, 1e-3, rng);
    CHECK(inc.jump_sum == 0.0);
    CHECK(inc.compensation == 0.0);

    LevySampler sampler(stable, 1e-3);
    const double tau = 0.05;
    auto one = sampler.sample(tau, rng);
    CHECK(one.compensation == doctest::Approx(-tau * levy::tail_mean(stable, 1e-3)));
}

TEST_CASE("levy increment sampler: stable tail statistics") {
    auto stable = LevyMeasureSpec::stable_positive(1.6, 1.0, 1.0);
    const double eps = 1e-2, tau = 0.02;
    LevySampler sampler(stable, eps);
    CounterRng rng(17, 0, 3);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double j = sampler.sample(tau, rng).jump_sum;
        sum += j;
        sum2 += j * j;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    CHECK(std::abs(mean - tau * levy::tail_mean(stable, eps)) < 4.0 * se);
}

TEST_CASE("levy increment sampler: tempered thinning and CGMY composition") {
    auto tempered = LevyMeasureSpec::tempered_stable_positive(1.5, 2.0, 1.0);
    const double eps = 1e-2, tau = 0.05;
    LevySampler ts(tempered, eps);
    CounterRng rng(21, 0, 3);
    const int n = 150000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double j = ts.sample(tau, rng).jump_sum;
        sum += j;
        sum2 += j * j;
    }
    double mean = sum / n;
    double se = std::sqrt((sum2 / n - mean * mean) / n);
    CHECK(std::abs(mean - tau * levy::tail_mean(tempered, eps)) < 4.0 * se);

    auto cgmy = LevyMeasureSpec::cgmy(0.8, 3.0, 2.0, 1.5);
    LevySampler cs(cgmy, eps);
    sum = sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double j = cs.sample(tau, rng).jump_sum;
        sum += j;
        sum2 += j * j;
    }
    mean = sum / n;
    se = std::sqrt((sum2 / n - mean * mean) / n);
    CHECK(std::abs(mean - tau * levy::tail_mean(cgmy, eps)) < 4.0 * se);
}

TEST_CASE("time-change simulator agrees with the Euler route in distribution") {
    auto m = fixtures::cir_brownian();
    auto cfg_a = quick_cfg(10000, 1.0 / 128, 404);
    auto cfg_b = quick_cfg(10000, 1.0 / 128, 1606);
    auto euler = simulate_paths(m, cfg_a);
    auto lamperti = simulate_lamperti(m, cfg_b);
    CHECK(oracles::ks_two_sample_pvalue(euler.terminal_x(), lamperti.terminal_x()) > 0.05);
    CHECK(oracles::ks_two_sample_pvalue(euler.terminal_z(), lamperti.terminal_z()) > 0.05);
}

TEST_CASE("time-change simulator: absorbing zero without immigration") {
    CBITCLModel m = fixtures::cir_brownian();
    m.x0 = 0.0;
    m.psi.beta = 0.0;
    auto ps = simulate_lamperti(m, quick_cfg(50, 1.0 / 32, 6));
    for (std::size_t p = 0; p < ps.n_paths(); ++p) {
        for (double v : ps.x[p]) CHECK(v == 0.0);
        for (double v : ps.z[p]) CHECK(v == 0.0);
    }
}

TEST_CASE("time-change simulator: deterministic clock reduces to the driving noise law") {
    auto m = fixtures::bs_degenerate(0.04);
    auto ps = simulate_lamperti(m, quick_cfg(20000, 1.0 / 64, 7007));
    auto zt = ps.terminal_z();
    auto stats = oracles::mean_stats(zt);
    CHECK(std::abs(stats.mean - (-0.5 * 0.04)) < 3.5 * stats.stderr_);
    double var = 0.0;
    for (double zv : zt) var += (zv - stats.mean) * (zv - stats.mean);
    var /= static_cast<double>(zt.size() - 1);
    const double var_se = var * std::sqrt(2.0 / static_cast<double>(zt.size()));
    CHECK(std::abs(var - 0.04) < 3.5 * var_se);
}

TEST_CASE("empirical characteristic function tracks the transform (smoke scale)") {
    auto m = fixtures::alpha_cir();
    auto ps = simulate_paths(m, quick_cfg(20000, 1.0 / 256, 8008));
    auto xt = ps.terminal_x();
    auto zt = ps.terminal_z();
    for (auto [a, c] : {std::pair{1.0, 0.5}, std::pair{-2.0, 1.5}}) {
        Complex acc(0.0, 0.0);
        for (std::size_t i = 0; i < xt.size(); ++i)
            acc += std::exp(Complex(0.0, a * xt[i] + c * zt[i]));
        acc /= static_cast<double>(xt.size());
        // componentwise standard errors of the empirical characteristic function
        double vr = 0.0, vi = 0.0;
        for (std::size_t i = 0; i < xt.size(); ++i) {
            const Complex e = std::exp(Complex(0.0, a * xt[i] + c * zt[i])) - acc;
            vr += e.real() * e.real();
            vi += e.imag() * e.imag();
        }
        const double n = static_cast<double>(xt.size());
        const double se_r = std::sqrt(vr / (n - 1.0) / n), se_i = std::sqrt(vi / (n - 1.0) / n);
        const Complex want = char_fn_joint(m, 1.0, Complex(0.0, a), Complex(0.0, 0.0),
                                           Complex(0.0, c));
        CHECK(std::abs(acc.real() - want.real()) < 4.0 * se_r + 2e-3);
        CHECK(std::abs(acc.imag() - want.imag()) < 4.0 * se_i + 2e-3);
    }
}

TEST_CASE("halving the step moves the empirical transform toward the exact one") {
    auto m = fixtures::alpha_cir();
    const Complex want = char_fn_joint(m, 1.0, {0.0, 0.0}, {0.0, 0.0}, Complex(0.0, 2.0));
    double prev = kInf;
    for (double step : {1.0 / 2, 1.0 / 4, 1.0 / 8, 1.0 / 16}) {
        SimConfig cfg;
        cfg.horizon = 1.0;
        cfg.step = step;
        cfg.paths = 50000;
        cfg.seed = 31337;
        cfg.record_stride = 1u << 20; // terminal nodes only
        auto ps = simulate_paths(m, cfg);
        Complex acc(0.0, 0.0);
        for (double z : ps.terminal_z()) acc += std::exp(Complex(0.0, 2.0 * z));
        acc /= static_cast<double>(cfg.paths);
        const double err = std::abs(acc - want);
        CHECK(err < prev);
        prev = err;
    }
}

TEST_CASE("tower property: restarted transform averaged over simulated states") {
    auto m = fixtures::cir_brownian();
    const double T = 1.0, t = 0.5;
    const double u1 = -1.0, u2 = 0.2, u3 = 0.5;

    SimConfig cfg;
    cfg.horizon = t;
    cfg.step = 1.0 / 256;
    cfg.paths = 20000;
    cfg.seed = 777;
    cfg.record_stride = 128;
    auto ps = simulate_paths(m, cfg);

    // one flow solve serves every path: the restarted transform is
    // exp(U(T-t) + V(T-t) X_t + u2 Y_t + u3 Z_t)
    auto sol = solve_riccati(m, u1, u2, u3, T - t);
    REQUIRE(sol.status == RiccatiStatus::CompletedHorizon);
    std::vector<double> vals;
    vals.reserve(cfg.paths);
    for (std::size_t p = 0; p < ps.n_paths(); ++p) {
        vals.push_back(std::exp(sol.u_end() + sol.v_end() * ps.x[p].back() +
                                u2 * ps.y[p].back() + u3 * ps.z[p].back()));
    }
    auto stats = oracles::mean_stats(vals);
    const double want = transform(m, T, u1, u2, u3);
    CHECK(std::abs(stats.mean - want) < 3.5 * stats.stderr_ + 2e-3);
}

TEST_CASE("config validation and step-size warnings") {
    auto m = fixtures::alpha_cir();
    SimConfig bad;
    bad.step = 2.0;
    bad.horizon = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = SimConfig{};
    bad.cutoff = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    SimConfig coarse;
    coarse.horizon = 1.0;
    coarse.step = 0.5;
    coarse.cutoff = 1e-5; // huge tail mass per unit X
    coarse.paths = 1;
    CHECK(!validate_sim_config(m, coarse).empty());
    CHECK(validate_sim_config(m, quick_cfg(10, 1.0 / 512, 0)).empty());
}

TEST_CASE("CSV export carries the config echo and round-trip numbers") {
    auto m = fixtures::bs_degenerate();
    auto cfg = quick_cfg(2, 0.5, 3);
    auto ps = simulate_paths(m, cfg);
    std::ostringstream os;
    write_csv(os, ps, {"model_hash=deadbeef"});
    const std::string text = os.str();
    CHECK(text.find("# horizon=1 step=0.5 paths=2 seed=3") != std::string::npos);
    CHECK(text.find("# model_hash=deadbeef") != std::string::npos);
    CHECK(text.find("path,t,X,Y,Z") != std::string::npos);
    CHECK(text.find("0,0,0.04,0,0") != std::string::npos); // t=0 row of path 0
}
