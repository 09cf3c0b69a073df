#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "cbitcl/errors.hpp"
#include "cbitcl/levy_spec.hpp"
#include "cbitcl/mechanisms.hpp"
#include "cbitcl/numeric.hpp"
#include "cbitcl/rng.hpp"

namespace cbitcl {

enum class SmallJumpTreatment { DiffusionApprox, CompensateOnly };

struct SimConfig {
    double horizon = 1.0;
    double step = 1.0 / 256.0;
    std::size_t paths = 1000;
    std::uint64_t seed = 0;
    double cutoff = 1e-3; // jumps below this size are approximated away
    SmallJumpTreatment small_jumps = SmallJumpTreatment::DiffusionApprox;
    /// Record every stride-th grid node (plus the terminal node). Larger
    /// strides keep production-size path sets in memory.
    std::size_t record_stride = 1;
    /// Worker threads for the path loop. Results are identical for any thread
    /// count: streams are indexed by path, not drawn sequentially.
    std::size_t threads = 1;

    void validate() const {
        if (!(horizon > 0.0)) throw ConfigError("horizon must be > 0");
        if (!(step > 0.0) || step > horizon) throw ConfigError("step must be in (0, horizon]");
        if (paths < 1) throw ConfigError("need at least one path");
        if (!(cutoff > 0.0)) throw ConfigError("cutoff must be > 0");
        if (record_stride < 1) throw ConfigError("record_stride must be >= 1");
        if (threads < 1) throw ConfigError("threads must be >= 1");
    }

    std::size_t n_steps() const {
        return static_cast<std::size_t>(std::ceil(horizon / step - 1e-9));
    }
};

/// Simulated trajectories of (X, Y, Z) plus the provenance needed to reproduce
/// them bit for bit: the config echo and the per-path stream ids. X >= 0 at
/// every node, Y is the trapezoidal integral of the recorded X when every node
/// is recorded, Z starts at 0.
struct PathSet {
    std::vector<double> times;
    std::vector<std::vector<double>> x, y, z; // [path][node]
    std::vector<std::uint64_t> stream_ids;
    SimConfig config;

    std::size_t n_paths() const { return x.size(); }

    std::vector<double> terminal_x() const { return terminal_of(x); }
    std::vector<double> terminal_y() const { return terminal_of(y); }
    std::vector<double> terminal_z() const { return terminal_of(z); }

private:
    std::vector<double> terminal_of(const std::vector<std::vector<double>>& f) const {
        std::vector<double> out;
        out.reserve(f.size());
        for (const auto& p : f) out.push_back(p.back());
        return out;
    }
};

struct LevyIncrement {
    double jump_sum = 0.0;
    /// Drift that compensates the jumps at or above the cutoff over the same
    /// window: -(time product) * int_{|x|>=eps} x spec(dx). Immigration jumps
    /// enter the state equation uncompensated and ignore this term.
    double compensation = 0.0;
};

/// Sampler for jumps at or above a size cutoff, with the per-family integrals
/// cached at construction. Stable tails invert in closed form; tempered tails
/// draw stable candidates and thin with acceptance e^{-theta x}; CGMY composes
/// the two one-sided tempered tails.
class LevySampler {
public:
    LevySampler(const LevyMeasureSpec& spec, double eps) : spec_(spec), eps_(eps) {
        if (!(eps > 0.0)) throw ConfigError("cutoff must be > 0");
        switch (spec.family) {
        case LevyFamily::None:
            break;
        case LevyFamily::StablePositive:
            pos_candidate_rate_ = spec.stable_coefficient() * std::pow(eps, -spec.alpha) / spec.alpha;
            pos_alpha_ = spec.alpha;
            pos_temper_ = 0.0;
            break;
        case LevyFamily::TemperedStablePositive:
            pos_candidate_rate_ = spec.c_alpha * std::pow(eps, -spec.alpha) / spec.alpha;
            pos_alpha_ = spec.alpha;
            pos_temper_ = spec.theta;
            break;
        case LevyFamily::CGMY:
            pos_candidate_rate_ = spec.c * std::pow(eps, -spec.y) / spec.y;
            pos_alpha_ = spec.y;
            pos_temper_ = spec.m;
            neg_candidate_rate_ = pos_candidate_rate_;
            neg_alpha_ = spec.y;
            neg_temper_ = spec.g;
            break;
        }
        tail_mean_ = levy::tail_mean(spec, eps);
        small_variance_ = levy::truncated_second_moment(spec, eps);
    }

    const LevyMeasureSpec& spec() const { return spec_; }
    double cutoff() const { return eps_; }
    /// Variance rate of the jumps below the cutoff (diffusion-matched term).
    double small_jump_variance() const { return small_variance_; }

    LevyIncrement sample(double time_product, CounterRng& rng) const {
        if (!(time_product >= 0.0)) throw ConfigError("time product must be >= 0");
        LevyIncrement inc;
        if (spec_.family == LevyFamily::None || time_product == 0.0) return inc;
        inc.jump_sum = side_sum(time_product, pos_candidate_rate_, pos_alpha_, pos_temper_, rng);
        if (neg_candidate_rate_ > 0.0)
            inc.jump_sum -= side_sum(time_product, neg_candidate_rate_, neg_alpha_, neg_temper_, rng);
        inc.compensation = -time_product * tail_mean_;
        return inc;
    }

private:
    double side_sum(double time_product, double rate, double alpha, double temper,
                    CounterRng& rng) const {
        const std::uint64_t n = poisson(rng, time_product * rate);
        double sum = 0.0;
        for (std::uint64_t i = 0; i < n; ++i) {
            const double size = eps_ * std::pow(rng.next_uniform(), -1.0 / alpha);
            if (temper > 0.0) {
                // thinning: candidate from the stable tail, accept with e^{-theta x}
                if (rng.next_uniform() > std::exp(-temper * (size - 0.0))) continue;
            }
            sum += size;
        }
        return sum;
    }

    LevyMeasureSpec spec_;
    double eps_;
    double pos_candidate_rate_ = 0.0, pos_alpha_ = 0.0, pos_temper_ = 0.0;
    double neg_candidate_rate_ = 0.0, neg_alpha_ = 0.0, neg_temper_ = 0.0;
    double tail_mean_ = 0.0;
    double small_variance_ = 0.0;
};

/// One-off sampling entry point; simulation loops hold a LevySampler instead so
/// the tempered-tail integrals are not recomputed per step.
inline LevyIncrement sample_levy_increment(const LevyMeasureSpec& spec, double time_product,
                                           double eps, CounterRng& rng) {
    return LevySampler(spec, eps).sample(time_product, rng);
}

/// Step-size heuristic: per-step jump counts scale like step * tail_mass * X,
/// and the frozen-intensity scheme needs that product well below one.
inline std::vector<std::string> validate_sim_config(const CBITCLModel& model,
                                                    const SimConfig& cfg) {
    model.validate();
    cfg.validate();
    std::vector<std::string> warnings;
    const double x_scale =
        std::max(model.x0, model.phi.b_x > 0.0 ? model.psi.beta / model.phi.b_x
                                               : model.psi.beta * cfg.horizon + model.x0);
    for (const auto* spec : {&model.phi.pi, &model.xi.gamma}) {
        if (spec->is_none()) continue;
        const double load = cfg.step * levy::tail_mass(*spec, cfg.cutoff) * x_scale;
        if (load > 0.25)
            warnings.push_back("per-step expected jump count " + format_double(load) +
                               " for the " + levy::family_name(spec->family) +
                               " measure; decrease the step or raise the cutoff");
    }
    return warnings;
}

namespace detail_sim {

// substream tags per path
inline constexpr std::uint64_t kGauss = 0, kSmallJumpGauss = 1, kBranchJumps = 2,
                               kNoiseJumps = 3, kOpGauss = 4, kOpBranchJumps = 5,
                               kOpNoiseJumps = 6;

struct RecordPlan {
    std::size_t stride, n_steps;
    bool record(std::size_t k) const { return k % stride == 0 || k == n_steps; }
};

} // namespace detail_sim

/// Euler scheme for the factorized jump-diffusion system: per step a correlated
/// Gaussian pair scaled by sqrt(X dt), self-exciting jump batches with the
/// intensity frozen at the left endpoint, full truncation of X at zero, and Y
/// accumulated trapezoidally. Small jumps below the cutoff are either
/// diffusion-matched (variance int_{|x|<eps} x^2) or dropped after
/// compensation, per config.
inline PathSet simulate_paths(const CBITCLModel& model, const SimConfig& cfg) {
    model.validate();
    cfg.validate();

    const std::size_t n = cfg.n_steps();
    const double dt = cfg.horizon / static_cast<double>(n);
    const detail_sim::RecordPlan plan{cfg.record_stride, n};

    const LevySampler branch_jumps(model.phi.pi, cfg.cutoff);
    const LevySampler noise_jumps(model.xi.gamma, cfg.cutoff);
    const bool diffuse_smalls = cfg.small_jumps == SmallJumpTreatment::DiffusionApprox;
    const double ar_branch = branch_jumps.small_jump_variance();
    const double ar_noise = noise_jumps.small_jump_variance();

    const double beta = model.psi.beta;
    const double b_x = model.phi.b_x, sig_x = model.phi.sigma_x;
    const double b_z = model.xi.b_z, sig_z = model.xi.sigma_z;
    const double rho = model.rho, rho_c = std::sqrt(1.0 - model.rho * model.rho);

    PathSet out;
    out.config = cfg;
    for (std::size_t k = 0; k <= n; ++k)
        if (plan.record(k)) out.times.push_back(std::min(k * dt, cfg.horizon));
    out.x.resize(cfg.paths);
    out.y.resize(cfg.paths);
    out.z.resize(cfg.paths);
    out.stream_ids.resize(cfg.paths);

    auto run_path = [&](std::size_t p) {
        out.stream_ids[p] = p;
        CounterRng gauss(cfg.seed, p, detail_sim::kGauss);
        CounterRng ar_gauss(cfg.seed, p, detail_sim::kSmallJumpGauss);
        CounterRng branch_rng(cfg.seed, p, detail_sim::kBranchJumps);
        CounterRng noise_rng(cfg.seed, p, detail_sim::kNoiseJumps);

        auto& xs = out.x[p];
        auto& ys = out.y[p];
        auto& zs = out.z[p];
        xs.reserve(out.times.size());
        ys.reserve(out.times.size());
        zs.reserve(out.times.size());

        double xk = model.x0, yk = 0.0, zk = 0.0;
        xs.push_back(xk);
        ys.push_back(yk);
        zs.push_back(zk);

        for (std::size_t k = 0; k < n; ++k) {
            const double vol_scale = std::sqrt(xk * dt);
            const double gx = gauss.next_normal();
            const double gz = rho * gx + rho_c * gauss.next_normal();

            double dx = (beta - b_x * xk) * dt + sig_x * vol_scale * gx;
            if (!branch_jumps.spec().is_none()) {
                const auto inc = branch_jumps.sample(xk * dt, branch_rng);
                dx += inc.jump_sum + inc.compensation;
                if (diffuse_smalls && ar_branch > 0.0)
                    dx += std::sqrt(xk * dt * ar_branch) * ar_gauss.next_normal();
            }
            const double x_next = std::max(xk + dx, 0.0);

            double dz = b_z * xk * dt + sig_z * vol_scale * gz;
            if (!noise_jumps.spec().is_none()) {
                const auto inc = noise_jumps.sample(xk * dt, noise_rng);
                dz += inc.jump_sum + inc.compensation;
                if (diffuse_smalls && ar_noise > 0.0)
                    dz += std::sqrt(xk * dt * ar_noise) * ar_gauss.next_normal();
            }

            yk += 0.5 * (xk + x_next) * dt;
            zk += dz;
            xk = x_next;
            if (plan.record(k + 1)) {
                xs.push_back(xk);
                ys.push_back(yk);
                zs.push_back(zk);
            }
        }
    };

    if (cfg.threads <= 1) {
        for (std::size_t p = 0; p < cfg.paths; ++p) run_path(p);
    } else {
        const std::size_t workers = std::min(cfg.threads, cfg.paths);
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t p = w; p < cfg.paths; p += workers) run_path(p);
            });
        }
        for (auto& th : pool) th.join();
    }
    return out;
}

/// Time-change route: the driving processes are simulated once per path on a
/// fine operational clock, and the state is read off through the running clock
/// Y. A predictor step advances Y with the left-endpoint rate; the recorded Y
/// is the trapezoidal corrector. Meant as an independent distributional
/// cross-check of simulate_paths, not as a production scheme.
inline PathSet simulate_lamperti(const CBITCLModel& model, const SimConfig& cfg) {
    model.validate();
    cfg.validate();

    const std::size_t n = cfg.n_steps();
    const double dt = cfg.horizon / static_cast<double>(n);
    const detail_sim::RecordPlan plan{cfg.record_stride, n};

    const LevySampler branch_jumps(model.phi.pi, cfg.cutoff);
    const LevySampler noise_jumps(model.xi.gamma, cfg.cutoff);
    const bool diffuse_smalls = cfg.small_jumps == SmallJumpTreatment::DiffusionApprox;
    const double ar_branch = branch_jumps.small_jump_variance();
    const double ar_noise = noise_jumps.small_jump_variance();

    const double x_scale = std::max({model.x0,
                                     model.phi.b_x > 0.0
                                         ? model.psi.beta / model.phi.b_x
                                         : model.psi.beta * cfg.horizon + model.x0,
                                     1e-8});
    const double delta = dt * x_scale / 8.0; // operational clock resolution

    const double rho = model.rho, rho_c = std::sqrt(1.0 - model.rho * model.rho);

    PathSet out;
    out.config = cfg;
    for (std::size_t k = 0; k <= n; ++k)
        if (plan.record(k)) out.times.push_back(std::min(k * dt, cfg.horizon));
    out.x.resize(cfg.paths);
    out.y.resize(cfg.paths);
    out.z.resize(cfg.paths);
    out.stream_ids.resize(cfg.paths);

    for (std::size_t p = 0; p < cfg.paths; ++p) {
        out.stream_ids[p] = p;
        CounterRng op_gauss(cfg.seed, p, detail_sim::kOpGauss);
        CounterRng branch_rng(cfg.seed, p, detail_sim::kOpBranchJumps);
        CounterRng noise_rng(cfg.seed, p, detail_sim::kOpNoiseJumps);

        // cumulative driving pair on the operational grid {j delta}
        std::vector<double> m_cum{0.0}, n_cum{0.0};
        auto extend_to = [&](double y_target) {
            while ((static_cast<double>(m_cum.size()) - 1.0) * delta < y_target) {
                const double g1 = op_gauss.next_normal();
                const double g2 = rho * g1 + rho_c * op_gauss.next_normal();
                double dm = -model.phi.b_x * delta + model.phi.sigma_x * std::sqrt(delta) * g1;
                if (!branch_jumps.spec().is_none()) {
                    const auto inc = branch_jumps.sample(delta, branch_rng);
                    dm += inc.jump_sum + inc.compensation;
                    if (diffuse_smalls && ar_branch > 0.0)
                        dm += std::sqrt(delta * ar_branch) * op_gauss.next_normal();
                }
                double dn = model.xi.b_z * delta + model.xi.sigma_z * std::sqrt(delta) * g2;
                if (!noise_jumps.spec().is_none()) {
                    const auto inc = noise_jumps.sample(delta, noise_rng);
                    dn += inc.jump_sum + inc.compensation;
                    if (diffuse_smalls && ar_noise > 0.0)
                        dn += std::sqrt(delta * ar_noise) * op_gauss.next_normal();
                }
                m_cum.push_back(m_cum.back() + dm);
                n_cum.push_back(n_cum.back() + dn);
            }
        };
        auto lookup = [&](const std::vector<double>& cum, double y_val) {
            const std::size_t idx =
                std::min(static_cast<std::size_t>(y_val / delta), cum.size() - 1);
            return cum[idx];
        };

        auto& xs = out.x[p];
        auto& ys = out.y[p];
        auto& zs = out.z[p];
        double xk = model.x0, yk = 0.0;
        xs.push_back(xk);
        ys.push_back(0.0);
        zs.push_back(0.0);

        for (std::size_t k = 0; k < n; ++k) {
            const double t_next = (k + 1) * dt;
            const double y_pred = yk + xk * dt; // left-endpoint substitution
            extend_to(y_pred);
            const double x_next =
                std::max(model.x0 + lookup(m_cum, y_pred) + model.psi.beta * t_next, 0.0);
            const double z_next = lookup(n_cum, y_pred);
            yk += 0.5 * (xk + x_next) * dt;
            xk = x_next;
            if (plan.record(k + 1)) {
                xs.push_back(xk);
                ys.push_back(yk);
                zs.push_back(z_next);
            }
        }
    }
    return out;
}

/// CSV export: config echo as #-prefixed comments, then path,t,X,Y,Z rows with
/// round-trip decimal formatting.
inline void write_csv(std::ostream& os, const PathSet& ps,
                      const std::vector<std::string>& extra_comments = {}) {
    const auto& c = ps.config;
    os << "# horizon=" << format_double(c.horizon) << " step=" << format_double(c.step)
       << " paths=" << c.paths << " seed=" << c.seed << " cutoff=" << format_double(c.cutoff)
       << " small_jumps="
       << (c.small_jumps == SmallJumpTreatment::DiffusionApprox ? "diffusion" : "compensate")
       << " record_stride=" << c.record_stride << "\n";
    for (const auto& line : extra_comments) os << "# " << line << "\n";
    os << "path,t,X,Y,Z\n";
    for (std::size_t p = 0; p < ps.n_paths(); ++p) {
        for (std::size_t k = 0; k < ps.times.size(); ++k) {
            os << p << ',' << format_double(ps.times[k]) << ',' << format_double(ps.x[p][k])
               << ',' << format_double(ps.y[p][k]) << ',' << format_double(ps.z[p][k]) << "\n";
        }
    }
}

} // namespace cbitcl
