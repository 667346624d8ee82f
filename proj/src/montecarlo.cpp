#include "ssde/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <optional>
#include <thread>

#include "ssde/errors.hpp"
#include "ssde/rng.hpp"

namespace ssde {

void EnsembleConfig::validate() const {
    if (n_paths < 1) throw ConfigError("n_paths", "must be >= 1");
    if (p < 1) throw ConfigError("p", "must be >= 1");
    if (threads < 0) throw ConfigError("threads", "must be >= 0");
}

std::size_t report_stride(std::size_t steps, std::size_t max_points) {
    if (max_points < 2) max_points = 2;
    const std::size_t intervals = max_points - 1;
    const std::size_t minimal = std::max<std::size_t>(1, (steps + intervals - 1) / intervals);
    for (std::size_t s = minimal; s <= 2 * minimal && s <= steps; ++s) {
        if (steps % s == 0) return s;
    }
    return minimal;
}

double ErrorStats::sup_lln() const {
    return lln_moment.empty() ? 0.0 : *std::max_element(lln_moment.begin(), lln_moment.end());
}

double ErrorStats::sup_clt() const {
    return clt_moment.empty() ? 0.0 : *std::max_element(clt_moment.begin(), clt_moment.end());
}

double GaussianCheck::max_abs_z() const {
    double z = 0.0;
    for (double v : z_mean) z = std::max(z, std::abs(v));
    for (double v : z_var) z = std::max(z, std::abs(v));
    return z;
}

std::vector<double> path_normals(std::uint64_t master_seed, std::size_t j, std::size_t count) {
    std::vector<double> out(count);
    NormalStream(substream_seed(master_seed, j)).fill(out);
    return out;
}

namespace {

// Per-path values at the reported indices.
struct PathRecord {
    std::vector<double> resid;
    std::vector<double> lln;
    std::vector<double> clt;
    std::vector<double> V;
    std::optional<std::size_t> diverged_at;
};

struct Welford {
    std::vector<double> mean, m2;
    explicit Welford(std::size_t n) : mean(n, 0.0), m2(n, 0.0) {}
    void add(std::size_t count, const std::vector<double>& x) {
        const double k = static_cast<double>(count);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = x[i] - mean[i];
            mean[i] += d / k;
            m2[i] += d * (x[i] - mean[i]);
        }
    }
};

struct Reduction {
    std::vector<double> times;
    Welford resid, V;
    std::vector<double> lln_sum, clt_sum;
    Reduction(std::size_t n) : resid(n), V(n), lln_sum(n, 0.0), clt_sum(n, 0.0) {}
};

constexpr std::size_t kBatch = 256;

// Runs every path, folding per-path records in ascending path index so the
// result does not depend on the number of workers.
Reduction run_paths(const ModelSpec& m, const ScaleParams& s, const TimeGrid& g,
                    const EnsembleConfig& cfg) {
    cfg.validate();
    if (!(s.eps > 0.0)) throw ConfigError("eps", "must be > 0 for ensemble runs");

    const ClosedLoopTrack track = ClosedLoopTrack::build(m, s, g);
    const std::size_t stride = cfg.full_resolution ? 1 : report_stride(g.steps);
    const std::size_t n_report = g.steps / stride + 1;

    Reduction red(n_report);
    red.times.resize(n_report);
    for (std::size_t k = 0; k < n_report; ++k) red.times[k] = g.time(k * stride);

    const auto n_paths = static_cast<std::size_t>(cfg.n_paths);
    std::size_t workers = cfg.threads > 0 ? static_cast<std::size_t>(cfg.threads)
                                          : std::max(1u, std::thread::hardware_concurrency());
    const int p = cfg.p;
    auto pow_abs = [p](double v) {
        const double a = std::abs(v);
        return p == 1 ? a : p == 2 ? a * a : std::pow(a, p);
    };

    auto run_one = [&](std::size_t j, std::vector<double>& noise, PathRecord& rec) {
        rec.resid.assign(n_report, 0.0);
        rec.lln.assign(n_report, 0.0);
        rec.clt.assign(n_report, 0.0);
        rec.V.assign(n_report, 0.0);
        rec.diverged_at.reset();
        NormalStream(substream_seed(cfg.master_seed, j)).fill(noise);
        try {
            step_coupled(m, s, g, track, noise, [&](const StepState& st) {
                if (st.i % stride != 0) return;
                const std::size_t k = st.i / stride;
                const double gap = st.X - st.x_det;
                rec.resid[k] = gap - s.eps * st.Z_lim;
                rec.lln[k] = pow_abs(gap);
                rec.clt[k] = pow_abs(gap / s.eps - st.Z_lim);
                rec.V[k] = st.x_det + s.eps * st.Z_lim;
            });
        } catch (const PathDivergence& e) {
            rec.diverged_at = e.step();
        }
    };

    std::vector<PathRecord> batch(std::min(kBatch, n_paths));
    std::size_t folded = 0;
    for (std::size_t first = 0; first < n_paths; first += kBatch) {
        const std::size_t count = std::min(kBatch, n_paths - first);
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::atomic<bool> failed{false};
        auto work = [&] {
            std::vector<double> noise(g.steps);
            try {
                for (std::size_t k = next++; k < count; k = next++) run_one(first + k, noise, batch[k]);
            } catch (...) {
                if (!failed.exchange(true)) failure = std::current_exception();
            }
        };
        const std::size_t n_workers = std::min(workers, count);
        if (n_workers <= 1) {
            work();
        } else {
            std::vector<std::jthread> pool;
            pool.reserve(n_workers);
            for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(work);
        }
        if (failure) std::rethrow_exception(failure);

        for (std::size_t k = 0; k < count; ++k) {
            const PathRecord& rec = batch[k];
            const std::size_t j = first + k;
            if (rec.diverged_at) {
                throw PathDivergence(*rec.diverged_at, j, substream_seed(cfg.master_seed, j));
            }
            ++folded;
            red.resid.add(folded, rec.resid);
            red.V.add(folded, rec.V);
            for (std::size_t i = 0; i < n_report; ++i) {
                red.lln_sum[i] += rec.lln[i];
                red.clt_sum[i] += rec.clt[i];
            }
        }
    }
    return red;
}

} // namespace

ErrorStats run_ensemble(const ModelSpec& m, const ScaleParams& s, const TimeGrid& g,
                        const EnsembleConfig& cfg) {
    const Reduction red = run_paths(m, s, g, cfg);
    const std::size_t n = red.times.size();
    const double paths = static_cast<double>(cfg.n_paths);

    ErrorStats out;
    out.times = red.times;
    out.mean_resid = red.resid.mean;
    out.std_error.resize(n);
    out.lln_moment.resize(n);
    out.clt_moment.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.std_error[i] = cfg.n_paths > 1 ? std::sqrt(red.resid.m2[i] / (paths - 1.0) / paths) : 0.0;
        out.lln_moment[i] = red.lln_sum[i] / paths;
        out.clt_moment[i] = red.clt_sum[i] / paths;
    }
    out.sup_mean_resid_abs = 0.0;
    out.min_mean_resid_abs = n > 1 ? std::numeric_limits<double>::infinity() : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = std::abs(out.mean_resid[i]);
        out.sup_mean_resid_abs = std::max(out.sup_mean_resid_abs, a);
        if (i > 0) out.min_mean_resid_abs = std::min(out.min_mean_resid_abs, a);
    }
    out.eps = s.eps;
    out.delta = s.delta;
    out.c = s.c;
    out.x0 = m.x0;
    out.n_paths = cfg.n_paths;
    out.p = cfg.p;
    return out;
}

GaussianCheck gaussian_check(const ModelSpec& m, const ScaleParams& s, const TimeGrid& g,
                             const EnsembleConfig& cfg) {
    const Reduction red = run_paths(m, s, g, cfg);
    const MomentCurves mc = moment_curves(m, s, g);
    const std::size_t n = red.times.size();
    const std::size_t stride = cfg.full_resolution ? 1 : report_stride(g.steps);
    const double paths = static_cast<double>(cfg.n_paths);

    auto standardized = [](double diff, double se) {
        if (diff == 0.0) return 0.0;
        return se > 0.0 ? diff / se : std::copysign(std::numeric_limits<double>::infinity(), diff);
    };

    GaussianCheck out;
    out.times = red.times;
    out.sample_mean = red.V.mean;
    out.sample_var.resize(n);
    out.mu.resize(n);
    out.xi2.resize(n);
    out.z_mean.resize(n);
    out.z_var.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.mu[i] = mc.mu[i * stride];
        out.xi2[i] = mc.xi2[i * stride];
        out.sample_var[i] = cfg.n_paths > 1 ? red.V.m2[i] / (paths - 1.0) : 0.0;
        out.z_mean[i] = standardized(out.sample_mean[i] - out.mu[i], std::sqrt(out.xi2[i] / paths));
        const double var_se = cfg.n_paths > 1 ? out.xi2[i] * std::sqrt(2.0 / (paths - 1.0)) : 0.0;
        out.z_var[i] = standardized(out.sample_var[i] - out.xi2[i], var_se);
    }
    return out;
}

} // namespace ssde
