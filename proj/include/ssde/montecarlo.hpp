#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ssde/integrate.hpp"
#include "ssde/model.hpp"

namespace ssde {

struct EnsembleConfig {
    int n_paths = 300;
    std::uint64_t master_seed = 42;
    int p = 1;
    /// Worker cap; 0 means hardware concurrency. Results never depend on it.
    int threads = 0;
    /// Report every grid point instead of thinning to <= kMaxReportPoints.
    bool full_resolution = false;

    void validate() const;
};

inline constexpr std::size_t kMaxReportPoints = 4096;

/// Uniform stride so that at most max_points grid indices are reported.
/// Prefers a divisor of steps (keeps t = T on the grid) when one exists within
/// a factor of two of the minimal stride.
std::size_t report_stride(std::size_t steps, std::size_t max_points = kMaxReportPoints);

struct ErrorStats {
    std::vector<double> times;
    std::vector<double> mean_resid;  ///< E_n[X - x - eps Z_lim]
    std::vector<double> std_error;   ///< standard error of mean_resid (`stderr` is a libc macro)
    std::vector<double> lln_moment;  ///< E_n|X - x|^p
    std::vector<double> clt_moment;  ///< E_n|Z_eps - Z_lim|^p
    double sup_mean_resid_abs = 0.0;
    double min_mean_resid_abs = 0.0;  ///< excludes t = 0

    double eps = 0.0;
    double delta = 0.0;
    double c = 0.0;
    double x0 = 0.0;
    int n_paths = 0;
    int p = 1;

    double sup_lln() const;
    double sup_clt() const;
};

/// Per-time standardized discrepancies of the ensemble mean / variance of
/// V = x + eps Z_lim against the Gaussian-approximation moments.
struct GaussianCheck {
    std::vector<double> times;
    std::vector<double> sample_mean;
    std::vector<double> sample_var;
    std::vector<double> mu;
    std::vector<double> xi2;
    std::vector<double> z_mean;
    std::vector<double> z_var;

    double max_abs_z() const;
};

/// Normals for path j of an ensemble seeded with master_seed.
std::vector<double> path_normals(std::uint64_t master_seed, std::size_t j, std::size_t count);

ErrorStats run_ensemble(const ModelSpec& m, const ScaleParams& s, const TimeGrid& g,
                        const EnsembleConfig& cfg);

GaussianCheck gaussian_check(const ModelSpec& m, const ScaleParams& s, const TimeGrid& g,
                             const EnsembleConfig& cfg);

} // namespace ssde
