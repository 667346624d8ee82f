#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "ssde/montecarlo.hpp"

namespace ssde {

/// delta = ratio * eps (c = ratio).
struct DeltaRatio {
    double ratio = 2.0;
};
/// delta = eps^exponent with exponent > 1 (c = 0).
struct DeltaExponent {
    double exponent = 1.5;
};
using DeltaRule = std::variant<DeltaRatio, DeltaExponent>;

struct LadderSpec {
    std::vector<double> eps_values;  ///< strictly decreasing, > 0
    DeltaRule delta_rule = DeltaRatio{};
    EnsembleConfig per_rung;

    void validate() const;
    ScaleParams rung_scales(std::size_t rung) const;
};

/// Horizon and steps-per-sample shared by every rung; h follows delta.
struct GridTemplate {
    double horizon = 128.0;
    int steps_per_sample = 16;
};

enum class Functional { lln_sup, clt_sup, mean_resid_sup };

Functional parse_functional(std::string_view name);
std::string_view to_string(Functional f);
double functional_value(const ErrorStats& stats, Functional f);

struct RatePoint {
    double eps = 0.0;
    double error = 0.0;
};

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::vector<RatePoint> points;
};

/// One ensemble per rung; rung k uses master_seed + k.
std::vector<RatePoint> run_ladder(const ModelSpec& m, const LadderSpec& ladder,
                                  const GridTemplate& grid, Functional functional);

/// Ordinary least squares of log(error) on log(eps). Throws FitError with
/// fewer than two points or a nonpositive error.
RateFit fit_rate(const std::vector<RatePoint>& points);

struct TableRow {
    double x0 = 0.0;
    double eps = 0.0;
    double delta = 0.0;
    double max_error = 0.0;
    double min_error = 0.0;
};

using TableKey = std::pair<double, double>;  // (x0, eps)

/// Rows grouped by x0 ascending, eps descending within a group.
/// Throws ConfigError on an empty map.
std::vector<TableRow> render_table(const std::map<TableKey, ErrorStats>& results);

/// Plain-text table, numbers in scientific notation with 4 significant digits.
std::string format_table(const std::vector<TableRow>& rows);

} // namespace ssde
