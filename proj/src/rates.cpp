#include "ssde/rates.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ssde/errors.hpp"

namespace ssde {

void LadderSpec::validate() const {
    if (eps_values.empty()) throw ConfigError("eps", "ladder needs at least one value");
    for (std::size_t i = 0; i < eps_values.size(); ++i) {
        if (!(eps_values[i] > 0.0)) throw ConfigError("eps", "ladder values must be > 0");
        if (i > 0 && !(eps_values[i] < eps_values[i - 1])) {
            throw ConfigError("eps", "ladder values must be strictly decreasing");
        }
    }
    if (const auto* r = std::get_if<DeltaRatio>(&delta_rule); r && !(r->ratio > 0.0)) {
        throw ConfigError("delta_ratio", "must be > 0");
    }
    if (const auto* e = std::get_if<DeltaExponent>(&delta_rule); e && !(e->exponent > 1.0)) {
        throw ConfigError("delta_exponent", "must be > 1");
    }
    per_rung.validate();
}

ScaleParams LadderSpec::rung_scales(std::size_t rung) const {
    const double eps = eps_values.at(rung);
    if (const auto* r = std::get_if<DeltaRatio>(&delta_rule)) return ScaleParams::with_ratio(eps, r->ratio);
    const auto& e = std::get<DeltaExponent>(delta_rule);
    return ScaleParams::make(eps, std::pow(eps, e.exponent), 0.0);
}

Functional parse_functional(std::string_view name) {
    if (name == "lln_sup") return Functional::lln_sup;
    if (name == "clt_sup") return Functional::clt_sup;
    if (name == "mean_resid_sup") return Functional::mean_resid_sup;
    throw ConfigError("functional", "expected lln_sup, clt_sup or mean_resid_sup");
}

std::string_view to_string(Functional f) {
    switch (f) {
        case Functional::lln_sup: return "lln_sup";
        case Functional::clt_sup: return "clt_sup";
        case Functional::mean_resid_sup: return "mean_resid_sup";
    }
    return "?";
}

double functional_value(const ErrorStats& stats, Functional f) {
    switch (f) {
        case Functional::lln_sup: return stats.sup_lln();
        case Functional::clt_sup: return stats.sup_clt();
        case Functional::mean_resid_sup: return stats.sup_mean_resid_abs;
    }
    return 0.0;
}

std::vector<RatePoint> run_ladder(const ModelSpec& m, const LadderSpec& ladder,
                                  const GridTemplate& grid, Functional functional) {
    ladder.validate();
    std::vector<RatePoint> out;
    out.reserve(ladder.eps_values.size());
    for (std::size_t k = 0; k < ladder.eps_values.size(); ++k) {
        const ScaleParams s = ladder.rung_scales(k);
        const TimeGrid g = TimeGrid::make(s.delta, grid.horizon, grid.steps_per_sample);
        EnsembleConfig cfg = ladder.per_rung;
        cfg.master_seed += k;
        try {
            const ErrorStats stats = run_ensemble(m, s, g, cfg);
            out.push_back({s.eps, functional_value(stats, functional)});
        } catch (const PathDivergence& e) {
            throw PathDivergence("rung " + std::to_string(k) + " (eps " + std::to_string(s.eps) + ")", e);
        }
    }
    return out;
}

RateFit fit_rate(const std::vector<RatePoint>& points) {
    if (points.size() < 2) throw FitError("rate fit needs at least 2 points");
    for (const auto& pt : points) {
        if (!(pt.eps > 0.0)) throw FitError("rate fit: eps must be > 0");
        if (!(pt.error > 0.0)) {
            throw FitError("rate fit: nonpositive error at eps " + std::to_string(pt.eps) +
                           " (Monte Carlo noise floor?)");
        }
    }
    const double n = static_cast<double>(points.size());
    double mx = 0.0, my = 0.0;
    for (const auto& pt : points) {
        mx += std::log(pt.eps);
        my += std::log(pt.error);
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& pt : points) {
        const double dx = std::log(pt.eps) - mx;
        const double dy = std::log(pt.error) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw FitError("rate fit: eps values must differ");

    RateFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
    fit.points = points;
    return fit;
}

std::vector<TableRow> render_table(const std::map<TableKey, ErrorStats>& results) {
    if (results.empty()) throw ConfigError("results", "table needs at least one entry");
    std::vector<TableRow> rows;
    rows.reserve(results.size());
    for (const auto& [key, stats] : results) {
        rows.push_back({key.first, key.second, stats.delta, stats.sup_mean_resid_abs,
                        stats.min_mean_resid_abs});
    }
    std::sort(rows.begin(), rows.end(), [](const TableRow& a, const TableRow& b) {
        if (a.x0 != b.x0) return a.x0 < b.x0;
        return a.eps > b.eps;
    });
    return rows;
}

namespace {

std::string sci4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

std::string general(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

} // namespace

std::string format_table(const std::vector<TableRow>& rows) {
    std::string out;
    char line[160];
    bool first = true;
    double section = 0.0;
    for (const auto& r : rows) {
        if (first || r.x0 != section) {
            if (!first) out += '\n';
            out += "Initial condition x0 = " + general(r.x0) + "\n";
            std::snprintf(line, sizeof line, "%-12s %-12s %-16s %-16s\n", "eps", "delta",
                          "|Maximum Error|", "|Minimum Error|");
            out += line;
            section = r.x0;
            first = false;
        }
        std::snprintf(line, sizeof line, "%-12s %-12s %-16s %-16s\n", sci4(r.eps).c_str(),
                      sci4(r.delta).c_str(), sci4(r.max_error).c_str(), sci4(r.min_error).c_str());
        out += line;
    }
    return out;
}

} // namespace ssde
