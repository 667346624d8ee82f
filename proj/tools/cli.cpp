#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "ssde/csv.hpp"
#include "ssde/errors.hpp"
#include "ssde/integrate.hpp"
#include "ssde/model.hpp"
#include "ssde/montecarlo.hpp"
#include "ssde/rates.hpp"

namespace ssde::cli {

namespace {

double parse_scalar(const std::string& raw) {
    std::string text = raw;
    text.erase(std::remove_if(text.begin(), text.end(), [](unsigned char ch) { return std::isspace(ch); }),
               text.end());
    const auto caret = text.find('^');
    if (caret != std::string::npos) {
        const double base = parse_number(text.substr(0, caret));
        const double exponent = parse_number(text.substr(caret + 1));
        return std::pow(base, exponent);
    }
    return parse_number(text);
}

std::optional<double> power_of_two_exponent(const std::string& text) {
    if (text.rfind("2^", 0) != 0) return std::nullopt;
    const double e = parse_number(text.substr(2));
    if (e != std::round(e)) return std::nullopt;
    return e;
}

} // namespace

std::vector<double> parse_eps_list(const std::string& text) {
    std::vector<double> out;
    const auto range = text.find("..");
    if (range != std::string::npos) {
        const auto lo = power_of_two_exponent(text.substr(0, range));
        const auto hi = power_of_two_exponent(text.substr(range + 2));
        if (!lo || !hi) throw ConfigError("eps", "ranges must look like 2^-4..2^-7");
        const int a = static_cast<int>(*lo);
        const int b = static_cast<int>(*hi);
        const int dir = b >= a ? 1 : -1;
        for (int e = a;; e += dir) {
            out.push_back(std::ldexp(1.0, e));
            if (e == b) break;
        }
    } else {
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                out.push_back(parse_scalar(item));
            } catch (const ConfigError&) {
                throw ConfigError("eps", "cannot parse '" + item + "'");
            }
        }
    }
    if (out.empty()) throw ConfigError("eps", "no values given");
    return out;
}

namespace {

// Options shared by simulate / table / rates.
struct CommonOptions {
    std::string model = "example1";
    std::vector<double> x0;
    std::string eps = "2^-5";
    std::optional<double> delta;
    std::optional<double> delta_ratio;
    std::optional<double> delta_exponent;
    double horizon = 128.0;
    int steps_per_sample = 16;
    int paths = 300;
    int p = 1;
    std::uint64_t seed = 42;
    int threads = 0;
    std::string out_path;
    std::string format = "csv";
    std::string functional = "lln_sup";
    bool full_resolution = false;
};

void add_model(CLI::App* app, CommonOptions& o) {
    app->add_option("--model", o.model, "example1 | example2 | example3 | example4");
    app->add_option("--x0", o.x0, "initial condition(s); defaults to the model's tabulated values")
        ->delimiter(',');
}

void add_run(CLI::App* app, CommonOptions& o) {
    app->add_option("--horizon", o.horizon, "simulation horizon T");
    app->add_option("--steps-per-sample", o.steps_per_sample, "integrator steps per sampling period");
    app->add_option("--paths", o.paths, "Monte Carlo paths");
    app->add_option("--seed", o.seed, "master seed");
    app->add_option("--threads", o.threads, "worker cap (0 = all cores); output does not depend on it");
}

void add_config(CLI::App* app, std::string& path) {
    app->add_option("--config", path, "key = value configuration file (flags take precedence)");
}

bool has_flag(const std::vector<std::string>& args, const std::string& flag) {
    return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
        return a == flag || a.rfind(flag + "=", 0) == 0;
    });
}

// Replaces "--config FILE" after the subcommand with the file's entries as
// "--key=value" arguments, skipping keys already given on the command line.
// Entries may sit at top level or under a [subcommand] section.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
    if (args.empty()) return args;
    std::vector<std::string> rest;
    std::optional<std::string> file;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            file = args[++i];
        } else if (args[i].rfind("--config=", 0) == 0) {
            file = args[i].substr(9);
        } else {
            rest.push_back(args[i]);
        }
    }
    if (!file) return args;
    if (!std::filesystem::exists(*file)) throw ConfigError("config", "cannot read '" + *file + "'");

    std::vector<std::string> out{args.front()};
    for (const CLI::ConfigItem& item : CLI::ConfigINI().from_file(*file)) {
        if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == args.front())) continue;
        if (item.name == "++" || item.name == "--") continue;
        const std::string flag = "--" + item.name;
        if (has_flag(rest, flag)) continue;
        std::string value;
        for (const auto& v : item.inputs) value += (value.empty() ? "" : ",") + v;
        out.push_back(flag + "=" + value);
    }
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
}

TableFormat parse_format(const std::string& s) {
    if (s == "csv") return TableFormat::csv;
    if (s == "tsv") return TableFormat::tsv;
    throw ConfigError("format", "expected csv or tsv");
}

EnsembleConfig ensemble_config(const CommonOptions& o) {
    EnsembleConfig cfg;
    cfg.n_paths = o.paths;
    cfg.master_seed = o.seed;
    cfg.p = o.p;
    cfg.threads = o.threads;
    cfg.full_resolution = o.full_resolution;
    cfg.validate();
    return cfg;
}

std::vector<double> initial_conditions(const CommonOptions& o) {
    return o.x0.empty() ? builtin_initial_conditions(o.model) : o.x0;
}

void require_positive(double v, const char* field) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(field, "must be finite and > 0");
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("out", "cannot open '" + path.string() + "' for writing");
    return os;
}

std::filesystem::path summary_path(const std::filesystem::path& series) {
    std::filesystem::path p = series;
    const std::string ext = p.extension().string();
    p.replace_extension();
    p += ".summary" + (ext.empty() ? std::string(".csv") : ext);
    return p;
}

int cmd_simulate(const CommonOptions& o, std::ostream& out) {
    const ModelSpec base = builtin_model(o.model);
    const std::vector<double> eps_list = parse_eps_list(o.eps);
    if (eps_list.size() != 1) throw ConfigError("eps", "simulate takes a single value");
    const double eps = eps_list.front();
    require_positive(eps, "eps");
    if (o.delta && o.delta_ratio) throw ConfigError("delta", "give --delta or --delta-ratio, not both");
    const ScaleParams s = o.delta ? ScaleParams::make(eps, *o.delta)
                                  : ScaleParams::with_ratio(eps, o.delta_ratio.value_or(2.0));
    const TimeGrid g = TimeGrid::make(s.delta, o.horizon, o.steps_per_sample);
    const EnsembleConfig cfg = ensemble_config(o);
    const TableFormat fmt = parse_format(o.format);
    if (o.out_path.empty()) throw ConfigError("out", "an output path is required");
    if (o.x0.size() > 1) throw ConfigError("x0", "simulate takes a single value");
    const ModelSpec m = o.x0.empty() ? base : base.with_x0(o.x0.front());

    const ErrorStats stats = run_ensemble(m, s, g, cfg);
    const MomentCurves mc = moment_curves(m, s, g);
    const std::size_t stride = cfg.full_resolution ? 1 : report_stride(g.steps);
    std::vector<double> mu, xi2;
    for (std::size_t k = 0; k < stats.times.size(); ++k) {
        mu.push_back(mc.mu[k * stride]);
        xi2.push_back(mc.xi2[k * stride]);
    }

    const std::filesystem::path series = o.out_path;
    {
        auto os = open_output(series);
        write_series(os, stats, mu, xi2, fmt);
    }
    const SummaryEntries summary{
        {"model", m.name},
        {"x0", format_number(m.x0)},
        {"eps", format_number(s.eps)},
        {"delta", format_number(s.delta)},
        {"c", format_number(s.c)},
        {"horizon", format_number(g.horizon)},
        {"h", format_number(g.h)},
        {"steps_per_sample", std::to_string(g.steps_per_sample)},
        {"n_paths", std::to_string(cfg.n_paths)},
        {"p", std::to_string(cfg.p)},
        {"seed", std::to_string(cfg.master_seed)},
        {"sup_mean_resid_abs", format_number(stats.sup_mean_resid_abs)},
        {"min_mean_resid_abs", format_number(stats.min_mean_resid_abs)},
        {"sup_lln_moment", format_number(stats.sup_lln())},
        {"sup_clt_moment", format_number(stats.sup_clt())},
    };
    const auto summary_file = summary_path(series);
    {
        auto os = open_output(summary_file);
        write_summary(os, summary, fmt);
    }
    out << "wrote " << series.string() << " and " << summary_file.string() << "\n";
    return kOk;
}

std::vector<double> default_table_eps(const std::string& model) {
    if (model == "example3" || model == "example4") return {0.125, 0.0625, 0.03125};
    return {0.03125, 0.015625, 0.0078125};
}

int cmd_table(const CommonOptions& o, bool eps_given, std::ostream& out) {
    const ModelSpec base = builtin_model(o.model);
    const std::vector<double> eps_list = eps_given ? parse_eps_list(o.eps) : default_table_eps(o.model);
    for (double e : eps_list) require_positive(e, "eps");
    const double ratio = o.delta_ratio.value_or(2.0);
    require_positive(ratio, "delta_ratio");
    const EnsembleConfig cfg = ensemble_config(o);
    const std::vector<double> x0s = initial_conditions(o);
    for (double e : eps_list) TimeGrid::make(ratio * e, o.horizon, o.steps_per_sample);
    if (!o.out_path.empty()) std::filesystem::create_directories(o.out_path);

    std::map<TableKey, ErrorStats> results;
    for (double x0 : x0s) {
        const ModelSpec m = base.with_x0(x0);
        for (double eps : eps_list) {
            const ScaleParams s = ScaleParams::with_ratio(eps, ratio);
            const TimeGrid g = TimeGrid::make(s.delta, o.horizon, o.steps_per_sample);
            ErrorStats stats = run_ensemble(m, s, g, cfg);
            if (!o.out_path.empty()) {
                const auto file = std::filesystem::path(o.out_path) /
                                  (m.name + "_x0_" + format_number(x0) + "_eps_" + format_number(eps) + ".csv");
                auto os = open_output(file);
                os << "t,mean_resid,stderr\n";
                for (std::size_t i = 0; i < stats.times.size(); ++i) {
                    os << format_number(stats.times[i]) << ',' << format_number(stats.mean_resid[i]) << ','
                       << format_number(stats.std_error[i]) << '\n';
                }
            }
            results.emplace(TableKey{x0, eps}, std::move(stats));
        }
    }
    out << "model " << base.name << ", " << cfg.n_paths << " paths, T = " << format_number(o.horizon)
        << ", delta = " << format_number(ratio) << " eps\n";
    out << format_table(render_table(results));
    return kOk;
}

int cmd_rates(const CommonOptions& o, std::ostream& out) {
    const ModelSpec base = builtin_model(o.model);
    LadderSpec ladder;
    ladder.eps_values = parse_eps_list(o.eps);
    if (o.delta_ratio && o.delta_exponent) {
        throw ConfigError("delta_exponent", "give --delta-ratio or --delta-exponent, not both");
    }
    if (o.delta_exponent) {
        ladder.delta_rule = DeltaExponent{*o.delta_exponent};
    } else {
        ladder.delta_rule = DeltaRatio{o.delta_ratio.value_or(2.0)};
    }
    ladder.per_rung = ensemble_config(o);
    ladder.validate();
    const Functional functional = parse_functional(o.functional);
    const TableFormat fmt = parse_format(o.format);
    if (o.x0.size() > 1) throw ConfigError("x0", "rates takes a single value");
    const ModelSpec m = o.x0.empty() ? base : base.with_x0(o.x0.front());
    const GridTemplate grid{o.horizon, o.steps_per_sample};
    for (std::size_t k = 0; k < ladder.eps_values.size(); ++k) {
        TimeGrid::make(ladder.rung_scales(k).delta, grid.horizon, grid.steps_per_sample);
    }
    if (ladder.eps_values.size() < 2) throw FitError("rate fit needs a ladder of at least 2 eps values");

    const std::vector<RatePoint> points = run_ladder(m, ladder, grid, functional);

    std::ostringstream table;
    const char sep = separator(fmt);
    table << "eps" << sep << "delta" << sep << to_string(functional) << '\n';
    for (std::size_t k = 0; k < points.size(); ++k) {
        table << format_number(points[k].eps) << sep << format_number(ladder.rung_scales(k).delta) << sep
              << format_number(points[k].error) << '\n';
    }
    if (o.out_path.empty()) {
        out << table.str();
    } else {
        auto os = open_output(o.out_path);
        os << table.str();
    }

    const RateFit fit = fit_rate(points);
    out << "functional " << to_string(functional) << " (p = " << o.p << ")\n";
    out << "slope " << format_number(fit.slope) << "\n";
    out << "intercept " << format_number(fit.intercept) << "\n";
    out << "r_squared " << format_number(fit.r_squared) << "\n";
    return kOk;
}

struct CheckOptions {
    std::string model = "example1";
    std::optional<double> x0;
    double lo = -3.0;
    double hi = 3.0;
    int n_probe = 601;
    double horizon = 128.0;
};

int cmd_check(const CheckOptions& o, std::ostream& out) {
    ModelSpec m = builtin_model(o.model);
    if (o.x0) m = m.with_x0(*o.x0);
    const DerivativeCheck dc = check_derivatives(m, std::vector<double>{o.lo, 0.5 * (o.lo + o.hi), o.hi}, 1e-5);
    const AssumptionReport r = probe_assumptions(m, {o.lo, o.hi}, o.n_probe, o.horizon);

    char buf[128];
    auto line = [&](const char* key, double v) {
        std::snprintf(buf, sizeof buf, "%-22s %.6g\n", key, v);
        out << buf;
    };
    out << "model                  " << m.name << " (x0 = " << format_number(m.x0) << ")\n";
    out << "probe box              [" << format_number(o.lo) << ", " << format_number(o.hi) << "], "
        << o.n_probe << " points, horizon " << format_number(o.horizon) << "\n";
    line("lambda_hat", r.lambda_hat);
    line("L_kappa_hat", r.L_kappa_hat);
    line("L_sigma_hat", r.L_sigma_hat);
    line("gamma_hat", r.gamma_hat);
    line("alpha_hat", r.alpha_hat);
    line("beta_hat", r.beta_hat);
    line("margin", r.margin);
    line("kernel_sup_m1", r.kernel_sup[0]);
    line("kernel_sup_m2", r.kernel_sup[1]);
    line("max_trajectory_rate", r.max_trajectory_rate);
    line("derivative_deviation", dc.max_deviation);
    if (r.expansive_region) {
        std::snprintf(buf, sizeof buf, "expansive_region       [%.6g, %.6g] (Df > 0, not contractive)\n",
                      r.expansive_region->lo, r.expansive_region->hi);
        out << buf;
    } else {
        out << "expansive_region       none\n";
    }
    if (r.max_trajectory_rate < 0.0) {
        out << "trajectory             Df + Dkappa < 0 along the closed-loop path\n";
    }
    out << "status                 " << (r.ok() && dc.pass ? "OK" : "WARN") << "\n";
    return kOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sampled-feedback small-noise SDE simulator", "ssde"};
    app.require_subcommand(1);

    CommonOptions sim, tab, rat;
    CheckOptions chk;
    std::string config_path;

    auto* simulate = app.add_subcommand("simulate", "run one ensemble and write time series + summary");
    add_model(simulate, sim);
    simulate->add_option("--eps", sim.eps, "noise size");
    simulate->add_option("--delta", sim.delta, "sampling period");
    simulate->add_option("--delta-ratio", sim.delta_ratio, "delta = ratio * eps (default 2)");
    add_run(simulate, sim);
    simulate->add_option("--p", sim.p, "moment order");
    simulate->add_option("--out", sim.out_path, "time-series output file");
    simulate->add_option("--format", sim.format, "csv | tsv");
    simulate->add_flag("--full-resolution", sim.full_resolution, "report every grid point");
    add_config(simulate, config_path);

    auto* table = app.add_subcommand("table", "max/min mean residual table over an eps list");
    add_model(table, tab);
    auto* table_eps = table->add_option("--eps", tab.eps, "eps list or 2^-a..2^-b range");
    table->add_option("--delta-ratio", tab.delta_ratio, "delta = ratio * eps (default 2)");
    add_run(table, tab);
    table->add_option("--out", tab.out_path, "directory for per-panel plot CSV files");
    add_config(table, config_path);

    auto* rates = app.add_subcommand("rates", "fit the empirical order of an error functional in eps");
    add_model(rates, rat);
    rates->add_option("--eps", rat.eps, "eps ladder, e.g. 2^-4..2^-7");
    rates->add_option("--delta-ratio", rat.delta_ratio, "delta = ratio * eps (c = ratio)");
    rates->add_option("--delta-exponent", rat.delta_exponent, "delta = eps^a, a > 1 (c = 0)");
    rates->add_option("--functional", rat.functional, "lln_sup | clt_sup | mean_resid_sup");
    rates->add_option("--p", rat.p, "moment order");
    add_run(rates, rat);
    rates->add_option("--out", rat.out_path, "per-rung CSV file (default: stdout)");
    rates->add_option("--format", rat.format, "csv | tsv");
    add_config(rates, config_path);

    auto* check = app.add_subcommand("check", "probe the standing assumptions for a model");
    check->add_option("--model", chk.model, "example1 | example2 | example3 | example4");
    check->add_option("--x0", chk.x0, "initial condition for the trajectory probes");
    check->add_option("--probe-lo", chk.lo, "probe box lower end");
    check->add_option("--probe-hi", chk.hi, "probe box upper end");
    check->add_option("--n-probe", chk.n_probe, "probe points");
    check->add_option("--horizon", chk.horizon, "trajectory horizon for the kernel integral");
    add_config(check, config_path);

    try {
        const std::vector<std::string> expanded = expand_config(args);
        std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfig;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfig;
    }

    try {
        if (*simulate) return cmd_simulate(sim, out);
        if (*table) return cmd_table(tab, table_eps->count() > 0, out);
        if (*rates) return cmd_rates(rat, out);
        if (*check) return cmd_check(chk, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const PathDivergence& e) {
        err << "divergence: " << e.what() << "\n";
        return kDivergence;
    } catch (const FitError& e) {
        err << "statistics error: " << e.what() << "\n";
        return kStatistics;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kConfig;
    }
    return kConfig;
}

} // namespace ssde::cli
