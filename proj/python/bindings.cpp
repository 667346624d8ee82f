#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "ssde/errors.hpp"
#include "ssde/integrate.hpp"
#include "ssde/model.hpp"
#include "ssde/montecarlo.hpp"
#include "ssde/rates.hpp"

namespace py = pybind11;
using namespace ssde;

namespace {

py::array_t<double> array(const std::vector<double>& v) {
    return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

ModelSpec model_for(const std::string& name, std::optional<double> x0) {
    const ModelSpec m = builtin_model(name);
    return x0 ? m.with_x0(*x0) : m;
}

// delta wins over delta_ratio when both are given.
ScaleParams scales_for(double eps, std::optional<double> delta, double delta_ratio) {
    return delta ? ScaleParams::make(eps, *delta) : ScaleParams::with_ratio(eps, delta_ratio);
}

py::dict stats_dict(const ErrorStats& st) {
    py::dict d;
    d["t"] = array(st.times);
    d["mean_resid"] = array(st.mean_resid);
    d["stderr"] = array(st.std_error);
    d["lln_moment"] = array(st.lln_moment);
    d["clt_moment"] = array(st.clt_moment);
    d["sup_mean_resid_abs"] = st.sup_mean_resid_abs;
    d["min_mean_resid_abs"] = st.min_mean_resid_abs;
    d["sup_lln_moment"] = st.sup_lln();
    d["sup_clt_moment"] = st.sup_clt();
    d["eps"] = st.eps;
    d["delta"] = st.delta;
    d["c"] = st.c;
    d["x0"] = st.x0;
    d["n_paths"] = st.n_paths;
    d["p"] = st.p;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, mod) {
    mod.doc() = "Simulation core for small-noise SDEs with sample-and-hold feedback.";

    auto base = py::register_exception<Error>(mod, "SsdeError", PyExc_RuntimeError);
    py::register_exception<ConfigError>(mod, "ConfigError", PyExc_ValueError);
    py::register_exception<ProbeError>(mod, "ProbeError", base.ptr());
    py::register_exception<PathDivergence>(mod, "PathDivergence", base.ptr());
    py::register_exception<FitError>(mod, "FitError", base.ptr());

    mod.def("builtin_model_names", [] {
        std::vector<std::string> out;
        for (auto n : builtin_model_names()) out.emplace_back(n);
        return out;
    });

    mod.def(
        "simulate_path",
        [](const std::string& model, double eps, std::optional<double> delta, double delta_ratio, double horizon,
           int steps_per_sample, std::uint64_t seed, std::size_t path, std::optional<double> x0) {
            const ModelSpec m = model_for(model, x0);
            const ScaleParams s = scales_for(eps, delta, delta_ratio);
            const TimeGrid g = TimeGrid::make(s.delta, horizon, steps_per_sample);
            PathBundle b;
            {
                py::gil_scoped_release release;
                b = simulate_path(m, s, g, path_normals(seed, path, g.steps));
            }
            std::vector<double> t(g.points());
            for (std::size_t i = 0; i < t.size(); ++i) t[i] = g.time(i);
            py::dict d;
            d["t"] = array(t);
            d["X"] = array(b.X);
            d["x"] = array(b.x_det);
            d["Z_eps"] = array(b.Z_eps);
            d["Z_lim"] = array(b.Z_lim);
            d["V"] = array(b.V);
            return d;
        },
        py::arg("model"), py::arg("eps"), py::arg("delta") = py::none(), py::arg("delta_ratio") = 2.0,
        py::arg("horizon") = 8.0, py::arg("steps_per_sample") = 16, py::arg("seed") = 42, py::arg("path") = 0,
        py::arg("x0") = py::none(),
        "One coupled path: pre-limit X, closed-loop x, fluctuations and V = x + eps Z_lim.");

    mod.def(
        "run_ensemble",
        [](const std::string& model, double eps, std::optional<double> delta, double delta_ratio, double horizon,
           int steps_per_sample, int n_paths, std::uint64_t seed, int p, int threads, bool full_resolution,
           std::optional<double> x0) {
            const ModelSpec m = model_for(model, x0);
            const ScaleParams s = scales_for(eps, delta, delta_ratio);
            const TimeGrid g = TimeGrid::make(s.delta, horizon, steps_per_sample);
            const EnsembleConfig cfg{n_paths, seed, p, threads, full_resolution};
            ErrorStats st;
            {
                py::gil_scoped_release release;
                st = run_ensemble(m, s, g, cfg);
            }
            return stats_dict(st);
        },
        py::arg("model"), py::arg("eps"), py::arg("delta") = py::none(), py::arg("delta_ratio") = 2.0,
        py::arg("horizon") = 128.0, py::arg("steps_per_sample") = 16, py::arg("n_paths") = 300,
        py::arg("seed") = 42, py::arg("p") = 1, py::arg("threads") = 0, py::arg("full_resolution") = false,
        py::arg("x0") = py::none(), "Monte Carlo error statistics of one (eps, delta) configuration.");

    mod.def(
        "moment_curves",
        [](const std::string& model, double eps, std::optional<double> delta, double delta_ratio, double horizon,
           int steps_per_sample, std::optional<double> x0) {
            const ModelSpec m = model_for(model, x0);
            const ScaleParams s = scales_for(eps, delta, delta_ratio);
            const TimeGrid g = TimeGrid::make(s.delta, horizon, steps_per_sample);
            const MomentCurves mc = moment_curves(m, s, g);
            std::vector<double> t(g.points());
            for (std::size_t i = 0; i < t.size(); ++i) t[i] = g.time(i);
            py::dict d;
            d["t"] = array(t);
            d["mu"] = array(mc.mu);
            d["xi2"] = array(mc.xi2);
            return d;
        },
        py::arg("model"), py::arg("eps"), py::arg("delta") = py::none(), py::arg("delta_ratio") = 2.0,
        py::arg("horizon") = 8.0, py::arg("steps_per_sample") = 16, py::arg("x0") = py::none(),
        "Mean mu_t and variance xi_t^2 of the Gaussian approximation.");

    mod.def(
        "gaussian_check",
        [](const std::string& model, double eps, std::optional<double> delta, double delta_ratio, double horizon,
           int steps_per_sample, int n_paths, std::uint64_t seed, std::optional<double> x0) {
            const ModelSpec m = model_for(model, x0);
            const ScaleParams s = scales_for(eps, delta, delta_ratio);
            const TimeGrid g = TimeGrid::make(s.delta, horizon, steps_per_sample);
            EnsembleConfig cfg;
            cfg.n_paths = n_paths;
            cfg.master_seed = seed;
            GaussianCheck gc;
            {
                py::gil_scoped_release release;
                gc = gaussian_check(m, s, g, cfg);
            }
            py::dict d;
            d["t"] = array(gc.times);
            d["sample_mean"] = array(gc.sample_mean);
            d["sample_var"] = array(gc.sample_var);
            d["mu"] = array(gc.mu);
            d["xi2"] = array(gc.xi2);
            d["z_mean"] = array(gc.z_mean);
            d["z_var"] = array(gc.z_var);
            d["max_abs_z"] = gc.max_abs_z();
            return d;
        },
        py::arg("model"), py::arg("eps"), py::arg("delta") = py::none(), py::arg("delta_ratio") = 2.0,
        py::arg("horizon") = 16.0, py::arg("steps_per_sample") = 16, py::arg("n_paths") = 10000,
        py::arg("seed") = 42, py::arg("x0") = py::none());

    mod.def(
        "probe_assumptions",
        [](const std::string& model, double lo, double hi, int n_probe, double horizon, std::optional<double> x0) {
            const AssumptionReport r = probe_assumptions(model_for(model, x0), {lo, hi}, n_probe, horizon);
            py::dict d;
            d["lambda_hat"] = r.lambda_hat;
            d["L_kappa_hat"] = r.L_kappa_hat;
            d["L_sigma_hat"] = r.L_sigma_hat;
            d["gamma_hat"] = r.gamma_hat;
            d["alpha_hat"] = r.alpha_hat;
            d["beta_hat"] = r.beta_hat;
            d["margin"] = r.margin;
            d["kernel_sup"] = py::make_tuple(r.kernel_sup[0], r.kernel_sup[1]);
            d["max_trajectory_rate"] = r.max_trajectory_rate;
            if (r.expansive_region) {
                d["expansive_region"] = py::make_tuple(r.expansive_region->lo, r.expansive_region->hi);
            } else {
                d["expansive_region"] = py::none();
            }
            d["ok"] = r.ok();
            return d;
        },
        py::arg("model"), py::arg("lo") = -3.0, py::arg("hi") = 3.0, py::arg("n_probe") = 601,
        py::arg("horizon") = 128.0, py::arg("x0") = py::none());

    mod.def(
        "fit_rate",
        [](const std::vector<double>& eps, const std::vector<double>& errors) {
            if (eps.size() != errors.size()) throw ConfigError("errors", "length differs from eps");
            std::vector<RatePoint> pts;
            for (std::size_t i = 0; i < eps.size(); ++i) pts.push_back({eps[i], errors[i]});
            const RateFit fit = fit_rate(pts);
            py::dict d;
            d["slope"] = fit.slope;
            d["intercept"] = fit.intercept;
            d["r_squared"] = fit.r_squared;
            return d;
        },
        py::arg("eps"), py::arg("errors"), "Least-squares order of log(error) against log(eps).");

    mod.def(
        "run_ladder",
        [](const std::string& model, const std::vector<double>& eps, std::optional<double> delta_ratio,
           std::optional<double> delta_exponent, const std::string& functional, int n_paths, std::uint64_t seed,
           int p, double horizon, int steps_per_sample, std::optional<double> x0) {
            if (delta_ratio && delta_exponent) {
                throw ConfigError("delta_exponent", "give delta_ratio or delta_exponent, not both");
            }
            LadderSpec ladder;
            ladder.eps_values = eps;
            if (delta_exponent) {
                ladder.delta_rule = DeltaExponent{*delta_exponent};
            } else {
                ladder.delta_rule = DeltaRatio{delta_ratio.value_or(2.0)};
            }
            ladder.per_rung.n_paths = n_paths;
            ladder.per_rung.master_seed = seed;
            ladder.per_rung.p = p;
            const ModelSpec m = model_for(model, x0);
            const Functional f = parse_functional(functional);
            std::vector<RatePoint> pts;
            {
                py::gil_scoped_release release;
                pts = run_ladder(m, ladder, GridTemplate{horizon, steps_per_sample}, f);
            }
            std::vector<double> e, err;
            for (const auto& pt : pts) {
                e.push_back(pt.eps);
                err.push_back(pt.error);
            }
            py::dict d;
            d["eps"] = array(e);
            d["error"] = array(err);
            return d;
        },
        py::arg("model"), py::arg("eps"), py::arg("delta_ratio") = py::none(), py::arg("delta_exponent") = py::none(),
        py::arg("functional") = "lln_sup", py::arg("n_paths") = 300, py::arg("seed") = 42, py::arg("p") = 1,
        py::arg("horizon") = 128.0, py::arg("steps_per_sample") = 16, py::arg("x0") = py::none(),
        "Error functional per rung of an eps ladder; rung k uses seed + k.");
}
