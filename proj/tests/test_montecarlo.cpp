#include <doctest.h>

#include <cmath>
#include <vector>

#include "ssde/errors.hpp"
#include "ssde/montecarlo.hpp"
#include "ssde/rng.hpp"

using namespace ssde;

namespace {

bool same(const ErrorStats& a, const ErrorStats& b) {
    return a.times == b.times && a.mean_resid == b.mean_resid && a.std_error == b.std_error &&
           a.lln_moment == b.lln_moment && a.clt_moment == b.clt_moment &&
           a.sup_mean_resid_abs == b.sup_mean_resid_abs && a.min_mean_resid_abs == b.min_mean_resid_abs;
}

} // namespace

TEST_CASE("report stride") {
    CHECK(report_stride(100) == 1);
    CHECK(report_stride(4095) == 1);
    CHECK(report_stride(4096) == 2);
    CHECK(report_stride(131072) == 64);
    CHECK(report_stride(131072) * 4095 >= 131072);
    for (std::size_t steps : {4097u, 10007u, 65536u, 2000000u}) {
        const std::size_t s = report_stride(steps);
        CHECK(steps / s + 1 <= kMaxReportPoints);
    }
}

TEST_CASE("config validation") {
    EnsembleConfig cfg;
    cfg.n_paths = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.n_paths = 1;
    cfg.p = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    const ModelSpec m = builtin_model("example3");
    const ScaleParams s = ScaleParams::make(0.0, 0.25);
    const TimeGrid g = TimeGrid::make(0.25, 1.0, 2);
    CHECK_THROWS_AS(run_ensemble(m, s, g, EnsembleConfig{}), ConfigError);
}

TEST_CASE("noise-free model is deterministic and seed independent") {
    ModelSpec m = builtin_model("example1");
    m.sigma = [](double) { return 0.0; };
    const ScaleParams s = ScaleParams::with_ratio(0.0625, 2.0);
    const TimeGrid g = TimeGrid::make(s.delta, 8.0, 8);
    EnsembleConfig a{.n_paths = 4, .master_seed = 1, .p = 1};
    EnsembleConfig b{.n_paths = 4, .master_seed = 999, .p = 1};
    const ErrorStats x = run_ensemble(m, s, g, a);
    const ErrorStats y = run_ensemble(m, s, g, b);
    CHECK(x.mean_resid == y.mean_resid);
    for (std::size_t i = 0; i < x.times.size(); ++i) {
        CHECK(std::isfinite(x.mean_resid[i]));
        CHECK(x.std_error[i] == 0.0);
    }
    CHECK(x.sup_mean_resid_abs > 0.0);
}

TEST_CASE("error stats identities") {
    const ModelSpec m = builtin_model("example1");
    const ScaleParams s = ScaleParams::with_ratio(0.0625, 2.0);
    const TimeGrid g = TimeGrid::make(s.delta, 4.0, 8);
    const ErrorStats st = run_ensemble(m, s, g, {.n_paths = 50, .master_seed = 5, .p = 2});
    double sup = 0.0, lo = 1e300;
    for (std::size_t i = 0; i < st.times.size(); ++i) {
        sup = std::max(sup, std::abs(st.mean_resid[i]));
        if (i > 0) lo = std::min(lo, std::abs(st.mean_resid[i]));
        CHECK(st.lln_moment[i] >= 0.0);
        CHECK(st.clt_moment[i] >= 0.0);
    }
    CHECK(st.sup_mean_resid_abs == sup);
    CHECK(st.min_mean_resid_abs == lo);
    CHECK(st.mean_resid[0] == 0.0);
    CHECK(st.times.front() == 0.0);
    CHECK(st.times.back() == 4.0);
    CHECK(st.eps == s.eps);
    CHECK(st.delta == s.delta);
    CHECK(st.x0 == m.x0);
}

TEST_CASE("ensemble is independent of the worker count") {
    const ModelSpec m = builtin_model("example2", true);
    const ScaleParams s = ScaleParams::with_ratio(0.0625, 2.0);
    const TimeGrid g = TimeGrid::make(s.delta, 4.0, 8);
    EnsembleConfig cfg{.n_paths = 600, .master_seed = 77, .p = 2};
    cfg.threads = 1;
    const ErrorStats one = run_ensemble(m, s, g, cfg);
    cfg.threads = 3;
    const ErrorStats three = run_ensemble(m, s, g, cfg);
    cfg.threads = 8;
    const ErrorStats eight = run_ensemble(m, s, g, cfg);
    CHECK(same(one, three));
    CHECK(same(one, eight));
}

TEST_CASE("moments are accumulated per path from common random numbers") {
    const ModelSpec m = builtin_model("example4");
    const ScaleParams s = ScaleParams::with_ratio(0.125, 2.0);
    const TimeGrid g = TimeGrid::make(s.delta, 2.0, 4);
    const EnsembleConfig cfg{.n_paths = 3, .master_seed = 31, .p = 3, .full_resolution = true};
    const ErrorStats st = run_ensemble(m, s, g, cfg);

    std::vector<double> lln(g.points(), 0.0), clt(g.points(), 0.0), resid(g.points(), 0.0);
    for (std::size_t j = 0; j < 3; ++j) {
        const PathBundle b = simulate_path(m, s, g, path_normals(31, j, g.steps));
        for (std::size_t i = 0; i < g.points(); ++i) {
            lln[i] += std::pow(std::abs(b.X[i] - b.x_det[i]), 3) / 3.0;
            clt[i] += std::pow(std::abs(b.Z_eps[i] - b.Z_lim[i]), 3) / 3.0;
            resid[i] += (b.X[i] - b.V[i]) / 3.0;
        }
    }
    REQUIRE(st.times.size() == g.points());
    for (std::size_t i = 0; i < g.points(); ++i) {
        CHECK(st.lln_moment[i] == doctest::Approx(lln[i]).epsilon(1e-9));
        CHECK(st.clt_moment[i] == doctest::Approx(clt[i]).epsilon(1e-9));
        CHECK(st.mean_resid[i] == doctest::Approx(resid[i]).epsilon(1e-9).scale(1e-12));
    }
}

TEST_CASE("divergence aborts the ensemble with its coordinates") {
    // Stable closed-loop path at 0; noise kicks the paths over the unstable cubic.
    ModelSpec m = builtin_model("example1");
    m.f = [](double x) { return -x + x * x * x; };
    m.Df = [](double x) { return -1.0 + 3 * x * x; };
    m.kappa = [](double) { return 0.0; };
    m.Dkappa = [](double) { return 0.0; };
    m.x0 = 0.0;
    const ScaleParams s = ScaleParams::with_ratio(1.0, 0.5);
    const TimeGrid g = TimeGrid::make(s.delta, 256.0, 1);
    try {
        run_ensemble(m, s, g, {.n_paths = 8, .master_seed = 3});
        FAIL("expected divergence");
    } catch (const PathDivergence& e) {
        CHECK(e.step() > 0);
        CHECK(e.path() < 8);
        CHECK(e.seed() == substream_seed(3, e.path()));
        CHECK(std::string(e.what()).find("diverged") != std::string::npos);
    }
}

TEST_CASE("gaussian check") {
    SUBCASE("t = 0 is exact") {
        const ModelSpec m = builtin_model("example1");
        const ScaleParams s = ScaleParams::with_ratio(0.0625, 2.0);
        const TimeGrid g = TimeGrid::make(s.delta, 2.0, 8);
        const GaussianCheck gc = gaussian_check(m, s, g, {.n_paths = 200, .master_seed = 8});
        CHECK(gc.z_mean[0] == 0.0);
        CHECK(gc.z_var[0] == 0.0);
        CHECK(gc.sample_mean[0] == m.x0);
    }
    SUBCASE("no diffusion gives zero variance on both sides") {
        ModelSpec m = builtin_model("example3");
        m.sigma = [](double) { return 0.0; };
        const ScaleParams s = ScaleParams::with_ratio(0.125, 2.0);
        const TimeGrid g = TimeGrid::make(s.delta, 2.0, 8);
        const GaussianCheck gc = gaussian_check(m, s, g, {.n_paths = 20, .master_seed = 8});
        for (std::size_t i = 0; i < gc.times.size(); ++i) {
            CHECK(gc.xi2[i] == 0.0);
            CHECK(gc.sample_var[i] == 0.0);
            CHECK(gc.z_var[i] == 0.0);
        }
    }
}
