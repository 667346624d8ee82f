#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "ssde/csv.hpp"
#include "ssde/errors.hpp"

namespace fs = std::filesystem;
using ssde::cli::run;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result invoke(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

// Fresh empty directory under the test working directory.
fs::path scratch(const std::string& name) {
    const fs::path dir = fs::current_path() / "cli_scratch" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::vector<std::string> small_simulate(const fs::path& out) {
    return {"simulate", "--model", "example1", "--eps", "2^-4", "--horizon", "4",
            "--steps-per-sample", "8", "--paths", "40", "--seed", "9", "--out", out.string()};
}

} // namespace

TEST_CASE("parse_eps_list") {
    using ssde::cli::parse_eps_list;
    CHECK(parse_eps_list("0.03125") == std::vector<double>{0.03125});
    CHECK(parse_eps_list("2^-5") == std::vector<double>{0.03125});
    CHECK(parse_eps_list("2^-4, 0.01") == std::vector<double>{0.0625, 0.01});
    CHECK(parse_eps_list("2^-4..2^-7") == std::vector<double>{0.0625, 0.03125, 0.015625, 0.0078125});
    CHECK(parse_eps_list("2^-3..2^-3") == std::vector<double>{0.125});
    CHECK_THROWS_AS(parse_eps_list(""), ssde::ConfigError);
    CHECK_THROWS_AS(parse_eps_list("abc"), ssde::ConfigError);
    CHECK_THROWS_AS(parse_eps_list("0.1..0.2"), ssde::ConfigError);
}

TEST_CASE("simulate writes a series and a summary") {
    const fs::path dir = scratch("simulate");
    const Result r = invoke(small_simulate(dir / "run.csv"));
    REQUIRE(r.code == 0);
    CHECK(fs::exists(dir / "run.csv"));
    CHECK(fs::exists(dir / "run.summary.csv"));

    std::ifstream series(dir / "run.csv");
    std::string header;
    std::getline(series, header);
    CHECK(header == "t,mean_resid,stderr,lln_moment,clt_moment,mu,xi2");
    std::size_t rows = 0;
    for (std::string line; std::getline(series, line);) ++rows;
    CHECK(rows == 4 * 8 * 8 + 1);  // T / h + 1 with h = delta / 8 = 1/64

    std::ifstream sin(dir / "run.summary.csv");
    const auto summary = ssde::read_summary(sin, ssde::TableFormat::csv);
    auto value = [&](const std::string& key) {
        for (const auto& [k, v] : summary)
            if (k == key) return v;
        FAIL("missing key " << key);
        return std::string{};
    };
    CHECK(value("model") == "example1");
    CHECK(ssde::parse_number(value("eps")) == 0.0625);
    CHECK(ssde::parse_number(value("delta")) == 0.125);
    CHECK(ssde::parse_number(value("c")) == 2.0);
    CHECK(value("n_paths") == "40");
    CHECK(value("seed") == "9");
    CHECK(ssde::parse_number(value("sup_mean_resid_abs")) > 0.0);

    // No stray files beside the two outputs.
    std::size_t count = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++count;
    CHECK(count == 2);
}

TEST_CASE("simulate is reproducible and independent of the worker count") {
    const fs::path dir = scratch("determinism");
    auto a = small_simulate(dir / "a.csv");
    auto b = small_simulate(dir / "b.csv");
    auto c = small_simulate(dir / "c.csv");
    a.insert(a.end(), {"--threads", "1"});
    b.insert(b.end(), {"--threads", "1"});
    c.insert(c.end(), {"--threads", "8"});
    REQUIRE(invoke(a).code == 0);
    REQUIRE(invoke(b).code == 0);
    REQUIRE(invoke(c).code == 0);
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
    CHECK(slurp(dir / "a.csv") == slurp(dir / "c.csv"));
    CHECK(slurp(dir / "a.summary.csv") == slurp(dir / "c.summary.csv"));
}

TEST_CASE("tsv format") {
    const fs::path dir = scratch("tsv");
    auto args = small_simulate(dir / "run.tsv");
    args.insert(args.end(), {"--format", "tsv"});
    REQUIRE(invoke(args).code == 0);
    CHECK(slurp(dir / "run.tsv").rfind("t\tmean_resid\t", 0) == 0);
    CHECK(fs::exists(dir / "run.summary.tsv"));
}

TEST_CASE("configuration errors exit with 2 and name the field") {
    const fs::path dir = scratch("errors");
    SUBCASE("eps = 0") {
        auto args = small_simulate(dir / "x.csv");
        args[4] = "0";
        const Result r = invoke(args);
        CHECK(r.code == 2);
        CHECK(r.err.find("eps") != std::string::npos);
        CHECK_FALSE(fs::exists(dir / "x.csv"));
    }
    SUBCASE("unknown model") {
        auto args = small_simulate(dir / "x.csv");
        args[2] = "example9";
        const Result r = invoke(args);
        CHECK(r.code == 2);
        CHECK(r.err.find("model") != std::string::npos);
    }
    SUBCASE("horizon not a multiple of delta") {
        auto args = small_simulate(dir / "x.csv");
        args[6] = "4.01";
        const Result r = invoke(args);
        CHECK(r.code == 2);
        CHECK(r.err.find("horizon") != std::string::npos);
    }
    SUBCASE("unknown flag") {
        CHECK(invoke({"simulate", "--bogus", "1"}).code == 2);
    }
    SUBCASE("no subcommand") {
        CHECK(invoke({}).code == 2);
    }
    SUBCASE("help is not an error") {
        CHECK(invoke({"--help"}).code == 0);
    }
}

TEST_CASE("rates refuses a single-rung ladder") {
    const Result r = invoke({"rates", "--model", "example1", "--eps", "2^-4", "--horizon", "4", "--paths", "10"});
    CHECK(r.code == 4);
    CHECK(r.err.find("at least 2") != std::string::npos);
}

TEST_CASE("rates prints one row per rung and the fit") {
    const Result r = invoke({"rates", "--model", "example3", "--eps", "2^-2..2^-4", "--horizon", "4",
                             "--steps-per-sample", "8", "--paths", "100", "--functional", "lln_sup", "--p", "2"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("eps,delta,lln_sup\n") != std::string::npos);
    CHECK(r.out.find("0.0625,0.125,") != std::string::npos);
    CHECK(r.out.find("slope ") != std::string::npos);
    CHECK(r.out.find("r_squared ") != std::string::npos);
}

TEST_CASE("table prints the two-section layout and plot files") {
    const fs::path dir = scratch("table");
    const Result r = invoke({"table", "--model", "example1", "--eps", "2^-3..2^-4", "--horizon", "2",
                             "--steps-per-sample", "4", "--paths", "20", "--out", dir.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("Initial condition x0 = -0.07") != std::string::npos);
    CHECK(r.out.find("Initial condition x0 = 1.5") < std::string::npos);
    CHECK(r.out.find("Initial condition x0 = -0.07") < r.out.find("Initial condition x0 = 1.5"));
    CHECK(fs::exists(dir / "example1_x0_-0.07_eps_0.125.csv"));
    CHECK(fs::exists(dir / "example1_x0_1.5_eps_0.0625.csv"));
}

TEST_CASE("check reports the assumption probes") {
    SUBCASE("example1 is OK with margin 1/4") {
        const Result r = invoke({"check", "--model", "example1"});
        REQUIRE(r.code == 0);
        CHECK(r.out.find("status                 OK") != std::string::npos);
        const auto pos = r.out.find("margin");
        REQUIRE(pos != std::string::npos);
        const double margin = std::stod(r.out.substr(pos + 6));
        CHECK(margin == doctest::Approx(0.25).epsilon(1e-4));
    }
    SUBCASE("example2 warns and shows the expansive region") {
        const Result r = invoke({"check", "--model", "example2"});
        REQUIRE(r.code == 0);
        CHECK(r.out.find("status                 WARN") != std::string::npos);
        CHECK(r.out.find("expansive_region       [-0.57, 0.57]") != std::string::npos);
    }
    SUBCASE("example4 trajectory rate is negative") {
        const Result r = invoke({"check", "--model", "example4"});
        REQUIRE(r.code == 0);
        CHECK(r.out.find("Df + Dkappa < 0") != std::string::npos);
    }
}

TEST_CASE("config file values apply and flags take precedence") {
    const fs::path dir = scratch("config");
    {
        std::ofstream cfg(dir / "run.ini");
        cfg << "model = example3\n"
            << "eps = 2^-3\n"
            << "horizon = 2\n"
            << "steps-per-sample = 4\n"
            << "paths = 30\n"
            << "seed = 5\n";
    }
    const Result r = invoke({"simulate", "--config", (dir / "run.ini").string(), "--seed", "6", "--out",
                             (dir / "run.csv").string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    std::ifstream sin(dir / "run.summary.csv");
    const auto summary = ssde::read_summary(sin, ssde::TableFormat::csv);
    std::map<std::string, std::string> kv(summary.begin(), summary.end());
    CHECK(kv["model"] == "example3");
    CHECK(kv["eps"] == "0.125");
    CHECK(kv["horizon"] == "2");
    CHECK(kv["n_paths"] == "30");
    CHECK(kv["seed"] == "6");
}
