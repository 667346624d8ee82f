#include "ssde/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "ssde/errors.hpp"

namespace ssde {

ScaleParams ScaleParams::make(double eps, double delta, std::optional<double> c) {
    if (!(eps >= 0.0) || !std::isfinite(eps)) throw ConfigError("eps", "must be finite and >= 0");
    if (!(delta > 0.0) || !std::isfinite(delta)) throw ConfigError("delta", "must be finite and > 0");
    ScaleParams s;
    s.eps = eps;
    s.delta = delta;
    s.c = c ? *c : (eps > 0.0 ? delta / eps : 0.0);
    if (!(s.c >= 0.0) || !std::isfinite(s.c)) throw ConfigError("c", "must be finite and >= 0");
    return s;
}

ScaleParams ScaleParams::with_ratio(double eps, double ratio) {
    if (!(ratio > 0.0)) throw ConfigError("delta_ratio", "must be > 0");
    return make(eps, ratio * eps, ratio);
}

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logistic_slope(double x) {
    const double s = logistic(x);
    return s * (1.0 - s);
}

constexpr std::array<std::string_view, 4> kNames{"example1", "example2", "example3", "example4"};

} // namespace

std::span<const std::string_view> builtin_model_names() { return kNames; }

ModelSpec builtin_model(std::string_view name, bool alternate_x0) {
    ModelSpec m;
    m.name = std::string(name);
    m.sigma = [](double) { return 1.0; };

    if (name == "example1" || name == "example2") {
        if (name == "example1") {
            m.f = [](double x) { return -x * x * x - x; };
            m.Df = [](double x) { return -3.0 * x * x - 1.0; };
        } else {
            m.f = [](double x) { return -x * x * x + x; };
            m.Df = [](double x) { return -3.0 * x * x + 1.0; };
        }
        m.kappa = [](double x) { return -logistic(x); };
        m.Dkappa = [](double x) { return -logistic_slope(x); };
        m.x0 = alternate_x0 ? 1.5 : -0.07;
    } else if (name == "example3") {
        m.f = [](double x) { return -3.0 * x; };
        m.Df = [](double) { return -3.0; };
        m.kappa = [](double x) { return -0.3166 * x; };
        m.Dkappa = [](double) { return -0.3166; };
        m.x0 = 0.1;
    } else if (name == "example4") {
        m.f = [](double x) { return std::sin(x) / (1.0 + x * x) - 3.0 * x; };
        m.Df = [](double x) {
            const double q = 1.0 + x * x;
            return std::cos(x) / q - 2.0 * x * std::sin(x) / (q * q) - 3.0;
        };
        m.kappa = [](double x) { return logistic(x) - 5.0 * x; };
        m.Dkappa = [](double x) { return logistic_slope(x) - 5.0; };
        m.x0 = 0.1;
    } else {
        throw ConfigError("model", "unknown model '" + std::string(name) +
                                       "' (expected example1..example4)");
    }
    return m;
}

std::vector<double> builtin_initial_conditions(std::string_view name) {
    if (name == "example1" || name == "example2") return {-0.07, 1.5};
    if (name == "example3" || name == "example4") return {0.1};
    throw ConfigError("model", "unknown model '" + std::string(name) + "'");
}

DerivativeCheck check_derivatives(const ModelSpec& m, std::span<const double> grid, double tol) {
    DerivativeCheck out;
    auto deviation = [](const ScalarFn& fn, const ScalarFn& dfn, double x) {
        const double step = 1e-6 * std::max(1.0, std::abs(x));
        const double numeric = (fn(x + step) - fn(x - step)) / (2.0 * step);
        const double analytic = dfn(x);
        const double dev = std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
        return std::isfinite(dev) ? dev : std::numeric_limits<double>::infinity();
    };
    for (double x : grid) {
        const double dev = std::max(deviation(m.f, m.Df, x), deviation(m.kappa, m.Dkappa, x));
        if (!(dev <= out.max_deviation)) {
            out.max_deviation = dev;
            out.worst_point = x;
        }
    }
    out.pass = !grid.empty() && out.max_deviation <= tol;
    return out;
}

bool AssumptionReport::ok() const {
    return lambda_hat > 0.0 && margin > 0.0 && std::isfinite(kernel_sup[0]) &&
           std::isfinite(kernel_sup[1]);
}

namespace {

constexpr double kLocalSpacing = 1e-4;

double checked(const ScalarFn& fn, double x, const char* label) {
    const double v = fn(x);
    if (!std::isfinite(v)) throw ProbeError(x, std::string("non-finite ") + label);
    return v;
}

struct KernelScan {
    std::array<double, 2> sup{0.0, 0.0};
    double max_rate = -std::numeric_limits<double>::infinity();
};

// x' = f + kappa, I_m' = m (Df + Dkappa)(x) I_m + 1, I_m(0) = 0, by RK4.
KernelScan scan_kernel(const ModelSpec& m, double horizon) {
    const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(horizon / 1e-3)));
    const double h = horizon / static_cast<double>(steps);

    struct State {
        double x, i1, i2;
    };
    auto deriv = [&](const State& s) {
        const double r = m.Df(s.x) + m.Dkappa(s.x);
        return State{m.f(s.x) + m.kappa(s.x), r * s.i1 + 1.0, 2.0 * r * s.i2 + 1.0};
    };
    auto axpy = [](const State& s, double a, const State& k) {
        return State{s.x + a * k.x, s.i1 + a * k.i1, s.i2 + a * k.i2};
    };

    KernelScan out;
    State s{m.x0, 0.0, 0.0};
    out.max_rate = m.Df(s.x) + m.Dkappa(s.x);
    for (std::size_t i = 0; i < steps; ++i) {
        const State k1 = deriv(s);
        const State k2 = deriv(axpy(s, 0.5 * h, k1));
        const State k3 = deriv(axpy(s, 0.5 * h, k2));
        const State k4 = deriv(axpy(s, h, k3));
        s.x += h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
        s.i1 += h / 6.0 * (k1.i1 + 2.0 * k2.i1 + 2.0 * k3.i1 + k4.i1);
        s.i2 += h / 6.0 * (k1.i2 + 2.0 * k2.i2 + 2.0 * k3.i2 + k4.i2);
        if (!std::isfinite(s.x) || !std::isfinite(s.i1) || !std::isfinite(s.i2)) {
            out.sup = {std::numeric_limits<double>::infinity(),
                       std::numeric_limits<double>::infinity()};
            return out;
        }
        out.sup[0] = std::max(out.sup[0], s.i1);
        out.sup[1] = std::max(out.sup[1], s.i2);
        out.max_rate = std::max(out.max_rate, m.Df(s.x) + m.Dkappa(s.x));
    }
    return out;
}

} // namespace

AssumptionReport probe_assumptions(const ModelSpec& m, ProbeBox box, int n_probe, double horizon) {
    if (!(box.hi > box.lo)) throw ConfigError("probe_box", "must satisfy lo < hi");
    if (n_probe < 2) throw ConfigError("n_probe", "must be >= 2");
    if (!(horizon > 0.0)) throw ConfigError("horizon", "must be > 0");

    const auto n = static_cast<std::size_t>(n_probe);
    std::vector<double> xs(n), fs(n), ks(n), ss(n);
    std::vector<double> fl(n), kl(n), sl(n);  // values at x + kLocalSpacing
    for (std::size_t i = 0; i < n; ++i) {
        const double x = box.lo + (box.hi - box.lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        xs[i] = x;
        fs[i] = checked(m.f, x, "f");
        ks[i] = checked(m.kappa, x, "kappa");
        ss[i] = checked(m.sigma, x, "sigma");
        const double y = x + kLocalSpacing;
        fl[i] = checked(m.f, y, "f");
        kl[i] = checked(m.kappa, y, "kappa");
        sl[i] = checked(m.sigma, y, "sigma");
        checked(m.Df, x, "Df");
        checked(m.Dkappa, x, "Dkappa");
    }

    AssumptionReport r;
    r.box = box;
    r.n_probe = n_probe;
    r.horizon = horizon;
    r.lambda_hat = std::numeric_limits<double>::infinity();

    auto visit_pair = [&](double dx, double df, double dk, double ds) {
        r.lambda_hat = std::min(r.lambda_hat, -df / dx);
        r.L_kappa_hat = std::max(r.L_kappa_hat, std::abs(dk / dx));
        r.L_sigma_hat = std::max(r.L_sigma_hat, std::abs(ds / dx));
    };
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            visit_pair(xs[j] - xs[i], fs[j] - fs[i], ks[j] - ks[i], ss[j] - ss[i]);
        }
        const double dx = (xs[i] + kLocalSpacing) - xs[i];
        visit_pair(dx, fl[i] - fs[i], kl[i] - ks[i], sl[i] - ss[i]);
    }

    // Least squares of y = x f(x) on [-x^2, 1]; alpha clamped at 0.
    double su = 0, suu = 0, sy = 0, suy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double u = -xs[i] * xs[i];
        const double y = xs[i] * fs[i];
        su += u;
        suu += u * u;
        sy += y;
        suy += u * y;
        r.gamma_hat = std::max(r.gamma_hat, std::abs(ss[i]) + std::abs(ks[i]));
    }
    const double nn = static_cast<double>(n);
    const double det = nn * suu - su * su;
    double alpha = det != 0.0 ? (nn * suy - su * sy) / det : 0.0;
    double beta;
    if (alpha < 0.0 || det == 0.0) {
        alpha = 0.0;
        beta = sy / nn;
    } else {
        beta = (sy - alpha * su) / nn;
    }
    r.alpha_hat = alpha;
    r.beta_hat = beta;

    r.margin = r.lambda_hat / 2.0 - r.L_kappa_hat;

    for (std::size_t i = 0; i < n; ++i) {
        if (m.Df(xs[i]) > 0.0) {
            if (!r.expansive_region) r.expansive_region = ProbeBox{xs[i], xs[i]};
            r.expansive_region->lo = std::min(r.expansive_region->lo, xs[i]);
            r.expansive_region->hi = std::max(r.expansive_region->hi, xs[i]);
        }
    }

    const KernelScan scan = scan_kernel(m, horizon);
    r.kernel_sup = scan.sup;
    r.max_trajectory_rate = scan.max_rate;
    return r;
}

} // namespace ssde
