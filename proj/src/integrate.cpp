#include "ssde/integrate.hpp"

#include <algorithm>
#include <cmath>

#include "ssde/errors.hpp"

namespace ssde {

namespace {

// Accepts n when |value - n| is within a few ulps of value.
std::size_t exact_multiple(double value, double unit, const char* field) {
    const double ratio = value / unit;
    const double n = std::round(ratio);
    if (n < 1.0 || std::abs(ratio - n) > 1e-9 * std::max(1.0, n)) {
        throw ConfigError(field, "must be an integer multiple of the step " + std::to_string(unit));
    }
    return static_cast<std::size_t>(n);
}

} // namespace

TimeGrid TimeGrid::make(double delta, double horizon, int steps_per_sample) {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw ConfigError("delta", "must be finite and > 0");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon", "must be finite and > 0");
    if (steps_per_sample < 1) throw ConfigError("steps_per_sample", "must be >= 1");
    TimeGrid g;
    g.horizon = horizon;
    g.steps_per_sample = steps_per_sample;
    g.h = delta / steps_per_sample;
    g.steps = exact_multiple(horizon, g.h, "horizon");
    return g;
}

double pi_delta(double t, double delta) {
    // Snap t/delta to the nearest integer when it is off by rounding only,
    // so that a sampling instant such as 3 * 0.1 maps to itself.
    const double q = t / delta;
    const double k = std::round(q);
    if (std::abs(q - k) <= 1e-12 * std::max(1.0, std::abs(q))) return delta * k;
    return delta * std::floor(q);
}

ClosedLoopTrack ClosedLoopTrack::build(const ModelSpec& m, const ScaleParams& s, const TimeGrid& g) {
    const std::size_t n = g.points();
    ClosedLoopTrack tr;
    tr.x.resize(n);
    tr.rate.resize(n);
    tr.shift.resize(n);
    tr.sigma.resize(n);

    auto rhs = [&](double x) { return m.f(x) + m.kappa(x); };
    const double h = g.h;
    double x = m.x0;
    for (std::size_t i = 0;; ++i) {
        if (!std::isfinite(x)) throw PathDivergence(i, "closed-loop ODE diverged");
        tr.x[i] = x;
        const double drift = rhs(x);
        const double dk = m.Dkappa(x);
        tr.rate[i] = m.Df(x) + dk;
        tr.shift[i] = -0.5 * s.c * dk * drift;
        tr.sigma[i] = s.eps > 0.0 ? m.sigma(x) : 0.0;
        if (i + 1 == n) break;
        const double k1 = drift;
        const double k2 = rhs(x + 0.5 * h * k1);
        const double k3 = rhs(x + 0.5 * h * k2);
        const double k4 = rhs(x + h * k3);
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return tr;
}

PathBundle simulate_path(const ModelSpec& m, const ScaleParams& s, const TimeGrid& g,
                         std::span<const double> noise) {
    const ClosedLoopTrack track = ClosedLoopTrack::build(m, s, g);
    PathBundle b;
    b.grid = g;
    const std::size_t n = g.points();
    b.X.resize(n);
    b.Z_lim.resize(n);
    step_coupled(m, s, g, track, noise, [&](const StepState& st) {
        b.X[st.i] = st.X;
        b.Z_lim[st.i] = st.Z_lim;
    });

    const double sqrt_h = std::sqrt(g.h);
    b.dW.resize(g.steps);
    for (std::size_t i = 0; i < g.steps; ++i) b.dW[i] = sqrt_h * noise[i];

    b.x_det = track.x;
    b.V.resize(n);
    for (std::size_t i = 0; i < n; ++i) b.V[i] = b.x_det[i] + s.eps * b.Z_lim[i];
    if (s.eps > 0.0) {
        b.Z_eps.resize(n);
        for (std::size_t i = 0; i < n; ++i) b.Z_eps[i] = (b.X[i] - b.x_det[i]) / s.eps;
    }
    return b;
}

MomentCurves moment_curves(const ModelSpec& m, const ScaleParams& s, const TimeGrid& g) {
    // y = (x, m, v):
    //   x' = f + kappa
    //   m' = (Df + Dkappa) m - (c/2) Dkappa (f + kappa)
    //   v' = 2 (Df + Dkappa) v + sigma^2
    struct State {
        double x, m, v;
    };
    auto deriv = [&](const State& y) {
        const double drift = m.f(y.x) + m.kappa(y.x);
        const double dk = m.Dkappa(y.x);
        const double rate = m.Df(y.x) + dk;
        const double sg = m.sigma(y.x);
        return State{drift, rate * y.m - 0.5 * s.c * dk * drift, 2.0 * rate * y.v + sg * sg};
    };
    auto axpy = [](const State& y, double a, const State& k) {
        return State{y.x + a * k.x, y.m + a * k.m, y.v + a * k.v};
    };

    const std::size_t n = g.points();
    const double h = g.h;
    MomentCurves out;
    out.mu.resize(n);
    out.xi2.resize(n);
    State y{m.x0, 0.0, 0.0};
    for (std::size_t i = 0;; ++i) {
        if (!std::isfinite(y.x) || !std::isfinite(y.m) || !std::isfinite(y.v)) {
            throw PathDivergence(i, "moment ODE diverged");
        }
        out.mu[i] = y.x + s.eps * y.m;
        out.xi2[i] = s.eps * s.eps * y.v;
        if (i + 1 == n) break;
        const State k1 = deriv(y);
        const State k2 = deriv(axpy(y, 0.5 * h, k1));
        const State k3 = deriv(axpy(y, 0.5 * h, k2));
        const State k4 = deriv(axpy(y, h, k3));
        y.x += h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
        y.m += h / 6.0 * (k1.m + 2.0 * k2.m + 2.0 * k3.m + k4.m);
        y.v += h / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
    }
    return out;
}

std::vector<double> exact_linear_path(double a, double b, double x0, const ScaleParams& s,
                                      const TimeGrid& g, std::span<const double> noise) {
    if (a == 0.0) throw ConfigError("a", "must be nonzero");
    if (noise.size() != g.steps) throw ConfigError("noise", "length must equal the number of steps");

    const double growth = std::exp(a * g.h);
    const double forcing = std::expm1(a * g.h) / a;
    const double spread = s.eps * std::sqrt(std::expm1(2.0 * a * g.h) / (2.0 * a));
    const auto M = static_cast<std::size_t>(g.steps_per_sample);

    std::vector<double> X(g.points());
    X[0] = x0;
    double u = 0.0;
    for (std::size_t i = 0; i < g.steps; ++i) {
        if (i % M == 0) u = b * X[i];
        X[i + 1] = growth * X[i] + u * forcing + spread * noise[i];
    }
    return X;
}

} // namespace ssde
