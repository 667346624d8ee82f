#pragma once

#include <cmath>

#include "ssde/errors.hpp"

namespace ssde {

template <typename Visit>
void step_coupled(const ModelSpec& m, const ScaleParams& s, const TimeGrid& g,
                  const ClosedLoopTrack& track, std::span<const double> noise, Visit&& visit) {
    if (noise.size() != g.steps) {
        throw ConfigError("noise", "expected " + std::to_string(g.steps) + " normals, got " +
                                       std::to_string(noise.size()));
    }
    const double h = g.h;
    const double sqrt_h = std::sqrt(h);
    const double eps = s.eps;
    const auto M = static_cast<std::size_t>(g.steps_per_sample);

    double X = m.x0;
    double Z = 0.0;
    double held_control = 0.0;
    visit(StepState{0, X, track.x[0], Z});
    for (std::size_t i = 0; i < g.steps; ++i) {
        if (i % M == 0) held_control = m.kappa(X);
        const double dW = sqrt_h * noise[i];
        const double X_next = X + (m.f(X) + held_control) * h + eps * m.sigma(X) * dW;
        const double Z_next = Z + (track.rate[i] * Z + track.shift[i]) * h + track.sigma[i] * dW;
        if (!std::isfinite(X_next) || !std::isfinite(Z_next)) {
            throw PathDivergence(i + 1, "non-finite state");
        }
        X = X_next;
        Z = Z_next;
        visit(StepState{i + 1, X, track.x[i + 1], Z});
    }
}

} // namespace ssde
