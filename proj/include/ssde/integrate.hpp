#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ssde/model.hpp"

namespace ssde {

/// Uniform integration grid on [0, horizon] with step h = delta / steps_per_sample.
/// Every sampling instant k*delta is a grid point.
struct TimeGrid {
    double horizon = 0.0;
    double h = 0.0;
    int steps_per_sample = 1;
    std::size_t steps = 0;

    static TimeGrid make(double delta, double horizon, int steps_per_sample = 16);

    double time(std::size_t i) const { return static_cast<double>(i) * h; }
    std::size_t points() const { return steps + 1; }
};

/// One coupled realization. All arrays have grid.points() entries.
struct PathBundle {
    TimeGrid grid;
    std::vector<double> dW;
    std::vector<double> X;
    std::vector<double> x_det;
    std::vector<double> Z_eps;  ///< (X - x_det) / eps; empty in pure-ODE mode (eps == 0)
    std::vector<double> Z_lim;
    std::vector<double> V;      ///< x_det + eps * Z_lim
};

struct MomentCurves {
    std::vector<double> mu;
    std::vector<double> xi2;
};

/// delta * floor(t / delta), with t / delta snapped to an integer when it is within rounding of one.
double pi_delta(double t, double delta);

/// Path-independent coefficients of the coupled scheme, evaluated once on the
/// grid and shared by every path of an ensemble.
struct ClosedLoopTrack {
    std::vector<double> x;      ///< closed-loop ODE solution (classical RK4)
    std::vector<double> rate;   ///< Df(x) + Dkappa(x)
    std::vector<double> shift;  ///< -(c/2) Dkappa(x) [f(x) + kappa(x)]
    std::vector<double> sigma;  ///< sigma(x)

    static ClosedLoopTrack build(const ModelSpec& m, const ScaleParams& s, const TimeGrid& g);
};

/// Sink for the per-step coupled state, used by the ensemble driver to avoid
/// materialising full paths. Called for i = 0..steps.
struct StepState {
    std::size_t i;
    double X;
    double x_det;
    double Z_lim;
};

/// Euler-Maruyama with zero-order hold for X, RK4 for x_det and Euler for the
/// limiting fluctuation Z_lim, all driven by dW[i] = sqrt(h) * noise[i].
/// Throws PathDivergence on the first non-finite state.
PathBundle simulate_path(const ModelSpec& m, const ScaleParams& s, const TimeGrid& g,
                         std::span<const double> noise);

/// Same scheme against a prebuilt track; visit(StepState) is called for every
/// grid index. Returns nothing; throws PathDivergence.
template <typename Visit>
void step_coupled(const ModelSpec& m, const ScaleParams& s, const TimeGrid& g,
                  const ClosedLoopTrack& track, std::span<const double> noise, Visit&& visit);

/// Mean mu = x_det + eps m and variance xi2 = eps^2 v of the Gaussian
/// approximation V_t, from the linear moment ODEs integrated with RK4.
MomentCurves moment_curves(const ModelSpec& m, const ScaleParams& s, const TimeGrid& g);

/// Exact per-step transition of dX = (aX + b X_{k delta}) dt + eps dW with the
/// hold value frozen on each sampling interval. Consumes the same normals as
/// the Euler path, scaled by the OU transition standard deviation.
std::vector<double> exact_linear_path(double a, double b, double x0, const ScaleParams& s,
                                      const TimeGrid& g, std::span<const double> noise);

} // namespace ssde

#include "ssde/detail/step_coupled.hpp"
