#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ssde {

using ScalarFn = std::function<double(double)>;

/// Drift f, feedback law kappa and diffusion sigma of
///   dX = {f(X_t) + kappa(X_{pi_delta(t)})} dt + eps sigma(X_t) dW
/// together with the analytic derivatives the fluctuation equation needs.
/// Immutable once built; safe to share between threads as long as the
/// callables themselves are.
struct ModelSpec {
    std::string name;
    ScalarFn f;
    ScalarFn Df;
    ScalarFn kappa;
    ScalarFn Dkappa;
    ScalarFn sigma;
    double x0 = 0.0;

    ModelSpec with_x0(double x) const {
        ModelSpec copy = *this;
        copy.x0 = x;
        return copy;
    }
};

/// Noise size eps, sampling period delta and the regime constant c.
struct ScaleParams {
    double eps = 0.0;
    double delta = 0.0;
    double c = 0.0;

    /// c defaults to delta / eps. eps == 0 is accepted and selects the
    /// pure-ODE mode (c = 0 unless given).
    static ScaleParams make(double eps, double delta, std::optional<double> c = std::nullopt);
    /// delta = ratio * eps, c = ratio exactly.
    static ScaleParams with_ratio(double eps, double ratio);
};

/// Names accepted by builtin_model().
std::span<const std::string_view> builtin_model_names();

/// Example models 1-4. variant selects the alternate initial condition
/// (x0 = 1.5) for example1 / example2; ignored for the others.
ModelSpec builtin_model(std::string_view name, bool alternate_x0 = false);

/// Initial conditions tabulated for a builtin model, in table order.
std::vector<double> builtin_initial_conditions(std::string_view name);

struct DerivativeCheck {
    bool pass = false;
    double max_deviation = 0.0;
    double worst_point = 0.0;
};

/// Compares Df and Dkappa with central differences (step 1e-6 max(1,|x|)).
/// Deviation is |analytic - numeric| / max(1, |numeric|).
DerivativeCheck check_derivatives(const ModelSpec& m, std::span<const double> grid, double tol);

struct ProbeBox {
    double lo = -1.0;
    double hi = 1.0;
};

/// Finite-box / finite-horizon estimates of the standing assumptions.
struct AssumptionReport {
    double lambda_hat = 0.0;  ///< inf of -(x-y)(f(x)-f(y))/|x-y|^2
    double L_kappa_hat = 0.0;
    double L_sigma_hat = 0.0;
    double gamma_hat = 0.0;   ///< max |sigma| + |kappa|
    double alpha_hat = 0.0;   ///< x f(x) ~ -alpha x^2 + beta, alpha >= 0
    double beta_hat = 0.0;
    double margin = 0.0;      ///< lambda_hat / 2 - L_kappa_hat
    std::array<double, 2> kernel_sup{0.0, 0.0};  ///< m = 1, 2

    /// Largest Df + Dkappa along the closed-loop trajectory on [0, horizon].
    double max_trajectory_rate = 0.0;
    /// Probe points where Df > 0, as [lo, hi]; empty when f is locally contractive everywhere.
    std::optional<ProbeBox> expansive_region;

    ProbeBox box;
    int n_probe = 0;
    double horizon = 0.0;

    bool ok() const;
};

AssumptionReport probe_assumptions(const ModelSpec& m, ProbeBox box, int n_probe, double horizon);

} // namespace ssde
