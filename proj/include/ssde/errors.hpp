#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace ssde {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameters or configuration (unknown model, eps <= 0, bad grid...).
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// A model function returned a non-finite value inside the probe box.
class ProbeError : public Error {
public:
    ProbeError(double point, const std::string& what)
        : Error(what + " at x = " + std::to_string(point)), point_(point) {}

    double point() const noexcept { return point_; }

private:
    double point_;
};

/// A simulated state became non-finite.
class PathDivergence : public Error {
public:
    PathDivergence(std::size_t step, const std::string& what)
        : Error(what + " (first bad step " + std::to_string(step) + ")"), step_(step) {}

    PathDivergence(std::size_t step, std::size_t path, std::uint64_t seed)
        : Error("path " + std::to_string(path) + " (seed " + std::to_string(seed) +
                ") diverged at step " + std::to_string(step)),
          step_(step), path_(path), seed_(seed) {}

    PathDivergence(const std::string& context, const PathDivergence& inner)
        : Error(context + ": " + inner.what()),
          step_(inner.step_), path_(inner.path_), seed_(inner.seed_) {}

    std::size_t step() const noexcept { return step_; }
    std::size_t path() const noexcept { return path_; }
    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::size_t step_;
    std::size_t path_ = 0;
    std::uint64_t seed_ = 0;
};

/// Statistics precondition failed (too few points, nonpositive error in a log fit).
class FitError : public Error {
public:
    using Error::Error;
};

} // namespace ssde
