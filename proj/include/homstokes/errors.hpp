#pragma once

#include <stdexcept>
#include <string>

namespace homstokes {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user input: coefficient parameters, configuration values, grid sizes.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A solver was called with data violating its contract (nonzero-mean forcing
/// on the torus, incompatible Dirichlet data, insufficient extension pad).
class PreconditionError : public Error {
public:
    PreconditionError(const std::string& what, double residual = 0.0)
        : Error(what), residual_(residual) {}
    [[nodiscard]] double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Krylov iteration did not reach the requested tolerance.
class SolverError : public Error {
public:
    SolverError(const std::string& what, double residual, int iterations)
        : Error(what), residual_(residual), iterations_(iterations) {}
    [[nodiscard]] double residual() const noexcept { return residual_; }
    [[nodiscard]] int iterations() const noexcept { return iterations_; }

private:
    double residual_;
    int iterations_;
};

}  // namespace homstokes
