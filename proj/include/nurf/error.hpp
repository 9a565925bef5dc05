#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nurf {

enum class ErrorKind {
    invalid_argument,
    grid_resolution,
    degenerate_gradient,
    zero_covariance,
    empty_box,
    missing_gradients,
    all_zero_gradients,
    zero_trace,
    missing_hessians,
    missing_rho,
    acceptance_collapse,
    delta_zero,
    non_finite,
    factorization_failure,
    nonsmooth_model,
    insufficient_samples,
    unknown_benchmark,
    config,
};

/// Stable lower-case name, used in the `status` column of result tables.
inline std::string_view error_kind_name(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::grid_resolution: return "grid_resolution";
    case ErrorKind::degenerate_gradient: return "degenerate_gradient";
    case ErrorKind::zero_covariance: return "zero_covariance";
    case ErrorKind::empty_box: return "empty_box";
    case ErrorKind::missing_gradients: return "missing_gradients";
    case ErrorKind::all_zero_gradients: return "all_zero_gradients";
    case ErrorKind::zero_trace: return "zero_trace";
    case ErrorKind::missing_hessians: return "missing_hessians";
    case ErrorKind::missing_rho: return "missing_rho";
    case ErrorKind::acceptance_collapse: return "acceptance_collapse";
    case ErrorKind::delta_zero: return "delta_zero";
    case ErrorKind::non_finite: return "non_finite";
    case ErrorKind::factorization_failure: return "factorization_failure";
    case ErrorKind::nonsmooth_model: return "nonsmooth_model";
    case ErrorKind::insufficient_samples: return "insufficient_samples";
    case ErrorKind::unknown_benchmark: return "unknown_benchmark";
    case ErrorKind::config: return "config";
    }
    return "unknown";
}

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(error_kind_name(kind)) + ": " + what), kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

} // namespace nurf
