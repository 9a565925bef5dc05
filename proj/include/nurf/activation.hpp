#pragma once

#include <cmath>
#include <string>

#include "nurf/error.hpp"

namespace nurf {

/// Spline activation of order s (1: Heaviside/sigmoid, 2: ReLU/softplus),
/// optionally smoothed by convolution with the bump kernel of width delta.
struct ActivationSpec {
    int s = 1;
    double delta = 0.0;

    bool smooth() const noexcept { return delta > 0.0; }

    void validate() const
    {
        if (s != 1 && s != 2) {
            throw Error(ErrorKind::invalid_argument, "activation order must be 1 or 2, got " + std::to_string(s));
        }
        if (!(delta >= 0.0) || !std::isfinite(delta)) {
            throw Error(ErrorKind::invalid_argument, "activation width must be finite and >= 0");
        }
    }
};

namespace detail {

inline double logistic(double u)
{
    if (u >= 0.0) {
        return 1.0 / (1.0 + std::exp(-u));
    }
    const double e = std::exp(u);
    return e / (1.0 + e);
}

// sech(u/2)^2 / 4 written as e/(1+e)^2 with e = exp(-|u|); no overflow.
inline double unit_bump(double u)
{
    const double e = std::exp(-std::abs(u));
    const double q = 1.0 + e;
    return e / (q * q);
}

} // namespace detail

/// sigma_s or sigma_{s,delta} at t. sigma_1(0) = 1.
inline double eval_activation(const ActivationSpec& spec, double t)
{
    if (spec.delta == 0.0) {
        if (spec.s == 1) {
            return t >= 0.0 ? 1.0 : 0.0;
        }
        return t > 0.0 ? t : 0.0;
    }
    const double u = t / spec.delta;
    if (spec.s == 1) {
        return detail::logistic(u);
    }
    return spec.delta * ((u > 0.0 ? u : 0.0) + std::log1p(std::exp(-std::abs(u))));
}

/// The bump kernel eta_delta(t) = eta(t/delta)/delta, eta(t) = sech(t/2)^2/4.
inline double eval_bump(const ActivationSpec& spec, double t)
{
    if (!(spec.delta > 0.0)) {
        throw Error(ErrorKind::invalid_argument, "bump kernel requires delta > 0");
    }
    return detail::unit_bump(t / spec.delta) / spec.delta;
}

/// Derivative of the activation in t. For s = 1 this is the bump (delta > 0
/// required); for s = 2 it is the order-1 activation of the same width.
inline double eval_activation_derivative(const ActivationSpec& spec, double t)
{
    if (spec.s == 1) {
        if (spec.delta == 0.0) {
            throw Error(ErrorKind::nonsmooth_model, "Heaviside activation has no derivative");
        }
        return eval_bump(spec, t);
    }
    return eval_activation(ActivationSpec{1, spec.delta}, t);
}

} // namespace nurf
