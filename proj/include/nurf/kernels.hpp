#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/QR>

#include "nurf/activation.hpp"
#include "nurf/dataset.hpp"
#include "nurf/error.hpp"
#include "nurf/geometry.hpp"
#include "nurf/regression.hpp"
#include "nurf/samplers.hpp"

namespace nurf {

struct KernelEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n_samples = 0;
};

/// (1/N) sum_n phi(x; w_n) phi(x'; w_n).
inline double finite_rank_kernel(const Vector& x, const Vector& y, const std::vector<Neuron>& neurons,
                                 const ActivationSpec& activation)
{
    if (neurons.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (const Neuron& w : neurons) {
        sum += eval_activation(activation, w.a.dot(x) + w.b) * eval_activation(activation, w.a.dot(y) + w.b);
    }
    return sum / static_cast<double>(neurons.size());
}

/// Gram matrix (1/N) Phi Phi^T of the finite-rank kernel on the rows of X.
inline Matrix finite_rank_gram(const Matrix& X, const std::vector<Neuron>& neurons, const ActivationSpec& activation)
{
    const FeatureMatrix phi = feature_matrix(X, neurons, activation, false);
    return phi.values * phi.values.transpose() / static_cast<double>(std::max<std::size_t>(neurons.size(), 1));
}

namespace detail {

inline KernelEstimate product_statistics(const Vector& products)
{
    KernelEstimate est;
    est.n_samples = static_cast<std::size_t>(products.size());
    const double n = static_cast<double>(products.size());
    est.value = products.mean();
    const double var = products.size() > 1 ? (products.array() - est.value).square().sum() / (n - 1.0) : 0.0;
    est.std_error = std::sqrt(var / n);
    return est;
}

inline Vector feature_products(const Vector& x, const Vector& y, const std::vector<Neuron>& neurons,
                               const ActivationSpec& activation)
{
    Vector out(static_cast<Eigen::Index>(neurons.size()));
    for (std::size_t n = 0; n < neurons.size(); ++n) {
        const Neuron& w = neurons[n];
        out(static_cast<Eigen::Index>(n)) =
            eval_activation(activation, w.a.dot(x) + w.b) * eval_activation(activation, w.a.dot(y) + w.b);
    }
    return out;
}

} // namespace detail

/// Monte Carlo estimate of k_M(x, x') with freshly sampled neurons.
inline KernelEstimate mc_kernel(const Vector& x, const Vector& y, const SamplerSpec& sampler, const DataSet& ds,
                                const ActivationSpec& activation, std::size_t n_samples, RngStream& rng,
                                const SamplingContext& ctx = {})
{
    if (n_samples < 100) {
        throw Error(ErrorKind::insufficient_samples, "kernel estimates need at least 100 samples");
    }
    SamplingContext local = ctx;
    local.activation = activation;
    const SampleResult draws = sample_neurons(ds, sampler, n_samples, local, rng);
    return detail::product_statistics(detail::feature_products(x, y, draws.neurons, activation));
}

/// Point pair (x, x').
using PointPair = std::pair<Vector, Vector>;

/// Rotation-type invariants (|x|, |x'|, |x - x'|) of a pair.
inline Eigen::Vector3d pair_invariants(const PointPair& p)
{
    return {p.first.norm(), p.second.norm(), (p.first - p.second).norm()};
}

struct RadialGroupResult {
    std::vector<KernelEstimate> estimates;
    double max_difference = 0.0;
    double tolerance = 0.0;  // 4 x combined standard error of the worst pair
    bool passed = false;
};

struct RadialStructureReport {
    std::vector<RadialGroupResult> groups;
    bool passed = true;
};

/// Checks that within each group of pairs sharing the invariants
/// (|x|, |x'|, |x - x'|) the kernel of the uniform measure agrees to within 4
/// combined standard errors. All pairs are evaluated on one common neuron set.
/// If `resolution` is finite, the estimates must be precise enough that 4
/// standard errors fall below it, else insufficient_samples is raised.
inline RadialStructureReport radial_structure_check(const std::vector<std::vector<PointPair>>& groups,
                                                    const DataSet& ds, const ActivationSpec& activation,
                                                    std::size_t n_samples, RngStream& rng,
                                                    double resolution = std::numeric_limits<double>::infinity())
{
    if (n_samples < 100) {
        throw Error(ErrorKind::insufficient_samples, "kernel estimates need at least 100 samples");
    }
    for (const auto& group : groups) {
        for (const PointPair& p : group) {
            if (p.first.norm() > ds.R + 1e-9 || p.second.norm() > ds.R + 1e-9) {
                throw Error(ErrorKind::invalid_argument, "pair point outside the ball of radius R");
            }
            if ((pair_invariants(p) - pair_invariants(group.front())).cwiseAbs().maxCoeff() > 1e-9) {
                throw Error(ErrorKind::invalid_argument, "pairs in a group must share their invariants");
            }
        }
    }
    const std::vector<Neuron> neurons = sample_uniform(ds, n_samples, rng);
    RadialStructureReport report;
    for (const auto& group : groups) {
        RadialGroupResult result;
        for (const PointPair& p : group) {
            result.estimates.push_back(
                detail::product_statistics(detail::feature_products(p.first, p.second, neurons, activation)));
            if (4.0 * result.estimates.back().std_error > resolution) {
                throw Error(ErrorKind::insufficient_samples, "standard error too large for the requested resolution");
            }
        }
        result.passed = true;
        for (std::size_t i = 0; i < result.estimates.size(); ++i) {
            for (std::size_t j = i + 1; j < result.estimates.size(); ++j) {
                const auto& a = result.estimates[i];
                const auto& b = result.estimates[j];
                const double diff = std::abs(a.value - b.value);
                const double tol = 4.0 * std::hypot(a.std_error, b.std_error);
                if (diff > result.max_difference) {
                    result.max_difference = diff;
                    result.tolerance = tol;
                }
                result.passed = result.passed && diff <= tol;
            }
        }
        report.passed = report.passed && result.passed;
        report.groups.push_back(std::move(result));
    }
    return report;
}

struct RadialSlopeFit {
    double intercept = 0.0;
    double slope = 0.0;  // c in k = P - c |x - x'|^(2s - 1)
    double max_residual = 0.0;
    double max_stderr = 0.0;
    std::vector<KernelEstimate> estimates;
};

/// Least-squares fit of k(x, x') = P - c |x - x'|^(2s - 1) over pairs with equal
/// point norms, so that P is shared by all pairs.
inline RadialSlopeFit fit_radial_slope(const std::vector<PointPair>& pairs, const DataSet& ds,
                                       const ActivationSpec& activation, std::size_t n_samples, RngStream& rng)
{
    if (pairs.size() < 2) {
        throw Error(ErrorKind::invalid_argument, "slope fit needs at least two pairs");
    }
    const std::vector<Neuron> neurons = sample_uniform(ds, n_samples, rng);
    const auto n = static_cast<Eigen::Index>(pairs.size());
    Matrix design(n, 2);
    Vector values(n);
    RadialSlopeFit fit;
    for (Eigen::Index i = 0; i < n; ++i) {
        const PointPair& p = pairs[static_cast<std::size_t>(i)];
        const double dist = (p.first - p.second).norm();
        design(i, 0) = 1.0;
        design(i, 1) = -std::pow(dist, 2 * activation.s - 1);
        fit.estimates.push_back(detail::product_statistics(detail::feature_products(p.first, p.second, neurons, activation)));
        values(i) = fit.estimates.back().value;
        fit.max_stderr = std::max(fit.max_stderr, fit.estimates.back().std_error);
    }
    const Vector coef = design.colPivHouseholderQr().solve(values);
    fit.intercept = coef(0);
    fit.slope = coef(1);
    fit.max_residual = (design * coef - values).cwiseAbs().maxCoeff();
    return fit;
}

} // namespace nurf
