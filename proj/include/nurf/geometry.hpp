#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "nurf/error.hpp"
#include "nurf/rng.hpp"

namespace nurf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Inner weights of one ridge feature: unit normal a and offset b, i.e. the
/// hyperplane a.x + b = 0.
struct Neuron {
    Vector a;
    double b = 0.0;

    Neuron flipped() const { return Neuron{-a, -b}; }
};

/// Stack neurons into an N x d direction matrix and an offset vector.
inline std::pair<Matrix, Vector> stack_neurons(const std::vector<Neuron>& neurons, Eigen::Index d)
{
    const auto n = static_cast<Eigen::Index>(neurons.size());
    Matrix directions(n, d);
    Vector offsets(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        directions.row(i) = neurons[static_cast<std::size_t>(i)].a.transpose();
        offsets(i) = neurons[static_cast<std::size_t>(i)].b;
    }
    return {std::move(directions), std::move(offsets)};
}

/// Hyperplane through x with normal parallel to g: (g, -x.g) / |g|.
inline Neuron hyperplane_from_point_gradient(const Vector& x, const Vector& g)
{
    const double norm = g.norm();
    const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
    if (!(norm > 1e-14 * scale) || !std::isfinite(norm)) {
        throw Error(ErrorKind::degenerate_gradient, "gradient norm is zero");
    }
    Neuron neuron{g / norm, 0.0};
    neuron.b = -neuron.a.dot(x);
    return neuron;
}

/// Square-root factor F of a Gaussian covariance C = F F^T.
struct GaussianFactor {
    Matrix columns;

    Eigen::Index dim() const noexcept { return columns.rows(); }
    Eigen::Index rank() const noexcept { return columns.cols(); }

    static GaussianFactor identity(Eigen::Index d) { return GaussianFactor{Matrix::Identity(d, d)}; }

    /// Compress a wide d x K column set (e.g. gradient samples) to an
    /// equivalent factor U Sigma with at most d columns. Singular values below
    /// 1e-12 of the largest are dropped, which keeps draws inside the
    /// numerical range of the columns.
    static GaussianFactor from_columns(const Matrix& wide)
    {
        if (wide.cols() <= wide.rows()) {
            return GaussianFactor{wide};
        }
        Eigen::JacobiSVD<Matrix> svd(wide, Eigen::ComputeThinU);
        const Vector& sv = svd.singularValues();
        Eigen::Index rank = 0;
        const double cutoff = sv.size() > 0 ? 1e-12 * sv(0) : 0.0;
        while (rank < sv.size() && sv(rank) > cutoff) {
            ++rank;
        }
        return GaussianFactor{svd.matrixU().leftCols(rank) * sv.head(rank).asDiagonal()};
    }
};

/// Uniform direction on the unit sphere in R^d.
inline Vector sample_unit_sphere(Eigen::Index d, RngStream& rng)
{
    Vector z(d);
    double norm = 0.0;
    do {
        for (Eigen::Index i = 0; i < d; ++i) {
            z(i) = rng.normal();
        }
        norm = z.norm();
    } while (!(norm >= 1e-300));
    return z / norm;
}

/// Angular central Gaussian draw: z = F xi with xi ~ N(0, I_r), returned as z/|z|.
inline Vector sample_acg(const GaussianFactor& factor, RngStream& rng)
{
    if (factor.rank() == 0 || factor.columns.cwiseAbs().maxCoeff() == 0.0) {
        throw Error(ErrorKind::zero_covariance, "Gaussian factor has no nonzero column");
    }
    Vector xi(factor.rank());
    for (;;) {
        for (Eigen::Index i = 0; i < xi.size(); ++i) {
            xi(i) = rng.normal();
        }
        Vector z = factor.columns * xi;
        const double norm = z.norm();
        if (norm >= 1e-300) {
            return z / norm;
        }
    }
}

/// Axis-aligned box in raw input coordinates.
struct Box {
    Vector lower;
    Vector upper;

    Eigen::Index dim() const noexcept { return lower.size(); }
};

/// Diagonal affine map x_std = scale .* x_raw + shift.
struct AffineMap {
    Vector scale;
    Vector shift;

    Vector apply(const Vector& raw) const { return scale.cwiseProduct(raw) + shift; }
    Vector invert(const Vector& standardized) const { return (standardized - shift).cwiseQuotient(scale); }

    /// Gradient with respect to standardized coordinates, given the raw gradient
    /// (A^{-T} g for A = diag(scale)).
    Vector gradient_to_standardized(const Vector& raw_gradient) const { return raw_gradient.cwiseQuotient(scale); }

    Matrix hessian_to_standardized(const Matrix& raw_hessian) const
    {
        const Vector inv = scale.cwiseInverse();
        return inv.asDiagonal() * raw_hessian * inv.asDiagonal();
    }
};

/// Map sending the box onto the centered cube of side 2/sqrt(d), whose corners
/// lie on the unit sphere.
inline AffineMap standardizing_map(const Box& box)
{
    const Eigen::Index d = box.dim();
    if (box.upper.size() != d || d == 0) {
        throw Error(ErrorKind::invalid_argument, "box bounds must have equal nonzero length");
    }
    const double side = 2.0 / std::sqrt(static_cast<double>(d));
    AffineMap map{Vector(d), Vector(d)};
    for (Eigen::Index i = 0; i < d; ++i) {
        const double width = box.upper(i) - box.lower(i);
        if (!std::isfinite(box.lower(i)) || !std::isfinite(box.upper(i))) {
            throw Error(ErrorKind::invalid_argument, "box bounds must be finite");
        }
        if (!(width > 0.0)) {
            throw Error(ErrorKind::empty_box, "box has zero width in coordinate " + std::to_string(i));
        }
        map.scale(i) = side / width;
        map.shift(i) = -map.scale(i) * 0.5 * (box.lower(i) + box.upper(i));
    }
    return map;
}

/// Standardize rows of X_raw into the unit ball. Returns transformed points and the map.
inline std::pair<Matrix, AffineMap> standardize(const Matrix& raw, const Box& box)
{
    AffineMap map = standardizing_map(box);
    if (raw.cols() != box.dim()) {
        throw Error(ErrorKind::invalid_argument, "point dimension does not match box");
    }
    Matrix out = (raw * map.scale.asDiagonal()).rowwise() + map.shift.transpose();
    return {std::move(out), std::move(map)};
}

} // namespace nurf
