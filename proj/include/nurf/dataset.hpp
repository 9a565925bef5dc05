#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "nurf/error.hpp"
#include "nurf/geometry.hpp"

namespace nurf {

/// Standardized regression data: K points in the ball of radius R with values
/// and optional first/second derivative data and data-density values.
struct DataSet {
    Matrix X;                              // K x d
    Vector y;                              // K
    std::optional<Matrix> G;               // K x d gradients
    std::optional<std::vector<Matrix>> H;  // K symmetric d x d Hessians
    std::optional<Vector> rho;             // data density at each point
    double R = 1.0;

    Eigen::Index size() const noexcept { return X.rows(); }
    Eigen::Index dim() const noexcept { return X.cols(); }

    void validate() const
    {
        const Eigen::Index k = size();
        if (y.size() != k) {
            throw Error(ErrorKind::invalid_argument, "target count does not match point count");
        }
        if (G && (G->rows() != k || G->cols() != dim())) {
            throw Error(ErrorKind::invalid_argument, "gradient matrix must be K x d");
        }
        if (rho && rho->size() != k) {
            throw Error(ErrorKind::invalid_argument, "density vector must have length K");
        }
        for (Eigen::Index i = 0; i < k; ++i) {
            if (X.row(i).norm() > R + 1e-9) {
                throw Error(ErrorKind::invalid_argument, "data point outside the ball of radius R");
            }
        }
        if (H) {
            if (static_cast<Eigen::Index>(H->size()) != k) {
                throw Error(ErrorKind::invalid_argument, "need one Hessian per data point");
            }
            for (const Matrix& hk : *H) {
                if (hk.rows() != dim() || hk.cols() != dim()) {
                    throw Error(ErrorKind::invalid_argument, "Hessians must be d x d");
                }
                const double scale = std::max(1.0, hk.cwiseAbs().maxCoeff());
                if ((hk - hk.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
                    throw Error(ErrorKind::invalid_argument, "Hessian is not symmetric");
                }
            }
        }
    }

    const Matrix& gradients() const
    {
        if (!G) {
            throw Error(ErrorKind::missing_gradients, "data set carries no gradient data");
        }
        return *G;
    }

    const std::vector<Matrix>& hessians() const
    {
        if (!H) {
            throw Error(ErrorKind::missing_hessians, "data set carries no Hessian data");
        }
        return *H;
    }

    /// Copy with the gradient data replaced (used for residual gradients).
    DataSet with_gradients(Matrix gradients) const
    {
        DataSet copy = *this;
        copy.G = std::move(gradients);
        return copy;
    }
};

} // namespace nurf
