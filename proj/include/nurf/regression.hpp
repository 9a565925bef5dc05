#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/QR>

#include "nurf/activation.hpp"
#include "nurf/dataset.hpp"
#include "nurf/error.hpp"
#include "nurf/geometry.hpp"

namespace nurf {

/// Shallow network sum_n c_n sigma(a_n.x + b_n) + p0(x). The polynomial part
/// is empty, a constant [p0] (s = 1) or affine [p0, p_1..p_d] (s = 2).
struct RidgeModel {
    std::vector<Neuron> neurons;
    Vector c;
    Vector poly;
    ActivationSpec activation;
};

/// Regularization parameter choice made by cross_validate.
struct FitReport {
    double alpha = 0.0;
    std::vector<double> alpha_grid;
    std::vector<double> train_rmse;
    std::vector<double> val_rmse;
    std::size_t chosen_index = 0;
};

/// Feature matrix with the unregularized polynomial columns appended last.
struct FeatureMatrix {
    Matrix values;
    Eigen::Index n_unregularized = 0;

    Eigen::Index n_features() const noexcept { return values.cols() - n_unregularized; }
};

inline Eigen::Index polynomial_columns(int s, Eigen::Index d) { return s == 1 ? 1 : d + 1; }

inline Matrix preactivations(const Matrix& X, const std::vector<Neuron>& neurons)
{
    auto [directions, offsets] = stack_neurons(neurons, X.cols());
    Matrix z = X * directions.transpose();
    z.rowwise() += offsets.transpose();
    return z;
}

/// Phi_{k,n} = sigma(a_n.x_k + b_n), plus 1 (s = 1) or [1, x] (s = 2) columns.
inline FeatureMatrix feature_matrix(const Matrix& X, const std::vector<Neuron>& neurons,
                                    const ActivationSpec& activation, bool with_polynomial = true)
{
    activation.validate();
    const Eigen::Index k = X.rows();
    const Eigen::Index n = static_cast<Eigen::Index>(neurons.size());
    const Eigen::Index p = with_polynomial ? polynomial_columns(activation.s, X.cols()) : 0;

    FeatureMatrix phi;
    phi.n_unregularized = p;
    phi.values.resize(k, n + p);
    if (n > 0) {
        phi.values.leftCols(n) =
            preactivations(X, neurons).unaryExpr([&](double t) { return eval_activation(activation, t); });
    }
    if (p > 0) {
        phi.values.col(n).setOnes();
        if (activation.s == 2) {
            phi.values.rightCols(X.cols()) = X;
        }
    }
    return phi;
}

struct RidgeSolution {
    Vector c;
    Vector poly;
};

enum class RidgePath { automatic, primal, dual };

/// Minimizer of (1/2K)|Phi c + P p - y|^2 + (alpha N / 2)|c|^2 for a sequence of
/// alpha values. The unregularized block P is eliminated by projecting onto its
/// orthogonal complement; the remaining ridge system is solved in primal form
/// (N x N) when N <= K and in dual form (K x K) otherwise, by Cholesky.
class RidgeProblem {
  public:
    RidgeProblem(const FeatureMatrix& phi, const Vector& y, RidgePath path = RidgePath::automatic)
        : k_(phi.values.rows()), n_(phi.n_features())
    {
        if (y.size() != k_) {
            throw Error(ErrorKind::invalid_argument, "target length does not match feature rows");
        }
        if (!phi.values.allFinite() || !y.allFinite()) {
            throw Error(ErrorKind::non_finite, "ridge inputs contain non-finite values");
        }
        features_ = phi.values.leftCols(n_);
        residual_target_ = y;
        target_ = y;
        if (phi.n_unregularized > 0) {
            Eigen::HouseholderQR<Matrix> qr(phi.values.rightCols(phi.n_unregularized));
            const Eigen::Index p = phi.n_unregularized;
            q_ = qr.householderQ() * Matrix::Identity(k_, p);
            r_ = qr.matrixQR().topRows(p).template triangularView<Eigen::Upper>();
            projected_ = features_ - q_ * (q_.transpose() * features_);
            residual_target_ = y - q_ * (q_.transpose() * y);
        } else {
            projected_ = features_;
        }
        primal_ = path == RidgePath::automatic ? n_ <= k_ : path == RidgePath::primal;
        if (primal_) {
            gram_ = projected_.transpose() * projected_;
            rhs_ = projected_.transpose() * residual_target_;
        } else {
            gram_ = projected_ * projected_.transpose();
        }
    }

    bool uses_primal() const noexcept { return primal_; }

    RidgeSolution solve(double alpha) const
    {
        if (!(alpha > 0.0) || !std::isfinite(alpha)) {
            throw Error(ErrorKind::invalid_argument, "ridge parameter must be positive");
        }
        RidgeSolution out;
        if (n_ > 0) {
            const double shift = alpha * static_cast<double>(n_) * static_cast<double>(k_);
            Matrix system = gram_;
            system.diagonal().array() += shift;
            Eigen::LLT<Matrix> llt(system);
            if (llt.info() != Eigen::Success) {
                throw Error(ErrorKind::factorization_failure, "Cholesky factorization failed");
            }
            if (primal_) {
                out.c = llt.solve(rhs_);
            } else {
                out.c = projected_.transpose() * llt.solve(residual_target_);
            }
        } else {
            out.c = Vector(0);
        }
        if (q_.cols() > 0) {
            const Vector rest = target_ - features_ * out.c;
            out.poly = r_.template triangularView<Eigen::Upper>().solve(q_.transpose() * rest);
        } else {
            out.poly = Vector(0);
        }
        if (!out.c.allFinite() || !out.poly.allFinite()) {
            throw Error(ErrorKind::factorization_failure, "ridge solution is not finite");
        }
        return out;
    }

  private:
    Eigen::Index k_;
    Eigen::Index n_;
    bool primal_ = true;
    Matrix features_;
    Matrix projected_;
    Vector target_;
    Vector residual_target_;
    Matrix q_;
    Matrix r_;
    Matrix gram_;
    Vector rhs_;
};

inline RidgeSolution ridge_solve(const FeatureMatrix& phi, const Vector& y, double alpha,
                                 RidgePath path = RidgePath::automatic)
{
    return RidgeProblem(phi, y, path).solve(alpha);
}

inline Vector predict(const FeatureMatrix& phi, const RidgeSolution& sol)
{
    Vector out = phi.values.leftCols(phi.n_features()) * sol.c;
    if (phi.n_unregularized > 0) {
        out += phi.values.rightCols(phi.n_unregularized) * sol.poly;
    }
    return out;
}

inline double rmse(const Vector& prediction, const Vector& target)
{
    if (target.size() == 0) {
        return 0.0;
    }
    return std::sqrt((prediction - target).squaredNorm() / static_cast<double>(target.size()));
}

/// Descending log-spaced grid from hi to lo.
inline std::vector<double> log_alpha_grid(double lo = 1e-12, double hi = 1.0, std::size_t count = 25)
{
    std::vector<double> grid(count);
    if (count == 1) {
        grid[0] = hi;
        return grid;
    }
    const double step = (std::log10(lo) - std::log10(hi)) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) {
        grid[i] = std::pow(10.0, std::log10(hi) + step * static_cast<double>(i));
    }
    return grid;
}

inline Vector eval_model(const RidgeModel& model, const Matrix& X)
{
    Vector out = Vector::Zero(X.rows());
    if (!model.neurons.empty()) {
        const Matrix z = preactivations(X, model.neurons);
        out = z.unaryExpr([&](double t) { return eval_activation(model.activation, t); }) * model.c;
    }
    if (model.poly.size() > 0) {
        out.array() += model.poly(0);
        if (model.poly.size() > 1) {
            out += X * model.poly.tail(model.poly.size() - 1);
        }
    }
    return out;
}

/// Rows are grad S(x_k) = sum_n c_n sigma'(a_n.x_k + b_n) a_n + grad p0.
inline Matrix eval_model_gradient(const RidgeModel& model, const Matrix& X)
{
    if (model.activation.s == 1 && model.activation.delta == 0.0) {
        throw Error(ErrorKind::nonsmooth_model, "Heaviside network has no gradient; use delta > 0");
    }
    Matrix out = Matrix::Zero(X.rows(), X.cols());
    if (!model.neurons.empty()) {
        auto [directions, offsets] = stack_neurons(model.neurons, X.cols());
        Matrix z = X * directions.transpose();
        z.rowwise() += offsets.transpose();
        const Matrix slope =
            z.unaryExpr([&](double t) { return eval_activation_derivative(model.activation, t); });
        out = slope * model.c.asDiagonal() * directions;
    }
    if (model.poly.size() > 1) {
        out.rowwise() += model.poly.tail(model.poly.size() - 1).transpose();
    }
    return out;
}

/// Fit on the training split for every alpha, score RMSE on training plus
/// validation points, and keep the largest alpha whose score is within 5% of
/// the best.
inline std::pair<RidgeModel, FitReport> cross_validate(const DataSet& train, const DataSet& val,
                                                       const std::vector<Neuron>& neurons,
                                                       const ActivationSpec& activation,
                                                       const std::vector<double>& alpha_grid,
                                                       bool with_polynomial = true)
{
    if (alpha_grid.empty()) {
        throw Error(ErrorKind::invalid_argument, "alpha grid is empty");
    }
    for (std::size_t i = 1; i < alpha_grid.size(); ++i) {
        if (!(alpha_grid[i] < alpha_grid[i - 1])) {
            throw Error(ErrorKind::invalid_argument, "alpha grid must be strictly descending");
        }
    }
    const FeatureMatrix phi_train = feature_matrix(train.X, neurons, activation, with_polynomial);
    const FeatureMatrix phi_val = feature_matrix(val.X, neurons, activation, with_polynomial);
    const RidgeProblem problem(phi_train, train.y);

    FitReport report;
    report.alpha_grid = alpha_grid;
    std::vector<RidgeSolution> solutions;
    solutions.reserve(alpha_grid.size());
    const double n_train = static_cast<double>(train.size());
    const double n_val = static_cast<double>(val.size());
    for (double alpha : alpha_grid) {
        RidgeSolution sol = problem.solve(alpha);
        const double train_err = rmse(predict(phi_train, sol), train.y);
        const double val_err = rmse(predict(phi_val, sol), val.y);
        const double pooled =
            std::sqrt((train_err * train_err * n_train + val_err * val_err * n_val) / (n_train + n_val));
        report.train_rmse.push_back(train_err);
        report.val_rmse.push_back(pooled);
        solutions.push_back(std::move(sol));
    }
    double best = report.val_rmse.front();
    for (double v : report.val_rmse) {
        best = std::min(best, v);
    }
    for (std::size_t i = 0; i < report.val_rmse.size(); ++i) {
        if (report.val_rmse[i] <= 1.05 * best) {
            report.chosen_index = i;
            break;
        }
    }
    report.alpha = alpha_grid[report.chosen_index];

    RidgeModel model;
    model.neurons = neurons;
    model.c = std::move(solutions[report.chosen_index].c);
    model.poly = std::move(solutions[report.chosen_index].poly);
    model.activation = activation;
    return {std::move(model), std::move(report)};
}

} // namespace nurf
