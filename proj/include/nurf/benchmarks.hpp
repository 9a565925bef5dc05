#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nurf/dataset.hpp"
#include "nurf/error.hpp"
#include "nurf/geometry.hpp"
#include "nurf/rng.hpp"

namespace nurf {

/// Test function on a raw input box, with analytic gradient and a Hessian.
struct Benchmark {
    std::string name;
    int dim = 1;
    Box box;
    double noise_sigma = 0.0;
    std::function<double(const Vector&)> f;
    std::function<Vector(const Vector&)> grad;
    std::function<Matrix(const Vector&)> hess;
    /// Lower bound on the distance to the set where f is not differentiable
    /// (infinite for smooth functions). Raw coordinates.
    std::function<double(const Vector&)> nonsmooth_distance;
};

namespace detail {

inline double huber(double t) { return std::abs(t) < 0.5 ? t * t : std::abs(t) - 0.25; }
inline double huber_slope(double t) { return std::abs(t) < 0.5 ? 2.0 * t : (t > 0.0 ? 1.0 : -1.0); }
inline double huber_curvature(double t) { return std::abs(t) < 0.5 ? 2.0 : 0.0; }

inline double smooth_everywhere(const Vector&) { return std::numeric_limits<double>::infinity(); }

inline Box cube_box(int d, double lo, double hi)
{
    return Box{Vector::Constant(d, lo), Vector::Constant(d, hi)};
}

/// The box that standardizes to itself: [-1/sqrt(d), 1/sqrt(d)]^d.
inline Box unit_ball_cube(int d)
{
    const double half = 1.0 / std::sqrt(static_cast<double>(d));
    return cube_box(d, -half, half);
}

/// Symmetrized central differences of the analytic gradient.
inline std::function<Matrix(const Vector&)> hessian_by_differences(std::function<Vector(const Vector&)> grad,
                                                                   Vector width)
{
    return [grad = std::move(grad), width = std::move(width)](const Vector& x) {
        const Eigen::Index d = x.size();
        Matrix h(d, d);
        for (Eigen::Index j = 0; j < d; ++j) {
            const double step = 1e-5 * width(j);
            Vector xp = x;
            Vector xm = x;
            xp(j) += step;
            xm(j) -= step;
            h.col(j) = (grad(xp) - grad(xm)) / (2.0 * step);
        }
        return Matrix(0.5 * (h + h.transpose()));
    };
}

inline Benchmark make_gauss1d()
{
    Benchmark b;
    b.name = "gauss1d";
    b.dim = 1;
    b.box = cube_box(1, -1.0, 1.0);
    b.noise_sigma = 0.05;
    b.f = [](const Vector& x) { return std::exp(-50.0 * x(0) * x(0)); };
    b.grad = [](const Vector& x) {
        return Vector::Constant(1, -100.0 * x(0) * std::exp(-50.0 * x(0) * x(0)));
    };
    b.hess = [](const Vector& x) {
        return Matrix::Constant(1, 1, (1e4 * x(0) * x(0) - 100.0) * std::exp(-50.0 * x(0) * x(0)));
    };
    b.nonsmooth_distance = smooth_everywhere;
    return b;
}

inline Benchmark make_planar_wave()
{
    Benchmark b;
    b.name = "planar_wave";
    b.dim = 2;
    b.box = unit_ball_cube(2);
    const Vector dir = (Vector(2) << 1.0, -std::numbers::sqrt2).finished();
    b.f = [dir](const Vector& x) { return std::sin(5.0 * dir.dot(x)); };
    b.grad = [dir](const Vector& x) { return Vector(5.0 * std::cos(5.0 * dir.dot(x)) * dir); };
    b.hess = [dir](const Vector& x) { return Matrix(-25.0 * std::sin(5.0 * dir.dot(x)) * dir * dir.transpose()); };
    b.nonsmooth_distance = smooth_everywhere;
    return b;
}

inline Benchmark make_checkmark(int d)
{
    Benchmark b;
    b.name = "checkmark";
    b.dim = d;
    b.box = unit_ball_cube(d);
    Vector sigma(d);
    for (int i = 0; i < d; ++i) {
        sigma(i) = 8.0 * std::pow(0.5, i);
    }
    const Vector sigma2 = sigma.cwiseAbs2();
    // H(x_2..x_d) = -1/3 + (2/3) h(3 r) with r = |(x_2, ..., x_d)|.
    auto shift = [](const Vector& x) {
        return -1.0 / 3.0 + (2.0 / 3.0) * huber(3.0 * x.tail(x.size() - 1).norm());
    };
    // dH/dx_i = x_i q(r): q = 12 inside the quadratic zone, 2/r outside.
    auto shift_factor = [](const Vector& x) {
        const double r = x.tail(x.size() - 1).norm();
        return 3.0 * r < 0.5 ? 12.0 : 2.0 / r;
    };
    auto value = [sigma2, shift](const Vector& x) {
        const double z1 = x(0) - shift(x);
        double q = sigma2(0) * z1 * z1;
        for (Eigen::Index i = 1; i < x.size(); ++i) {
            q += sigma2(i) * x(i) * x(i);
        }
        return std::exp(-0.5 * q);
    };
    b.f = value;
    b.grad = [sigma2, shift, shift_factor, value](const Vector& x) {
        const double fx = value(x);
        const double z1 = x(0) - shift(x);
        const double qf = shift_factor(x);
        Vector g(x.size());
        g(0) = -fx * sigma2(0) * z1;
        for (Eigen::Index i = 1; i < x.size(); ++i) {
            g(i) = -fx * (sigma2(i) * x(i) - sigma2(0) * z1 * qf * x(i));
        }
        return g;
    };
    b.hess = hessian_by_differences(b.grad, b.box.upper - b.box.lower);
    b.nonsmooth_distance = [](const Vector& x) {
        return std::abs(3.0 * x.tail(x.size() - 1).norm() - 0.5) / 3.0;
    };
    return b;
}

inline Benchmark make_corner_max()
{
    Benchmark b;
    b.name = "corner_max";
    b.dim = 2;
    b.box = unit_ball_cube(2);
    b.f = [](const Vector& x) { return std::max({0.0, x(0), x(1)}); };
    // Subgradient convention: the first maximizing branch of (0, x1, x2).
    b.grad = [](const Vector& x) {
        Vector g = Vector::Zero(2);
        if (0.0 >= x(0) && 0.0 >= x(1)) {
            return g;
        }
        g(x(0) >= x(1) ? 0 : 1) = 1.0;
        return g;
    };
    b.hess = [](const Vector&) { return Matrix(Matrix::Zero(2, 2)); };
    b.nonsmooth_distance = [](const Vector& x) {
        double top[3] = {0.0, x(0), x(1)};
        std::sort(top, top + 3);
        return (top[2] - top[1]) / std::numbers::sqrt2;
    };
    return b;
}

inline Benchmark make_separable()
{
    Benchmark b;
    b.name = "separable";
    b.dim = 2;
    b.box = unit_ball_cube(2);
    b.f = [](const Vector& x) { return std::cos(10.0 * x(0)) + huber(7.0 * x(1)); };
    b.grad = [](const Vector& x) {
        return Vector((Vector(2) << -10.0 * std::sin(10.0 * x(0)), 7.0 * huber_slope(7.0 * x(1))).finished());
    };
    b.hess = [](const Vector& x) {
        Matrix h = Matrix::Zero(2, 2);
        h(0, 0) = -100.0 * std::cos(10.0 * x(0));
        h(1, 1) = 49.0 * huber_curvature(7.0 * x(1));
        return h;
    };
    b.nonsmooth_distance = [](const Vector& x) { return std::abs(7.0 * std::abs(x(1)) - 0.5) / 7.0; };
    return b;
}

inline Benchmark make_corner_peak(int d)
{
    constexpr double a = 2.0;
    Benchmark b;
    b.name = "corner_peak";
    b.dim = d;
    b.box = cube_box(d, 0.0, 1.0);
    const double p = static_cast<double>(d + 1);
    b.f = [p](const Vector& x) { return 10.0 * std::pow(1.0 + a * x.sum(), -p); };
    b.grad = [p, d](const Vector& x) {
        return Vector(Vector::Constant(d, -10.0 * p * a * std::pow(1.0 + a * x.sum(), -p - 1.0)));
    };
    b.hess = [p, d](const Vector& x) {
        return Matrix(Matrix::Constant(d, d, 10.0 * p * (p + 1.0) * a * a * std::pow(1.0 + a * x.sum(), -p - 2.0)));
    };
    b.nonsmooth_distance = smooth_everywhere;
    return b;
}

/// Inputs interleaved as (L_1, theta_1, L_2, theta_2, ...).
inline Benchmark make_robot_arm(int d)
{
    Benchmark b;
    b.name = "robot_arm";
    b.dim = d;
    b.box = Box{Vector(d), Vector(d)};
    for (int i = 0; i < d; i += 2) {
        b.box.lower(i) = 0.0;
        b.box.upper(i) = 1.0;
        b.box.lower(i + 1) = 0.0;
        b.box.upper(i + 1) = 2.0 * std::numbers::pi;
    }
    auto endpoint = [](const Vector& x) {
        double u = 0.0;
        double v = 0.0;
        double angle = 0.0;
        for (Eigen::Index i = 0; i < x.size(); i += 2) {
            angle += x(i + 1);
            u += x(i) * std::cos(angle);
            v += x(i) * std::sin(angle);
        }
        return std::pair{u, v};
    };
    b.f = [endpoint](const Vector& x) {
        auto [u, v] = endpoint(x);
        return std::hypot(u, v);
    };
    b.grad = [endpoint](const Vector& x) {
        auto [u, v] = endpoint(x);
        const double r = std::hypot(u, v);
        const Eigen::Index segments = x.size() / 2;
        Vector g = Vector::Zero(x.size());
        if (r == 0.0) {
            return g;
        }
        std::vector<double> angles(static_cast<std::size_t>(segments));
        double angle = 0.0;
        for (Eigen::Index i = 0; i < segments; ++i) {
            angle += x(2 * i + 1);
            angles[static_cast<std::size_t>(i)] = angle;
        }
        // d/dtheta_j touches every segment from j on; accumulate from the tip.
        double tail = 0.0;
        for (Eigen::Index i = segments - 1; i >= 0; --i) {
            const double c = std::cos(angles[static_cast<std::size_t>(i)]);
            const double s = std::sin(angles[static_cast<std::size_t>(i)]);
            g(2 * i) = (u * c + v * s) / r;
            tail += x(2 * i) * (v * c - u * s) / r;
            g(2 * i + 1) = tail;
        }
        return g;
    };
    b.hess = hessian_by_differences(b.grad, b.box.upper - b.box.lower);
    b.nonsmooth_distance = [f = b.f](const Vector& x) { return f(x) / 3.0; };
    return b;
}

/// Water flow through a borehole. Inputs (rw, r, Tu, Hu, Tl, Hl, L, Kw);
///     f = 2 pi Tu (Hu - Hl) / (ln(r/rw) (1 + Tu/Tl) + 2 L Tu / (rw^2 Kw)).
inline Benchmark make_borehole()
{
    Benchmark b;
    b.name = "borehole";
    b.dim = 8;
    b.box.lower = (Vector(8) << 0.05, 100.0, 63070.0, 990.0, 63.1, 700.0, 1120.0, 9855.0).finished();
    b.box.upper = (Vector(8) << 0.15, 50000.0, 115600.0, 1110.0, 116.0, 820.0, 1680.0, 12045.0).finished();
    constexpr double two_pi = 2.0 * std::numbers::pi;
    b.f = [](const Vector& x) {
        const double rw = x(0), r = x(1), tu = x(2), hu = x(3), tl = x(4), hl = x(5), len = x(6), kw = x(7);
        const double lr = std::log(r / rw);
        return two_pi * tu * (hu - hl) / (lr * (1.0 + tu / tl) + 2.0 * len * tu / (rw * rw * kw));
    };
    b.grad = [](const Vector& x) {
        const double rw = x(0), r = x(1), tu = x(2), hu = x(3), tl = x(4), hl = x(5), len = x(6), kw = x(7);
        const double lr = std::log(r / rw);
        const double num = two_pi * tu * (hu - hl);
        const double den = lr * (1.0 + tu / tl) + 2.0 * len * tu / (rw * rw * kw);
        Vector dnum = Vector::Zero(8);
        dnum(2) = two_pi * (hu - hl);
        dnum(3) = two_pi * tu;
        dnum(5) = -two_pi * tu;
        Vector dden = Vector::Zero(8);
        dden(0) = -(1.0 + tu / tl) / rw - 4.0 * len * tu / (rw * rw * rw * kw);
        dden(1) = (1.0 + tu / tl) / r;
        dden(2) = lr / tl + 2.0 * len / (rw * rw * kw);
        dden(4) = -lr * tu / (tl * tl);
        dden(6) = 2.0 * tu / (rw * rw * kw);
        dden(7) = -2.0 * len * tu / (rw * rw * kw * kw);
        return Vector(dnum / den - num * dden / (den * den));
    };
    b.hess = hessian_by_differences(b.grad, b.box.upper - b.box.lower);
    b.nonsmooth_distance = smooth_everywhere;
    return b;
}

} // namespace detail

inline const std::vector<std::string>& benchmark_names()
{
    static const std::vector<std::string> names{"gauss1d",   "planar_wave", "checkmark", "corner_max",
                                                "separable", "corner_peak", "robot_arm", "borehole"};
    return names;
}

/// Default dimension of each benchmark family.
inline int default_benchmark_dim(std::string_view name)
{
    if (name == "gauss1d") return 1;
    if (name == "robot_arm") return 6;
    if (name == "borehole") return 8;
    if (name == "corner_peak") return 3;
    if (name == "planar_wave" || name == "checkmark" || name == "corner_max" || name == "separable") return 2;
    throw Error(ErrorKind::unknown_benchmark, "unknown benchmark '" + std::string(name) + "'");
}

/// Central-difference check of the gradient in standardized coordinates at
/// random points of the box, skipping points within 1e-4 of nonsmooth sets.
/// Returns the worst ratio of error to tolerance (<= 1 passes).
inline double gradient_check(const Benchmark& bench, std::size_t points, RngStream& rng)
{
    const AffineMap map = standardizing_map(bench.box);
    const double h = 1e-6;
    double worst = 0.0;
    std::size_t checked = 0;
    std::size_t attempts = 0;
    while (checked < points && attempts < 100 * points) {
        ++attempts;
        Vector raw(bench.dim);
        for (int i = 0; i < bench.dim; ++i) {
            raw(i) = rng.uniform(bench.box.lower(i), bench.box.upper(i));
        }
        if (bench.nonsmooth_distance(raw) < 1e-4) {
            continue;
        }
        const Vector z = map.apply(raw);
        const Vector g = map.gradient_to_standardized(bench.grad(raw));
        Vector fd(bench.dim);
        for (int i = 0; i < bench.dim; ++i) {
            Vector zp = z;
            Vector zm = z;
            zp(i) += h;
            zm(i) -= h;
            fd(i) = (bench.f(map.invert(zp)) - bench.f(map.invert(zm))) / (2.0 * h);
        }
        const double tol = 1e-5 * g.norm() + 1e-8 * std::max(1.0, std::abs(bench.f(raw)));
        worst = std::max(worst, (fd - g).norm() / tol);
        ++checked;
    }
    return worst;
}

/// Builds a benchmark; d = 0 selects the family default. The gradient is
/// validated against finite differences before returning.
inline Benchmark make_benchmark(std::string_view name, int d = 0)
{
    if (d == 0) {
        d = default_benchmark_dim(name);
    }
    auto bad_dim = [&]() {
        return Error(ErrorKind::unknown_benchmark,
                     "benchmark '" + std::string(name) + "' is not defined for d = " + std::to_string(d));
    };
    Benchmark bench;
    if (name == "gauss1d") {
        if (d != 1) throw bad_dim();
        bench = detail::make_gauss1d();
    } else if (name == "planar_wave") {
        if (d != 2) throw bad_dim();
        bench = detail::make_planar_wave();
    } else if (name == "checkmark") {
        if (d < 2 || d > 4) throw bad_dim();
        bench = detail::make_checkmark(d);
    } else if (name == "corner_max") {
        if (d != 2) throw bad_dim();
        bench = detail::make_corner_max();
    } else if (name == "separable") {
        if (d != 2) throw bad_dim();
        bench = detail::make_separable();
    } else if (name == "corner_peak") {
        if (d < 1 || d > 10) throw bad_dim();
        bench = detail::make_corner_peak(d);
    } else if (name == "robot_arm") {
        if (d < 2 || d % 2 != 0 || d > 12) throw bad_dim();
        bench = detail::make_robot_arm(d);
    } else if (name == "borehole") {
        if (d != 8) throw bad_dim();
        bench = detail::make_borehole();
    } else {
        throw Error(ErrorKind::unknown_benchmark, "unknown benchmark '" + std::string(name) + "'");
    }
    RngStream check_rng(0x5eedULL, stable_hash(bench.name) ^ static_cast<std::uint64_t>(d));
    const double worst = gradient_check(bench, 100, check_rng);
    if (!(worst <= 1.0)) {
        throw Error(ErrorKind::invalid_argument,
                    "gradient of '" + bench.name + "' fails the finite-difference check (ratio " +
                        std::to_string(worst) + ")");
    }
    return bench;
}

enum class PointSampling { grid, uniform_random };

struct DataOptions {
    std::size_t K = 1000;
    PointSampling sampling = PointSampling::uniform_random;
    double noise_sigma = 0.0;
    std::size_t n_test = 5000;
    bool with_hessians = false;
};

struct DataSplits {
    DataSet train;
    DataSet val;
    DataSet test;
    AffineMap map;
};

namespace detail {

inline Matrix random_points(const Box& box, std::size_t count, RngStream& rng)
{
    Matrix raw(static_cast<Eigen::Index>(count), box.dim());
    for (Eigen::Index k = 0; k < raw.rows(); ++k) {
        for (Eigen::Index i = 0; i < raw.cols(); ++i) {
            raw(k, i) = rng.uniform(box.lower(i), box.upper(i));
        }
    }
    return raw;
}

/// Tensor grid with round(K^(1/d)) points per axis, endpoints included.
inline Matrix grid_points(const Box& box, std::size_t count)
{
    const Eigen::Index d = box.dim();
    const auto per_axis = std::max<Eigen::Index>(
        2, static_cast<Eigen::Index>(std::llround(std::pow(static_cast<double>(count), 1.0 / static_cast<double>(d)))));
    Eigen::Index total = 1;
    for (Eigen::Index i = 0; i < d; ++i) {
        total *= per_axis;
    }
    Matrix raw(total, d);
    for (Eigen::Index k = 0; k < total; ++k) {
        Eigen::Index rest = k;
        for (Eigen::Index i = 0; i < d; ++i) {
            const Eigen::Index j = rest % per_axis;
            rest /= per_axis;
            const double t = static_cast<double>(j) / static_cast<double>(per_axis - 1);
            raw(k, i) = box.lower(i) + t * (box.upper(i) - box.lower(i));
        }
    }
    return raw;
}

inline DataSet evaluate_split(const Benchmark& bench, const Matrix& raw, const AffineMap& map, double noise,
                              bool with_hessians, RngStream& rng)
{
    DataSet ds;
    const Eigen::Index k_count = raw.rows();
    const Eigen::Index d = raw.cols();
    ds.X.resize(k_count, d);
    ds.y.resize(k_count);
    Matrix g(k_count, d);
    std::vector<Matrix> h;
    for (Eigen::Index k = 0; k < k_count; ++k) {
        const Vector x = raw.row(k).transpose();
        ds.X.row(k) = map.apply(x).transpose();
        ds.y(k) = bench.f(x);
        g.row(k) = map.gradient_to_standardized(bench.grad(x)).transpose();
        if (with_hessians) {
            h.push_back(map.hessian_to_standardized(bench.hess(x)));
        }
    }
    if (noise > 0.0) {
        for (Eigen::Index k = 0; k < k_count; ++k) {
            ds.y(k) += noise * rng.normal();
        }
    }
    ds.G = std::move(g);
    if (with_hessians) {
        ds.H = std::move(h);
    }
    // Uniform data density on the standardized cube of side 2/sqrt(d).
    const double side = 2.0 / std::sqrt(static_cast<double>(d));
    ds.rho = Vector::Constant(k_count, std::pow(side, -static_cast<double>(d)));
    ds.R = 1.0;
    return ds;
}

} // namespace detail

/// Training, validation and test splits in standardized coordinates. Noise is
/// added to training and validation targets only; gradients are exact.
inline DataSplits generate_dataset(const Benchmark& bench, const DataOptions& opt, RngStream& rng)
{
    if (opt.K < 10) {
        throw Error(ErrorKind::invalid_argument, "need at least 10 data points");
    }
    DataSplits out;
    out.map = standardizing_map(bench.box);
    const Matrix train_raw = opt.sampling == PointSampling::grid ? detail::grid_points(bench.box, opt.K)
                                                                 : detail::random_points(bench.box, opt.K, rng);
    const Matrix val_raw = detail::random_points(bench.box, opt.K, rng);
    const Matrix test_raw = detail::random_points(bench.box, opt.n_test, rng);
    out.train = detail::evaluate_split(bench, train_raw, out.map, opt.noise_sigma, opt.with_hessians, rng);
    out.val = detail::evaluate_split(bench, val_raw, out.map, opt.noise_sigma, opt.with_hessians, rng);
    out.test = detail::evaluate_split(bench, test_raw, out.map, 0.0, false, rng);
    return out;
}

/// CSV with header x_1..x_d,y,g_1..g_d (gradient columns omitted if absent).
inline void write_dataset_csv(std::ostream& out, const DataSet& ds)
{
    const Eigen::Index d = ds.dim();
    for (Eigen::Index i = 0; i < d; ++i) {
        out << "x_" << i + 1 << ',';
    }
    out << 'y';
    if (ds.G) {
        for (Eigen::Index i = 0; i < d; ++i) {
            out << ",g_" << i + 1;
        }
    }
    out << '\n';
    char buffer[32];
    auto put = [&](double v) {
        std::snprintf(buffer, sizeof buffer, "%.17g", v);
        out << buffer;
    };
    for (Eigen::Index k = 0; k < ds.size(); ++k) {
        for (Eigen::Index i = 0; i < d; ++i) {
            put(ds.X(k, i));
            out << ',';
        }
        put(ds.y(k));
        if (ds.G) {
            for (Eigen::Index i = 0; i < d; ++i) {
                out << ',';
                put((*ds.G)(k, i));
            }
        }
        out << '\n';
    }
}

} // namespace nurf
