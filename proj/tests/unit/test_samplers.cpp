#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include "nurf/kernels.hpp"
#include "nurf/samplers.hpp"

using namespace nurf;

namespace {

double chi_squared_p(const std::vector<double>& observed, const std::vector<double>& expected)
{
    double stat = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        stat += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
    }
    boost::math::chi_squared dist(static_cast<double>(observed.size() - 1));
    return boost::math::cdf(boost::math::complement(dist, stat));
}

DataSet points_with_gradients(const Matrix& X, const Matrix& G)
{
    DataSet ds;
    ds.X = X;
    ds.y = Vector::Zero(X.rows());
    ds.G = G;
    return ds;
}

// Gaussian bump exp(-(10x)^2/2) on a uniform grid of [-1, 1].
DataSet bump_grid(int K)
{
    DataSet ds;
    ds.X.resize(K, 1);
    ds.y.resize(K);
    Matrix g(K, 1);
    for (int k = 0; k < K; ++k) {
        const double x = -1.0 + 2.0 * k / (K - 1);
        ds.X(k, 0) = x;
        ds.y(k) = std::exp(-50.0 * x * x);
        g(k, 0) = -100.0 * x * ds.y(k);
    }
    ds.G = g;
    return ds;
}

// Residual of a against the column span of basis.
double range_residual(const Vector& a, const Matrix& basis)
{
    const Matrix q = basis.householderQr().householderQ() * Matrix::Identity(basis.rows(), basis.cols());
    return (a - q * (q.transpose() * a)).norm();
}

// (f' * eta)(t) for the bump f by a midpoint rule over +-40 widths.
double smoothed_bump_slope(const ActivationSpec& eta, double t)
{
    const int n = 8000;
    const double half = 40.0 * eta.delta;
    const double h = 2.0 * half / n;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double tau = -half + (i + 0.5) * h;
        const double x = t - tau;
        sum += -100.0 * x * std::exp(-50.0 * x * x) * eval_bump(eta, tau) * h;
    }
    return sum;
}

double min_offset(const Neuron& w, const Matrix& X)
{
    return (X * w.a + Vector::Constant(X.rows(), w.b)).cwiseAbs().minCoeff();
}

} // namespace

TEST(SamplerSpec, ValidationAndNames)
{
    SamplerSpec spec;
    spec.kind = SamplerKind::nonlocal_gradient;
    EXPECT_THROW(spec.validate(), Error);
    spec.delta_w = 0.05;
    EXPECT_NO_THROW(spec.validate());
    spec.kind = SamplerKind::residual;
    spec.kappa = 1.0;
    EXPECT_THROW(spec.validate(), Error);
    spec.kappa = 2.0;
    spec.base_kind = SamplerKind::uniform;
    EXPECT_THROW(spec.validate(), Error);
    for (auto kind : {SamplerKind::uniform, SamplerKind::active_subspace, SamplerKind::local_gradient,
                      SamplerKind::nonlocal_gradient, SamplerKind::nonlocal_hessian, SamplerKind::integral_density,
                      SamplerKind::residual}) {
        EXPECT_EQ(parse_sampler_kind(sampler_kind_name(kind)), kind);
    }
    EXPECT_THROW(parse_sampler_kind("metropolis"), Error);
}

TEST(Uniform, SupportAndCenteredOffsets)
{
    DataSet ds;
    ds.X = Matrix::Zero(1, 3);
    RngStream rng(1, 1);
    const auto neurons = sample_uniform(ds, 100000, rng);
    double mean_b = 0.0;
    for (const Neuron& w : neurons) {
        ASSERT_NEAR(w.a.norm(), 1.0, 1e-12);
        ASSERT_LE(std::abs(w.b), 1.0);
        mean_b += w.b;
    }
    mean_b /= static_cast<double>(neurons.size());
    EXPECT_LE(std::abs(mean_b), 4.0 / std::sqrt(3.0 * 1e5));
}

TEST(ActiveSubspace, RankOneGradientsGiveOneDirection)
{
    const Vector dir = (Vector(2) << 1.0, -std::sqrt(2.0)).finished() / std::sqrt(3.0);
    Matrix X(3, 2), G(3, 2);
    X << 0.1, 0.2, -0.3, 0.4, 0.5, -0.5;
    G.row(0) = 2.0 * dir.transpose();
    G.row(1) = -0.5 * dir.transpose();
    G.row(2) = 3.0 * dir.transpose();
    RngStream rng(2, 1);
    for (const Neuron& w : sample_active_subspace(points_with_gradients(X, G), 1000, rng)) {
        ASSERT_NEAR(std::abs(w.a.dot(dir)), 1.0, 1e-12);
        ASSERT_LE(std::abs(w.b), 1.0);
    }
}

TEST(ActiveSubspace, Errors)
{
    DataSet ds;
    ds.X = Matrix::Zero(2, 2);
    ds.y = Vector::Zero(2);
    RngStream rng(1, 2);
    try {
        sample_active_subspace(ds, 1, rng);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::missing_gradients);
    }
    ds.G = Matrix::Zero(2, 2);
    try {
        sample_active_subspace(ds, 1, rng);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::all_zero_gradients);
    }
}

TEST(LocalGradient, SinglePointGivesAntipodalAtoms)
{
    const DataSet ds = points_with_gradients(Matrix::Zero(1, 2), (Matrix(1, 2) << 0.0, 1.0).finished());
    RngStream rng(3, 1);
    const int n = 10000;
    int up = 0;
    for (const Neuron& w : sample_local_gradient(ds, n, rng)) {
        ASSERT_EQ(w.b, 0.0);
        ASSERT_EQ(w.a(0), 0.0);
        ASSERT_EQ(std::abs(w.a(1)), 1.0);
        up += w.a(1) > 0 ? 1 : 0;
    }
    EXPECT_NEAR(up, n / 2, 3.0 * std::sqrt(n * 0.25));
}

TEST(LocalGradient, FrequenciesFollowGradientNorms)
{
    Matrix X(3, 2), G(3, 2);
    X << 0.5, 0.0, -0.5, 0.0, 0.0, 0.5;
    G << 2.0, 0.0, 1.0, 0.0, 0.0, 0.0;  // the third point has zero gradient
    const DataSet ds = points_with_gradients(X, G);
    RngStream rng(4, 1);
    const int n = 10000;
    std::vector<double> counts(2, 0.0);
    for (const Neuron& w : sample_local_gradient(ds, n, rng)) {
        ASSERT_NE(w.a(1), 1.0) << "zero-gradient point must never be a source";
        counts[std::abs(w.a.dot(X.row(0).transpose()) + w.b) < 1e-12 ? 0 : 1] += 1.0;
    }
    EXPECT_NEAR(counts[0] / n, 2.0 / 3.0, 3.0 * std::sqrt(2.0 / 9.0 / n));
    EXPECT_GT(chi_squared_p(counts, {n * 2.0 / 3.0, n / 3.0}), 0.01);

    const LocalGradientSampler sampler(ds);
    EXPECT_DOUBLE_EQ(sampler.probability(0), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(sampler.probability(2), 0.0);
}

TEST(LocalGradient, HyperplanesPassThroughSources)
{
    RngStream data_rng(5, 1);
    Matrix X(40, 3), G(40, 3);
    for (int k = 0; k < 40; ++k) {
        X.row(k) = sample_unit_sphere(3, data_rng).transpose() * data_rng.uniform(0.0, 1.0);
        G.row(k) = Eigen::RowVector3d(data_rng.normal(), data_rng.normal(), 0.0);
    }
    const DataSet ds = points_with_gradients(X, G);
    RngStream rng(5, 2);
    for (const Neuron& w : sample_local_gradient(ds, 2000, rng)) {
        ASSERT_LE(min_offset(w, X), 1e-12);
        ASSERT_LE(std::abs(w.a(2)), 1e-15);
    }
}

TEST(LocalGradient, AntipodalBalance)
{
    const DataSet ds = bump_grid(101);
    RngStream rng(6, 1);
    const int n = 20000;
    int positive = 0;
    for (const Neuron& w : sample_local_gradient(ds, n, rng)) {
        positive += w.a(0) > 0 ? 1 : 0;
    }
    EXPECT_NEAR(positive, n / 2, 3.0 * std::sqrt(n * 0.25));
}

TEST(LocalGradient, SeedReplayIsExact)
{
    const DataSet ds = bump_grid(51);
    RngStream a(7, 3);
    RngStream b(7, 3);
    const auto first = sample_local_gradient(ds, 500, a);
    const auto second = sample_local_gradient(ds, 500, b);
    for (std::size_t i = 0; i < first.size(); ++i) {
        ASSERT_EQ(first[i].a, second[i].a);
        ASSERT_EQ(first[i].b, second[i].b);
    }
}

TEST(NonlocalGradient, SupportCondition)
{
    RngStream data_rng(8, 1);
    Matrix X(60, 3), G(60, 3);
    const Matrix basis = (Matrix(3, 2) << 1.0, 0.0, 1.0, 1.0, 0.0, -2.0).finished();
    for (int k = 0; k < 60; ++k) {
        X.row(k) = sample_unit_sphere(3, data_rng).transpose() * data_rng.uniform(0.0, 1.0);
        G.row(k) = (basis * Eigen::Vector2d(data_rng.normal(), data_rng.normal())).transpose();
    }
    const DataSet ds = points_with_gradients(X, G);
    const double delta_w = 0.05;
    RngStream rng(8, 2);
    for (const Neuron& w : sample_nonlocal_gradient(ds, 3000, delta_w, rng)) {
        ASSERT_NEAR(w.a.norm(), 1.0, 1e-12);
        ASSERT_LE(range_residual(w.a, basis), 1e-10);
        ASSERT_LE(min_offset(w, X), 6.0 * delta_w);
    }
}

TEST(NonlocalGradient, NarrowWidthMatchesLocalDirections)
{
    // With points far apart relative to delta_w the weight matrix is the identity.
    Matrix X(2, 2), G(2, 2);
    X << -0.5, 0.0, 0.5, 0.0;
    G << 0.0, 2.0, 1.0, 0.0;
    const DataSet ds = points_with_gradients(X, G);
    RngStream rng(9, 1);
    const int n = 10000;
    std::vector<double> counts(2, 0.0);
    for (const Neuron& w : sample_nonlocal_gradient(ds, n, 0.01, rng)) {
        const bool first = std::abs(std::abs(w.a(1)) - 1.0) < 1e-12;
        ASSERT_TRUE(first || std::abs(std::abs(w.a(0)) - 1.0) < 1e-12);
        counts[first ? 0 : 1] += 1.0;
    }
    EXPECT_GT(chi_squared_p(counts, {n * 2.0 / 3.0, n / 3.0}), 0.01);
}

TEST(NonlocalGradient, ZeroGradientsSignal)
{
    const DataSet ds = points_with_gradients(Matrix::Zero(3, 2), Matrix::Zero(3, 2));
    RngStream rng(9, 2);
    try {
        sample_nonlocal_gradient(ds, 1, 0.1, rng);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::all_zero_gradients);
    }
}

TEST(NonlocalHessian, RankOneHessian)
{
    DataSet ds;
    ds.X = Matrix::Zero(1, 2);
    ds.y = Vector::Zero(1);
    ds.H = std::vector<Matrix>{Matrix(Eigen::Vector2d(1.0, 0.0).asDiagonal())};
    RngStream rng(10, 1);
    const int n = 10000;
    int plus = 0;
    for (const Neuron& w : sample_nonlocal_hessian(ds, n, 0.05, rng)) {
        ASSERT_EQ(std::abs(w.a(0)), 1.0);
        ASSERT_EQ(w.a(1), 0.0);
        plus += w.a(0) > 0 ? 1 : 0;
    }
    EXPECT_NEAR(plus, n / 2, 3.0 * std::sqrt(n * 0.25));
}

TEST(NonlocalHessian, DirectionsInHessianRange)
{
    RngStream data_rng(11, 1);
    DataSet ds;
    ds.X.resize(30, 3);
    ds.y = Vector::Zero(30);
    std::vector<Matrix> hessians;
    for (int k = 0; k < 30; ++k) {
        ds.X.row(k) = sample_unit_sphere(3, data_rng).transpose() * data_rng.uniform(0.0, 1.0);
        Matrix h = Matrix::Zero(3, 3);
        h.topLeftCorner(2, 2) << data_rng.normal(), 0.3, 0.3, data_rng.normal();
        hessians.push_back(h);
    }
    ds.H = hessians;
    RngStream rng(11, 2);
    for (const Neuron& w : sample_nonlocal_hessian(ds, 1000, 0.1, rng)) {
        ASSERT_LE(std::abs(w.a(2)), 1e-10);
        ASSERT_LE(min_offset(w, ds.X), 0.6);
    }
}

TEST(NonlocalHessian, Errors)
{
    DataSet ds;
    ds.X = Matrix::Zero(2, 2);
    ds.y = Vector::Zero(2);
    RngStream rng(12, 1);
    try {
        sample_nonlocal_hessian(ds, 1, 0.1, rng);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::missing_hessians);
    }
    ds.H = std::vector<Matrix>(2, Matrix::Zero(2, 2));
    try {
        sample_nonlocal_hessian(ds, 1, 0.1, rng);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::zero_trace);
    }
}

TEST(IntegralDensity, ZeroGradientsGiveZero)
{
    const PsiTable psi = build_psi_table_adaptive(0, 2, 0.05, 1.0);
    const DataSet ds = points_with_gradients(Matrix::Constant(5, 2, 0.1), Matrix::Zero(5, 2));
    EXPECT_EQ(eval_integral_density(ds, psi, (Vector(2) << 1.0, 0.0).finished(), 0.2), 0.0);
}

TEST(IntegralDensity, AntipodalSymmetry)
{
    RngStream rng(13, 1);
    Matrix X(50, 3), G(50, 3);
    for (int k = 0; k < 50; ++k) {
        X.row(k) = sample_unit_sphere(3, rng).transpose() * rng.uniform(0.0, 1.0);
        G.row(k) = sample_unit_sphere(3, rng).transpose();
    }
    const DataSet ds = points_with_gradients(X, G);
    const PsiTable psi = build_psi_table_adaptive(0, 3, 0.05, 1.0);
    for (int i = 0; i < 20; ++i) {
        const Vector a = sample_unit_sphere(3, rng);
        const double b = rng.uniform(-1.0, 1.0);
        const double v = eval_integral_density(ds, psi, a, b);
        EXPECT_NEAR(v, eval_integral_density(ds, psi, -a, -b), 1e-12 * std::max(1.0, v));
    }
}

TEST(IntegralDensity, BumpPeaksAtInflections)
{
    const DataSet ds = bump_grid(1001);
    const PsiTable psi = build_psi_table_adaptive(0, 1, 1.0 / 80.0, 1.0);
    const Vector a = Vector::Constant(1, 1.0);
    double best_b = 0.0;
    double best = 0.0;
    for (int i = 0; i <= 400; ++i) {
        const double b = -1.0 + i * 0.005;
        const double v = eval_integral_density(ds, psi, a, b);
        if (v > best) {
            best = v;
            best_b = b;
        }
    }
    EXPECT_NEAR(std::abs(best_b), 0.1, 0.011);
    EXPECT_LE(eval_integral_density(ds, psi, a, 0.98), 1e-6 * best);
    EXPECT_LE(eval_integral_density(ds, psi, a, 0.0), 0.05 * best);

    // d = 1, m = 0: psi is half the bump, and the grid average is half the
    // integral over [-1, 1], so the density is |(f' * eta)(-b)| / 4.
    const ActivationSpec eta{1, 1.0 / 80.0};
    for (double b : {-0.3, -0.1, 0.05, 0.2}) {
        const double smoothed = smoothed_bump_slope(eta, -b);
        EXPECT_NEAR(eval_integral_density(ds, psi, a, b), 0.25 * std::abs(smoothed), 0.01 * best) << b;
    }
}

TEST(IntegralDensity, KnownRhoRequiresValues)
{
    const DataSet ds = bump_grid(11);
    const PsiTable psi = build_psi_table_adaptive(0, 1, 0.05, 1.0);
    try {
        eval_integral_density(ds, psi, Vector::Constant(1, 1.0), 0.0, RhoMode::known);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::missing_rho);
    }
}

TEST(Rejection, FlatDensityAcceptsAtInverseSafety)
{
    DataSet ds;
    ds.X = Matrix::Zero(1, 2);
    RngStream rng(14, 1);
    const auto result = sample_rejection(ds, [](const Neuron&) { return 1.0; }, 20000, 1.5, rng);
    EXPECT_EQ(result.neurons.size(), 20000U);
    EXPECT_EQ(result.restarts, 0U);
    const double p = 1.0 / 1.5;
    const double proposals = 20000 / result.accept_rate;
    EXPECT_NEAR(result.accept_rate, p, 4.0 * std::sqrt(p * (1 - p) / proposals));
    for (const Neuron& w : result.neurons) {
        ASSERT_NEAR(w.a.norm(), 1.0, 1e-12);
        ASSERT_LE(std::abs(w.b), 1.0);
    }
}

TEST(Rejection, EnvelopeDoublesWhenExceeded)
{
    DataSet ds;
    ds.X = Matrix::Zero(1, 1);
    RngStream rng(14, 2);
    std::size_t calls = 0;
    // The pilot sees 1; later proposals see 2, above the envelope 1.5.
    auto density = [&calls](const Neuron&) { return ++calls <= rejection_pilot_size ? 1.0 : 2.0; };
    const auto result = sample_rejection(ds, density, 1000, 1.5, rng);
    EXPECT_EQ(result.restarts, 1U);
    EXPECT_DOUBLE_EQ(result.envelope, 3.0);
    EXPECT_EQ(result.neurons.size(), 1000U);
}

TEST(Rejection, VanishingDensityCollapses)
{
    DataSet ds;
    ds.X = Matrix::Zero(1, 2);
    RngStream rng(14, 3);
    try {
        sample_rejection(ds, [](const Neuron&) { return 0.0; }, 10, 1.5, rng);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::acceptance_collapse);
    }
}

TEST(Rejection, BumpHistogramMatchesDensity)
{
    const DataSet ds = bump_grid(401);
    const PsiTable psi = build_psi_table_adaptive(0, 1, 1.0 / 80.0, 1.0);
    RngStream rng(15, 1);
    const auto result = sample_integral_density(ds, psi, 6000, 1.5, rng);
    EXPECT_GT(result.accept_rate, 0.0);

    // Offsets of the a = +1 samples in 20 bins against the density integrated per bin.
    const int bins = 20;
    std::vector<double> observed(bins, 0.0);
    for (const Neuron& w : result.neurons) {
        if (w.a(0) > 0) {
            observed[std::min(bins - 1, static_cast<int>((w.b + 1.0) / 2.0 * bins))] += 1.0;
        }
    }
    const Vector a = Vector::Constant(1, 1.0);
    std::vector<double> mass(bins, 0.0);
    double total = 0.0;
    for (int j = 0; j < bins; ++j) {
        const double lo = -1.0 + 2.0 * j / bins;
        const int sub = 200;
        for (int i = 0; i < sub; ++i) {
            mass[j] += eval_integral_density(ds, psi, a, lo + (i + 0.5) * (2.0 / bins) / sub);
        }
        total += mass[j];
    }
    // Merge bins with tiny expected counts so the chi-squared approximation holds.
    double count = 0.0;
    for (double o : observed) {
        count += o;
    }
    std::vector<double> obs_merged, exp_merged;
    double o_acc = 0.0;
    double e_acc = 0.0;
    for (int j = 0; j < bins; ++j) {
        o_acc += observed[j];
        e_acc += count * mass[j] / total;
        if (e_acc >= 5.0) {
            obs_merged.push_back(o_acc);
            exp_merged.push_back(e_acc);
            o_acc = e_acc = 0.0;
        }
    }
    obs_merged.back() += o_acc;
    exp_merged.back() += e_acc;
    ASSERT_GE(obs_merged.size(), 4U);
    EXPECT_GT(chi_squared_p(obs_merged, exp_merged), 0.01);
}

TEST(Residual, Schedule)
{
    EXPECT_EQ(residual_schedule(50, 2.0, 8), (std::vector<std::size_t>{8, 16, 32, 50}));
    EXPECT_EQ(residual_schedule(8, 2.0, 8), (std::vector<std::size_t>{8}));
    EXPECT_EQ(residual_schedule(10, 1.5, 3), (std::vector<std::size_t>{3, 5, 7, 10}));
    EXPECT_THROW(residual_schedule(10, 1.0, 3), Error);
}

TEST(Residual, ExactStageZeroStopsEarly)
{
    // Data whose gradients are exactly those of a fixed model: after stage 0
    // the residual gradients vanish.
    const ActivationSpec act{1, 0.05};
    RidgeModel exact;
    exact.activation = act;
    exact.neurons = {Neuron{Vector::Constant(1, 1.0), 0.1}, Neuron{Vector::Constant(1, -1.0), 0.3}};
    exact.c = (Vector(2) << 0.7, -0.2).finished();
    exact.poly = Vector::Zero(1);
    DataSet ds;
    ds.X = Vector::LinSpaced(41, -1.0, 1.0);
    ds.y = eval_model(exact, ds.X);
    ds.G = eval_model_gradient(exact, ds.X);

    SamplerSpec spec;
    spec.kind = SamplerKind::residual;
    spec.n0 = 4;
    int calls = 0;
    FitCallback fit = [&](const std::vector<Neuron>&) {
        ++calls;
        return std::make_pair(exact, FitReport{});
    };
    RngStream rng(16, 1);
    const SampleResult result = sample_residual(ds, spec, 40, act, fit, rng);
    EXPECT_EQ(result.neurons.size(), 4U);
    EXPECT_EQ(calls, 1);
    ASSERT_TRUE(result.fit.has_value());
    EXPECT_EQ(result.fit->first.c, exact.c);
}

TEST(Residual, GrowsToTargetAndFits)
{
    DataSet train = bump_grid(201);
    DataSet val = bump_grid(51);
    const ActivationSpec act{1, 1.0 / 80.0};
    SamplerSpec spec;
    spec.kind = SamplerKind::residual;
    spec.n0 = 5;
    SamplingContext ctx;
    ctx.activation = act;
    int calls = 0;
    ctx.fit = [&](const std::vector<Neuron>& neurons) {
        ++calls;
        return cross_validate(train, val, neurons, act, log_alpha_grid());
    };
    RngStream rng(17, 1);
    const SampleResult result = sample_neurons(train, spec, 35, ctx, rng);
    EXPECT_EQ(result.neurons.size(), 35U);
    EXPECT_EQ(calls, 4);  // stages 5, 10, 20, 35 plus the final fit
    ASSERT_TRUE(result.fit.has_value());
    EXPECT_EQ(result.fit->first.neurons.size(), 35U);
}

TEST(Residual, SharpActivationRejected)
{
    const DataSet ds = bump_grid(11);
    SamplerSpec spec;
    spec.kind = SamplerKind::residual;
    RngStream rng(18, 1);
    try {
        sample_residual(ds, spec, 20, ActivationSpec{1, 0.0}, {}, rng);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::delta_zero);
    }
}

TEST(Representation, OneDimensionalReconstruction)
{
    // f(x) = sum over a = +-1 of the integral of H(a x + b) (a/2) f'(-a b) db.
    auto fprime = [](double x) { return -100.0 * x * std::exp(-50.0 * x * x); };
    const ActivationSpec heaviside{1, 0.0};
    const int cells = 20000;
    const double h = 2.0 / cells;
    double worst = 0.0;
    for (int i = 0; i <= 90; ++i) {
        const double x = -0.9 + 0.02 * i;
        double value = 0.0;
        for (int j = 0; j < cells; ++j) {
            const double b = -1.0 + (j + 0.5) * h;
            for (double a : {1.0, -1.0}) {
                value += eval_activation(heaviside, a * x + b) * 0.5 * a * fprime(-a * b) * h;
            }
        }
        worst = std::max(worst, std::abs(value - std::exp(-50.0 * x * x)));
    }
    EXPECT_LE(worst, 1e-3);
}

TEST(WeightsExport, OneLinePerNeuronRoundTrips)
{
    DataSet ds;
    ds.X = Matrix::Zero(1, 2);
    RngStream rng(19, 1);
    const auto neurons = sample_uniform(ds, 25, rng);
    std::ostringstream out;
    write_weights(out, neurons);
    std::istringstream in(out.str());
    std::string line;
    std::size_t i = 0;
    while (std::getline(in, line)) {
        std::istringstream fields(line);
        double a0 = 0, a1 = 0, b = 0;
        fields >> a0 >> a1 >> b;
        ASSERT_EQ(a0, neurons[i].a(0));
        ASSERT_EQ(a1, neurons[i].a(1));
        ASSERT_EQ(b, neurons[i].b);
        ++i;
    }
    EXPECT_EQ(i, neurons.size());
}

TEST(FiniteRankKernel, BasicProperties)
{
    const ActivationSpec heaviside{1, 0.0};
    const std::vector<Neuron> one{Neuron{(Vector(2) << 1.0, 0.0).finished(), 0.0}};
    const Vector x = (Vector(2) << 0.3, 0.1).finished();
    const Vector y = (Vector(2) << 0.6, -0.4).finished();
    EXPECT_EQ(finite_rank_kernel(x, y, one, heaviside), 1.0);

    DataSet ds;
    ds.X = Matrix::Zero(1, 2);
    RngStream rng(20, 1);
    const auto neurons = sample_uniform(ds, 500, rng);
    const ActivationSpec smooth{1, 0.05};
    EXPECT_EQ(finite_rank_kernel(x, y, neurons, smooth), finite_rank_kernel(y, x, neurons, smooth));
    EXPECT_GE(finite_rank_kernel(x, x, neurons, smooth), 0.0);
}

TEST(FiniteRankKernel, GramIsPositiveSemidefinite)
{
    RngStream rng(21, 1);
    DataSet ds;
    ds.X = Matrix::Zero(1, 3);
    Matrix X(20, 3);
    for (int k = 0; k < 20; ++k) {
        X.row(k) = sample_unit_sphere(3, rng).transpose() * rng.uniform(0.0, 1.0);
    }
    for (const ActivationSpec act : {ActivationSpec{1, 0.0}, ActivationSpec{2, 0.025}}) {
        const Matrix gram = finite_rank_gram(X, sample_uniform(ds, 300, rng), act);
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
        EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10 * gram.trace());
    }
}

TEST(MonteCarloKernel, OneDimensionalClosedForm)
{
    DataSet ds;
    ds.X = Matrix::Zero(1, 1);
    const ActivationSpec heaviside{1, 0.0};
    SamplerSpec uniform;
    RngStream rng(22, 1);
    const Vector p = Vector::Constant(1, 0.5);
    const Vector q = Vector::Constant(1, -0.5);
    const Vector o = Vector::Zero(1);
    const KernelEstimate off = mc_kernel(p, q, uniform, ds, heaviside, 100000, rng);
    EXPECT_NEAR(off.value, 0.25, 3.0 * off.std_error);
    const KernelEstimate diag = mc_kernel(o, o, uniform, ds, heaviside, 100000, rng);
    EXPECT_NEAR(diag.value, 0.5, 3.0 * diag.std_error);
    EXPECT_EQ(diag.n_samples, 100000U);
}

TEST(MonteCarloKernel, StandardErrorRate)
{
    DataSet ds;
    ds.X = Matrix::Zero(1, 2);
    const ActivationSpec act{1, 0.0};
    RngStream rng(23, 1);
    const Vector x = (Vector(2) << 0.2, 0.3).finished();
    const Vector y = (Vector(2) << -0.4, 0.1).finished();
    const KernelEstimate small = mc_kernel(x, y, SamplerSpec{}, ds, act, 20000, rng);
    const KernelEstimate large = mc_kernel(x, y, SamplerSpec{}, ds, act, 80000, rng);
    EXPECT_NEAR(small.std_error / large.std_error, 2.0, 0.2);
    EXPECT_THROW(mc_kernel(x, y, SamplerSpec{}, ds, act, 99, rng), Error);
}

TEST(MonteCarloKernel, FiniteRankConverges)
{
    DataSet ds;
    ds.X = Matrix::Zero(1, 2);
    const ActivationSpec act{1, 0.0};
    RngStream rng(24, 1);
    std::vector<std::vector<double>> gaps(2);
    for (int pair = 0; pair < 15; ++pair) {
        const Vector x = sample_unit_sphere(2, rng) * rng.uniform(0.0, 1.0);
        const Vector y = sample_unit_sphere(2, rng) * rng.uniform(0.0, 1.0);
        const double exact = 0.5 - (2.0 / std::numbers::pi) * (x - y).norm() / 4.0;
        std::size_t n = 200;
        for (auto& g : gaps) {
            const double k_n = finite_rank_kernel(x, y, sample_uniform(ds, n, rng), act);
            const double k_10n = finite_rank_kernel(x, y, sample_uniform(ds, 10 * n, rng), act);
            g.push_back(std::abs(k_n - k_10n));
            EXPECT_NEAR(k_10n, exact, 5.0 * 0.5 / std::sqrt(10.0 * n));
            n *= 100;
        }
    }
    for (auto& g : gaps) {
        std::sort(g.begin(), g.end());
    }
    // Two decades of N shrink the median gap by about 10; require at least 3.
    EXPECT_LT(gaps[1][7] * 3.0, gaps[0][7]);
}

TEST(RadialStructure, RotatedPairsAgree)
{
    DataSet ds;
    ds.X = Matrix::Zero(1, 2);
    RngStream rng(25, 1);
    std::vector<std::vector<PointPair>> groups;
    for (int g = 0; g < 4; ++g) {
        const Vector x = sample_unit_sphere(2, rng) * rng.uniform(0.1, 0.9);
        const Vector y = sample_unit_sphere(2, rng) * rng.uniform(0.1, 0.9);
        std::vector<PointPair> group{{x, y}};
        for (int r = 0; r < 3; ++r) {
            const double t = rng.uniform(0.0, 2.0 * std::numbers::pi);
            const Eigen::Matrix2d q = Eigen::Rotation2Dd(t).toRotationMatrix();
            group.emplace_back(q * x, q * y);
        }
        groups.push_back(group);
    }
    const auto report = radial_structure_check(groups, ds, ActivationSpec{1, 0.0}, 100000, rng, 0.02);
    EXPECT_TRUE(report.passed);
    EXPECT_EQ(report.groups.size(), 4U);
    EXPECT_THROW(radial_structure_check(groups, ds, ActivationSpec{1, 0.0}, 200, rng, 0.02), Error);
}

TEST(RadialStructure, SlopeFit)
{
    DataSet ds;
    ds.X = Matrix::Zero(1, 2);
    RngStream rng(26, 1);
    std::vector<PointPair> pairs;
    for (int i = 0; i < 6; ++i) {
        const double t = 0.3 + 0.4 * i;
        pairs.emplace_back((Vector(2) << 0.6, 0.0).finished(), (Vector(2) << 0.6 * std::cos(t), 0.6 * std::sin(t)).finished());
    }
    const RadialSlopeFit fit = fit_radial_slope(pairs, ds, ActivationSpec{1, 0.0}, 200000, rng);
    EXPECT_GT(fit.slope, 0.0);
    EXPECT_LE(fit.max_residual, 4.0 * fit.max_stderr);
    // Closed form for the uniform measure in 2-D: k = 1/2 - |x - x'| / (2 pi).
    EXPECT_NEAR(fit.slope, 1.0 / (2.0 * std::numbers::pi), 0.02);
    EXPECT_NEAR(fit.intercept, 0.5, 0.01);
}

TEST(SmoothedKernel, OneDimensionalConvolution)
{
    // Deterministic quadrature neurons stand in for the uniform measure.
    const int cells = 4000;
    std::vector<Neuron> grid;
    for (int j = 0; j < cells; ++j) {
        const double b = -1.0 + (j + 0.5) * 2.0 / cells;
        grid.push_back(Neuron{Vector::Constant(1, 1.0), b});
        grid.push_back(Neuron{Vector::Constant(1, -1.0), b});
    }
    const double delta = 0.05;
    const ActivationSpec smooth{1, delta};
    auto sharp_kernel = [](double u, double v) { return 0.5 - std::abs(u - v) / 4.0; };
    for (auto [x, y] : {std::pair{0.2, -0.3}, std::pair{0.0, 0.0}, std::pair{0.4, 0.35}}) {
        const double lhs = finite_rank_kernel(Vector::Constant(1, x), Vector::Constant(1, y), grid, smooth);
        const int n = 400;
        const double h = 20.0 * delta / n;
        double rhs = 0.0;
        for (int i = 0; i < n; ++i) {
            const double u = x - 10.0 * delta + (i + 0.5) * h;
            for (int j = 0; j < n; ++j) {
                const double v = y - 10.0 * delta + (j + 0.5) * h;
                rhs += eval_bump(smooth, x - u) * eval_bump(smooth, y - v) * sharp_kernel(u, v) * h * h;
            }
        }
        EXPECT_NEAR(lhs, rhs, 1e-3) << x << " " << y;
    }
}
