#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "nurf/geometry.hpp"
#include "nurf/rng.hpp"

using namespace nurf;

TEST(Hyperplane, ThroughOrigin)
{
    const Neuron n = hyperplane_from_point_gradient(Vector::Zero(2), (Vector(2) << 0.0, 2.0).finished());
    EXPECT_DOUBLE_EQ(n.a(0), 0.0);
    EXPECT_DOUBLE_EQ(n.a(1), 1.0);
    EXPECT_DOUBLE_EQ(n.b, 0.0);
}

TEST(Hyperplane, NormalizesAndIntersects)
{
    const Neuron n = hyperplane_from_point_gradient((Vector(2) << 1.0, 0.0).finished(), (Vector(2) << 3.0, 0.0).finished());
    EXPECT_DOUBLE_EQ(n.a(0), 1.0);
    EXPECT_DOUBLE_EQ(n.a(1), 0.0);
    EXPECT_DOUBLE_EQ(n.b, -1.0);
}

TEST(Hyperplane, PassesThroughPoint)
{
    RngStream rng(3, 4);
    for (int i = 0; i < 100; ++i) {
        Vector x(4), g(4);
        for (int j = 0; j < 4; ++j) {
            x(j) = rng.normal();
            g(j) = rng.normal();
        }
        const Neuron n = hyperplane_from_point_gradient(x, g);
        EXPECT_NEAR(n.a.dot(x) + n.b, 0.0, 1e-12);
        EXPECT_NEAR(n.a.norm(), 1.0, 1e-12);
    }
}

TEST(Hyperplane, ZeroGradientIsDegenerate)
{
    try {
        hyperplane_from_point_gradient(Vector::Zero(3), Vector::Zero(3));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::degenerate_gradient);
    }
}

TEST(Acg, RankOneFactorGivesAntipodalPair)
{
    RngStream rng(5, 6);
    GaussianFactor f{(Matrix(2, 1) << 1.0, 0.0).finished()};
    int plus = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const Vector a = sample_acg(f, rng);
        ASSERT_NEAR(std::abs(a(0)), 1.0, 1e-15);
        ASSERT_EQ(a(1), 0.0);
        plus += a(0) > 0 ? 1 : 0;
    }
    EXPECT_NEAR(plus, n / 2, 3.0 * std::sqrt(n * 0.25));
}

TEST(Acg, AnisotropicQuadrantOracle)
{
    // For C = diag(4, 1) the ACG law of the angle is uniform after the map
    // tan(theta') = tan(theta)/2, so P(|a1| > |a2|) = (2/pi) atan(2).
    RngStream rng(8, 9);
    GaussianFactor f{Matrix(Eigen::Vector2d(2.0, 1.0).asDiagonal())};
    const int n = 100000;
    int hits = 0;
    for (int i = 0; i < n; ++i) {
        const Vector a = sample_acg(f, rng);
        hits += std::abs(a(0)) > std::abs(a(1)) ? 1 : 0;
    }
    const double p = 2.0 / std::numbers::pi * std::atan(2.0);
    EXPECT_NEAR(static_cast<double>(hits) / n, p, 4.0 * std::sqrt(p * (1 - p) / n));
}

TEST(Acg, UnitNormInRangeAndCentered)
{
    RngStream rng(10, 11);
    Matrix cols(3, 2);
    cols << 1.0, 0.5, -2.0, 0.0, 0.3, 1.0;
    const GaussianFactor f{cols};
    const Matrix q = cols.householderQr().householderQ() * Matrix::Identity(3, 2);
    const int n = 100000;
    Vector mean = Vector::Zero(3);
    for (int i = 0; i < n; ++i) {
        const Vector a = sample_acg(f, rng);
        ASSERT_NEAR(a.norm(), 1.0, 1e-12);
        ASSERT_LE((a - q * (q.transpose() * a)).norm(), 1e-10);
        mean += a;
    }
    EXPECT_LE((mean / n).norm(), 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST(Acg, ZeroFactorThrows)
{
    RngStream rng(1, 1);
    try {
        sample_acg(GaussianFactor{Matrix::Zero(3, 2)}, rng);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::zero_covariance);
    }
}

TEST(Acg, CompressedFactorKeepsCovariance)
{
    RngStream rng(2, 3);
    Matrix wide(3, 50);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 50; ++j) {
            wide(i, j) = rng.normal();
        }
    }
    wide.row(2) = wide.row(0) - wide.row(1);
    const GaussianFactor f = GaussianFactor::from_columns(wide);
    EXPECT_EQ(f.rank(), 2);
    const Matrix c = wide * wide.transpose();
    EXPECT_LE((f.columns * f.columns.transpose() - c).norm(), 1e-10 * c.norm());
}

TEST(Standardize, UnitIntervalMidpoint)
{
    Box box{Vector::Constant(1, 0.0), Vector::Constant(1, 1.0)};
    const AffineMap map = standardizing_map(box);
    EXPECT_DOUBLE_EQ(map.apply(Vector::Constant(1, 0.5))(0), 0.0);
    EXPECT_DOUBLE_EQ(map.apply(Vector::Constant(1, 1.0))(0), 1.0);
}

TEST(Standardize, CornerOnUnitSphere)
{
    Box box{Vector::Zero(4), Vector::Ones(4)};
    const AffineMap map = standardizing_map(box);
    EXPECT_NEAR(map.apply(Vector::Ones(4)).norm(), 1.0, 1e-15);
}

TEST(Standardize, RoundTrip)
{
    Box box{(Vector(3) << -2.0, 10.0, 0.05).finished(), (Vector(3) << 5.0, 5e4, 0.15).finished()};
    RngStream rng(4, 4);
    Matrix raw(20, 3);
    for (int k = 0; k < 20; ++k) {
        for (int i = 0; i < 3; ++i) {
            raw(k, i) = rng.uniform(box.lower(i), box.upper(i));
        }
    }
    const auto [std_points, map] = standardize(raw, box);
    for (int k = 0; k < 20; ++k) {
        EXPECT_LE(std_points.row(k).norm(), 1.0 + 1e-12);
        const Vector back = map.invert(std_points.row(k).transpose());
        for (int i = 0; i < 3; ++i) {
            EXPECT_NEAR(back(i), raw(k, i), 1e-12 * std::max(1.0, std::abs(raw(k, i))));
        }
    }
}

TEST(Standardize, EmptyBoxRejected)
{
    Box box{Vector::Zero(2), (Vector(2) << 1.0, 0.0).finished()};
    try {
        standardizing_map(box);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::empty_box);
    }
}

TEST(Rng, EqualStreamsAreIdentical)
{
    RngStream a(123, 456);
    RngStream b(123, 456);
    RngStream c(123, 457);
    bool differs = false;
    for (int i = 0; i < 1000; ++i) {
        const double x = a.normal();
        ASSERT_EQ(x, b.normal());
        differs = differs || x != c.normal();
    }
    EXPECT_TRUE(differs);
}

TEST(Rng, SubstreamDoesNotAdvanceParent)
{
    RngStream a(1, 2);
    RngStream b(1, 2);
    RngStream sub = a.substream(99);
    sub.uniform();
    EXPECT_EQ(a.uniform(), b.uniform());
}
