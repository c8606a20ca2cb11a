#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ccbi/hermite.hpp"

using namespace ccbi;

TEST(Hermite, LowOrdersAndRecurrence)
{
    EXPECT_EQ(hermite(0, 0.3), 1.0);
    EXPECT_EQ(hermite(1, 0.3), 0.3);
    EXPECT_NEAR(hermite(2, 0.3), 0.09 - 1.0, 1e-15);
    EXPECT_NEAR(hermite(3, 2.0), 8.0 - 6.0, 1e-15);
    // numpy.polynomial.hermite_e.hermeval
    EXPECT_NEAR(hermite(4, 1.3), -4.283900000000001, 1e-12);
    EXPECT_NEAR(hermite(6, -0.7), 3.566148999999996, 1e-12);
}

TEST(Hermite, ValuesAgreeWithScalar)
{
    std::vector<double> v(7);
    hermite_values(-1.7, v);
    for (unsigned k = 0; k < v.size(); ++k) {
        EXPECT_NEAR(v[k], hermite(k, -1.7), 1e-12);
    }
}

TEST(Hermite, NormSquaredIsFactorial)
{
    EXPECT_EQ(hermite_norm_squared(0), 1.0);
    EXPECT_EQ(hermite_norm_squared(1), 1.0);
    EXPECT_EQ(hermite_norm_squared(4), 24.0);
    EXPECT_EQ(hermite_norm_squared(6), 720.0);
}

TEST(GaussHermite, FivePointRuleMatchesNumpy)
{
    // hermegauss(5), weights divided by sqrt(2 pi)
    const double nodes[] = {-2.8569700138728056, -1.355626179974266, 0.0, 1.355626179974266, 2.8569700138728056};
    const double weights[] = {0.011257411327720677, 0.22207592200561257, 0.5333333333333335, 0.22207592200561257,
                              0.011257411327720677};
    const auto rule = gauss_hermite_rule(5);
    ASSERT_EQ(rule.size(), 5u);
    for (int i = 0; i < 5; ++i) {
        EXPECT_NEAR(rule.nodes[i], nodes[i], 1e-13);
        EXPECT_NEAR(rule.weights[i], weights[i], 1e-13);
    }
    EXPECT_EQ(rule.nodes[2], 0.0);
}

TEST(GaussHermite, WeightsSumToOneAndNodesSymmetric)
{
    for (std::size_t n : {1, 2, 3, 6, 11, 20}) {
        const auto rule = gauss_hermite_rule(n);
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum += rule.weights[i];
            EXPECT_EQ(rule.nodes[i], -rule.nodes[n - 1 - i]);
            EXPECT_EQ(rule.weights[i], rule.weights[n - 1 - i]);
            if (i > 0) {
                EXPECT_LT(rule.nodes[i - 1], rule.nodes[i]);
            }
        }
        EXPECT_NEAR(sum, 1.0, 1e-14);
    }
}

TEST(GaussHermite, ExactForMomentsUpToDegree2nMinus1)
{
    // E[xi^(2k)] = (2k-1)!!
    const auto rule = gauss_hermite_rule(6);
    double dfact = 1.0;
    for (int k = 0; k <= 5; ++k) {
        if (k > 0) {
            dfact *= 2.0 * k - 1.0;
        }
        double m = 0.0;
        for (std::size_t i = 0; i < rule.size(); ++i) {
            m += rule.weights[i] * std::pow(rule.nodes[i], 2 * k);
        }
        EXPECT_NEAR(m, dfact, 1e-10 * dfact) << "moment " << 2 * k;
    }
}

TEST(GaussHermite, OrthogonalityInTwoDimensions)
{
    const auto rule = tensor_rule(gauss_hermite_rule(5), 2);
    ASSERT_EQ(rule.size(), 25u);
    for (unsigned a = 0; a <= 3; ++a) {
        for (unsigned b = 0; b <= 3; ++b) {
            const double ip = inner_product([&](std::span<const double> x) { return hermite(a, x[0]) * hermite(b, x[1]); },
                                            [&](std::span<const double> x) { return hermite(a, x[0]) * hermite(1, x[1]); },
                                            rule);
            const double expected = b == 1 ? hermite_norm_squared(a) : 0.0;
            EXPECT_NEAR(ip, expected, 1e-12) << a << "," << b;
        }
    }
}

TEST(GaussHermite, TensorLayoutLastDimensionFastest)
{
    const auto r1 = gauss_hermite_rule(3);
    const auto r2 = tensor_rule(r1, 2);
    EXPECT_EQ(r2.point(1)[0], r1.nodes[0]);
    EXPECT_EQ(r2.point(1)[1], r1.nodes[1]);
    EXPECT_EQ(r2.point(3)[0], r1.nodes[1]);
    EXPECT_EQ(r2.point(3)[1], r1.nodes[0]);
}

TEST(GaussHermite, RejectsEmptyRule)
{
    EXPECT_THROW(gauss_hermite_rule(0), ValidationError);
}
