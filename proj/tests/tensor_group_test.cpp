#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "klrough/tensor_group.hpp"
#include "test_support.hpp"

using namespace klrough;
using klrough::testing::random_group;
using klrough::testing::random_lie;
using klrough::testing::random_tensor;

namespace {

GroupElement line(std::initializer_list<double> v, int depth) {
    std::vector<double> vv(v);
    return exp(LieElement::from_vector(vv, depth));
}

}  // namespace

TEST(TensorGroup, IdentityIsNeutral) {
    std::mt19937_64 rng(1);
    const auto g = random_group(rng, 3, 3);
    const auto e = GroupElement::identity(3, 3);
    EXPECT_EQ(mul(e.tensor(), g.tensor()).max_abs_diff(g.tensor()), 0.0);
    EXPECT_EQ((g * e).tensor().max_abs_diff(g.tensor()), 0.0);
}

TEST(TensorGroup, TruncatedProductOneDimension) {
    TensorElement a = TensorElement::unit(1, 2), b = TensorElement::unit(1, 2);
    a(0) = 1.5;
    b(0) = -0.25;
    const auto c = mul(a, b);
    EXPECT_DOUBLE_EQ(c.scalar(), 1.0);
    EXPECT_DOUBLE_EQ(c(0), 1.25);
    EXPECT_DOUBLE_EQ(c(0, 0), 1.5 * -0.25);
}

TEST(TensorGroup, ProductIsAssociative) {
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 50; ++rep) {
        const auto a = random_tensor(rng, 3, 3, 0.7), b = random_tensor(rng, 3, 3, -1.2), c = random_tensor(rng, 3, 3, 0.4);
        EXPECT_LE(mul(mul(a, b), c).max_abs_diff(mul(a, mul(b, c))), 1e-12);
    }
}

TEST(TensorGroup, ShapeMismatchIsInputError) {
    EXPECT_THROW(mul(TensorElement(2, 3), TensorElement(3, 3)), InputError);
    EXPECT_THROW(mul(TensorElement(2, 2), TensorElement(2, 3)), InputError);
    EXPECT_THROW(TensorElement(0, 2), InputError);
    EXPECT_THROW(TensorElement(2, 4), InputError);
}

TEST(TensorGroup, ExpOfZeroIsIdentity) {
    EXPECT_EQ(exp(LieElement(4, 3)).tensor().max_abs_diff(GroupElement::identity(4, 3).tensor()), 0.0);
}

TEST(TensorGroup, ExpScalarPowerSeries) {
    const double a = 0.8;
    const auto g = line({a}, 3);
    EXPECT_DOUBLE_EQ(g(0), a);
    EXPECT_DOUBLE_EQ(g(0, 0), a * a / 2);
    EXPECT_DOUBLE_EQ(g(0, 0, 0), a * a * a / 6);
}

TEST(TensorGroup, ExpRejectsScalarPart) {
    TensorElement t(2, 3);
    t.scalar() = 0.5;
    EXPECT_THROW(exp(t), InputError);
    EXPECT_THROW(log(t), InputError);
}

TEST(TensorGroup, LogExpRoundTripOnLieElements) {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 100; ++rep) {
        const auto l = random_lie(rng, 4, 3);
        EXPECT_LE(log(exp(l)).tensor().max_abs_diff(l.tensor()), 1e-12);
    }
}

TEST(TensorGroup, LogOfIdentityAndOfLines) {
    EXPECT_EQ(log(GroupElement::identity(3, 3)).tensor().max_abs_diff(TensorElement(3, 3)), 0.0);
    const auto l = log(line({2.5}, 3));
    EXPECT_DOUBLE_EQ(l(0), 2.5);
    EXPECT_NEAR(l(0, 0), 0.0, 1e-14);
    EXPECT_NEAR(l(0, 0, 0), 0.0, 1e-14);
    const auto l3 = log(line({1.0, -2.0, 0.5}, 3));
    LieElement expected = LieElement::from_vector(std::vector<double>{1.0, -2.0, 0.5}, 3);
    EXPECT_LE(l3.tensor().max_abs_diff(expected.tensor()), 1e-15);
}

TEST(TensorGroup, Inverse) {
    const auto e = GroupElement::identity(2, 3);
    EXPECT_EQ(inverse(e).tensor().max_abs_diff(e.tensor()), 0.0);
    EXPECT_LE(inverse(line({0.3, -1.1}, 3)).tensor().max_abs_diff(line({-0.3, 1.1}, 3).tensor()), 1e-15);
    std::mt19937_64 rng(4);
    for (int rep = 0; rep < 100; ++rep) {
        const auto g = random_group(rng, 3, 3);
        EXPECT_LE((inverse(g) * g).tensor().max_abs_diff(GroupElement::identity(3, 3).tensor()), 1e-12);
        EXPECT_LE(inverse(g).tensor().max_abs_diff(exp(-log(g)).tensor()), 1e-12);
    }
}

TEST(TensorGroup, IncrementAndChen) {
    std::mt19937_64 rng(5);
    const auto g = random_group(rng, 2, 3);
    const auto e = GroupElement::identity(2, 3);
    EXPECT_LE(increment(g, g).tensor().max_abs_diff(e.tensor()), 1e-14);
    EXPECT_LE(increment(e, g).tensor().max_abs_diff(g.tensor()), 0.0);
    for (int rep = 0; rep < 100; ++rep) {
        const auto a = random_group(rng, 3, 3), b = random_group(rng, 3, 3), c = random_group(rng, 3, 3);
        EXPECT_LE((increment(a, b) * increment(b, c)).tensor().max_abs_diff(increment(a, c).tensor()), 1e-12);
    }
    EXPECT_THROW(increment(GroupElement::identity(2, 3), GroupElement::identity(3, 3)), InputError);
}

TEST(TensorGroup, Dilation) {
    std::mt19937_64 rng(6);
    const auto g = random_group(rng, 3, 3);
    EXPECT_EQ(dilate(1.0, g).tensor().max_abs_diff(g.tensor()), 0.0);
    EXPECT_EQ(dilate(0.0, g).tensor().max_abs_diff(GroupElement::identity(3, 3).tensor()), 0.0);
    EXPECT_LE(dilate(2.0, line({0.4, 0.1, -0.7}, 3)).tensor().max_abs_diff(line({0.8, 0.2, -1.4}, 3).tensor()), 1e-15);
    const auto h = dilate(-1.5, g);
    for (int k = 1; k <= 3; ++k)
        for (std::size_t w = 0; w < g.level(k).size(); ++w) EXPECT_DOUBLE_EQ(h.level(k)[w], std::pow(-1.5, k) * g.level(k)[w]);
}

TEST(TensorGroup, HomogeneousNorm) {
    EXPECT_EQ(hom_norm(GroupElement::identity(3, 3)), 0.0);
    // exp(v), |v| = 5: level norms 5, sqrt(25/2), (125/6)^{1/3}; the same for exp(-v).
    const auto g = line({3.0, 4.0, 0.0}, 3);
    EXPECT_NEAR(std::sqrt(12.5), std::sqrt(std::sqrt(25.0 * 25.0 / 4.0)), 1e-12);
    EXPECT_NEAR(hom_norm(g), 5.0, 1e-12);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> normal(0.0, 2.0);
    for (int rep = 0; rep < 200; ++rep) {
        const auto x = random_group(rng, 3, 3);
        const double lambda = normal(rng);
        EXPECT_NEAR(hom_norm(dilate(lambda, x)), std::abs(lambda) * hom_norm(x), 1e-12 * (1 + std::abs(lambda) * hom_norm(x)));
        EXPECT_NEAR(hom_norm(x), hom_norm(inverse(x)), 1e-12);
    }
}

// The homogeneous norm is subadditive only up to a constant. Record the empirical constant on
// random pairs; it must be finite and at least 1 (g = h on a line gives equality).
TEST(TensorGroup, HomogeneousNormSubadditivityConstant) {
    std::mt19937_64 rng(8);
    double worst = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
        const auto g = random_group(rng, 3, 3), h = random_group(rng, 3, 3);
        worst = std::max(worst, hom_norm(g * h) / (hom_norm(g) + hom_norm(h)));
    }
    RecordProperty("empirical_subadditivity_constant", std::to_string(worst));
    std::cout << "empirical subadditivity constant C_sub = " << worst << '\n';
    EXPECT_LT(worst, 10.0);
    const auto a = line({1.0, 2.0, 0.0}, 3);
    EXPECT_NEAR(hom_norm(a * a), 2.0 * hom_norm(a), 1e-12);
}

TEST(TensorGroup, DistanceIsLeftInvariantAndSymmetric) {
    std::mt19937_64 rng(9);
    for (int rep = 0; rep < 100; ++rep) {
        const auto g = random_group(rng, 2, 3), h = random_group(rng, 2, 3), k = random_group(rng, 2, 3);
        EXPECT_NEAR(dist(k * g, k * h), dist(g, h), 1e-12 * (1 + dist(g, h)));
        EXPECT_NEAR(dist(g, h), dist(h, g), 1e-12);
        EXPECT_LE(dist(g, g), 1e-4);  // cube root of level-3 rounding noise
    }
    const auto v = line({0.5, -0.2}, 3);
    EXPECT_DOUBLE_EQ(dist(GroupElement::identity(2, 3), v), hom_norm(v));
}

TEST(TensorGroup, BracketIIJ) {
    const auto b = bracket_iij_tensor(0, 1, 2);
    EXPECT_EQ(b(0, 0, 1), 1.0);
    EXPECT_EQ(b(0, 1, 0), -2.0);
    EXPECT_EQ(b(1, 0, 0), 1.0);
    double others = 0.0;
    for (double v : b.tensor().coefficients()) others += std::abs(v);
    EXPECT_EQ(others, 4.0);
    EXPECT_THROW(bracket_iij_tensor(1, 1, 2), InputError);
    EXPECT_THROW(bracket_iij_tensor(0, 2, 2), InputError);
}

TEST(TensorGroup, BracketIsOrthogonalToSymmetricTensors) {
    std::mt19937_64 rng(10);
    std::normal_distribution<double> normal;
    const int d = 3;
    for (int rep = 0; rep < 20; ++rep) {
        // Fully symmetric tensor from a symmetrized random one.
        std::vector<double> raw(27);
        for (double& x : raw) x = normal(rng);
        auto at = [&](int i, int j, int k) { return raw[static_cast<std::size_t>((i * d + j) * d + k)]; };
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                if (i == j) continue;
                const auto br = bracket_iij_tensor(i, j, d);
                double contraction = 0.0;
                for (int a = 0; a < d; ++a)
                    for (int b = 0; b < d; ++b)
                        for (int c = 0; c < d; ++c) {
                            const double sym = (at(a, b, c) + at(a, c, b) + at(b, a, c) + at(b, c, a) + at(c, a, b) + at(c, b, a)) / 6;
                            contraction += br(a, b, c) * sym;
                        }
                EXPECT_NEAR(contraction, 0.0, 1e-12);
            }
    }
}

TEST(TensorGroup, ExpOfBracketIsGroupLike) {
    const auto g = exp(bracket_iij_tensor(1, 0, 3));
    EXPECT_LE(shuffle_defect(g), 1e-12);
}

TEST(TensorGroup, ShuffleRelationsOfExp) {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 200; ++rep) EXPECT_LE(shuffle_defect(random_group(rng, 4, 3)), 1e-9);
    // A non-group-like tensor is detected.
    TensorElement t = TensorElement::unit(2, 2);
    t(0) = 1.0;
    EXPECT_GT(shuffle_defect(t), 0.1);
}

TEST(TensorGroup, LieLevelTwoIsAntisymmetric) {
    std::mt19937_64 rng(12);
    for (int rep = 0; rep < 100; ++rep) {
        const auto l = log(random_group(rng, 3, 3) * random_group(rng, 3, 3));
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) EXPECT_NEAR(l(i, j), -l(j, i), 1e-9);
    }
}
