#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "klrough/gaussian_process.hpp"
#include "klrough/variation_metrics.hpp"

using namespace klrough;

TEST(Kernel, FbmHalfIsBrownian) {
    const auto b = CovKernel::brownian();
    const auto f = CovKernel::fbm(0.5);
    for (double s : {0.0, 0.1, 0.5, 0.9, 1.0})
        for (double t : {0.0, 0.3, 0.5, 1.0}) EXPECT_NEAR(kernel_eval(f, s, t), kernel_eval(b, s, t), 1e-15);
}

TEST(Kernel, FbmDiagonal) {
    for (double h : {0.1, 0.3, 0.35, 0.7, 0.95}) {
        const auto k = CovKernel::fbm(h);
        EXPECT_DOUBLE_EQ(kernel_eval(k, 1.0, 1.0), 1.0);
        for (double s : {0.2, 0.6}) EXPECT_NEAR(kernel_eval(k, s, s), std::pow(s, 2 * h), 1e-15);
    }
}

TEST(Kernel, Errors) {
    EXPECT_THROW(CovKernel::fbm(0.0), InputError);
    EXPECT_THROW(CovKernel::fbm(1.0), InputError);
    EXPECT_THROW(kernel_eval(CovKernel::brownian(), -0.1, 0.5), InputError);
    EXPECT_THROW(kernel_eval(CovKernel::brownian(), 0.5, 1.5), InputError);
    EXPECT_THROW(CovKernel::from_table({0.0, 1.0}, Eigen::MatrixXd::Zero(3, 3)), InputError);
}

TEST(Kernel, TableInterpolatesAndReproducesNodes) {
    std::mt19937_64 rng(41);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd f(5, 5);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) f(i, j) = normal(rng);
    const Eigen::MatrixXd m = f * f.transpose();
    const std::vector<double> times{0.0, 0.2, 0.5, 0.6, 1.0};
    const auto k = CovKernel::from_table(times, m);
    const auto r = cov_matrix(k, TimeGrid(times));
    EXPECT_EQ((r.entries - m).cwiseAbs().maxCoeff(), 0.0);
    const double mid = kernel_eval(k, 0.35, 0.8);
    const double expected = 0.25 * (m(1, 3) + m(2, 3) + m(1, 4) + m(2, 4));
    EXPECT_NEAR(mid, expected, 1e-14);
}

TEST(CovMatrixTest, BrownianThreeNodes) {
    const auto r = cov_matrix(CovKernel::brownian(), TimeGrid::uniform(2));
    Eigen::Matrix3d expected;
    expected << 0, 0, 0, 0, 0.5, 0.5, 0, 0.5, 1;
    EXPECT_EQ((r.entries - expected).cwiseAbs().maxCoeff(), 0.0);
    const auto f = cov_matrix(CovKernel::fbm(0.5), TimeGrid::uniform(2));
    EXPECT_LE((f.entries - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(CovMatrixTest, NonPsdTableIsDataError) {
    Eigen::Matrix3d bad;
    bad << 0, 0, 0, 0, 1, 2, 0, 2, 1;
    EXPECT_THROW(check_psd(bad), DataError);
    Eigen::Matrix3d asym;
    asym << 1, 0.5, 0, 0, 1, 0, 0, 0, 1;
    EXPECT_THROW(check_psd(asym), DataError);
    const auto k = CovKernel::from_table({0.0, 0.5, 1.0}, bad);
    EXPECT_THROW(cov_matrix(k, TimeGrid::uniform(2)), DataError);
}

TEST(CovMatrixTest, FbmIncrementLaw) {
    const double h = 0.35;
    const auto grid = TimeGrid::uniform(16);
    const auto r = cov_matrix(CovKernel::fbm(h), grid);
    for (int a = 0; a < 16; ++a)
        for (int b = a + 1; b <= 16; ++b)
            EXPECT_NEAR(rect_increment(r, a, b, a, b), std::pow(grid[b] - grid[a], 2 * h), 1e-14);
}

TEST(Sampling, Degenerate) {
    const auto r = cov_matrix(CovKernel::brownian(), TimeGrid::uniform(4));
    EXPECT_TRUE(sample(r, 2, 0, 1).empty());
    const CovMatrix zero{TimeGrid::uniform(4), Eigen::MatrixXd::Zero(5, 5)};
    for (const auto& p : sample(zero, 3, 5, 2))
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < 5; ++k) EXPECT_EQ(p(i, k), 0.0);
}

TEST(Sampling, StartsAtZeroAndFactorReproducesCovariance) {
    const auto r = cov_matrix(CovKernel::fbm(0.3), TimeGrid::uniform(32));
    const Eigen::MatrixXd l = gaussian_factor(r);
    EXPECT_LE((l * l.transpose() - r.entries).cwiseAbs().maxCoeff(), 1e-11);
    for (const auto& p : sample(r, 2, 4, 3)) EXPECT_EQ(p(1, 0), 0.0);
}

TEST(Sampling, SemidefiniteMatrixFactorizes) {
    // Rank-one covariance: later pivots vanish and are replaced by the jitter.
    Eigen::VectorXd h(5);
    h << 0, 1, 2, 3, 4;
    const CovMatrix r{TimeGrid::uniform(4), h * h.transpose()};
    const Eigen::MatrixXd l = gaussian_factor(r);
    EXPECT_LE((l * l.transpose() - r.entries).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Sampling, NegativePivotIsDataError) {
    Eigen::Matrix3d bad;
    bad << 0, 0, 0, 0, 1, 2, 0, 2, 1;
    EXPECT_THROW(gaussian_factor(CovMatrix{TimeGrid::uniform(2), bad}), DataError);
}

TEST(Sampling, EmpiricalCovarianceMatchesKernel) {
    const int n = 64, m = 20000;
    const auto r = cov_matrix(CovKernel::brownian(), TimeGrid::uniform(n));
    const auto paths = sample(r, 1, m, 42);
    Eigen::MatrixXd emp = Eigen::MatrixXd::Zero(n + 1, n + 1);
    for (const auto& p : paths) {
        const Eigen::Map<const Eigen::VectorXd> x(p.component(0).data(), n + 1);
        emp.noalias() += x * x.transpose();
    }
    emp /= m;
    double max_se = 0.0;
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) max_se = std::max(max_se, std::sqrt((r(i, i) * r(j, j) + r(i, j) * r(i, j)) / m));
    EXPECT_LE((emp - r.entries).cwiseAbs().maxCoeff(), 5 * max_se);
}

TEST(Sampling, ComponentsAreIndependent) {
    const int m = 20000;
    const auto r = cov_matrix(CovKernel::fbm(0.35), TimeGrid::uniform(8));
    const auto paths = sample(r, 2, m, 43);
    for (int k : {2, 5, 8}) {
        double s = 0.0;
        for (const auto& p : paths) s += p(0, k) * p(1, k);
        const double se = std::sqrt(r(k, k) * r(k, k) / m);
        EXPECT_LE(std::abs(s / m), 4 * se);
    }
}

TEST(Sampling, DeterministicGivenSeed) {
    const auto r = cov_matrix(CovKernel::fbm(0.4), TimeGrid::uniform(16));
    const auto a = sample(r, 2, 10, 7), b = sample(r, 2, 10, 7), c = sample(r, 2, 10, 8);
    for (std::size_t s = 0; s < a.size(); ++s)
        for (int k = 0; k <= 16; ++k) {
            EXPECT_EQ(a[s](0, k), b[s](0, k));
            EXPECT_EQ(a[s](1, k), b[s](1, k));
        }
    EXPECT_NE(a[3](0, 5), c[3](0, 5));
    // Draw s does not depend on how many draws are requested.
    const auto prefix = sample(r, 2, 4, 7);
    EXPECT_EQ(prefix[3](1, 9), a[3](1, 9));
}

TEST(Sampling, BrownianFastSamplerHasBrownianIncrements) {
    const int m = 20000;
    const auto grid = TimeGrid({0.0, 0.1, 0.4, 1.0});
    const auto paths = sample_brownian(grid, 1, m, 44);
    for (int k = 1; k <= 3; ++k) {
        double s = 0.0;
        for (const auto& p : paths) s += std::pow(p(0, k) - p(0, k - 1), 2);
        const double dt = grid[k] - grid[k - 1];
        EXPECT_NEAR(s / m, dt, 4 * dt * std::sqrt(2.0 / m));
    }
}
