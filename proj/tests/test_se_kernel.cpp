#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "opgp/se_kernel.hpp"
#include "oracles.hpp"

using namespace opgp;

TEST(Hermite, ClosedForms) {
    for (double u : {-2.5, -0.3, 0.0, 0.7, 3.1}) {
        EXPECT_DOUBLE_EQ(hermite_he(0, u), 1.0);
        EXPECT_DOUBLE_EQ(hermite_he(1, u), u);
        EXPECT_NEAR(hermite_he(2, u), u * u - 1.0, 1e-12);
        EXPECT_NEAR(hermite_he(3, u), u * u * u - 3.0 * u, 1e-12);
        EXPECT_NEAR(hermite_he(4, u), u * u * u * u - 6.0 * u * u + 3.0, 1e-12);
    }
}

TEST(SeKernel, ValueAndSymmetry) {
    const SeHyperparams theta{2.0, 0.5, 0.0};
    Eigen::Vector2d x(0.1, 0.2), y(0.4, -0.3);
    EXPECT_DOUBLE_EQ(se_eval(x, x, theta), 2.0);
    EXPECT_DOUBLE_EQ(se_eval(x, y, theta), se_eval(y, x, theta));
    EXPECT_NEAR(se_eval(x, y, theta), 2.0 * std::exp(-0.5 * 0.34 / 0.25), 1e-15);
}

TEST(SeKernel, DimensionMismatchThrows) {
    Eigen::Vector2d x(0, 0);
    Eigen::Vector3d y(0, 0, 0);
    EXPECT_THROW((void)se_eval(x, y, {}), DimensionError);
    EXPECT_THROW((void)se_derivative({{1, 0}, {0, 0}}, x, y, {}), DimensionError);
}

TEST(SeKernel, InvalidHyperparametersRejected) {
    EXPECT_THROW(SeHyperparams({0.0, 1.0, 0.0}).validate(), Error);
    EXPECT_THROW(SeHyperparams({1.0, -1.0, 0.0}).validate(), Error);
    EXPECT_THROW(SeHyperparams({1.0, 1.0, -1e-3}).validate(), Error);
    EXPECT_THROW(SeHyperparams({1.0, std::nan(""), 0.0}).validate(), Error);
}

TEST(SeDerivative, OrderAboveFourThrows) {
    Eigen::Vector2d x(0.1, 0.2), y(0.0, 0.0);
    EXPECT_THROW((void)se_derivative({{3, 0}, {0, 2}}, x, y, {}), UnsupportedOrder);
    EXPECT_NO_THROW((void)se_derivative({{2, 0}, {0, 2}}, x, y, {}));
}

TEST(SeDerivative, KnownFirstAndSecondDerivatives) {
    const SeHyperparams theta{1.5, 0.8, 0.0};
    Eigen::Vector2d x(0.3, -0.2), y(-0.1, 0.4);
    const double k = se_eval(x, y, theta);
    const double l2 = 0.64;
    const double u0 = x(0) - y(0);
    const double u1 = x(1) - y(1);
    EXPECT_NEAR(se_derivative({{1, 0}, {0, 0}}, x, y, theta), -u0 / l2 * k, 1e-14);
    EXPECT_NEAR(se_derivative({{0, 0}, {1, 0}}, x, y, theta), u0 / l2 * k, 1e-14);
    EXPECT_NEAR(se_derivative({{1, 0}, {1, 0}}, x, y, theta), (1.0 / l2 - u0 * u0 / (l2 * l2)) * k, 1e-14);
    EXPECT_NEAR(se_derivative({{1, 0}, {0, 1}}, x, y, theta), -u0 * u1 / (l2 * l2) * k, 1e-14);
}

TEST(SeDerivative, SwappingArgumentsSwapsMultiIndex) {
    const SeHyperparams theta{1.0, 1.3, 0.0};
    Eigen::Vector3d x(0.2, -0.5, 0.9), y(-0.4, 0.1, 0.3);
    for (const auto& [a, b] : oracle::all_multi_indices(3, 4))
        EXPECT_NEAR(se_derivative({a, b}, x, y, theta), se_derivative({b, a}, y, x, theta), 1e-12);
}

TEST(SeDerivative, MatchesHighPrecisionFiniteDifferences) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> coord(-1.5, 1.5);
    std::uniform_real_distribution<double> log_l(std::log(0.4), std::log(2.5));
    std::uniform_real_distribution<double> log_s(std::log(0.3), std::log(3.0));
    for (int cfg = 0; cfg < 12; ++cfg) {
        const std::size_t dims = 1 + static_cast<std::size_t>(cfg % 2);
        const SeHyperparams theta{std::exp(log_s(rng)), std::exp(log_l(rng)), 0.0};
        Eigen::VectorXd x(static_cast<Eigen::Index>(dims)), y(static_cast<Eigen::Index>(dims));
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            x(i) = coord(rng) * theta.length_scale;
            y(i) = coord(rng) * theta.length_scale;
        }
        const SeDerivativeTable table(x, y, theta);
        for (const auto& [a, b] : oracle::all_multi_indices(dims, 4)) {
            const int n = std::accumulate(a.begin(), a.end(), 0) + std::accumulate(b.begin(), b.end(), 0);
            const double fd = oracle::se_derivative_fd(a, b, x, y, theta.signal_variance, theta.length_scale);
            const double lib = table.derivative(a, b);
            const double scale = theta.signal_variance / std::pow(theta.length_scale, n);
            EXPECT_LE(std::abs(lib - fd), 1e-5 * std::max(std::abs(fd), 1e-6 * scale))
                << "config " << cfg << " order " << n;
        }
    }
}
