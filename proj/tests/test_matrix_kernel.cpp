#include <gtest/gtest.h>

#include <random>

#include "opgp/annihilator.hpp"
#include "opgp/constraint_check.hpp"
#include "opgp/gp.hpp"
#include "opgp/kernel.hpp"
#include "opgp/matrix_kernel.hpp"

using namespace opgp;

namespace {

Eigen::MatrixXd random_points(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) x(i, j) = u(rng);
    return x;
}

double min_over_max_eigen(const Eigen::MatrixXd& m) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() / es.eigenvalues().maxCoeff();
}

} // namespace

TEST(TransformKernel, IdentityTransformEqualsDiagonalKernel) {
    const SeHyperparams theta{1.7, 0.6, 0.0};
    const auto expr = transform_kernel(OperatorMatrix::identity(2, 2), theta);
    Eigen::Vector2d x(0.3, 0.1), y(-0.2, 0.5);
    EXPECT_TRUE(eval_matrix_kernel(expr, x, y).isApprox(diagonal_kernel(x, y, theta, 2), 1e-14));
}

TEST(TransformKernel, DivergenceFreeExpressionIsHermitian) {
    const auto g = construct_g(make_divergence_operator(2)).g;
    const auto expr = transform_kernel(g, {});
    EXPECT_TRUE(expr.is_hermitian());
    EXPECT_EQ(expr.max_order(), 2);
    // K11 = d^2 k / dx2 dx2'.
    ASSERT_EQ(expr.entry(0, 0).size(), 1U);
    EXPECT_EQ(expr.entry(0, 0)[0].index, (DerivativeMultiIndex{{0, 1}, {0, 1}}));
    EXPECT_EQ(expr.entry(0, 0)[0].coeff, 1.0);
    // K12 = -d^2 k / dx2 dx1'.
    ASSERT_EQ(expr.entry(0, 1).size(), 1U);
    EXPECT_EQ(expr.entry(0, 1)[0].index, (DerivativeMultiIndex{{0, 1}, {1, 0}}));
    EXPECT_EQ(expr.entry(0, 1)[0].coeff, -1.0);
}

TEST(TransformKernel, PerColumnGroupsUseOwnHyperparameters) {
    const auto g = construct_g(make_divergence_operator(3)).g;
    auto k = MatrixKernel::transformed(g, {1.0, 1.0, 0.0}, true);
    ASSERT_EQ(k.hyperparams().size(), 3U);
    auto groups = k.hyperparams();
    groups[1].length_scale = 0.5;
    groups[2].signal_variance = 4.0;
    k.set_hyperparams(groups);
    // The sum over columns with individual hyperparameters equals the sum of single-column kernels.
    Eigen::Vector3d x(0.1, 0.2, 0.3), y(0.5, -0.1, 0.0);
    Eigen::Matrix3d expected = Eigen::Matrix3d::Zero();
    for (std::size_t c = 0; c < 3; ++c) {
        OperatorMatrix col(3, 1, 3);
        for (std::size_t j = 0; j < 3; ++j) col.set(j, 0, g.at(j, c));
        expected += eval_matrix_kernel(transform_kernel(col, groups[c]), x, y);
    }
    EXPECT_TRUE(k(x, y).isApprox(expected, 1e-13));
}

TEST(TransformKernel, RejectsOrderAboveSupported) {
    OperatorMatrix g(1, 1, 1);
    g.at(0, 0).add_term(Monomial(std::vector<int>{3}), 1.0);
    EXPECT_THROW((void)transform_kernel(g, {}), UnsupportedOrder);
}

TEST(CurlFree, ClosedFormEqualsScaledGradientTransform) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> lg(std::log(0.3), std::log(3.0));
    for (int t = 0; t < 50; ++t) {
        const SeHyperparams theta{std::exp(lg(rng)), std::exp(lg(rng)), 0.0};
        const Eigen::MatrixXd pts = random_points(rng, 2, 3, -2.0, 2.0);
        const auto expr = transform_kernel(make_gradient_operator(3), theta);
        const Eigen::MatrixXd transformed = eval_matrix_kernel(expr, pts.row(0).transpose(), pts.row(1).transpose());
        const Eigen::Matrix3d closed = curl_free_closed_form(pts.row(0).transpose(), pts.row(1).transpose(), theta);
        const double l2 = theta.length_scale * theta.length_scale;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                EXPECT_LE(std::abs(closed(i, j) - l2 * transformed(i, j)), 1e-10 * std::abs(closed(i, j)));
    }
}

TEST(CurlFree, KernelExprMatchesClosedForm) {
    const auto k = MatrixKernel::curl_free_3d({2.0, 0.7, 0.0});
    Eigen::Vector3d x(0.1, -0.4, 0.3), y(0.6, 0.2, -0.1);
    EXPECT_TRUE(eval_matrix_kernel(k.expr(), x, y).isApprox(k(x, y), 1e-13));
}

TEST(ApplyOperator, LeftAndRightMatchFiniteDifferences) {
    const auto f = make_curl_operator_3d();
    const auto kernel = MatrixKernel::diagonal(3, 3, {1.3, 0.9, 0.0});
    const auto fk = apply_operator_to_expr(f, kernel.expr(), Side::left);
    const auto kf = apply_operator_to_expr(f, kernel.expr(), Side::right);
    Eigen::Vector3d x(0.2, 0.1, -0.3), y(-0.5, 0.4, 0.2);
    const MatrixFunction kx = [&](const Eigen::VectorXd& p) -> Eigen::MatrixXd { return kernel(p, y); };
    const Eigen::MatrixXd fd_left = fd_apply_operator(f, kx, x);
    EXPECT_TRUE(eval_matrix_kernel(fk, x, y).isApprox(fd_left, 1e-7));
    const MatrixFunction ky = [&](const Eigen::VectorXd& p) -> Eigen::MatrixXd { return kernel(x, p).transpose(); };
    const Eigen::MatrixXd fd_right = fd_apply_operator(f, ky, y).transpose();
    EXPECT_TRUE(eval_matrix_kernel(kf, x, y).isApprox(fd_right, 1e-7));
}

TEST(ApplyOperator, ConstrainedKernelIsAnnihilatedSymbolically) {
    for (const auto& f : {make_divergence_operator(2), make_divergence_operator(3), make_curl_operator_3d()}) {
        const auto kernel = MatrixKernel::transformed(construct_g(f).g, {});
        EXPECT_TRUE(apply_operator_to_expr(f, kernel.expr(), Side::left).is_zero());
        EXPECT_TRUE(apply_operator_to_expr(f, kernel.expr(), Side::right).is_zero());
    }
}

TEST(ApplyOperator, DimensionMismatchThrows) {
    const auto kernel = MatrixKernel::diagonal(2, 2, {});
    EXPECT_THROW((void)apply_operator_to_expr(make_divergence_operator(3), kernel.expr(), Side::left),
                 DimensionError);
    EXPECT_THROW((void)apply_operator_to_expr(make_curl_operator_3d(), kernel.expr(), Side::left), DimensionError);
}

TEST(ConstraintCheck, ConstrainedKernelsPassDiagonalFails) {
    const auto div2 = make_divergence_operator(2);
    const auto div_free = MatrixKernel::transformed(construct_g(div2).g, {1.0, 0.8, 0.0});
    EXPECT_LT(check_kernel_constraint(div2, div_free, 30, 1).relative(), 1e-6);

    const auto curl = make_curl_operator_3d();
    EXPECT_LT(check_kernel_constraint(curl, MatrixKernel::curl_free_3d({1.0, 1.2, 0.0}), 30, 2).relative(), 1e-6);

    const auto diag = MatrixKernel::diagonal(2, 2, {});
    EXPECT_GT(check_kernel_constraint(div2, diag, 30, 3).relative(), 1e-2);
}

TEST(ConstraintCheck, DimensionMismatchThrows) {
    EXPECT_THROW((void)check_kernel_constraint(make_curl_operator_3d(), MatrixKernel::diagonal(2, 2, {}), 3, 1),
                 DimensionError);
}

TEST(Gram, SymmetricAndPositiveSemidefiniteForAllFamilies) {
    std::mt19937_64 rng(11);
    const std::vector<MatrixKernel> kernels{
        MatrixKernel::diagonal(2, 2, {1.0, 0.7, 0.0}),
        MatrixKernel::transformed(construct_g(make_divergence_operator(2)).g, {1.0, 0.7, 0.0}),
        MatrixKernel::curl_free_3d({1.0, 0.7, 0.0}),
        MatrixKernel::transformed(construct_g(make_divergence_operator(3)).g, {1.0, 0.7, 0.0}, true),
    };
    for (const auto& k : kernels) {
        const Eigen::MatrixXd x = random_points(rng, 30, static_cast<Eigen::Index>(k.input_dim()), 0.0, 3.0);
        const Eigen::MatrixXd gram = assemble_gram(k, x, 0.0);
        EXPECT_LT((gram - gram.transpose()).cwiseAbs().maxCoeff(), 1e-12 * gram.cwiseAbs().maxCoeff());
        EXPECT_GE(min_over_max_eigen(gram), -1e-8) << to_string(k.kind());
    }
}

TEST(MatrixKernel, LogParamsRoundTrip) {
    auto k = MatrixKernel::transformed(construct_g(make_divergence_operator(3)).g, {2.0, 0.5, 0.01}, true);
    const Eigen::VectorXd p = k.log_params(true);
    ASSERT_EQ(p.size(), 7);
    auto k2 = MatrixKernel::transformed(construct_g(make_divergence_operator(3)).g, {}, true);
    k2.set_log_params(p, true);
    for (std::size_t g = 0; g < 3; ++g) {
        EXPECT_NEAR(k2.hyperparams()[g].signal_variance, 2.0, 1e-14);
        EXPECT_NEAR(k2.hyperparams()[g].length_scale, 0.5, 1e-14);
    }
    EXPECT_NEAR(k2.noise_variance(), 0.01, 1e-15);
    EXPECT_THROW(k2.set_log_params(Eigen::VectorXd::Zero(3), false), DimensionError);
}

TEST(KernelSpec, RoundTripsAllFamilies) {
    const auto f = make_divergence_operator(3);
    auto per_col = MatrixKernel::transformed(construct_g(f).g, {1.0, 1.0, 0.0}, true);
    auto groups = per_col.hyperparams();
    groups[2].length_scale = 0.25;
    per_col.set_hyperparams(groups);
    const std::vector<MatrixKernel> kernels{MatrixKernel::diagonal(2, 3, {1.5, 0.3, 1e-4}),
                                            MatrixKernel::curl_free_3d({0.5, 2.0, 0.0}), per_col};
    Eigen::VectorXd x = Eigen::VectorXd::Constant(3, 0.2), y = Eigen::VectorXd::Constant(3, -0.1);
    for (const auto& k : kernels) {
        const auto back = kernel_from_spec(kernel_to_spec(k));
        EXPECT_EQ(back.kind(), k.kind());
        EXPECT_EQ(back.hyperparams(), k.hyperparams());
        const auto d = static_cast<Eigen::Index>(k.input_dim());
        EXPECT_TRUE(back(x.head(d), y.head(d)).isApprox(k(x.head(d), y.head(d)), 1e-15));
    }
}

TEST(KernelSpec, AutoFromFRequiresConstraint) {
    const nlohmann::json spec = {{"type", "transformed"}, {"g_operator", "auto-from-F"}};
    EXPECT_THROW((void)kernel_from_spec(spec), ParseError);
    const auto f = make_divergence_operator(2);
    const auto k = kernel_from_spec(spec, &f);
    EXPECT_EQ(k.output_dim(), 2U);
    EXPECT_THROW((void)kernel_from_spec({{"type", "matern"}}), ParseError);
    EXPECT_THROW((void)kernel_from_spec({{"type", "diagonal"}}), ParseError);
}
