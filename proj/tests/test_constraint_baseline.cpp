#include <gtest/gtest.h>

#include <random>

#include "opgp/constraint_baseline.hpp"
#include "opgp/constraint_check.hpp"
#include "oracles.hpp"

using namespace opgp;

namespace {

oracle::FirstOrderOperator first_order(const OperatorMatrix& f) {
    oracle::FirstOrderOperator c(f.rows(), std::vector<std::vector<double>>(f.cols(), std::vector<double>(f.vars())));
    for (std::size_t r = 0; r < f.rows(); ++r)
        for (std::size_t j = 0; j < f.cols(); ++j)
            for (std::size_t d = 0; d < f.vars(); ++d)
                c[r][j][d] = f.at(r, j).coefficient(Monomial::variable(f.vars(), d));
    return c;
}

Eigen::MatrixXd uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    return m;
}

void expect_matches_oracle(const OperatorMatrix& f, Eigen::Index n, Eigen::Index nc, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const auto d = static_cast<Eigen::Index>(f.vars());
    const auto k = static_cast<Eigen::Index>(f.cols());
    const double sf2 = 1.4, l = 0.9, noise = 1e-2;
    Dataset data{uniform(n, d, rng), uniform(n, k, rng), std::sqrt(noise)};
    const Eigen::MatrixXd xc = uniform(nc, d, rng);
    const Eigen::MatrixXd xs = uniform(6, d, rng);
    const auto prob = augment(data, MatrixKernel::diagonal(f.vars(), f.cols(), {sf2, l, noise}), f, xc);
    EXPECT_EQ(prob.jitter(), 0.0);
    const Eigen::MatrixXd ref = oracle::joint_conditioning_mean(first_order(f), data.inputs, data.outputs, noise, xc,
                                                                xs, sf2, l);
    const Eigen::MatrixXd got = prob.predict(xs).means;
    EXPECT_LE((got - ref).cwiseAbs().maxCoeff(), 1e-6 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
}

} // namespace

TEST(Augment, Divergence2dMatchesJointConditioning) {
    expect_matches_oracle(make_divergence_operator(2), 5, 4, 1);
    expect_matches_oracle(make_divergence_operator(2), 3, 9, 2);
}

TEST(Augment, Divergence3dMatchesJointConditioning) { expect_matches_oracle(make_divergence_operator(3), 4, 3, 3); }

TEST(Augment, CurlMatchesJointConditioning) {
    expect_matches_oracle(make_curl_operator_3d(), 3, 2, 4);
    expect_matches_oracle(make_curl_operator_3d(), 2, 3, 5);
}

TEST(Augment, NoConstraintPointsEqualsPlainGp) {
    std::mt19937_64 rng(6);
    Dataset data{uniform(8, 2, rng), uniform(8, 2, rng), 0.1};
    const auto kernel = MatrixKernel::diagonal(2, 2, {1.0, 0.7, 1e-2});
    const Eigen::MatrixXd xs = uniform(5, 2, rng);
    const auto plain = GpModel::fit(kernel, data).predict(xs);
    const auto aug = augment(data, kernel, make_divergence_operator(2), Eigen::MatrixXd(0, 2)).predict(xs);
    EXPECT_LT((plain.means - aug.means).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((plain.variances - aug.variances).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Augment, ConstraintReducesViolationAtChosenPoints) {
    std::mt19937_64 rng(7);
    const auto f = make_divergence_operator(2);
    Dataset data{uniform(6, 2, rng), uniform(6, 2, rng), 0.1};
    const Eigen::MatrixXd xc = uniform(4, 2, rng);
    const auto prob = augment(data, MatrixKernel::diagonal(2, 2, {1.0, 0.7, 1e-2}), f, xc);
    const MatrixFunction mean = [&](const Eigen::VectorXd& p) -> Eigen::MatrixXd {
        return prob.predict(p.transpose()).means.transpose();
    };
    for (Eigen::Index c = 0; c < xc.rows(); ++c)
        EXPECT_LT(fd_apply_operator(f, mean, xc.row(c).transpose()).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(Augment, JointGramIsSymmetric) {
    std::mt19937_64 rng(8);
    Dataset data{uniform(4, 3, rng), uniform(4, 3, rng), 0.1};
    const auto prob = augment(data, MatrixKernel::diagonal(3, 3, {1.0, 1.0, 1e-2}), make_curl_operator_3d(),
                              uniform(5, 3, rng));
    EXPECT_EQ(prob.joint_size(), 4 * 3 + 5 * 3);
    const Eigen::MatrixXd& g = prob.joint_gram();
    EXPECT_LT((g - g.transpose()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Augment, DimensionErrors) {
    std::mt19937_64 rng(9);
    Dataset data{uniform(4, 2, rng), uniform(4, 2, rng), 0.1};
    const auto kernel = MatrixKernel::diagonal(2, 2, {});
    EXPECT_THROW((void)augment(data, kernel, make_divergence_operator(3), uniform(2, 2, rng)), DimensionError);
    EXPECT_THROW((void)augment(data, kernel, make_divergence_operator(2), uniform(2, 3, rng)), DimensionError);
}
