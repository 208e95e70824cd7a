#pragma once

// Constraint enforcement by artificial observations: the GP is additionally
// conditioned on noise-free pseudo-measurements F_x[f](x~_c) = 0 at chosen
// points. The joint observation vector is [y; 0] with covariance
//   [ K(X,X) + s2 I     K F'^T(X, X~)   ]
//   [ F K(X~, X)        F K F'^T(X~,X~) ]
// Constraints hold only at the chosen points.

#include <cstddef>
#include <utility>

#include <Eigen/Dense>

#include "opgp/errors.hpp"
#include "opgp/gp.hpp"
#include "opgp/kernel.hpp"
#include "opgp/matrix_kernel.hpp"

namespace opgp {

class AugmentedProblem {
public:
    [[nodiscard]] const Dataset& base() const noexcept { return base_; }
    [[nodiscard]] const Eigen::MatrixXd& constraint_points() const noexcept { return points_; }
    [[nodiscard]] const OperatorMatrix& constraint() const noexcept { return f_; }
    [[nodiscard]] const MatrixKernel& kernel() const noexcept { return kernel_; }
    [[nodiscard]] double jitter() const noexcept { return jitter_; }
    [[nodiscard]] Eigen::Index joint_size() const noexcept { return alpha_.size(); }
    [[nodiscard]] const Eigen::MatrixXd& joint_gram() const noexcept { return gram_; }
    /// cov(f(x), F f(x')) and cov(F f(x), f(x')).
    [[nodiscard]] const MatrixKernelExpr& cross_right() const noexcept { return k_ft_; }
    [[nodiscard]] const MatrixKernelExpr& cross_left() const noexcept { return fk_; }
    /// cov(F f(x), F f(x')).
    [[nodiscard]] const MatrixKernelExpr& constraint_block() const noexcept { return fkf_; }

    [[nodiscard]] PredictionResult predict(const Eigen::MatrixXd& xstar) const {
        const auto k = static_cast<Eigen::Index>(kernel_.output_dim());
        const auto m = static_cast<Eigen::Index>(f_.rows());
        const Eigen::Index n_data = base_.size() * k;
        Eigen::MatrixXd cross(joint_size(), xstar.rows() * k);
        cross.topRows(n_data) = assemble_cross(kernel_, base_.inputs, xstar);
        for (Eigen::Index c = 0; c < points_.rows(); ++c) {
            const Eigen::VectorXd pc = points_.row(c).transpose();
            for (Eigen::Index b = 0; b < xstar.rows(); ++b)
                cross.block(n_data + c * m, b * k, m, k) = eval_matrix_kernel(fk_, pc, xstar.row(b).transpose());
        }
        Eigen::VectorXd prior(xstar.rows() * k);
        for (Eigen::Index b = 0; b < xstar.rows(); ++b) {
            const Eigen::VectorXd p = xstar.row(b).transpose();
            prior.segment(b * k, k) = kernel_(p, p).diagonal();
        }
        return detail::finish_prediction(cross, alpha_, llt_, prior, std::nullopt, xstar.rows(), k);
    }

private:
    friend AugmentedProblem augment(Dataset data, const MatrixKernel& kernel, const OperatorMatrix& f,
                                    Eigen::MatrixXd points, const JitterPolicy& policy);

    AugmentedProblem(Dataset base, MatrixKernel kernel, OperatorMatrix f, Eigen::MatrixXd points)
        : base_(std::move(base)), kernel_(std::move(kernel)), f_(std::move(f)), points_(std::move(points)) {}

    Dataset base_;
    MatrixKernel kernel_;
    OperatorMatrix f_;
    Eigen::MatrixXd points_;
    MatrixKernelExpr k_ft_;
    MatrixKernelExpr fk_;
    MatrixKernelExpr fkf_;
    Eigen::MatrixXd gram_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::VectorXd alpha_;
    double jitter_ = 0.0;
};

/// Builds and factors the joint model. Constraint rows carry zero noise; only the
/// jitter policy regularizes them, so large constraint sets may raise NotPositiveDefinite.
inline AugmentedProblem augment(Dataset data, const MatrixKernel& kernel, const OperatorMatrix& f,
                                Eigen::MatrixXd points, const JitterPolicy& policy = {}) {
    data.validate();
    if (f.cols() != kernel.output_dim())
        throw DimensionError("augment: F has " + std::to_string(f.cols()) + " columns but the kernel has " +
                             std::to_string(kernel.output_dim()) + " outputs");
    if (f.vars() != kernel.input_dim()) throw DimensionError("augment: F acts on a different input dimension");
    if (points.rows() > 0 && points.cols() != static_cast<Eigen::Index>(kernel.input_dim()))
        throw DimensionError("augment: constraint points have the wrong dimension");
    if (points.rows() == 0) points.resize(0, static_cast<Eigen::Index>(kernel.input_dim()));

    AugmentedProblem prob(std::move(data), kernel, f, std::move(points));
    const MatrixKernelExpr expr = kernel.expr();
    prob.k_ft_ = apply_operator_to_expr(f, expr, Side::right);
    prob.fk_ = apply_operator_to_expr(f, expr, Side::left);
    prob.fkf_ = apply_operator_to_expr(f, prob.fk_, Side::right);

    const auto k = static_cast<Eigen::Index>(kernel.output_dim());
    const auto m = static_cast<Eigen::Index>(f.rows());
    const Eigen::Index n_data = prob.base_.size() * k;
    const Eigen::Index nc = prob.points_.rows();
    const Eigen::Index total = n_data + nc * m;

    Eigen::MatrixXd& gram = prob.gram_;
    gram.resize(total, total);
    gram.topLeftCorner(n_data, n_data) = assemble_gram(kernel, prob.base_.inputs, kernel.noise_variance());
    for (Eigen::Index a = 0; a < prob.base_.size(); ++a) {
        const Eigen::VectorXd pa = prob.base_.inputs.row(a).transpose();
        for (Eigen::Index c = 0; c < nc; ++c) {
            const Eigen::MatrixXd blk = eval_matrix_kernel(prob.k_ft_, pa, prob.points_.row(c).transpose());
            gram.block(a * k, n_data + c * m, k, m) = blk;
            gram.block(n_data + c * m, a * k, m, k) = blk.transpose();
        }
    }
    for (Eigen::Index c = 0; c < nc; ++c) {
        const Eigen::VectorXd pc = prob.points_.row(c).transpose();
        for (Eigen::Index d = c; d < nc; ++d) {
            Eigen::MatrixXd blk = eval_matrix_kernel(prob.fkf_, pc, prob.points_.row(d).transpose());
            if (c == d) blk = 0.5 * (blk + blk.transpose()).eval();
            gram.block(n_data + c * m, n_data + d * m, m, m) = blk;
            if (d != c) gram.block(n_data + d * m, n_data + c * m, m, m) = blk.transpose();
        }
    }

    Eigen::VectorXd y = Eigen::VectorXd::Zero(total);
    y.head(n_data) = prob.base_.stacked_outputs();
    CholeskyResult chol = cholesky_jitter(gram, policy);
    prob.alpha_ = chol.llt.solve(y);
    prob.jitter_ = chol.jitter;
    prob.llt_ = std::move(chol.llt);
    return prob;
}

inline PredictionResult predict_augmented(const AugmentedProblem& problem, const Eigen::MatrixXd& xstar) {
    return problem.predict(xstar);
}

} // namespace opgp
