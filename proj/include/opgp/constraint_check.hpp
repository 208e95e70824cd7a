#pragma once

// Finite-difference application of operator matrices to numerically evaluated
// functions. Used to verify that constrained kernels and posterior means
// satisfy F[f] = 0 between (not only at) data points.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>

#include <Eigen/Dense>

#include "opgp/kernel.hpp"
#include "opgp/operator_algebra.hpp"

namespace opgp {

using MatrixFunction = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

/// Nested central differences for the monomial `exponents`, step h per order.
inline Eigen::MatrixXd fd_monomial(const MatrixFunction& f, const Eigen::VectorXd& x, std::vector<int> exponents,
                                   double h) {
    auto it = std::find_if(exponents.begin(), exponents.end(), [](int e) { return e > 0; });
    if (it == exponents.end()) return f(x);
    const auto d = static_cast<Eigen::Index>(it - exponents.begin());
    --*it;
    Eigen::VectorXd xp = x, xm = x;
    xp(d) += h;
    xm(d) -= h;
    return (fd_monomial(f, xp, exponents, h) - fd_monomial(f, xm, exponents, h)) / (2.0 * h);
}

/// Step size for a derivative of the given order at length scale `scale`.
inline double fd_step(int order, double scale = 1.0) {
    switch (order) {
    case 0:
    case 1: return 1e-4 * scale;
    case 2: return 1e-3 * scale;
    default: return 5e-3 * scale;
    }
}

/// (F f)(x) where f maps R^D to (cols(F) x C) matrices; result is rows(F) x C.
inline Eigen::MatrixXd fd_apply_operator(const OperatorMatrix& op, const MatrixFunction& f, const Eigen::VectorXd& x,
                                         double length_scale = 1.0) {
    const Eigen::MatrixXd f0 = f(x);
    if (f0.rows() != static_cast<Eigen::Index>(op.cols()))
        throw DimensionError("fd_apply_operator: function output rows do not match operator columns");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(op.rows()), f0.cols());
    for (std::size_t j = 0; j < op.cols(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const MatrixFunction row_j = [&f, jj](const Eigen::VectorXd& p) -> Eigen::MatrixXd { return f(p).row(jj); };
        for (std::size_t i = 0; i < op.rows(); ++i)
            for (const auto& [m, c] : op.at(i, j).terms())
                out.row(static_cast<Eigen::Index>(i)) +=
                    c * fd_monomial(row_j, x, m.exponents(), fd_step(m.degree(), length_scale));
    }
    return out;
}

struct KernelCheckResult {
    std::size_t samples = 0;
    double max_violation = 0.0;
    double scale = 0.0;
    [[nodiscard]] double relative() const { return scale > 0 ? max_violation / scale : max_violation; }
};

/// Applies F by finite differences to every column of K(x, x') for random pairs in
/// [-2l, 2l]^D. Violations are reported relative to max|K| / l^deg(F).
inline KernelCheckResult check_kernel_constraint(const OperatorMatrix& op, const MatrixKernel& kernel,
                                                 std::size_t samples, std::uint64_t seed) {
    if (op.cols() != kernel.output_dim() || op.vars() != kernel.input_dim())
        throw DimensionError("check_kernel_constraint: operator does not match kernel dimensions");
    const double l = kernel.hyperparams().front().length_scale;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-2.0 * l, 2.0 * l);
    const auto d = static_cast<Eigen::Index>(kernel.input_dim());

    KernelCheckResult res;
    res.samples = samples;
    double kmax = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        Eigen::VectorXd x(d), x2(d);
        for (Eigen::Index i = 0; i < d; ++i) x(i) = unif(rng);
        for (Eigen::Index i = 0; i < d; ++i) x2(i) = unif(rng);
        const MatrixFunction col = [&](const Eigen::VectorXd& p) -> Eigen::MatrixXd { return kernel(p, x2); };
        const Eigen::MatrixXd applied = fd_apply_operator(op, col, x, l);
        res.max_violation = std::max(res.max_violation, applied.cwiseAbs().maxCoeff());
        kmax = std::max({kmax, kernel(x, x2).cwiseAbs().maxCoeff(), kernel(x, x).cwiseAbs().maxCoeff()});
    }
    res.scale = kmax / std::pow(l, op.max_degree());
    return res;
}

} // namespace opgp
