#pragma once

// Multi-output GP regression with a zero prior mean. Observations of a K-output
// function at N inputs are stacked point-major: index a*K + i holds output i
// at input a. The Gram matrix therefore has K x K blocks K(x_a, x_b).

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "opgp/errors.hpp"
#include "opgp/kernel.hpp"
#include "opgp/nelder_mead.hpp"

namespace opgp {

struct Dataset {
    Eigen::MatrixXd inputs;  // N x D
    Eigen::MatrixXd outputs; // N x K
    double noise_std = 0.0;

    [[nodiscard]] Eigen::Index size() const noexcept { return inputs.rows(); }
    [[nodiscard]] Eigen::Index input_dim() const noexcept { return inputs.cols(); }
    [[nodiscard]] Eigen::Index output_dim() const noexcept { return outputs.cols(); }

    void validate() const {
        if (inputs.rows() != outputs.rows())
            throw DimensionError("dataset: " + std::to_string(inputs.rows()) + " inputs but " +
                                 std::to_string(outputs.rows()) + " outputs");
        if (!inputs.allFinite() || !outputs.allFinite()) throw Error("dataset: non-finite entries");
        if (!(noise_std >= 0.0)) throw Error("dataset: noise_std must be non-negative");
    }

    /// Outputs flattened point-major.
    [[nodiscard]] Eigen::VectorXd stacked_outputs() const {
        Eigen::VectorXd y(outputs.size());
        for (Eigen::Index a = 0; a < outputs.rows(); ++a)
            for (Eigen::Index i = 0; i < outputs.cols(); ++i) y(a * outputs.cols() + i) = outputs(a, i);
        return y;
    }

    [[nodiscard]] Dataset head(Eigen::Index n) const {
        n = std::min(n, size());
        return Dataset{inputs.topRows(n), outputs.topRows(n), noise_std};
    }
};

/// Block cross-covariance between point sets A (rows) and B: (|A| K) x (|B| K).
inline Eigen::MatrixXd assemble_cross(const MatrixKernel& kernel, const Eigen::MatrixXd& xa, const Eigen::MatrixXd& xb) {
    const auto k = static_cast<Eigen::Index>(kernel.output_dim());
    if (xa.cols() != static_cast<Eigen::Index>(kernel.input_dim()) ||
        xb.cols() != static_cast<Eigen::Index>(kernel.input_dim()))
        throw DimensionError("assemble_cross: input dimension does not match kernel");
    Eigen::MatrixXd out(xa.rows() * k, xb.rows() * k);
    for (Eigen::Index a = 0; a < xa.rows(); ++a) {
        const Eigen::VectorXd pa = xa.row(a).transpose();
        for (Eigen::Index b = 0; b < xb.rows(); ++b)
            out.block(a * k, b * k, k, k) = kernel(pa, xb.row(b).transpose());
    }
    return out;
}

/// Symmetric block Gram matrix with noise_variance added on the diagonal.
inline Eigen::MatrixXd assemble_gram(const MatrixKernel& kernel, const Eigen::MatrixXd& x, double noise_variance) {
    const auto k = static_cast<Eigen::Index>(kernel.output_dim());
    if (x.cols() != static_cast<Eigen::Index>(kernel.input_dim()))
        throw DimensionError("assemble_gram: input dimension does not match kernel");
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd gram(n * k, n * k);
    for (Eigen::Index a = 0; a < n; ++a) {
        const Eigen::VectorXd pa = x.row(a).transpose();
        for (Eigen::Index b = a; b < n; ++b) {
            Eigen::MatrixXd block = kernel(pa, x.row(b).transpose());
            if (a == b) block = 0.5 * (block + block.transpose()).eval();
            gram.block(a * k, b * k, k, k) = block;
            if (b != a) gram.block(b * k, a * k, k, k) = block.transpose();
        }
    }
    gram.diagonal().array() += noise_variance;
    return gram;
}

struct JitterPolicy {
    /// Jitter steps are base * trace/dim * 10^k for k = 0..max_steps, after an unjittered try.
    double base = 1e-12;
    int max_steps = 6;
};

struct CholeskyResult {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double jitter = 0.0;
    int attempts = 0;

    [[nodiscard]] Eigen::MatrixXd lower() const { return llt.matrixL(); }
};

namespace detail {

inline bool factor_ok(const Eigen::LLT<Eigen::MatrixXd>& llt, double max_diag, Eigen::Index dim) {
    if (llt.info() != Eigen::Success) return false;
    const auto& lu = llt.matrixLLT();
    const double floor = static_cast<double>(dim) * std::numeric_limits<double>::epsilon() * max_diag;
    for (Eigen::Index i = 0; i < lu.rows(); ++i) {
        const double p = lu(i, i);
        if (!std::isfinite(p) || !(p * p > floor)) return false;
    }
    return true;
}

} // namespace detail

/// Lower Cholesky factor of M, adding escalating diagonal jitter until it succeeds.
inline CholeskyResult cholesky_jitter(const Eigen::MatrixXd& m, const JitterPolicy& policy = {}) {
    if (m.rows() != m.cols()) throw DimensionError("cholesky_jitter: matrix is not square");
    CholeskyResult res;
    const Eigen::Index n = m.rows();
    if (n == 0) return res;
    if (!m.allFinite()) throw NotPositiveDefinite("cholesky_jitter: matrix has non-finite entries");
    const double max_diag = m.diagonal().cwiseAbs().maxCoeff();
    const double scale = std::abs(m.trace()) / static_cast<double>(n);

    res.attempts = 1;
    res.llt.compute(m);
    if (detail::factor_ok(res.llt, max_diag, n)) return res;

    double jitter = policy.base * (scale > 0 ? scale : 1.0);
    for (int k = 0; k <= policy.max_steps; ++k, jitter *= 10.0) {
        ++res.attempts;
        Eigen::MatrixXd mj = m;
        mj.diagonal().array() += jitter;
        res.llt.compute(mj);
        if (detail::factor_ok(res.llt, max_diag + jitter, n)) {
            res.jitter = jitter;
            return res;
        }
    }
    throw NotPositiveDefinite("cholesky_jitter: not positive definite after jitter " + std::to_string(jitter / 10.0),
                              jitter / 10.0);
}

struct PredictionResult {
    Eigen::MatrixXd means;     // M x K
    Eigen::MatrixXd variances; // M x K, clamped at 0
    std::optional<Eigen::MatrixXd> covariance;
    /// Variances below -1e-10 before clamping; a sign of an ill-conditioned factorization.
    std::size_t clamped = 0;
};

namespace detail {

inline PredictionResult finish_prediction(const Eigen::MatrixXd& cross, const Eigen::VectorXd& alpha,
                                          const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::MatrixXd& prior_blocks,
                                          const std::optional<Eigen::MatrixXd>& prior_full, Eigen::Index m,
                                          Eigen::Index k) {
    PredictionResult out;
    const Eigen::VectorXd mean = cross.transpose() * alpha;
    const Eigen::MatrixXd v = llt.matrixL().solve(cross);
    out.means.resize(m, k);
    out.variances.resize(m, k);
    for (Eigen::Index b = 0; b < m; ++b)
        for (Eigen::Index i = 0; i < k; ++i) {
            const Eigen::Index idx = b * k + i;
            out.means(b, i) = mean(idx);
            double var = prior_blocks(idx) - v.col(idx).squaredNorm();
            if (var < -1e-10) ++out.clamped;
            out.variances(b, i) = std::max(var, 0.0);
        }
    if (prior_full) out.covariance = *prior_full - v.transpose() * v;
    return out;
}

} // namespace detail

class GpModel {
public:
    /// Factors the regularized Gram of `data` under `kernel` (noise from the kernel's hyperparameters).
    static GpModel fit(MatrixKernel kernel, Dataset data, const JitterPolicy& policy = {}) {
        data.validate();
        if (data.input_dim() != static_cast<Eigen::Index>(kernel.input_dim()) ||
            data.output_dim() != static_cast<Eigen::Index>(kernel.output_dim()))
            throw DimensionError("GpModel::fit: dataset dimensions do not match kernel");
        const Eigen::MatrixXd gram = assemble_gram(kernel, data.inputs, kernel.noise_variance());
        CholeskyResult chol = cholesky_jitter(gram, policy);
        GpModel model(std::move(kernel), std::move(data));
        model.y_ = model.training_.stacked_outputs();
        model.alpha_ = chol.llt.solve(model.y_);
        model.jitter_ = chol.jitter;
        model.llt_ = std::move(chol.llt);
        return model;
    }

    [[nodiscard]] const MatrixKernel& kernel() const noexcept { return kernel_; }
    [[nodiscard]] const Dataset& training() const noexcept { return training_; }
    [[nodiscard]] double jitter() const noexcept { return jitter_; }
    [[nodiscard]] const Eigen::VectorXd& alpha() const noexcept { return alpha_; }
    [[nodiscard]] const Eigen::LLT<Eigen::MatrixXd>& factor() const noexcept { return llt_; }

    /// -1/2 y^T alpha - sum log L_ii - (NK/2) log 2 pi
    [[nodiscard]] double log_marginal_likelihood() const {
        const auto& lu = llt_.matrixLLT();
        double log_det_half = 0.0;
        for (Eigen::Index i = 0; i < lu.rows(); ++i) log_det_half += std::log(lu(i, i));
        return -0.5 * y_.dot(alpha_) - log_det_half -
               0.5 * static_cast<double>(y_.size()) * std::log(2.0 * std::numbers::pi);
    }

    [[nodiscard]] PredictionResult predict(const Eigen::MatrixXd& xstar, bool full_covariance = false) const {
        const auto k = static_cast<Eigen::Index>(kernel_.output_dim());
        const Eigen::MatrixXd cross = assemble_cross(kernel_, training_.inputs, xstar);
        Eigen::VectorXd prior(xstar.rows() * k);
        for (Eigen::Index b = 0; b < xstar.rows(); ++b) {
            const Eigen::VectorXd p = xstar.row(b).transpose();
            prior.segment(b * k, k) = kernel_(p, p).diagonal();
        }
        std::optional<Eigen::MatrixXd> full;
        if (full_covariance) full = assemble_gram(kernel_, xstar, 0.0);
        return detail::finish_prediction(cross, alpha_, llt_, prior, full, xstar.rows(), k);
    }

private:
    GpModel(MatrixKernel kernel, Dataset data) : kernel_(std::move(kernel)), training_(std::move(data)) {}

    MatrixKernel kernel_;
    Dataset training_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::VectorXd y_;
    Eigen::VectorXd alpha_;
    double jitter_ = 0.0;
};

inline double log_marginal_likelihood(const GpModel& model) { return model.log_marginal_likelihood(); }

inline PredictionResult predict(const GpModel& model, const Eigen::MatrixXd& xstar, bool full_covariance = false) {
    return model.predict(xstar, full_covariance);
}

// ---------------------------------------------------------------------------
// Hyperparameter fitting

struct FitOptions {
    bool learn_noise = false;
    /// Independent simplex runs; the first starts at the initial kernel, later ones are perturbed.
    int restarts = 3;
    double restart_spread = 1.0;
    std::uint64_t seed = 0;
    /// Only the first max_points training rows enter the likelihood (0 = all).
    Eigen::Index max_points = 0;
    /// Log-parameters outside [-bound, bound] are rejected.
    double log_bound = 8.0;
    NelderMeadOptions simplex{};
    JitterPolicy jitter{};
};

struct FitResult {
    MatrixKernel kernel;
    double log_marginal_likelihood = -std::numeric_limits<double>::infinity();
    std::size_t evaluations = 0;
    int successful_restarts = 0;
    /// Best negative log-likelihood seen after each evaluation, over all restarts.
    std::vector<double> best_trace;
};

/// Maximizes the log marginal likelihood over log-hyperparameters with restarted Nelder-Mead.
inline FitResult fit_hyperparameters(const Dataset& data, const MatrixKernel& init, const FitOptions& opts = {}) {
    data.validate();
    const Dataset fit_data = opts.max_points > 0 ? data.head(opts.max_points) : data;
    MatrixKernel work = init;
    auto objective = [&](const Eigen::VectorXd& p) -> double {
        if ((p.array().abs() > opts.log_bound).any()) return std::numeric_limits<double>::infinity();
        try {
            work.set_log_params(p, opts.learn_noise);
            const Eigen::MatrixXd gram = assemble_gram(work, fit_data.inputs, work.noise_variance());
            const CholeskyResult chol = cholesky_jitter(gram, opts.jitter);
            const Eigen::VectorXd y = fit_data.stacked_outputs();
            const Eigen::VectorXd alpha = chol.llt.solve(y);
            const auto& lu = chol.llt.matrixLLT();
            double log_det_half = 0.0;
            for (Eigen::Index i = 0; i < lu.rows(); ++i) log_det_half += std::log(lu(i, i));
            const double lml = -0.5 * y.dot(alpha) - log_det_half -
                               0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi);
            return -lml;
        } catch (const Error&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> normal(0.0, opts.restart_spread);
    const Eigen::VectorXd p0 = init.log_params(opts.learn_noise);

    FitResult best{init, -std::numeric_limits<double>::infinity(), 0, 0, {}};
    double best_value = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_p = p0;
    for (int r = 0; r < std::max(1, opts.restarts); ++r) {
        Eigen::VectorXd start = p0;
        if (r > 0)
            for (Eigen::Index i = 0; i < start.size(); ++i) start(i) += normal(rng);
        const NelderMeadResult nm = nelder_mead(objective, start, opts.simplex);
        best.evaluations += nm.evaluations;
        for (double v : nm.best_trace) best.best_trace.push_back(std::min(v, best_value));
        if (std::isfinite(nm.value)) ++best.successful_restarts;
        if (nm.value < best_value) {
            best_value = nm.value;
            best_p = nm.x;
        }
    }
    if (!std::isfinite(best_value)) throw Error("fit_hyperparameters: every restart failed numerically");
    best.kernel.set_log_params(best_p, opts.learn_noise);
    best.log_marginal_likelihood = -best_value;
    return best;
}

} // namespace opgp
