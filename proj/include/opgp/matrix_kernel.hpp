#pragma once

// Matrix-valued kernels built by applying operator matrices to the arguments
// of a scalar squared-exponential base kernel:
//   K(x,x')_ij = sum_c (G_ic acting on x)(G_jc acting on x') k_g(x,x').
// Entries are stored symbolically as linear combinations of derivative
// multi-indices so further operators can be composed on either side.

#include <algorithm>
#include <cstddef>
#include <map>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "opgp/errors.hpp"
#include "opgp/operator_algebra.hpp"
#include "opgp/se_kernel.hpp"

namespace opgp {

struct KernelTerm {
    DerivativeMultiIndex index;
    double coeff = 0.0;
    /// Which base-kernel hyperparameter set the term uses.
    std::size_t group = 0;

    friend bool operator==(const KernelTerm&, const KernelTerm&) = default;
};

enum class Side { left, right };

class MatrixKernelExpr {
public:
    using TermList = std::vector<KernelTerm>;

    MatrixKernelExpr() = default;
    MatrixKernelExpr(std::size_t rows, std::size_t cols, std::size_t vars, std::vector<SeHyperparams> base)
        : rows_(rows), cols_(cols), vars_(vars), base_(std::move(base)), entries_(rows * cols) {
        if (base_.empty()) throw Error("matrix kernel needs at least one hyperparameter group");
        for (const auto& b : base_) b.validate();
    }

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] std::size_t vars() const noexcept { return vars_; }
    [[nodiscard]] const std::vector<SeHyperparams>& base() const noexcept { return base_; }
    [[nodiscard]] const TermList& entry(std::size_t i, std::size_t j) const { return entries_.at(i * cols_ + j); }

    void set_base(std::vector<SeHyperparams> base) {
        if (base.size() != base_.size()) throw Error("hyperparameter group count cannot change");
        for (const auto& b : base) b.validate();
        base_ = std::move(base);
    }

    /// Adds coeff * d^(alpha,beta) k to entry (i,j), merging like terms and dropping zeros.
    void add_term(std::size_t i, std::size_t j, const DerivativeMultiIndex& idx, double coeff, std::size_t group) {
        if (idx.alpha.size() != vars_ || idx.beta.size() != vars_)
            throw DimensionError("kernel term multi-index length does not match input dimension");
        if (idx.order() > kMaxDerivativeOrder)
            throw UnsupportedOrder("kernel term of derivative order " + std::to_string(idx.order()) +
                                   " exceeds supported maximum " + std::to_string(kMaxDerivativeOrder));
        if (group >= base_.size()) throw Error("kernel term refers to unknown hyperparameter group");
        if (coeff == 0.0) return;
        auto& terms = entries_.at(i * cols_ + j);
        auto it = std::find_if(terms.begin(), terms.end(),
                               [&](const KernelTerm& t) { return t.group == group && t.index == idx; });
        if (it == terms.end()) {
            auto pos = std::lower_bound(terms.begin(), terms.end(), std::tie(group, idx),
                                        [](const KernelTerm& t, const auto& key) {
                                            return std::tie(t.group, t.index) < key;
                                        });
            terms.insert(pos, KernelTerm{idx, coeff, group});
            return;
        }
        it->coeff += coeff;
        if (it->coeff == 0.0) terms.erase(it);
    }

    [[nodiscard]] bool is_zero() const {
        return std::all_of(entries_.begin(), entries_.end(), [](const TermList& t) { return t.empty(); });
    }

    [[nodiscard]] int max_order() const {
        int m = 0;
        for (const auto& terms : entries_)
            for (const auto& t : terms) m = std::max(m, t.index.order());
        return m;
    }

    /// True when entry (i,j) with (alpha,beta) mirrors entry (j,i) with (beta,alpha).
    [[nodiscard]] bool is_hermitian() const {
        if (rows_ != cols_) return false;
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) {
                const auto& a = entry(i, j);
                const auto& b = entry(j, i);
                if (a.size() != b.size()) return false;
                for (const auto& t : a) {
                    DerivativeMultiIndex swapped{t.index.beta, t.index.alpha};
                    auto it = std::find_if(b.begin(), b.end(), [&](const KernelTerm& u) {
                        return u.group == t.group && u.index == swapped;
                    });
                    if (it == b.end() || it->coeff != t.coeff) return false;
                }
            }
        return true;
    }

    friend bool operator==(const MatrixKernelExpr&, const MatrixKernelExpr&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::size_t vars_ = 0;
    std::vector<SeHyperparams> base_;
    std::vector<TermList> entries_;
};

/// K = G k_g G'^T. With per_column, column c of G gets its own hyperparameter group
/// (initialized from theta); otherwise all columns share theta.
inline MatrixKernelExpr transform_kernel(const OperatorMatrix& g, const SeHyperparams& theta, bool per_column = false) {
    if (g.rows() == 0 || g.cols() == 0) throw DimensionError("transform_kernel: G is empty");
    std::vector<SeHyperparams> base(per_column ? g.cols() : 1, theta);
    MatrixKernelExpr expr(g.rows(), g.rows(), g.vars(), std::move(base));
    for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.rows(); ++j)
            for (std::size_t c = 0; c < g.cols(); ++c)
                for (const auto& [ma, ca] : g.at(i, c).terms())
                    for (const auto& [mb, cb] : g.at(j, c).terms())
                        expr.add_term(i, j, DerivativeMultiIndex{ma.exponents(), mb.exponents()}, ca * cb,
                                      per_column ? c : 0);
    return expr;
}

/// Composes F with the expression on the x side (left: F K) or the x' side (right: K F'^T).
inline MatrixKernelExpr apply_operator_to_expr(const OperatorMatrix& f, const MatrixKernelExpr& expr, Side side) {
    if (f.vars() != expr.vars()) throw DimensionError("apply_operator_to_expr: variable counts differ");
    if (side == Side::left) {
        if (f.cols() != expr.rows())
            throw DimensionError("apply_operator_to_expr: F has " + std::to_string(f.cols()) +
                                 " columns, expression has " + std::to_string(expr.rows()) + " rows");
        MatrixKernelExpr out(f.rows(), expr.cols(), expr.vars(), expr.base());
        for (std::size_t r = 0; r < f.rows(); ++r)
            for (std::size_t j = 0; j < expr.cols(); ++j)
                for (std::size_t k = 0; k < f.cols(); ++k)
                    for (const auto& [m, c] : f.at(r, k).terms())
                        for (const auto& t : expr.entry(k, j)) {
                            DerivativeMultiIndex idx = t.index;
                            for (std::size_t d = 0; d < idx.alpha.size(); ++d) idx.alpha[d] += m.exponent(d);
                            out.add_term(r, j, idx, c * t.coeff, t.group);
                        }
        return out;
    }
    if (f.cols() != expr.cols())
        throw DimensionError("apply_operator_to_expr: F has " + std::to_string(f.cols()) +
                             " columns, expression has " + std::to_string(expr.cols()) + " columns");
    MatrixKernelExpr out(expr.rows(), f.rows(), expr.vars(), expr.base());
    for (std::size_t i = 0; i < expr.rows(); ++i)
        for (std::size_t r = 0; r < f.rows(); ++r)
            for (std::size_t l = 0; l < f.cols(); ++l)
                for (const auto& [m, c] : f.at(r, l).terms())
                    for (const auto& t : expr.entry(i, l)) {
                        DerivativeMultiIndex idx = t.index;
                        for (std::size_t d = 0; d < idx.beta.size(); ++d) idx.beta[d] += m.exponent(d);
                        out.add_term(i, r, idx, c * t.coeff, t.group);
                    }
    return out;
}

inline Eigen::MatrixXd eval_matrix_kernel(const MatrixKernelExpr& expr, const Eigen::Ref<const Eigen::VectorXd>& x,
                                          const Eigen::Ref<const Eigen::VectorXd>& x2) {
    if (static_cast<std::size_t>(x.size()) != expr.vars() || static_cast<std::size_t>(x2.size()) != expr.vars())
        throw DimensionError("eval_matrix_kernel: point dimension does not match kernel");
    std::vector<SeDerivativeTable> tables;
    tables.reserve(expr.base().size());
    for (const auto& theta : expr.base()) tables.emplace_back(x, x2, theta);
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(expr.rows()), static_cast<Eigen::Index>(expr.cols()));
    for (std::size_t i = 0; i < expr.rows(); ++i)
        for (std::size_t j = 0; j < expr.cols(); ++j) {
            double acc = 0.0;
            for (const auto& t : expr.entry(i, j))
                acc += t.coeff * tables[t.group].derivative(t.index.alpha, t.index.beta);
            k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = acc;
        }
    return k;
}

/// sigma_f^2 exp(-|r|^2/2l^2) (I - (r/l)(r/l)^T), r = x - x'. This equals
/// l^2 times the gradient-transformed SE kernel.
inline Eigen::Matrix3d curl_free_closed_form(const Eigen::Ref<const Eigen::VectorXd>& x,
                                             const Eigen::Ref<const Eigen::VectorXd>& x2, const SeHyperparams& theta) {
    if (x.size() != 3 || x2.size() != 3) throw DimensionError("curl_free_closed_form: points must be 3-D");
    const Eigen::Vector3d r = (x - x2) / theta.length_scale;
    const double e = theta.signal_variance * std::exp(-0.5 * r.squaredNorm());
    return e * (Eigen::Matrix3d::Identity() - r * r.transpose());
}

inline Eigen::MatrixXd diagonal_kernel(const Eigen::Ref<const Eigen::VectorXd>& x,
                                       const Eigen::Ref<const Eigen::VectorXd>& x2, const SeHyperparams& theta,
                                       std::size_t outputs) {
    const auto k = static_cast<Eigen::Index>(outputs);
    return se_eval(x, x2, theta) * Eigen::MatrixXd::Identity(k, k);
}

} // namespace opgp
