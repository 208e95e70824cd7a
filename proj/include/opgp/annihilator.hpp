#pragma once

// Construction of an annihilating operator G with F G = 0 via a parametric
// ansatz: every column of G is assumed to be Gamma * xi, where xi lists the
// derivative monomials of the ansatz. Expanding F * Gamma * xi and collecting
// coefficients gives a homogeneous linear system A vec(Gamma) = 0.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "opgp/errors.hpp"
#include "opgp/operator_algebra.hpp"

namespace opgp {

/// Dense row-major coefficient matrix; exact or floating.
template <class Scalar>
class CoefficientMatrix {
public:
    CoefficientMatrix() = default;
    CoefficientMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, Scalar(0)) {}
    CoefficientMatrix(std::initializer_list<std::initializer_list<Scalar>> rows) {
        rows_ = rows.size();
        cols_ = rows_ ? rows.begin()->size() : 0;
        for (const auto& r : rows) {
            if (r.size() != cols_) throw DimensionError("ragged coefficient matrix");
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    Scalar& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const Scalar& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    [[nodiscard]] bool is_zero() const {
        for (const auto& v : data_)
            if (!(v == Scalar(0))) return false;
        return true;
    }

    template <class To>
    [[nodiscard]] CoefficientMatrix<To> cast() const {
        CoefficientMatrix<To> r(rows_, cols_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) r(i, j) = static_cast<To>((*this)(i, j));
        return r;
    }

    friend bool operator==(const CoefficientMatrix&, const CoefficientMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Scalar> data_;
};

/// Ordered list of every monomial over `vars` variables whose degree is in `degrees`.
struct AnsatzBasis {
    std::size_t vars = 0;
    std::set<int> degrees;
    std::vector<Monomial> monomials;

    [[nodiscard]] std::size_t size() const noexcept { return monomials.size(); }
};

inline AnsatzBasis make_ansatz_basis(std::size_t vars, std::set<int> degrees) {
    AnsatzBasis basis{vars, std::move(degrees), {}};
    for (int d : basis.degrees) {
        if (d < 0) throw Error("ansatz degrees must be non-negative");
        auto ms = monomials_of_degree(vars, d);
        basis.monomials.insert(basis.monomials.end(), ms.begin(), ms.end());
    }
    return basis;
}

/// Column (j, k) of A is the coefficient gamma_jk: output component j, ansatz monomial k.
/// vec(Gamma) is row-major in (j, k), so gamma_11, gamma_12, ..., gamma_21, ...
struct AnsatzColumn {
    std::size_t component;
    std::size_t monomial;
    friend bool operator==(const AnsatzColumn&, const AnsatzColumn&) = default;
};

/// Row (i, m): constraint row i of F, coefficient of product monomial m.
struct AnsatzRow {
    std::size_t constraint;
    Monomial monomial;
    friend bool operator==(const AnsatzRow&, const AnsatzRow&) = default;
};

template <class Scalar>
struct BasicAnsatzSystem {
    CoefficientMatrix<Scalar> matrix;
    std::vector<AnsatzRow> row_index;
    std::vector<AnsatzColumn> col_index;
    AnsatzBasis ansatz;
};

using AnsatzSystem = BasicAnsatzSystem<double>;

/// Collects the coefficients of sum_j F_ij (Gamma xi)_j per constraint row and product monomial.
template <class Scalar>
BasicAnsatzSystem<Scalar> build_ansatz_system(const BasicOperatorMatrix<Scalar>& f, const AnsatzBasis& ansatz) {
    if (f.rows() == 0 || f.cols() == 0) throw DimensionError("build_ansatz_system: F is empty");
    if (ansatz.vars != f.vars())
        throw DimensionError("build_ansatz_system: ansatz has " + std::to_string(ansatz.vars) +
                             " variables, F has " + std::to_string(f.vars()));
    if (ansatz.monomials.empty()) throw Error("build_ansatz_system: empty ansatz");

    const std::size_t n = f.cols();
    const std::size_t m_g = ansatz.size();

    BasicAnsatzSystem<Scalar> sys;
    sys.ansatz = ansatz;
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < m_g; ++k) sys.col_index.push_back({j, k});

    // Row monomials per constraint: all products (F-row monomial) x (ansatz monomial).
    // A row of F with no terms is treated as degree 0, giving all-zero rows.
    std::vector<std::map<Monomial, std::size_t, GradedLexLess>> row_lookup(f.rows());
    for (std::size_t i = 0; i < f.rows(); ++i) {
        std::set<Monomial, GradedLexLess> products;
        bool any = false;
        for (std::size_t j = 0; j < n; ++j)
            for (const auto& [mf, c] : f.at(i, j).terms()) {
                any = true;
                for (const auto& mg : ansatz.monomials) products.insert(mf * mg);
            }
        if (!any)
            for (const auto& mg : ansatz.monomials) products.insert(mg);
        for (const auto& pm : products) {
            row_lookup[i].emplace(pm, sys.row_index.size());
            sys.row_index.push_back({i, pm});
        }
    }

    sys.matrix = CoefficientMatrix<Scalar>(sys.row_index.size(), sys.col_index.size());
    for (std::size_t i = 0; i < f.rows(); ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (const auto& [mf, c] : f.at(i, j).terms())
                for (std::size_t k = 0; k < m_g; ++k) {
                    const std::size_t row = row_lookup[i].at(mf * ansatz.monomials[k]);
                    sys.matrix(row, j * m_g + k) += c;
                }
    return sys;
}

// ---------------------------------------------------------------------------
// Nullspace

enum class NullspaceMode { exact, floating };

/// Right nullspace over the rationals by reduced row echelon form.
/// Pivot choice: first nonzero entry in the column at or below the current row.
/// One basis vector per free column f, with a 1 in position f.
inline std::vector<std::vector<Rational>> rational_nullspace(CoefficientMatrix<Rational> a) {
    const std::size_t rows = a.rows();
    const std::size_t cols = a.cols();
    std::vector<std::size_t> pivot_cols;
    std::size_t r = 0;
    for (std::size_t c = 0; c < cols && r < rows; ++c) {
        std::size_t p = r;
        while (p < rows && a(p, c) == 0) ++p;
        if (p == rows) continue;
        if (p != r)
            for (std::size_t k = 0; k < cols; ++k) std::swap(a(p, k), a(r, k));
        const Rational inv = 1 / a(r, c);
        for (std::size_t k = c; k < cols; ++k) a(r, k) *= inv;
        for (std::size_t i = 0; i < rows; ++i) {
            if (i == r || a(i, c) == 0) continue;
            const Rational factor = a(i, c);
            for (std::size_t k = c; k < cols; ++k) a(i, k) -= factor * a(r, k);
        }
        pivot_cols.push_back(c);
        ++r;
    }

    std::vector<bool> is_pivot(cols, false);
    for (auto c : pivot_cols) is_pivot[c] = true;
    std::vector<std::vector<Rational>> basis;
    for (std::size_t free = 0; free < cols; ++free) {
        if (is_pivot[free]) continue;
        std::vector<Rational> v(cols, Rational(0));
        v[free] = 1;
        for (std::size_t i = 0; i < pivot_cols.size(); ++i) v[pivot_cols[i]] = -a(i, free);
        basis.push_back(std::move(v));
    }
    return basis;
}

/// Floating-point nullspace by Gauss-Jordan elimination with partial pivoting.
/// A column whose best remaining pivot is <= tol * max|A| is treated as free.
inline std::vector<std::vector<double>> floating_nullspace(CoefficientMatrix<double> a, double tol) {
    const std::size_t rows = a.rows();
    const std::size_t cols = a.cols();
    double scale = 0.0;
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) scale = std::max(scale, std::abs(a(i, j)));
    const double threshold = tol * scale;

    std::vector<std::size_t> pivot_cols;
    std::size_t r = 0;
    for (std::size_t c = 0; c < cols && r < rows; ++c) {
        std::size_t p = r;
        double best = std::abs(a(r, c));
        for (std::size_t i = r + 1; i < rows; ++i)
            if (std::abs(a(i, c)) > best) {
                best = std::abs(a(i, c));
                p = i;
            }
        if (!(best > threshold)) {
            for (std::size_t i = r; i < rows; ++i) a(i, c) = 0.0;
            continue;
        }
        if (p != r)
            for (std::size_t k = 0; k < cols; ++k) std::swap(a(p, k), a(r, k));
        const double inv = 1.0 / a(r, c);
        for (std::size_t k = c; k < cols; ++k) a(r, k) *= inv;
        a(r, c) = 1.0;
        for (std::size_t i = 0; i < rows; ++i) {
            if (i == r || a(i, c) == 0.0) continue;
            const double factor = a(i, c);
            for (std::size_t k = c; k < cols; ++k) a(i, k) -= factor * a(r, k);
            a(i, c) = 0.0;
        }
        pivot_cols.push_back(c);
        ++r;
    }

    std::vector<bool> is_pivot(cols, false);
    for (auto c : pivot_cols) is_pivot[c] = true;
    std::vector<std::vector<double>> basis;
    for (std::size_t free = 0; free < cols; ++free) {
        if (is_pivot[free]) continue;
        std::vector<double> v(cols, 0.0);
        v[free] = 1.0;
        for (std::size_t i = 0; i < pivot_cols.size(); ++i) v[pivot_cols[i]] = -a(i, free);
        basis.push_back(std::move(v));
    }
    return basis;
}

/// Nullspace of a real matrix. In exact mode every double is converted to the
/// rational it represents exactly, so the result is exact for that input.
inline std::vector<std::vector<double>> nullspace(const CoefficientMatrix<double>& a, NullspaceMode mode,
                                                  double tol = 1e-10) {
    if (mode == NullspaceMode::floating) return floating_nullspace(a, tol);
    CoefficientMatrix<Rational> exact(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) {
            if (!std::isfinite(a(i, j))) throw Error("nullspace: non-finite entry");
            exact(i, j) = Rational(a(i, j));
        }
    std::vector<std::vector<double>> out;
    for (const auto& v : rational_nullspace(std::move(exact))) {
        std::vector<double> d;
        d.reserve(v.size());
        for (const auto& x : v) d.push_back(static_cast<double>(x));
        out.push_back(std::move(d));
    }
    return out;
}

// ---------------------------------------------------------------------------
// construct_g

/// Smallest-denominator fraction p/q (q <= max_den) whose double value equals x exactly.
inline std::optional<Rational> small_rational(double x, std::int64_t max_den = 1'000'000) {
    if (!std::isfinite(x)) return std::nullopt;
    if (x == std::floor(x) && std::abs(x) < 9.0e15) return Rational(static_cast<std::int64_t>(x));
    const bool negative = x < 0;
    const double target = std::abs(x);
    double rem = target;
    std::int64_t h_prev = 1, h_prev2 = 0, k_prev = 0, k_prev2 = 1;
    for (int iter = 0; iter < 64; ++iter) {
        const double a_d = std::floor(rem);
        if (a_d > 9.0e15) break;
        const auto a = static_cast<std::int64_t>(a_d);
        const double h_d = static_cast<double>(a) * static_cast<double>(h_prev) + static_cast<double>(h_prev2);
        const double k_d = static_cast<double>(a) * static_cast<double>(k_prev) + static_cast<double>(k_prev2);
        if (k_d > static_cast<double>(max_den) || h_d > 9.0e15) break;
        const std::int64_t h = a * h_prev + h_prev2;
        const std::int64_t k = a * k_prev + k_prev2;
        if (static_cast<double>(h) / static_cast<double>(k) == target) {
            Rational r(h, k);
            return negative ? Rational(-r) : r;
        }
        h_prev2 = h_prev;
        h_prev = h;
        k_prev2 = k_prev;
        k_prev = k;
        const double frac = rem - a_d;
        if (frac == 0.0) break;
        rem = 1.0 / frac;
    }
    return std::nullopt;
}

/// Exact copy of f when every coefficient is a small-denominator fraction.
inline std::optional<RationalOperatorMatrix> rationalize(const OperatorMatrix& f) {
    RationalOperatorMatrix out(f.rows(), f.cols(), f.vars());
    for (std::size_t i = 0; i < f.rows(); ++i)
        for (std::size_t j = 0; j < f.cols(); ++j) {
            RationalOperatorPoly p(f.vars());
            for (const auto& [m, c] : f.at(i, j).terms()) {
                auto r = small_rational(c);
                if (!r) return std::nullopt;
                p.add_term(m, *r);
            }
            out.set(i, j, std::move(p));
        }
    return out;
}

enum class ArithmeticMode { automatic, exact, floating };

struct ConstructOptions {
    int max_degree = 3;
    ArithmeticMode arithmetic = ArithmeticMode::automatic;
    double tol = 1e-10;
};

/// Nullspace basis reshaped: each matrix is n x M_g with entry (j, k) = gamma_jk.
struct GammaSolution {
    std::vector<Eigen::MatrixXd> basis;
    AnsatzBasis ansatz;
};

struct ConstructionResult {
    OperatorMatrix g;
    GammaSolution solution;
    /// Set when the exact path was taken; F * exact_g is exactly zero.
    std::optional<RationalOperatorMatrix> exact_g;
    bool exact = false;
    /// Number of ansatz degree sets tried, including the successful one.
    int attempts = 0;
};

/// Degree sets tried in order: {q}, {q+1}, ..., {max}, then {0..q}, {0..q+1}, ..., {0..max};
/// q is the highest degree occurring in F. Duplicates are skipped.
inline std::vector<std::set<int>> ansatz_schedule(int f_degree, int max_degree) {
    if (max_degree < 0) throw Error("max_degree must be non-negative");
    if (f_degree > max_degree)
        throw Error("max_degree " + std::to_string(max_degree) + " is below the degree of F (" +
                    std::to_string(f_degree) + ")");
    std::vector<std::set<int>> out;
    for (int d = f_degree; d <= max_degree; ++d) out.push_back({d});
    for (int top = f_degree; top <= max_degree; ++top) {
        std::set<int> s;
        for (int d = 0; d <= top; ++d) s.insert(d);
        if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(std::move(s));
    }
    return out;
}

namespace detail {

/// Scales v so that its first nonzero entry, scanning ansatz monomials in
/// graded-lex order and output components within each monomial, is +1.
template <class Scalar>
void normalize_gamma(std::vector<Scalar>& v, std::size_t n, std::size_t m_g, double zero_tol) {
    for (std::size_t k = 0; k < m_g; ++k)
        for (std::size_t j = 0; j < n; ++j) {
            const Scalar& x = v[j * m_g + k];
            bool nonzero;
            if constexpr (std::is_floating_point_v<Scalar>) nonzero = std::abs(x) > zero_tol;
            else nonzero = !(x == 0);
            if (!nonzero) continue;
            const Scalar s = x;
            for (auto& e : v) e /= s;
            return;
        }
}

template <class Scalar>
BasicOperatorMatrix<Scalar> assemble_g(const std::vector<std::vector<Scalar>>& basis, const AnsatzBasis& ansatz,
                                       std::size_t n, std::size_t vars) {
    const std::size_t m_g = ansatz.size();
    BasicOperatorMatrix<Scalar> g(n, basis.size(), vars);
    for (std::size_t p = 0; p < basis.size(); ++p)
        for (std::size_t j = 0; j < n; ++j) {
            BasicOperatorPoly<Scalar> poly(vars);
            for (std::size_t k = 0; k < m_g; ++k) poly.add_term(ansatz.monomials[k], basis[p][j * m_g + k]);
            g.set(j, p, std::move(poly));
        }
    return g;
}

template <class Scalar>
Eigen::MatrixXd to_gamma_matrix(const std::vector<Scalar>& v, std::size_t n, std::size_t m_g) {
    Eigen::MatrixXd gamma(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m_g));
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < m_g; ++k)
            gamma(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = static_cast<double>(v[j * m_g + k]);
    return gamma;
}

} // namespace detail

/// Builds G with F G = 0 by escalating the ansatz until A vec(Gamma) = 0 has a nontrivial solution.
inline ConstructionResult construct_g(const OperatorMatrix& f, const ConstructOptions& opts = {}) {
    if (f.rows() == 0 || f.cols() == 0) throw DimensionError("construct_g: F is empty");
    const std::size_t n = f.cols();
    const std::size_t vars = f.vars();

    std::optional<RationalOperatorMatrix> exact_f;
    if (opts.arithmetic != ArithmeticMode::floating) {
        exact_f = rationalize(f);
        if (!exact_f && opts.arithmetic == ArithmeticMode::exact) {
            // Every double is a dyadic rational; fall back to its exact value.
            RationalOperatorMatrix r(f.rows(), f.cols(), vars);
            for (std::size_t i = 0; i < f.rows(); ++i)
                for (std::size_t j = 0; j < n; ++j) r.set(i, j, f.at(i, j).cast<Rational>());
            exact_f = std::move(r);
        }
    }

    ConstructionResult result;
    for (const auto& degrees : ansatz_schedule(f.max_degree(), opts.max_degree)) {
        ++result.attempts;
        const AnsatzBasis ansatz = make_ansatz_basis(vars, degrees);
        const std::size_t m_g = ansatz.size();
        if (exact_f) {
            auto sys = build_ansatz_system(*exact_f, ansatz);
            auto basis = rational_nullspace(sys.matrix);
            if (basis.empty()) continue;
            for (auto& v : basis) detail::normalize_gamma(v, n, m_g, 0.0);
            result.exact_g = detail::assemble_g(basis, ansatz, n, vars);
            result.g = result.exact_g->cast<double>();
            result.exact = true;
            for (const auto& v : basis) result.solution.basis.push_back(detail::to_gamma_matrix(v, n, m_g));
        } else {
            auto sys = build_ansatz_system(f, ansatz);
            auto basis = floating_nullspace(sys.matrix, opts.tol);
            if (basis.empty()) continue;
            for (auto& v : basis) {
                double mx = 0.0;
                for (double x : v) mx = std::max(mx, std::abs(x));
                for (double& x : v)
                    if (std::abs(x) <= opts.tol * mx) x = 0.0;
                detail::normalize_gamma(v, n, m_g, 0.0);
            }
            result.g = detail::assemble_g(basis, ansatz, n, vars);
            for (const auto& v : basis) result.solution.basis.push_back(detail::to_gamma_matrix(v, n, m_g));
        }
        result.solution.ansatz = ansatz;
        return result;
    }
    throw NoAnnihilatorFound(opts.max_degree);
}

} // namespace opgp
