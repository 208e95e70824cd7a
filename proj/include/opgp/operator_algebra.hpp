#pragma once

// Linear differential operators with constant coefficients, represented as
// polynomials in commuting derivative symbols d/dx1 ... d/dxp.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "opgp/errors.hpp"

namespace opgp {

using Rational = boost::multiprecision::cpp_rational;

namespace detail {

template <class Scalar>
void check_coefficient(const Scalar& c) {
    if constexpr (std::is_floating_point_v<Scalar>) {
        if (!std::isfinite(c)) throw Error("operator coefficient must be finite");
    }
}

template <class Scalar>
bool is_zero(const Scalar& c) {
    return c == Scalar(0);
}

} // namespace detail

/// Product of derivative symbols, stored as an exponent vector over p variables.
class Monomial {
public:
    Monomial() = default;
    explicit Monomial(std::vector<int> exponents) : exponents_(std::move(exponents)) {
        for (int e : exponents_)
            if (e < 0) throw Error("monomial exponents must be non-negative");
    }

    static Monomial one(std::size_t vars) { return Monomial(std::vector<int>(vars, 0)); }

    /// d/dx_{index+1}
    static Monomial variable(std::size_t vars, std::size_t index) {
        std::vector<int> e(vars, 0);
        e.at(index) = 1;
        return Monomial(std::move(e));
    }

    [[nodiscard]] std::size_t vars() const noexcept { return exponents_.size(); }
    [[nodiscard]] const std::vector<int>& exponents() const noexcept { return exponents_; }
    [[nodiscard]] int exponent(std::size_t i) const { return exponents_.at(i); }
    [[nodiscard]] int degree() const noexcept { return std::accumulate(exponents_.begin(), exponents_.end(), 0); }

    [[nodiscard]] Monomial operator*(const Monomial& other) const {
        if (vars() != other.vars()) throw DimensionError("monomial variable counts differ");
        std::vector<int> e(exponents_);
        for (std::size_t i = 0; i < e.size(); ++i) e[i] += other.exponents_[i];
        return Monomial(std::move(e));
    }

    friend bool operator==(const Monomial&, const Monomial&) = default;

private:
    std::vector<int> exponents_;
};

/// Graded lexicographic order: lower total degree first; within a degree,
/// larger power of x1 first, then x2, ... (d2/dx1^2 < d2/dx1dx2 < d2/dx2^2).
struct GradedLexLess {
    bool operator()(const Monomial& a, const Monomial& b) const {
        const int da = a.degree();
        const int db = b.degree();
        if (da != db) return da < db;
        return std::lexicographical_compare(a.exponents().begin(), a.exponents().end(), b.exponents().begin(),
                                            b.exponents().end(), std::greater<>());
    }
};

/// Every monomial over `vars` variables of exactly `degree`, in graded-lex order.
inline std::vector<Monomial> monomials_of_degree(std::size_t vars, int degree) {
    std::vector<Monomial> out;
    if (vars == 0) {
        if (degree == 0) out.emplace_back(std::vector<int>{});
        return out;
    }
    std::vector<int> e(vars, 0);
    // Enumerate exponent vectors in descending lexicographic order.
    auto recurse = [&](auto&& self, std::size_t pos, int remaining) -> void {
        if (pos + 1 == vars) {
            e[pos] = remaining;
            out.emplace_back(e);
            return;
        }
        for (int k = remaining; k >= 0; --k) {
            e[pos] = k;
            self(self, pos + 1, remaining - k);
        }
    };
    recurse(recurse, 0, degree);
    return out;
}

template <class Scalar>
class BasicOperatorPoly {
public:
    using scalar_type = Scalar;
    using TermMap = std::map<Monomial, Scalar, GradedLexLess>;

    BasicOperatorPoly() = default;
    explicit BasicOperatorPoly(std::size_t vars) : vars_(vars) {}

    static BasicOperatorPoly constant(std::size_t vars, const Scalar& c) {
        BasicOperatorPoly p(vars);
        p.add_term(Monomial::one(vars), c);
        return p;
    }
    static BasicOperatorPoly derivative(std::size_t vars, std::size_t index, const Scalar& c = Scalar(1)) {
        BasicOperatorPoly p(vars);
        p.add_term(Monomial::variable(vars, index), c);
        return p;
    }

    [[nodiscard]] std::size_t vars() const noexcept { return vars_; }
    [[nodiscard]] const TermMap& terms() const noexcept { return terms_; }
    [[nodiscard]] bool is_zero() const noexcept { return terms_.empty(); }
    [[nodiscard]] std::size_t size() const noexcept { return terms_.size(); }

    /// Accumulates c into the coefficient of m; a coefficient that sums to zero is removed.
    void add_term(const Monomial& m, const Scalar& c) {
        if (m.vars() != vars_) throw DimensionError("monomial variable count does not match polynomial");
        detail::check_coefficient(c);
        if (detail::is_zero(c)) return;
        auto [it, inserted] = terms_.try_emplace(m, c);
        if (!inserted) {
            it->second += c;
            if (detail::is_zero(it->second)) terms_.erase(it);
        }
    }

    [[nodiscard]] Scalar coefficient(const Monomial& m) const {
        auto it = terms_.find(m);
        return it == terms_.end() ? Scalar(0) : it->second;
    }

    /// Common degree of all monomials; nullopt for mixed degrees or the zero polynomial.
    [[nodiscard]] std::optional<int> degree() const {
        std::optional<int> d;
        for (const auto& [m, c] : terms_) {
            if (!d) d = m.degree();
            else if (*d != m.degree()) return std::nullopt;
        }
        return d;
    }

    [[nodiscard]] int max_degree() const {
        int d = 0;
        for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
        return d;
    }

    BasicOperatorPoly& operator+=(const BasicOperatorPoly& other) {
        require_same_vars(other);
        for (const auto& [m, c] : other.terms_) add_term(m, c);
        return *this;
    }

    [[nodiscard]] BasicOperatorPoly operator+(const BasicOperatorPoly& other) const {
        BasicOperatorPoly r(*this);
        r += other;
        return r;
    }

    [[nodiscard]] BasicOperatorPoly operator*(const BasicOperatorPoly& other) const {
        require_same_vars(other);
        BasicOperatorPoly r(vars_);
        for (const auto& [ma, ca] : terms_)
            for (const auto& [mb, cb] : other.terms_) r.add_term(ma * mb, ca * cb);
        return r;
    }

    [[nodiscard]] BasicOperatorPoly scaled(const Scalar& s) const {
        BasicOperatorPoly r(vars_);
        for (const auto& [m, c] : terms_) r.add_term(m, c * s);
        return r;
    }

    template <class To>
    [[nodiscard]] BasicOperatorPoly<To> cast() const {
        BasicOperatorPoly<To> r(vars_);
        for (const auto& [m, c] : terms_) r.add_term(m, static_cast<To>(c));
        return r;
    }

    friend bool operator==(const BasicOperatorPoly& a, const BasicOperatorPoly& b) {
        return a.vars_ == b.vars_ && a.terms_ == b.terms_;
    }

private:
    void require_same_vars(const BasicOperatorPoly& other) const {
        if (other.vars_ != vars_) throw DimensionError("operator polynomials over different variable counts");
    }

    std::size_t vars_ = 0;
    TermMap terms_;
};

/// m x n grid of operator polynomials over p shared variables.
template <class Scalar>
class BasicOperatorMatrix {
public:
    using Poly = BasicOperatorPoly<Scalar>;

    BasicOperatorMatrix() = default;
    BasicOperatorMatrix(std::size_t rows, std::size_t cols, std::size_t vars)
        : rows_(rows), cols_(cols), vars_(vars), entries_(rows * cols, Poly(vars)) {}

    static BasicOperatorMatrix zero(std::size_t rows, std::size_t cols, std::size_t vars) {
        return BasicOperatorMatrix(rows, cols, vars);
    }

    /// Degree-0 identity: the operator f -> f.
    static BasicOperatorMatrix identity(std::size_t n, std::size_t vars) {
        BasicOperatorMatrix m(n, n, vars);
        for (std::size_t i = 0; i < n; ++i) m.at(i, i) = Poly::constant(vars, Scalar(1));
        return m;
    }

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] std::size_t vars() const noexcept { return vars_; }

    [[nodiscard]] Poly& at(std::size_t i, std::size_t j) { return entries_.at(index(i, j)); }
    [[nodiscard]] const Poly& at(std::size_t i, std::size_t j) const { return entries_.at(index(i, j)); }

    void set(std::size_t i, std::size_t j, Poly p) {
        if (p.vars() != vars_) throw DimensionError("entry variable count does not match operator matrix");
        entries_.at(index(i, j)) = std::move(p);
    }

    [[nodiscard]] bool is_zero() const {
        return std::all_of(entries_.begin(), entries_.end(), [](const Poly& p) { return p.is_zero(); });
    }

    [[nodiscard]] int max_degree() const {
        int d = 0;
        for (const auto& p : entries_) d = std::max(d, p.max_degree());
        return d;
    }

    template <class To>
    [[nodiscard]] BasicOperatorMatrix<To> cast() const {
        BasicOperatorMatrix<To> r(rows_, cols_, vars_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) r.set(i, j, at(i, j).template cast<To>());
        return r;
    }

    friend bool operator==(const BasicOperatorMatrix& a, const BasicOperatorMatrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.vars_ == b.vars_ && a.entries_ == b.entries_;
    }

private:
    [[nodiscard]] std::size_t index(std::size_t i, std::size_t j) const {
        if (i >= rows_ || j >= cols_) throw DimensionError("operator matrix index out of range");
        return i * cols_ + j;
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::size_t vars_ = 0;
    std::vector<Poly> entries_;
};

using OperatorPoly = BasicOperatorPoly<double>;
using OperatorMatrix = BasicOperatorMatrix<double>;
using RationalOperatorPoly = BasicOperatorPoly<Rational>;
using RationalOperatorMatrix = BasicOperatorMatrix<Rational>;

/// (F G)_ik = sum_j F_ij G_jk with commuting symbols.
template <class Scalar>
BasicOperatorMatrix<Scalar> symbolic_product(const BasicOperatorMatrix<Scalar>& f, const BasicOperatorMatrix<Scalar>& g) {
    if (f.cols() != g.rows())
        throw DimensionError("symbolic_product: F has " + std::to_string(f.cols()) + " columns but G has " +
                             std::to_string(g.rows()) + " rows");
    if (f.vars() != g.vars()) throw DimensionError("symbolic_product: operands use different variable counts");
    BasicOperatorMatrix<Scalar> out(f.rows(), g.cols(), f.vars());
    for (std::size_t i = 0; i < f.rows(); ++i)
        for (std::size_t k = 0; k < g.cols(); ++k) {
            auto& acc = out.at(i, k);
            for (std::size_t j = 0; j < f.cols(); ++j) acc += f.at(i, j) * g.at(j, k);
        }
    return out;
}

/// Divergence [d/dx1, ..., d/dxD] as a 1 x D operator matrix.
template <class Scalar = double>
BasicOperatorMatrix<Scalar> make_divergence_operator(std::size_t dims) {
    if (dims < 1) throw DimensionError("divergence operator needs at least one dimension");
    BasicOperatorMatrix<Scalar> f(1, dims, dims);
    for (std::size_t j = 0; j < dims; ++j) f.set(0, j, BasicOperatorPoly<Scalar>::derivative(dims, j));
    return f;
}

/// The 3-D curl as a skew 3 x 3 first-order operator matrix.
template <class Scalar = double>
BasicOperatorMatrix<Scalar> make_curl_operator_3d() {
    using Poly = BasicOperatorPoly<Scalar>;
    BasicOperatorMatrix<Scalar> f(3, 3, 3);
    auto d = [](std::size_t k, int sign) { return Poly::derivative(3, k, Scalar(sign)); };
    f.set(0, 1, d(2, 1));
    f.set(0, 2, d(1, -1));
    f.set(1, 0, d(2, -1));
    f.set(1, 2, d(0, 1));
    f.set(2, 0, d(1, 1));
    f.set(2, 1, d(0, -1));
    return f;
}

/// Gradient column [d/dx1, ..., d/dxD]^T.
template <class Scalar = double>
BasicOperatorMatrix<Scalar> make_gradient_operator(std::size_t dims) {
    BasicOperatorMatrix<Scalar> g(dims, 1, dims);
    for (std::size_t j = 0; j < dims; ++j) g.set(j, 0, BasicOperatorPoly<Scalar>::derivative(dims, j));
    return g;
}

// ---------------------------------------------------------------------------
// Rendering

inline std::string render_monomial(const Monomial& m) {
    const int deg = m.degree();
    if (deg == 0) return "1";
    std::ostringstream os;
    os << 'd';
    if (deg > 1) os << '^' << deg;
    os << '/';
    for (std::size_t i = 0; i < m.vars(); ++i) {
        const int e = m.exponent(i);
        if (e == 0) continue;
        os << "dx" << (i + 1);
        if (e > 1) os << '^' << e;
    }
    return os.str();
}

namespace detail {

inline std::string format_coefficient(double c) {
    std::ostringstream os;
    os.precision(12);
    os << c;
    return os.str();
}

inline std::string format_coefficient(const Rational& c) { return c.str(); }

} // namespace detail

/// Human-readable form, e.g. "-d/dx2" or "2*d^2/dx1dx2 + d/dx3".
template <class Scalar>
std::string render(const BasicOperatorPoly<Scalar>& p) {
    if (p.is_zero()) return "0";
    std::string out;
    bool first = true;
    for (const auto& [m, c] : p.terms()) {
        const bool negative = c < Scalar(0);
        const Scalar mag = negative ? Scalar(-c) : c;
        if (first) out += negative ? "-" : "";
        else out += negative ? " - " : " + ";
        first = false;
        const bool unit = mag == Scalar(1);
        if (m.degree() == 0) {
            out += detail::format_coefficient(mag);
        } else {
            if (!unit) out += detail::format_coefficient(mag) + "*";
            out += render_monomial(m);
        }
    }
    return out;
}

template <class Scalar>
std::string render(const BasicOperatorMatrix<Scalar>& m) {
    std::string out;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        out += "[";
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) out += ", ";
            out += render(m.at(i, j));
        }
        out += "]\n";
    }
    return out;
}

} // namespace opgp
