#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <random>
#include <set>

#include "opgp/annihilator.hpp"
#include "opgp/operator_json.hpp"
#include "canonical.hpp"
#include "oracles.hpp"

using namespace opgp;

namespace {

using RPoly = RationalOperatorPoly;

RPoly d(std::size_t vars, std::size_t k, int sign = 1) { return RPoly::derivative(vars, k, Rational(sign)); }

} // namespace

// ---------------------------------------------------------------------------
// Golden constructions

TEST(ConstructG, Divergence2dGivesRotatedGradient) {
    const auto res = construct_g(make_divergence_operator(2));
    ASSERT_TRUE(res.exact);
    ASSERT_EQ(res.g.cols(), 1U);
    const auto expected = canonical::column_matrix(2, {{d(2, 1, -1), d(2, 0)}});
    EXPECT_EQ(*res.exact_g, expected);
    EXPECT_EQ(render(res.g), "[-d/dx2]\n[d/dx1]\n");
    EXPECT_EQ(res.attempts, 1);
}

TEST(ConstructG, CurlGivesGradientColumn) {
    const auto res = construct_g(make_curl_operator_3d());
    ASSERT_EQ(res.g.cols(), 1U);
    EXPECT_EQ(*res.exact_g, make_gradient_operator<Rational>(3));
}

TEST(ConstructG, Divergence3dSpansReferenceBasis) {
    const auto res = construct_g(make_divergence_operator(3));
    ASSERT_EQ(res.g.cols(), 3U);
    const RPoly zero(3);
    const auto reference = canonical::column_matrix(3, {{zero, d(3, 2), d(3, 1, -1)},
                                             {d(3, 2, -1), zero, d(3, 0)},
                                             {d(3, 1), d(3, 0, -1), zero}});
    EXPECT_EQ(canonical::canonical_columns(*res.exact_g), canonical::canonical_columns(reference));
    EXPECT_TRUE(symbolic_product(make_divergence_operator<Rational>(3), *res.exact_g).is_zero());
}

TEST(ConstructG, FloatingModeMatchesExact) {
    ConstructOptions opts;
    opts.arithmetic = ArithmeticMode::floating;
    for (const auto& f : {make_divergence_operator(2), make_curl_operator_3d(), make_divergence_operator(3)}) {
        const auto fl = construct_g(f, opts);
        const auto ex = construct_g(f);
        EXPECT_FALSE(fl.exact);
        EXPECT_EQ(fl.g, ex.g);
    }
}

TEST(ConstructG, IrrationalCoefficientsUseFloatingPath) {
    OperatorMatrix f(1, 2, 2);
    f.at(0, 0).add_term(Monomial::variable(2, 0), std::sqrt(2.0));
    f.at(0, 1).add_term(Monomial::variable(2, 1), std::numbers::pi);
    const auto res = construct_g(f);
    EXPECT_FALSE(res.exact);
    ASSERT_EQ(res.g.cols(), 1U);
    // F G evaluated on symbols: sqrt2 * g1 * y1 + pi * g2 * y2 must vanish coefficient-wise.
    const auto prod = symbolic_product(f, res.g);
    for (const auto& [m, c] : prod.at(0, 0).terms()) EXPECT_NEAR(c, 0.0, 1e-12);
}

TEST(ConstructG, ExactModeAcceptsDyadicFallback) {
    OperatorMatrix f(1, 2, 2);
    f.at(0, 0).add_term(Monomial::variable(2, 0), std::sqrt(2.0));
    f.at(0, 1).add_term(Monomial::variable(2, 1), 1.0);
    ASSERT_FALSE(rationalize(f).has_value());
    ConstructOptions opts;
    opts.arithmetic = ArithmeticMode::exact;
    const auto res = construct_g(f, opts);
    ASSERT_TRUE(res.exact);
    EXPECT_TRUE(symbolic_product(f.cast<Rational>(), *res.exact_g).is_zero());
}

TEST(ConstructG, EscalatesAnsatzDegree) {
    // F = [d1^2, d2]: the solution [d2, -d1^2] mixes degrees, so homogeneous ansatzes fail.
    OperatorMatrix f(1, 2, 2);
    f.at(0, 0).add_term(Monomial(std::vector<int>{2, 0}), 1.0);
    f.at(0, 1).add_term(Monomial::variable(2, 1), 1.0);
    const auto res = construct_g(f);
    EXPECT_GT(res.attempts, 1);
    EXPECT_TRUE(symbolic_product(*rationalize(f), *res.exact_g).is_zero());
    EXPECT_FALSE(res.g.is_zero());
}

TEST(ConstructG, NoSolutionThrows) {
    // [d1; d2] g = 0 forces g = 0.
    OperatorMatrix f(2, 1, 2);
    f.at(0, 0).add_term(Monomial::variable(2, 0), 1.0);
    f.at(1, 0).add_term(Monomial::variable(2, 1), 1.0);
    ConstructOptions opts;
    opts.max_degree = 2;
    try {
        (void)construct_g(f, opts);
        FAIL() << "expected NoAnnihilatorFound";
    } catch (const NoAnnihilatorFound& e) {
        EXPECT_EQ(e.max_degree(), 2);
    }
}

TEST(ConstructG, MaxDegreeBelowFDegreeThrows) {
    OperatorMatrix f(1, 1, 1);
    f.at(0, 0).add_term(Monomial(std::vector<int>{2}), 1.0);
    ConstructOptions opts;
    opts.max_degree = 1;
    EXPECT_THROW((void)construct_g(f, opts), Error);
}

TEST(ConstructG, GoldenRuntimeUnderOneSecond) {
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& f : {make_divergence_operator(2), make_curl_operator_3d(), make_divergence_operator(3)})
        (void)construct_g(f);
    EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 1.0);
}

TEST(AnsatzSchedule, HomogeneousThenCumulative) {
    const auto s = ansatz_schedule(1, 3);
    const std::vector<std::set<int>> expected{{1}, {2}, {3}, {0, 1}, {0, 1, 2}, {0, 1, 2, 3}};
    EXPECT_EQ(s, expected);
    const auto z = ansatz_schedule(0, 1);
    const std::vector<std::set<int>> expected0{{0}, {1}, {0, 1}};
    EXPECT_EQ(z, expected0);
}

// ---------------------------------------------------------------------------
// Ansatz system

TEST(AnsatzSystem, Divergence2dGoldenMatrix) {
    const auto sys = build_ansatz_system(make_divergence_operator<Rational>(2), make_ansatz_basis(2, {1}));
    const CoefficientMatrix<Rational> expected{{1, 0, 0, 0}, {0, 1, 1, 0}, {0, 0, 0, 1}};
    EXPECT_EQ(sys.matrix, expected);
    ASSERT_EQ(sys.col_index.size(), 4U);
    // Column order gamma11, gamma12, gamma21, gamma22.
    EXPECT_EQ(sys.col_index[1].component, 0U);
    EXPECT_EQ(sys.col_index[1].monomial, 1U);
    EXPECT_EQ(sys.col_index[2].component, 1U);
    EXPECT_EQ(sys.col_index[2].monomial, 0U);
    // Row order y1^2, y1 y2, y2^2.
    EXPECT_EQ(sys.row_index[0].monomial, Monomial(std::vector<int>{2, 0}));
    EXPECT_EQ(sys.row_index[1].monomial, Monomial(std::vector<int>{1, 1}));
    EXPECT_EQ(sys.row_index[2].monomial, Monomial(std::vector<int>{0, 2}));
}

TEST(AnsatzSystem, DimensionMismatchThrows) {
    EXPECT_THROW(build_ansatz_system(make_divergence_operator(2), make_ansatz_basis(3, {1})), DimensionError);
}

TEST(AnsatzSystem, FaithfulToBruteForceExpansion) {
    std::mt19937_64 rng(20240611);
    std::uniform_int_distribution<int> small(-4, 4);
    std::uniform_int_distribution<int> den(1, 5);
    std::uniform_int_distribution<int> deg(0, 2);
    std::bernoulli_distribution sparse(0.5);
    int checked = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t vars = 1 + static_cast<std::size_t>(trial % 3);
        const std::size_t rows = 1 + static_cast<std::size_t>(trial % 2);
        const std::size_t cols = 2 + static_cast<std::size_t>(trial % 2);
        RationalOperatorMatrix f(rows, cols, vars);
        std::vector<std::vector<oracle::Poly>> f_ref(rows, std::vector<oracle::Poly>(cols));
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j)
                for (int t = 0; t < 2; ++t) {
                    if (sparse(rng)) continue;
                    std::vector<int> e(vars, 0);
                    const int dg = deg(rng);
                    for (int s = 0; s < dg; ++s) ++e[static_cast<std::size_t>(rng() % vars)];
                    const Rational c(small(rng), den(rng));
                    f.at(i, j).add_term(Monomial(e), c);
                    f_ref[i][j][e] += c;
                }
        const AnsatzBasis ansatz = make_ansatz_basis(vars, {0, 1, 2});
        const auto sys = build_ansatz_system(f, ansatz);

        std::vector<Rational> gamma(cols * ansatz.size());
        for (auto& g : gamma) g = Rational(small(rng), den(rng));

        // Brute force: sum_j F_ij * (sum_k gamma_jk xi_k).
        std::vector<oracle::Poly> expanded(rows);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) {
                oracle::Poly gj;
                for (std::size_t k = 0; k < ansatz.size(); ++k)
                    if (gamma[j * ansatz.size() + k] != 0)
                        gj[ansatz.monomials[k].exponents()] += gamma[j * ansatz.size() + k];
                oracle::accumulate(expanded[i], oracle::multiply(f_ref[i][j], gj));
            }

        std::vector<std::set<std::vector<int>>> seen(rows);
        for (std::size_t r = 0; r < sys.row_index.size(); ++r) {
            Rational lhs = 0;
            for (std::size_t c = 0; c < gamma.size(); ++c) lhs += sys.matrix(r, c) * gamma[c];
            const auto& row = sys.row_index[r];
            const auto& e = row.monomial.exponents();
            seen[row.constraint].insert(e);
            const auto it = expanded[row.constraint].find(e);
            const Rational rhs = it == expanded[row.constraint].end() ? Rational(0) : it->second;
            ASSERT_EQ(lhs, rhs) << "trial " << trial << " row " << r;
        }
        for (std::size_t i = 0; i < rows; ++i)
            for (const auto& [e, c] : expanded[i]) EXPECT_TRUE(seen[i].count(e)) << "monomial missing from system";
        ++checked;
    }
    EXPECT_GE(checked, 50);
}

// ---------------------------------------------------------------------------
// Nullspace

TEST(Nullspace, RandomRankFiveMatrixMatchesOracle) {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> small(-3, 3);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::vector<oracle::Q>> b(6, std::vector<oracle::Q>(5)), c(5, std::vector<oracle::Q>(8));
        for (auto& row : b)
            for (auto& x : row) x = small(rng);
        for (auto& row : c)
            for (auto& x : row) x = small(rng);
        CoefficientMatrix<Rational> a(6, 8);
        std::vector<std::vector<oracle::Q>> a_rows(6, std::vector<oracle::Q>(8));
        for (std::size_t i = 0; i < 6; ++i)
            for (std::size_t j = 0; j < 8; ++j) {
                oracle::Q s = 0;
                for (std::size_t k = 0; k < 5; ++k) s += b[i][k] * c[k][j];
                a(i, j) = s;
                a_rows[i][j] = s;
            }
        if (oracle::rank(a_rows) != 5) continue;

        const auto lib = rational_nullspace(a);
        const auto ref = oracle::nullspace(a_rows, 8);
        ASSERT_EQ(lib.size(), 3U);
        ASSERT_EQ(ref.size(), 3U);
        for (const auto& v : lib)
            for (std::size_t i = 0; i < 6; ++i) {
                Rational s = 0;
                for (std::size_t j = 0; j < 8; ++j) s += a(i, j) * v[j];
                EXPECT_EQ(s, 0);
            }
        std::vector<std::vector<oracle::Q>> stacked(lib.begin(), lib.end());
        EXPECT_EQ(oracle::rank(stacked), 3U);
        stacked.insert(stacked.end(), ref.begin(), ref.end());
        EXPECT_EQ(oracle::rank(stacked), 3U) << "library and oracle nullspaces span different spaces";

        const auto fl = floating_nullspace(a.cast<double>(), 1e-10);
        ASSERT_EQ(fl.size(), 3U);
        for (const auto& v : fl)
            for (std::size_t i = 0; i < 6; ++i) {
                double s = 0;
                for (std::size_t j = 0; j < 8; ++j) s += static_cast<double>(a(i, j)) * v[j];
                EXPECT_NEAR(s, 0.0, 1e-9);
            }
    }
}

TEST(Nullspace, BasisHasUnitFreeEntries) {
    const CoefficientMatrix<Rational> a{{1, 2, 3}};
    const auto basis = rational_nullspace(a);
    ASSERT_EQ(basis.size(), 2U);
    EXPECT_EQ(basis[0], (std::vector<Rational>{-2, 1, 0}));
    EXPECT_EQ(basis[1], (std::vector<Rational>{-3, 0, 1}));
}

TEST(Nullspace, FullRankHasEmptyNullspace) {
    const CoefficientMatrix<Rational> a{{1, 0}, {0, 1}, {1, 1}};
    EXPECT_TRUE(rational_nullspace(a).empty());
    EXPECT_TRUE(floating_nullspace(a.cast<double>(), 1e-12).empty());
}

TEST(Nullspace, ZeroMatrixGivesIdentity) {
    const CoefficientMatrix<Rational> a(2, 3);
    EXPECT_EQ(rational_nullspace(a).size(), 3U);
}

TEST(Nullspace, DispatcherModesAgreeOnIntegerMatrix) {
    const CoefficientMatrix<double> a{{1, 0, 0, 0}, {0, 1, 1, 0}, {0, 0, 0, 1}};
    const auto e = nullspace(a, NullspaceMode::exact);
    const auto f = nullspace(a, NullspaceMode::floating);
    ASSERT_EQ(e.size(), 1U);
    ASSERT_EQ(f.size(), 1U);
    EXPECT_EQ(e[0], (std::vector<double>{0, -1, 1, 0}));
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(e[0][i], f[0][i], 1e-14);
}

TEST(SmallRational, RecognizesSimpleFractions) {
    EXPECT_EQ(small_rational(0.5), Rational(1, 2));
    EXPECT_EQ(small_rational(-0.75), Rational(-3, 4));
    EXPECT_EQ(small_rational(1.0 / 3.0), Rational(1, 3));
    EXPECT_EQ(small_rational(7.0), Rational(7));
    EXPECT_FALSE(small_rational(std::sqrt(2.0)).has_value());
    EXPECT_FALSE(small_rational(std::numbers::pi).has_value());
}

TEST(GammaSolution, ReshapesRowMajor) {
    const auto res = construct_g(make_divergence_operator(2));
    ASSERT_EQ(res.solution.basis.size(), 1U);
    Eigen::MatrixXd expected(2, 2);
    expected << 0, -1, 1, 0;
    EXPECT_EQ(res.solution.basis[0], expected);
}
