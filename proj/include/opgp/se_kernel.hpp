#pragma once

// Squared-exponential kernel k(x,x') = s2 * exp(-|x-x'|^2 / (2 l^2)) and its
// mixed partial derivatives with respect to both arguments.
//
// The kernel factorizes over dimensions. With u = (x_d - x'_d)/l,
//   d^a/dx_d^a d^b/dx'_d^b exp(-u^2/2) = (-1)^a l^-(a+b) He_{a+b}(u) exp(-u^2/2)
// where He_n is the probabilists' Hermite polynomial. Derivatives in x' pick
// up no explicit sign: it is absorbed by (-1)^a.

#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "opgp/errors.hpp"

namespace opgp {

/// Largest supported |alpha| + |beta|.
inline constexpr int kMaxDerivativeOrder = 4;

struct SeHyperparams {
    double signal_variance = 1.0;
    double length_scale = 1.0;
    double noise_variance = 0.0;

    void validate() const {
        if (!(signal_variance > 0.0) || !std::isfinite(signal_variance))
            throw Error("signal variance must be positive and finite");
        if (!(length_scale > 0.0) || !std::isfinite(length_scale))
            throw Error("length scale must be positive and finite");
        if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance))
            throw Error("noise variance must be non-negative and finite");
    }

    friend bool operator==(const SeHyperparams&, const SeHyperparams&) = default;
};

/// alpha: derivative orders in the first argument x; beta: in the second argument x'.
struct DerivativeMultiIndex {
    std::vector<int> alpha;
    std::vector<int> beta;

    [[nodiscard]] int order() const {
        return std::accumulate(alpha.begin(), alpha.end(), 0) + std::accumulate(beta.begin(), beta.end(), 0);
    }

    friend bool operator==(const DerivativeMultiIndex&, const DerivativeMultiIndex&) = default;
    friend auto operator<=>(const DerivativeMultiIndex&, const DerivativeMultiIndex&) = default;
};

/// Probabilists' Hermite polynomial He_n(u) by the three-term recurrence.
inline double hermite_he(int n, double u) {
    if (n == 0) return 1.0;
    double prev = 1.0;
    double cur = u;
    for (int k = 1; k < n; ++k) {
        const double next = u * cur - k * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

inline double se_eval(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& x2,
                      const SeHyperparams& theta) {
    if (x.size() != x2.size()) throw DimensionError("se_eval: point dimensions differ");
    const double l = theta.length_scale;
    return theta.signal_variance * std::exp(-0.5 * (x - x2).squaredNorm() / (l * l));
}

/// Per point pair: exp factor and He_n(u_d) / l^n for every dimension and n <= kMaxDerivativeOrder.
/// Evaluating many multi-indices for the same pair then costs O(D) each.
class SeDerivativeTable {
public:
    SeDerivativeTable(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& x2,
                      const SeHyperparams& theta)
        : dims_(static_cast<std::size_t>(x.size())), scaled_(dims_) {
        if (x.size() != x2.size()) throw DimensionError("se_derivative: point dimensions differ");
        const double l = theta.length_scale;
        const double inv_l = 1.0 / l;
        double sq = 0.0;
        for (std::size_t d = 0; d < dims_; ++d) {
            const double u = (x[static_cast<Eigen::Index>(d)] - x2[static_cast<Eigen::Index>(d)]) * inv_l;
            sq += u * u;
            auto& row = scaled_[d];
            double he_prev = 1.0, he = u, inv_pow = inv_l;
            row[0] = 1.0;
            row[1] = u * inv_l;
            for (int n = 1; n < kMaxDerivativeOrder; ++n) {
                const double next = u * he - n * he_prev;
                he_prev = he;
                he = next;
                inv_pow *= inv_l;
                row[static_cast<std::size_t>(n + 1)] = he * inv_pow;
            }
        }
        base_ = theta.signal_variance * std::exp(-0.5 * sq);
    }

    [[nodiscard]] double value() const noexcept { return base_; }

    [[nodiscard]] double derivative(const std::vector<int>& alpha, const std::vector<int>& beta) const {
        if (alpha.size() != dims_ || beta.size() != dims_)
            throw DimensionError("se_derivative: multi-index length does not match point dimension");
        double v = base_;
        int total = 0;
        for (std::size_t d = 0; d < dims_; ++d) {
            const int a = alpha[d];
            const int n = a + beta[d];
            if (a < 0 || beta[d] < 0) throw Error("se_derivative: negative derivative order");
            total += n;
            if (total > kMaxDerivativeOrder)
                throw UnsupportedOrder("se_derivative: total order exceeds " + std::to_string(kMaxDerivativeOrder));
            if (n == 0) continue;
            v *= scaled_[d][static_cast<std::size_t>(n)];
            if (a % 2 != 0) v = -v;
        }
        return v;
    }

private:
    std::size_t dims_;
    std::vector<std::array<double, kMaxDerivativeOrder + 1>> scaled_;
    double base_ = 0.0;
};

inline double se_derivative(const DerivativeMultiIndex& idx, const Eigen::Ref<const Eigen::VectorXd>& x,
                            const Eigen::Ref<const Eigen::VectorXd>& x2, const SeHyperparams& theta) {
    if (idx.order() > kMaxDerivativeOrder)
        throw UnsupportedOrder("se_derivative: order " + std::to_string(idx.order()) + " exceeds " +
                               std::to_string(kMaxDerivativeOrder));
    return SeDerivativeTable(x, x2, theta).derivative(idx.alpha, idx.beta);
}

} // namespace opgp
