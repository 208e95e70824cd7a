#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace opgp {

/// Derivative-free simplex minimizer (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
/// Non-finite objective values are treated as +inf.
struct NelderMeadOptions {
    std::size_t max_evaluations = 400;
    double initial_step = 0.5;
    /// Stop when the spread of simplex values and the simplex diameter both fall below these.
    double f_tol = 1e-7;
    double x_tol = 1e-6;
};

struct NelderMeadResult {
    Eigen::VectorXd x;
    double value = std::numeric_limits<double>::infinity();
    std::size_t evaluations = 0;
    bool converged = false;
    /// Best value seen after each evaluation; non-increasing.
    std::vector<double> best_trace;
};

inline NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                                    const Eigen::VectorXd& start, const NelderMeadOptions& opts = {}) {
    const auto n = static_cast<std::size_t>(start.size());
    NelderMeadResult res;
    res.x = start;

    auto eval = [&](const Eigen::VectorXd& x) {
        double v = objective(x);
        if (!std::isfinite(v)) v = std::numeric_limits<double>::infinity();
        ++res.evaluations;
        if (v < res.value) {
            res.value = v;
            res.x = x;
        }
        res.best_trace.push_back(res.value);
        return v;
    };

    std::vector<Eigen::VectorXd> simplex(n + 1, start);
    std::vector<double> values(n + 1);
    values[0] = eval(start);
    for (std::size_t i = 0; i < n; ++i) {
        simplex[i + 1](static_cast<Eigen::Index>(i)) += opts.initial_step;
        values[i + 1] = eval(simplex[i + 1]);
    }
    if (n == 0) {
        res.converged = true;
        return res;
    }

    std::vector<std::size_t> order(n + 1);
    while (res.evaluations < opts.max_evaluations) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second_worst = order[n - 1];

        double diameter = 0.0;
        for (std::size_t i = 0; i <= n; ++i) diameter = std::max(diameter, (simplex[i] - simplex[best]).lpNorm<Eigen::Infinity>());
        const double spread = values[worst] - values[best];
        if (std::isfinite(spread) && spread <= opts.f_tol * (1.0 + std::abs(values[best])) && diameter <= opts.x_tol) {
            res.converged = true;
            break;
        }

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i <= n; ++i)
            if (i != worst) centroid += simplex[i];
        centroid /= static_cast<double>(n);

        const Eigen::VectorXd reflected = centroid + (centroid - simplex[worst]);
        const double f_r = eval(reflected);
        if (f_r < values[best]) {
            const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - simplex[worst]);
            const double f_e = eval(expanded);
            if (f_e < f_r) {
                simplex[worst] = expanded;
                values[worst] = f_e;
            } else {
                simplex[worst] = reflected;
                values[worst] = f_r;
            }
            continue;
        }
        if (f_r < values[second_worst]) {
            simplex[worst] = reflected;
            values[worst] = f_r;
            continue;
        }
        const bool outside = f_r < values[worst];
        const Eigen::VectorXd contracted = outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                                                   : Eigen::VectorXd(centroid + 0.5 * (simplex[worst] - centroid));
        const double f_c = eval(contracted);
        if (f_c < (outside ? f_r : values[worst])) {
            simplex[worst] = contracted;
            values[worst] = f_c;
            continue;
        }
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == best) continue;
            simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
            values[i] = eval(simplex[i]);
            if (res.evaluations >= opts.max_evaluations) break;
        }
    }
    return res;
}

} // namespace opgp
