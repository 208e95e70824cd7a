#pragma once

// Runtime matrix kernel used by the regression code. Three families:
//   diagonal      k(x,x') I_K
//   curl_free_3d  closed-form curl-free kernel on R^3
//   transformed   G k_g G'^T for an arbitrary operator matrix G
// Each family also exposes its symbolic MatrixKernelExpr so that constraint
// operators can be composed onto it.

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "opgp/annihilator.hpp"
#include "opgp/errors.hpp"
#include "opgp/matrix_kernel.hpp"
#include "opgp/operator_json.hpp"

namespace opgp {

enum class KernelKind { diagonal, curl_free_3d, transformed };

inline std::string to_string(KernelKind k) {
    switch (k) {
    case KernelKind::diagonal: return "diagonal";
    case KernelKind::curl_free_3d: return "curl_free_3d";
    case KernelKind::transformed: return "transformed";
    }
    return "unknown";
}

class MatrixKernel {
public:
    static MatrixKernel diagonal(std::size_t inputs, std::size_t outputs, const SeHyperparams& theta) {
        if (inputs == 0 || outputs == 0) throw DimensionError("diagonal kernel needs positive dimensions");
        theta.validate();
        MatrixKernel k;
        k.kind_ = KernelKind::diagonal;
        k.inputs_ = inputs;
        k.outputs_ = outputs;
        k.groups_ = {theta};
        return k;
    }

    static MatrixKernel curl_free_3d(const SeHyperparams& theta) {
        theta.validate();
        MatrixKernel k;
        k.kind_ = KernelKind::curl_free_3d;
        k.inputs_ = 3;
        k.outputs_ = 3;
        k.groups_ = {theta};
        return k;
    }

    static MatrixKernel transformed(OperatorMatrix g, const SeHyperparams& theta, bool per_column = false) {
        theta.validate();
        MatrixKernel k;
        k.kind_ = KernelKind::transformed;
        k.inputs_ = g.vars();
        k.outputs_ = g.rows();
        k.expr_ = transform_kernel(g, theta, per_column);
        k.groups_ = k.expr_->base();
        k.g_ = std::move(g);
        return k;
    }

    [[nodiscard]] KernelKind kind() const noexcept { return kind_; }
    [[nodiscard]] std::size_t input_dim() const noexcept { return inputs_; }
    [[nodiscard]] std::size_t output_dim() const noexcept { return outputs_; }
    [[nodiscard]] const std::vector<SeHyperparams>& hyperparams() const noexcept { return groups_; }
    [[nodiscard]] double noise_variance() const noexcept { return groups_.front().noise_variance; }
    [[nodiscard]] const std::optional<OperatorMatrix>& g_operator() const noexcept { return g_; }

    void set_hyperparams(std::vector<SeHyperparams> groups) {
        if (groups.size() != groups_.size()) throw Error("hyperparameter group count cannot change");
        for (const auto& g : groups) g.validate();
        groups_ = std::move(groups);
        if (expr_) expr_->set_base(groups_);
    }

    void set_noise_variance(double v) {
        auto groups = groups_;
        groups.front().noise_variance = v;
        set_hyperparams(std::move(groups));
    }

    [[nodiscard]] Eigen::MatrixXd operator()(const Eigen::Ref<const Eigen::VectorXd>& x,
                                             const Eigen::Ref<const Eigen::VectorXd>& x2) const {
        switch (kind_) {
        case KernelKind::diagonal: return diagonal_kernel(x, x2, groups_.front(), outputs_);
        case KernelKind::curl_free_3d: return curl_free_closed_form(x, x2, groups_.front());
        case KernelKind::transformed: return eval_matrix_kernel(*expr_, x, x2);
        }
        throw Error("unknown kernel kind");
    }

    /// Symbolic form. The curl-free kernel is the gradient transform with signal variance sigma_f^2 l^2.
    [[nodiscard]] MatrixKernelExpr expr() const {
        switch (kind_) {
        case KernelKind::diagonal:
            return transform_kernel(OperatorMatrix::identity(outputs_, inputs_), groups_.front());
        case KernelKind::curl_free_3d: {
            SeHyperparams scaled = groups_.front();
            scaled.signal_variance *= scaled.length_scale * scaled.length_scale;
            return transform_kernel(make_gradient_operator(3), scaled);
        }
        case KernelKind::transformed: return *expr_;
        }
        throw Error("unknown kernel kind");
    }

    /// Optimizer coordinates: per group (log sigma_f, log l), then log sigma_n if learned.
    [[nodiscard]] Eigen::VectorXd log_params(bool with_noise) const {
        const auto n = static_cast<Eigen::Index>(2 * groups_.size() + (with_noise ? 1 : 0));
        Eigen::VectorXd p(n);
        for (std::size_t g = 0; g < groups_.size(); ++g) {
            p(static_cast<Eigen::Index>(2 * g)) = 0.5 * std::log(groups_[g].signal_variance);
            p(static_cast<Eigen::Index>(2 * g + 1)) = std::log(groups_[g].length_scale);
        }
        if (with_noise) p(n - 1) = 0.5 * std::log(std::max(noise_variance(), 1e-12));
        return p;
    }

    void set_log_params(const Eigen::Ref<const Eigen::VectorXd>& p, bool with_noise) {
        const auto expected = static_cast<Eigen::Index>(2 * groups_.size() + (with_noise ? 1 : 0));
        if (p.size() != expected) throw DimensionError("log-parameter vector has wrong length");
        auto groups = groups_;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            groups[g].signal_variance = std::exp(2.0 * p(static_cast<Eigen::Index>(2 * g)));
            groups[g].length_scale = std::exp(p(static_cast<Eigen::Index>(2 * g + 1)));
        }
        if (with_noise) groups.front().noise_variance = std::exp(2.0 * p(expected - 1));
        set_hyperparams(std::move(groups));
    }

private:
    MatrixKernel() = default;

    KernelKind kind_ = KernelKind::diagonal;
    std::size_t inputs_ = 0;
    std::size_t outputs_ = 0;
    std::vector<SeHyperparams> groups_;
    std::optional<OperatorMatrix> g_;
    std::optional<MatrixKernelExpr> expr_;
};

// ---------------------------------------------------------------------------
// Kernel spec JSON:
//   {"type": "diagonal"|"curl_free_3d"|"transformed",
//    "g_operator": <operator spec> | "auto-from-F",
//    "hyperparams": {"signal_variance": .., "length_scale": .., "noise_variance": ..},
//    "per_column": false, "group_hyperparams": [..], "input_dim": D, "output_dim": K}

inline SeHyperparams hyperparams_from_json(const nlohmann::json& j) {
    SeHyperparams h;
    h.signal_variance = j.value("signal_variance", h.signal_variance);
    h.length_scale = j.value("length_scale", h.length_scale);
    h.noise_variance = j.value("noise_variance", h.noise_variance);
    h.validate();
    return h;
}

inline nlohmann::json hyperparams_to_json(const SeHyperparams& h) {
    return {{"signal_variance", h.signal_variance}, {"length_scale", h.length_scale},
            {"noise_variance", h.noise_variance}};
}

/// `constraint` supplies "auto-from-F" and default dimensions for the diagonal kernel.
inline MatrixKernel kernel_from_spec(const nlohmann::json& spec, const OperatorMatrix* constraint = nullptr,
                                     const ConstructOptions& construct = {}) {
    try {
        const auto type = spec.at("type").get<std::string>();
        const SeHyperparams theta =
            spec.contains("hyperparams") ? hyperparams_from_json(spec.at("hyperparams")) : SeHyperparams{};
        if (type == "diagonal") {
            std::size_t in = constraint ? constraint->vars() : 0;
            std::size_t out = constraint ? constraint->cols() : 0;
            in = spec.value("input_dim", in);
            out = spec.value("output_dim", out);
            if (in == 0 || out == 0) throw ParseError("diagonal kernel spec needs input_dim and output_dim");
            return MatrixKernel::diagonal(in, out, theta);
        }
        if (type == "curl_free_3d") return MatrixKernel::curl_free_3d(theta);
        if (type == "transformed") {
            const auto& gspec = spec.at("g_operator");
            const bool per_column = spec.value("per_column", false);
            if (gspec.is_string() && gspec.get<std::string>() == "auto-from-F") {
                if (!constraint) throw ParseError("g_operator 'auto-from-F' requires a constraint operator");
                return MatrixKernel::transformed(construct_g(*constraint, construct).g, theta, per_column);
            }
            MatrixKernel k = MatrixKernel::transformed(operator_from_spec(gspec), theta, per_column);
            if (spec.contains("group_hyperparams")) {
                std::vector<SeHyperparams> groups;
                for (const auto& g : spec.at("group_hyperparams")) groups.push_back(hyperparams_from_json(g));
                k.set_hyperparams(std::move(groups));
            }
            return k;
        }
        throw ParseError("unknown kernel type '" + type + "'");
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("kernel spec: ") + ex.what());
    }
}

inline nlohmann::json kernel_to_spec(const MatrixKernel& k) {
    nlohmann::json j;
    j["type"] = to_string(k.kind());
    j["hyperparams"] = hyperparams_to_json(k.hyperparams().front());
    j["input_dim"] = k.input_dim();
    j["output_dim"] = k.output_dim();
    if (k.kind() == KernelKind::transformed) {
        j["g_operator"] = operator_to_json(*k.g_operator());
        j["per_column"] = k.hyperparams().size() > 1;
        if (k.hyperparams().size() > 1) {
            nlohmann::json groups = nlohmann::json::array();
            for (const auto& g : k.hyperparams()) groups.push_back(hyperparams_to_json(g));
            j["group_hyperparams"] = groups;
        }
    }
    return j;
}

} // namespace opgp
