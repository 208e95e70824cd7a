// opgp command-line front end.
//
// Exit codes: 0 success, 1 usage/parse/data error, 2 no annihilating operator found,
// 3 constraint check failed.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "opgp/opgp.hpp"

namespace {

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

LogLevel log_level() {
    const char* env = std::getenv("OPGP_LOG_LEVEL");
    if (!env) return LogLevel::info;
    const std::string v = env;
    if (v == "error") return LogLevel::error;
    if (v == "warn") return LogLevel::warn;
    if (v == "debug") return LogLevel::debug;
    return LogLevel::info;
}

void log(LogLevel level, const std::string& msg) {
    static const LogLevel threshold = log_level();
    if (level > threshold) return;
    static const char* names[] = {"error", "warn", "info", "debug"};
    std::cerr << "[" << names[static_cast<int>(level)] << "] " << msg << '\n';
}

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNoSolution = 2;
constexpr int kExitCheckFailed = 3;

std::string method_summary(const opgp::RmseReport& report) {
    std::ostringstream os;
    for (const auto& r : report.rows)
        os << r.method << " Nc=" << r.nc << " mean=" << r.mean << " std=" << r.std << " ok=" << r.n_ok
           << (r.n_failed ? " failed=" + std::to_string(r.n_failed) : "") << '\n';
    return os.str();
}

int construct_g_cmd(const std::string& f_spec, int max_degree, const std::string& arithmetic, const std::string& out) {
    const opgp::OperatorMatrix f = opgp::operator_from_spec(opgp::read_json_file(f_spec));
    opgp::ConstructOptions opts;
    opts.max_degree = max_degree;
    if (arithmetic == "exact") opts.arithmetic = opgp::ArithmeticMode::exact;
    else if (arithmetic == "floating") opts.arithmetic = opgp::ArithmeticMode::floating;
    const opgp::ConstructionResult res = opgp::construct_g(f, opts);
    log(LogLevel::info, "found G with " + std::to_string(res.g.cols()) + " column(s) after " +
                            std::to_string(res.attempts) + " ansatz attempt(s), " +
                            (res.exact ? "exact" : "floating-point") + " arithmetic");
    nlohmann::json j = opgp::operator_to_json(res.g, true);
    j["exact"] = res.exact;
    j["attempts"] = res.attempts;
    const std::string text = j.dump(2);
    if (out.empty()) {
        std::cout << text << '\n';
    } else {
        std::ofstream os(out);
        if (!os) throw opgp::Error("cannot write " + out);
        os << text << '\n';
    }
    std::cout << opgp::render(res.g);
    return kExitOk;
}

int check_kernel_cmd(const std::string& f_spec, const std::string& g_spec, std::size_t samples, std::uint64_t seed,
                     double tol, double length_scale) {
    const opgp::OperatorMatrix f = opgp::operator_from_spec(opgp::read_json_file(f_spec));
    const opgp::SeHyperparams theta{1.0, length_scale, 0.0};
    std::optional<opgp::MatrixKernel> kernel;
    if (g_spec == "auto") kernel = opgp::MatrixKernel::transformed(opgp::construct_g(f).g, theta);
    else if (g_spec == "diagonal") kernel = opgp::MatrixKernel::diagonal(f.vars(), f.cols(), theta);
    else if (g_spec == "curl_free_3d") kernel = opgp::MatrixKernel::curl_free_3d(theta);
    else kernel = opgp::MatrixKernel::transformed(opgp::operator_from_spec(opgp::read_json_file(g_spec)), theta);

    if (samples == 0) {
        log(LogLevel::warn, "samples=0: nothing checked, reporting a vacuous pass");
        std::cout << "max_violation 0 relative 0 samples 0 PASS\n";
        return kExitOk;
    }
    const opgp::KernelCheckResult res = opgp::check_kernel_constraint(f, *kernel, samples, seed);
    const bool pass = res.relative() <= tol;
    std::cout << "max_violation " << res.max_violation << " relative " << res.relative() << " samples " << res.samples
              << (pass ? " PASS" : " FAIL") << '\n';
    return pass ? kExitOk : kExitCheckFailed;
}

int sim_experiment_cmd(const std::string& config_path, const std::string& out, std::optional<std::uint64_t> seed,
                       std::optional<int> reps) {
    opgp::ExperimentConfig cfg = opgp::ExperimentConfig::simulated_defaults();
    if (!config_path.empty()) cfg = opgp::config_from_json(opgp::read_json_file(config_path), cfg);
    if (seed) cfg.seed = *seed;
    if (reps) cfg.repetitions = *reps;
    cfg.validate();
    log(LogLevel::info, "simulated experiment: R=" + std::to_string(cfg.repetitions) + " seed=" + std::to_string(cfg.seed));
    const opgp::RmseReport report = opgp::run_simulated(cfg);
    for (const auto& f : report.failures) log(LogLevel::warn, f);
    opgp::emit_report(report, out);
    std::cout << method_summary(report);
    return kExitOk;
}

int real_experiment_cmd(const std::string& config_path, const std::string& data, const std::string& out,
                        std::optional<std::uint64_t> seed, std::optional<int> reps) {
    opgp::ExperimentConfig cfg = opgp::ExperimentConfig::real_defaults();
    if (!config_path.empty()) cfg = opgp::config_from_json(opgp::read_json_file(config_path), cfg);
    if (seed) cfg.seed = *seed;
    if (reps) cfg.repetitions = *reps;
    cfg.validate();
    if (!std::filesystem::exists(data)) throw opgp::ParseError("data file not found: " + data);
    log(LogLevel::info, "real-data experiment: R=" + std::to_string(cfg.repetitions) + " seed=" + std::to_string(cfg.seed));
    const opgp::RmseReport report = opgp::run_real_data(cfg, data);
    for (const auto& f : report.failures) log(LogLevel::warn, f);
    opgp::emit_report(report, out);
    std::cout << method_summary(report);
    return kExitOk;
}

int predict_cmd(const std::string& model_path, const std::string& points_path, const std::string& out, bool fit) {
    opgp::SavedModel model = opgp::load_model(model_path);
    if (fit) {
        const opgp::FitResult res = opgp::fit_hyperparameters(model.data, model.kernel);
        log(LogLevel::info, "fitted hyperparameters, log marginal likelihood " + std::to_string(res.log_marginal_likelihood));
        model.kernel = res.kernel;
    }
    const opgp::NumericTable pts = opgp::read_numeric_csv(points_path);
    const auto d = static_cast<Eigen::Index>(model.kernel.input_dim());
    if (pts.values.cols() < d) throw opgp::ParseError(points_path + ": fewer columns than the model input dimension");
    const Eigen::MatrixXd xstar = pts.values.leftCols(d);
    const opgp::GpModel gp = opgp::GpModel::fit(model.kernel, model.data);
    const opgp::PredictionResult pred = gp.predict(xstar);
    log(LogLevel::debug, "jitter used: " + opgp::format_double(gp.jitter()));

    std::ofstream os;
    if (!out.empty()) {
        os.open(out);
        if (!os) throw opgp::Error("cannot write " + out);
    }
    std::ostream& o = out.empty() ? std::cout : os;
    const auto k = pred.means.cols();
    for (Eigen::Index i = 0; i < d; ++i) o << (i ? "," : "") << 'x' << (i + 1);
    for (Eigen::Index i = 0; i < k; ++i) o << ",mean" << (i + 1);
    for (Eigen::Index i = 0; i < k; ++i) o << ",var" << (i + 1);
    o << '\n';
    for (Eigen::Index p = 0; p < xstar.rows(); ++p) {
        for (Eigen::Index i = 0; i < d; ++i) o << (i ? "," : "") << opgp::format_double(xstar(p, i));
        for (Eigen::Index i = 0; i < k; ++i) o << ',' << opgp::format_double(pred.means(p, i));
        for (Eigen::Index i = 0; i < k; ++i) o << ',' << opgp::format_double(pred.variances(p, i));
        o << '\n';
    }
    return kExitOk;
}

int synth_cmd(int n, std::uint64_t seed, double noise, const std::string& out) {
    const opgp::Dataset d = opgp::make_synthetic_curl_free(n, seed, noise);
    opgp::write_field_csv(d, out);
    log(LogLevel::info, "wrote " + std::to_string(n) + " rows to " + out);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Linearly constrained multi-output Gaussian process tools"};
    app.require_subcommand(1);

    std::string f_spec, g_spec = "auto", out, config, data, model, points, arithmetic = "automatic";
    int max_degree = 3;
    std::size_t samples = 100;
    std::uint64_t seed = 0;
    double tol = 1e-5;
    double length_scale = 1.0;
    std::optional<std::uint64_t> seed_override;
    std::optional<int> reps;
    bool fit = false;
    int n_rows = 2000;
    double noise = 0.05;

    auto* cg = app.add_subcommand("construct-g", "Find G with F G = 0");
    cg->add_option("--f-spec", f_spec, "Operator spec JSON for F")->required();
    cg->add_option("--max-degree", max_degree, "Highest ansatz degree tried")->check(CLI::NonNegativeNumber);
    cg->add_option("--arithmetic", arithmetic, "automatic | exact | floating")
        ->check(CLI::IsMember({"automatic", "exact", "floating"}));
    cg->add_option("--out", out, "Output JSON (stdout if omitted)");

    auto* ck = app.add_subcommand("check-kernel", "Finite-difference check of F applied to a kernel");
    ck->add_option("--f-spec", f_spec, "Operator spec JSON for F")->required();
    ck->add_option("--g-spec", g_spec, "G spec JSON, or auto | diagonal | curl_free_3d");
    ck->add_option("--samples", samples, "Random point pairs");
    ck->add_option("--seed", seed, "Random seed");
    ck->add_option("--tol", tol, "Relative tolerance");
    ck->add_option("--length-scale", length_scale, "Kernel length scale")->check(CLI::PositiveNumber);

    auto* sim = app.add_subcommand("sim-experiment", "Simulated divergence-free experiment");
    sim->add_option("--config", config, "Experiment config JSON");
    sim->add_option("--out", out, "Output directory")->required();
    sim->add_option("--seed", seed_override, "Override the config seed");
    sim->add_option("--repetitions", reps, "Override the repetition count")->check(CLI::PositiveNumber);

    auto* real = app.add_subcommand("real-experiment", "Train/test experiment on a field CSV");
    real->add_option("--config", config, "Experiment config JSON");
    real->add_option("--data", data, "CSV with columns x1,x2,x3,b1,b2,b3")->required();
    real->add_option("--out", out, "Output directory")->required();
    real->add_option("--seed", seed_override, "Override the config seed");
    real->add_option("--repetitions", reps, "Override the repetition count")->check(CLI::PositiveNumber);

    auto* pr = app.add_subcommand("predict", "Posterior mean and variance from a saved model");
    pr->add_option("--model", model, "Model JSON")->required();
    pr->add_option("--points", points, "CSV of prediction inputs")->required();
    pr->add_option("--out", out, "Output CSV (stdout if omitted)");
    pr->add_flag("--fit", fit, "Refit hyperparameters by marginal likelihood first");

    auto* syn = app.add_subcommand("synth-curl-free", "Write a synthetic curl-free field CSV");
    syn->add_option("--rows", n_rows, "Number of rows")->check(CLI::PositiveNumber);
    syn->add_option("--seed", seed, "Random seed");
    syn->add_option("--noise", noise, "Noise standard deviation")->check(CLI::NonNegativeNumber);
    syn->add_option("--out", out, "Output CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*cg) return construct_g_cmd(f_spec, max_degree, arithmetic, out);
        if (*ck) return check_kernel_cmd(f_spec, g_spec, samples, seed, tol, length_scale);
        if (*sim) return sim_experiment_cmd(config, out, seed_override, reps);
        if (*real) return real_experiment_cmd(config, data, out, seed_override, reps);
        if (*pr) return predict_cmd(model, points, out, fit);
        if (*syn) return synth_cmd(n_rows, seed, noise, out);
    } catch (const opgp::NoAnnihilatorFound& e) {
        log(LogLevel::error, e.what());
        return kExitNoSolution;
    } catch (const std::exception& e) {
        log(LogLevel::error, e.what());
        return kExitUsage;
    }
    return kExitUsage;
}
