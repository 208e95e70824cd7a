#pragma once

// Comparison of three ways of handling a known linear constraint in GP
// regression: a diagonal kernel that ignores it, a kernel with the constraint
// built in, and a diagonal kernel with artificial noise-free observations of
// the constraint. Two protocols are provided: a simulated divergence-free field
// predicted on a regular grid, and a CSV data set split randomly into train and
// test sets on each repetition.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "opgp/constraint_baseline.hpp"
#include "opgp/csv.hpp"
#include "opgp/errors.hpp"
#include "opgp/gp.hpp"
#include "opgp/kernel.hpp"
#include "opgp/operator_json.hpp"

namespace opgp {

enum class Method { diagonal, constrained, artificial };

inline std::string to_string(Method m) {
    switch (m) {
    case Method::diagonal: return "diagonal";
    case Method::constrained: return "constrained";
    case Method::artificial: return "artificial";
    }
    return "unknown";
}

inline Method method_from_string(const std::string& s) {
    if (s == "diagonal") return Method::diagonal;
    if (s == "constrained") return Method::constrained;
    if (s == "artificial") return Method::artificial;
    throw ParseError("unknown method '" + s + "'");
}

struct HyperparameterPolicy {
    bool learn_noise = false;
    int restarts = 3;
    std::size_t max_evaluations = 300;
    double init_signal_variance = 1.0;
    double init_length_scale = 1.0;
    /// Starting noise variance when it is learned; otherwise the configured noise is used.
    double init_noise_variance = 1e-2;
    /// Rows of the training set entering the likelihood during fitting (0 = all).
    Eigen::Index fit_subset = 0;
};

struct ExperimentConfig {
    std::vector<double> lower{0.0, 0.0};
    std::vector<double> upper{4.0, 4.0};
    int n_train = 50;
    /// Real-data protocol only.
    int n_test = 1000;
    std::vector<int> nc_schedule{0, 25, 50, 100, 200, 400};
    int grid_resolution = 20;
    double noise_std = 1e-4;
    double field_a = 0.01;
    int repetitions = 50;
    std::uint64_t seed = 1;
    std::vector<Method> methods{Method::diagonal, Method::constrained, Method::artificial};
    HyperparameterPolicy hyper{};
    nlohmann::json constraint = "divergence_2d";
    nlohmann::json constrained_kernel = {{"type", "transformed"}, {"g_operator", "auto-from-F"}};
    JitterPolicy jitter{};
    /// Wall time goes into rmse.csv only when set, so reports stay byte-reproducible by default.
    bool record_timing = false;

    void validate() const {
        if (lower.size() != upper.size() || lower.empty()) throw ParseError("config: lower/upper bounds must match");
        for (std::size_t i = 0; i < lower.size(); ++i)
            if (!(lower[i] < upper[i])) throw ParseError("config: bounds must be ordered");
        if (n_train < 1 || n_test < 1 || grid_resolution < 1 || repetitions < 1)
            throw ParseError("config: counts must be >= 1");
        if (!(noise_std >= 0.0)) throw ParseError("config: noise_std must be non-negative");
        for (int nc : nc_schedule)
            if (nc < 0) throw ParseError("config: nc_schedule entries must be non-negative");
        if (methods.empty()) throw ParseError("config: at least one method required");
    }

    /// Settings of the simulated divergence-free experiment.
    static ExperimentConfig simulated_defaults() { return {}; }

    /// Real-data protocol on a curl-free 3-D field.
    static ExperimentConfig real_defaults() {
        ExperimentConfig c;
        c.lower = {0.0, 0.0, 0.0};
        c.upper = {4.0, 4.0, 2.0};
        c.n_train = 500;
        c.n_test = 1000;
        c.nc_schedule = {0, 50, 100, 200};
        c.noise_std = 0.0;
        c.hyper.learn_noise = true;
        c.hyper.fit_subset = 150;
        c.constraint = "curl_3d";
        c.constrained_kernel = {{"type", "curl_free_3d"}};
        return c;
    }
};

inline ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig c) {
    try {
        if (j.contains("domain")) {
            c.lower = j.at("domain").at("lower").get<std::vector<double>>();
            c.upper = j.at("domain").at("upper").get<std::vector<double>>();
        }
        c.n_train = j.value("n_train", c.n_train);
        c.n_test = j.value("n_test", c.n_test);
        c.nc_schedule = j.value("nc_schedule", c.nc_schedule);
        c.grid_resolution = j.value("grid_resolution", c.grid_resolution);
        c.noise_std = j.value("noise_std", c.noise_std);
        c.field_a = j.value("field_a", c.field_a);
        c.repetitions = j.value("repetitions", c.repetitions);
        c.seed = j.value("seed", c.seed);
        c.record_timing = j.value("record_timing", c.record_timing);
        if (j.contains("methods")) {
            c.methods.clear();
            for (const auto& m : j.at("methods")) c.methods.push_back(method_from_string(m.get<std::string>()));
        }
        if (j.contains("hyperparameters")) {
            const auto& h = j.at("hyperparameters");
            c.hyper.learn_noise = h.value("learn_noise", c.hyper.learn_noise);
            c.hyper.restarts = h.value("restarts", c.hyper.restarts);
            c.hyper.max_evaluations = h.value("max_evaluations", c.hyper.max_evaluations);
            c.hyper.init_signal_variance = h.value("init_signal_variance", c.hyper.init_signal_variance);
            c.hyper.init_length_scale = h.value("init_length_scale", c.hyper.init_length_scale);
            c.hyper.fit_subset = h.value("fit_subset", c.hyper.fit_subset);
            c.hyper.init_noise_variance = h.value("init_noise_variance", c.hyper.init_noise_variance);
        }
        if (j.contains("jitter")) {
            c.jitter.base = j.at("jitter").value("base", c.jitter.base);
            c.jitter.max_steps = j.at("jitter").value("max_steps", c.jitter.max_steps);
        }
        if (j.contains("constraint")) c.constraint = j.at("constraint");
        if (j.contains("constrained_kernel")) c.constrained_kernel = j.at("constrained_kernel");
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("config: ") + ex.what());
    }
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------
// Report

struct RmseRow {
    std::string method;
    int nc = 0;
    double mean = 0.0;
    double std = 0.0;
    int n_ok = 0;
    double jitter = 0.0;
    double seconds = 0.0;
    /// Not written to rmse.csv.
    int n_failed = 0;
};

/// Per-point prediction error for one repetition.
struct FieldErrorRow {
    std::string method;
    int nc = 0;
    Eigen::VectorXd point;
    Eigen::VectorXd error;
};

struct RmseReport {
    std::vector<RmseRow> rows;
    std::vector<FieldErrorRow> field_errors;
    /// "method nc=.. rep=..: message" for every excluded repetition.
    std::vector<std::string> failures;

    [[nodiscard]] const RmseRow* find(const std::string& method, int nc) const {
        for (const auto& r : rows)
            if (r.method == method && r.nc == nc) return &r;
        return nullptr;
    }
};

/// sqrt(|f_hat - f|^2 / N_P) over the concatenated K-vector of all N_P prediction points.
inline double rmse(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& truth) {
    if (predicted.rows() != truth.rows() || predicted.cols() != truth.cols())
        throw DimensionError("rmse: shape mismatch");
    if (truth.rows() == 0) return 0.0;
    return std::sqrt((predicted - truth).squaredNorm() / static_cast<double>(truth.rows()));
}

inline const char* kRmseHeader = "method,Nc,mean,std,n_ok,jitter,seconds";

inline void write_rmse_csv(const RmseReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << kRmseHeader << '\n';
    for (const auto& r : report.rows)
        out << r.method << ',' << r.nc << ',' << format_double(r.mean) << ',' << format_double(r.std) << ','
            << r.n_ok << ',' << format_double(r.jitter) << ',' << format_double(r.seconds) << '\n';
    if (!out) throw Error("failed writing " + path.string());
}

inline std::vector<RmseRow> read_rmse_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kRmseHeader) throw ParseError(path.string() + ": unexpected header");
    std::vector<RmseRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 7) throw ParseError(path.string() + ": expected 7 columns");
        RmseRow r;
        r.method = cells[0];
        r.nc = static_cast<int>(parse_double(cells[1], path.string()));
        r.mean = parse_double(cells[2], path.string());
        r.std = parse_double(cells[3], path.string());
        r.n_ok = static_cast<int>(parse_double(cells[4], path.string()));
        r.jitter = parse_double(cells[5], path.string());
        r.seconds = parse_double(cells[6], path.string());
        rows.push_back(r);
    }
    return rows;
}

inline void write_field_error_csv(const RmseReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    const Eigen::Index d = report.field_errors.empty() ? 0 : report.field_errors.front().point.size();
    const Eigen::Index k = report.field_errors.empty() ? 0 : report.field_errors.front().error.size();
    out << "method,Nc";
    for (Eigen::Index i = 0; i < d; ++i) out << ",x" << (i + 1);
    for (Eigen::Index i = 0; i < k; ++i) out << ",e" << (i + 1);
    out << '\n';
    for (const auto& r : report.field_errors) {
        out << r.method << ',' << r.nc;
        for (Eigen::Index i = 0; i < r.point.size(); ++i) out << ',' << format_double(r.point(i));
        for (Eigen::Index i = 0; i < r.error.size(); ++i) out << ',' << format_double(r.error(i));
        out << '\n';
    }
}

/// Writes rmse.csv and field_error.csv into `dir` (created if missing).
inline void emit_report(const RmseReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_rmse_csv(report, dir / "rmse.csv");
    write_field_error_csv(report, dir / "field_error.csv");
}

// ---------------------------------------------------------------------------
// Fields and data

/// Divergence-free test field on R^2 with decay parameter a.
inline Eigen::Vector2d simulated_field(const Eigen::Ref<const Eigen::VectorXd>& x, double a) {
    const double x1 = x(0);
    const double x2 = x(1);
    const double p = x1 * x2;
    const double e = std::exp(-a * p);
    const double s = std::sin(p);
    const double c = std::cos(p);
    return {e * (a * x1 * s - x1 * c), e * (x2 * c - a * x2 * s)};
}

/// Tensor grid with `resolution` evenly spaced points per axis, bounds included.
/// The first coordinate varies fastest.
inline Eigen::MatrixXd make_grid(const std::vector<double>& lower, const std::vector<double>& upper, int resolution) {
    const auto d = static_cast<Eigen::Index>(lower.size());
    Eigen::Index total = 1;
    for (Eigen::Index i = 0; i < d; ++i) total *= resolution;
    Eigen::MatrixXd grid(total, d);
    for (Eigen::Index p = 0; p < total; ++p) {
        Eigen::Index rem = p;
        for (Eigen::Index i = 0; i < d; ++i) {
            const Eigen::Index idx = rem % resolution;
            rem /= resolution;
            const double t = resolution == 1 ? 0.5 : static_cast<double>(idx) / (resolution - 1);
            grid(p, i) = lower[static_cast<std::size_t>(i)] + t * (upper[static_cast<std::size_t>(i)] - lower[static_cast<std::size_t>(i)]);
        }
    }
    return grid;
}

/// Smooth scalar potential: a linear background plus Gaussian bumps.
struct RandomPotential {
    Eigen::Vector3d background;
    std::vector<Eigen::Vector3d> centers;
    std::vector<double> widths;
    std::vector<double> amplitudes;

    [[nodiscard]] Eigen::Vector3d gradient(const Eigen::Vector3d& x) const {
        Eigen::Vector3d g = background;
        for (std::size_t k = 0; k < centers.size(); ++k) {
            const Eigen::Vector3d r = x - centers[k];
            const double w2 = widths[k] * widths[k];
            g += -amplitudes[k] * std::exp(-0.5 * r.squaredNorm() / w2) / w2 * r;
        }
        return g;
    }
};

inline RandomPotential make_random_potential(std::uint64_t seed, const std::vector<double>& lower,
                                             const std::vector<double>& upper, int bumps = 12) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    RandomPotential pot;
    pot.background = Eigen::Vector3d(normal(rng), normal(rng), normal(rng)) * 0.3;
    for (int k = 0; k < bumps; ++k) {
        Eigen::Vector3d c;
        for (int i = 0; i < 3; ++i) {
            const double lo = lower[static_cast<std::size_t>(i)];
            const double hi = upper[static_cast<std::size_t>(i)];
            c(i) = lo + (hi - lo) * unit(rng);
        }
        pot.centers.push_back(c);
        pot.widths.push_back(0.5 + 0.7 * unit(rng));
        pot.amplitudes.push_back(normal(rng));
    }
    return pot;
}

/// Gradient of a random smooth potential sampled at uniform points, plus Gaussian noise.
/// Columns x1,x2,x3,b1,b2,b3.
inline Dataset make_synthetic_curl_free(int n, std::uint64_t seed, double noise_std,
                                        const std::vector<double>& lower = {0.0, 0.0, 0.0},
                                        const std::vector<double>& upper = {4.0, 4.0, 2.0}) {
    const RandomPotential pot = make_random_potential(seed, lower, upper);
    std::mt19937_64 rng(seed ^ 0x5DEECE66DULL);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);
    Dataset d{Eigen::MatrixXd(n, 3), Eigen::MatrixXd(n, 3), noise_std};
    for (int a = 0; a < n; ++a) {
        Eigen::Vector3d x;
        for (int i = 0; i < 3; ++i) {
            const double lo = lower[static_cast<std::size_t>(i)];
            const double hi = upper[static_cast<std::size_t>(i)];
            x(i) = lo + (hi - lo) * unit(rng);
        }
        d.inputs.row(a) = x.transpose();
        Eigen::Vector3d b = pot.gradient(x);
        for (int i = 0; i < 3; ++i) b(i) += noise_std * noise(rng);
        d.outputs.row(a) = b.transpose();
    }
    return d;
}

inline void write_field_csv(const Dataset& d, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "x1,x2,x3,b1,b2,b3\n";
    for (Eigen::Index a = 0; a < d.size(); ++a) {
        for (Eigen::Index i = 0; i < 3; ++i) out << format_double(d.inputs(a, i)) << ',';
        for (Eigen::Index i = 0; i < 3; ++i) out << format_double(d.outputs(a, i)) << (i == 2 ? '\n' : ',');
    }
}

/// Loads the magnetic-field CSV: header x1,x2,x3,b1,b2,b3.
inline Dataset read_field_csv(const std::string& path) {
    const NumericTable t = read_numeric_csv(path);
    const std::vector<std::string> expected{"x1", "x2", "x3", "b1", "b2", "b3"};
    if (t.header != expected) throw ParseError(path + ": header must be x1,x2,x3,b1,b2,b3");
    Dataset d{t.values.leftCols(3), t.values.rightCols(3), 0.0};
    d.validate();
    return d;
}

// ---------------------------------------------------------------------------
// Protocol

namespace detail {

inline std::uint64_t repetition_seed(std::uint64_t seed, int rep) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(rep)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

struct Accumulator {
    std::vector<double> values;
    double jitter_sum = 0.0;
    double seconds = 0.0;
    int failed = 0;

    [[nodiscard]] RmseRow finish(const std::string& method, int nc) const {
        RmseRow r;
        r.method = method;
        r.nc = nc;
        r.n_ok = static_cast<int>(values.size());
        r.n_failed = failed;
        if (!values.empty()) {
            r.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
            if (values.size() > 1) {
                double ss = 0.0;
                for (double v : values) ss += (v - r.mean) * (v - r.mean);
                r.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
            }
            r.jitter = jitter_sum / static_cast<double>(values.size());
        } else {
            r.mean = std::numeric_limits<double>::quiet_NaN();
        }
        r.seconds = seconds;
        return r;
    }
};

/// One repetition's inputs: training data, prediction points with their targets,
/// and the candidate points for artificial observations.
struct Split {
    Dataset train;
    Eigen::MatrixXd test_inputs;
    Eigen::MatrixXd test_truth;
};

class Runner {
public:
    explicit Runner(const ExperimentConfig& cfg) : cfg_(cfg), f_(operator_from_spec(cfg.constraint)) {
        const std::size_t d = cfg.lower.size();
        if (f_.vars() != d) throw ParseError("config: constraint acts on a different input dimension than the domain");
        for (int nc : cfg.nc_schedule) schedule_.push_back(nc);
        std::sort(schedule_.begin(), schedule_.end());
        schedule_.erase(std::unique(schedule_.begin(), schedule_.end()), schedule_.end());
        // Resolve the constrained kernel once; construct_g is deterministic.
        constrained_init_ = kernel_from_spec(cfg.constrained_kernel, &f_);
    }

    template <class SplitFn>
    RmseReport run(SplitFn&& make_split) {
        const auto has = [&](Method m) { return std::find(cfg_.methods.begin(), cfg_.methods.end(), m) != cfg_.methods.end(); };
        Accumulator diag, constrained;
        std::vector<Accumulator> artificial(schedule_.size());
        RmseReport report;

        for (int rep = 0; rep < cfg_.repetitions; ++rep) {
            const std::uint64_t rep_seed = repetition_seed(cfg_.seed, rep);
            std::mt19937_64 rng(rep_seed);
            const Split split = make_split(rng);
            const double noise_var =
                cfg_.hyper.learn_noise ? cfg_.hyper.init_noise_variance : cfg_.noise_std * cfg_.noise_std;

            std::optional<MatrixKernel> diag_kernel;
            if (has(Method::diagonal) || has(Method::artificial)) {
                const auto t0 = clock::now();
                try {
                    SeHyperparams init{cfg_.hyper.init_signal_variance, cfg_.hyper.init_length_scale, noise_var};
                    MatrixKernel k = MatrixKernel::diagonal(f_.vars(), f_.cols(), init);
                    diag_kernel = fit(split.train, k, rep_seed + 1);
                    if (has(Method::diagonal)) {
                        const GpModel model = GpModel::fit(*diag_kernel, split.train, cfg_.jitter);
                        const PredictionResult pred = model.predict(split.test_inputs);
                        record(diag, rmse(pred.means, split.test_truth), model.jitter());
                        if (rep == 0) add_field_errors(report, "diagonal", 0, split, pred.means);
                    }
                } catch (const Error& ex) {
                    diag_kernel.reset();
                    fail(report, diag, "diagonal", 0, rep, ex.what());
                }
                diag.seconds += seconds_since(t0);
            }

            if (has(Method::constrained)) {
                const auto t0 = clock::now();
                try {
                    MatrixKernel k = constrained_init_;
                    auto groups = k.hyperparams();
                    for (auto& g : groups) {
                        g.signal_variance = cfg_.hyper.init_signal_variance;
                        g.length_scale = cfg_.hyper.init_length_scale;
                        g.noise_variance = noise_var;
                    }
                    k.set_hyperparams(groups);
                    const MatrixKernel fitted = fit(split.train, k, rep_seed + 2);
                    const GpModel model = GpModel::fit(fitted, split.train, cfg_.jitter);
                    const PredictionResult pred = model.predict(split.test_inputs);
                    record(constrained, rmse(pred.means, split.test_truth), model.jitter());
                    if (rep == 0) add_field_errors(report, "constrained", 0, split, pred.means);
                } catch (const Error& ex) {
                    fail(report, constrained, "constrained", 0, rep, ex.what());
                }
                constrained.seconds += seconds_since(t0);
            }

            if (has(Method::artificial)) {
                // Nested random subsets of the prediction points, one permutation per repetition.
                std::vector<Eigen::Index> perm(static_cast<std::size_t>(split.test_inputs.rows()));
                std::iota(perm.begin(), perm.end(), 0);
                std::shuffle(perm.begin(), perm.end(), rng);
                for (std::size_t s = 0; s < schedule_.size(); ++s) {
                    const int nc = std::min<int>(schedule_[s], static_cast<int>(perm.size()));
                    const auto t0 = clock::now();
                    if (!diag_kernel) {
                        fail(report, artificial[s], "artificial", schedule_[s], rep, "diagonal kernel fit failed");
                        continue;
                    }
                    try {
                        Eigen::MatrixXd pts(nc, split.test_inputs.cols());
                        for (int c = 0; c < nc; ++c) pts.row(c) = split.test_inputs.row(perm[static_cast<std::size_t>(c)]);
                        const AugmentedProblem prob = augment(split.train, *diag_kernel, f_, pts, cfg_.jitter);
                        const PredictionResult pred = prob.predict(split.test_inputs);
                        record(artificial[s], rmse(pred.means, split.test_truth), prob.jitter());
                        if (rep == 0 && s + 1 == schedule_.size())
                            add_field_errors(report, "artificial", schedule_[s], split, pred.means);
                    } catch (const Error& ex) {
                        fail(report, artificial[s], "artificial", schedule_[s], rep, ex.what());
                    }
                    artificial[s].seconds += seconds_since(t0);
                }
            }
        }

        if (has(Method::diagonal)) report.rows.push_back(diag.finish("diagonal", 0));
        if (has(Method::constrained)) report.rows.push_back(constrained.finish("constrained", 0));
        if (has(Method::artificial))
            for (std::size_t s = 0; s < schedule_.size(); ++s)
                report.rows.push_back(artificial[s].finish("artificial", schedule_[s]));
        if (!cfg_.record_timing)
            for (auto& r : report.rows) r.seconds = 0.0;
        return report;
    }

private:
    using clock = std::chrono::steady_clock;

    static double seconds_since(clock::time_point t0) {
        return std::chrono::duration<double>(clock::now() - t0).count();
    }

    MatrixKernel fit(const Dataset& train, const MatrixKernel& init, std::uint64_t seed) const {
        FitOptions opts;
        opts.learn_noise = cfg_.hyper.learn_noise;
        opts.restarts = cfg_.hyper.restarts;
        opts.seed = seed;
        opts.max_points = cfg_.hyper.fit_subset;
        opts.simplex.max_evaluations = cfg_.hyper.max_evaluations;
        opts.jitter = cfg_.jitter;
        return fit_hyperparameters(train, init, opts).kernel;
    }

    static void record(Accumulator& acc, double value, double jitter) {
        acc.values.push_back(value);
        acc.jitter_sum += jitter;
    }

    static void fail(RmseReport& report, Accumulator& acc, const std::string& method, int nc, int rep,
                     const std::string& msg) {
        ++acc.failed;
        report.failures.push_back(method + " nc=" + std::to_string(nc) + " rep=" + std::to_string(rep) + ": " + msg);
    }

    static void add_field_errors(RmseReport& report, const std::string& method, int nc, const Split& split,
                                 const Eigen::MatrixXd& predicted) {
        for (Eigen::Index p = 0; p < split.test_inputs.rows(); ++p)
            report.field_errors.push_back({method, nc, split.test_inputs.row(p).transpose(),
                                           (predicted.row(p) - split.test_truth.row(p)).transpose()});
    }

    const ExperimentConfig& cfg_;
    OperatorMatrix f_;
    std::vector<int> schedule_;
    MatrixKernel constrained_init_ = MatrixKernel::diagonal(1, 1, {});
};

} // namespace detail

/// Simulated divergence-free field: random training inputs over the domain,
/// noisy observations, prediction on the regular grid.
inline RmseReport run_simulated(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.lower.size() != 2) throw ParseError("simulated experiment requires a 2-D domain");
    const Eigen::MatrixXd grid = make_grid(cfg.lower, cfg.upper, cfg.grid_resolution);
    Eigen::MatrixXd truth(grid.rows(), 2);
    for (Eigen::Index p = 0; p < grid.rows(); ++p) truth.row(p) = simulated_field(grid.row(p).transpose(), cfg.field_a).transpose();

    detail::Runner runner(cfg);
    return runner.run([&](std::mt19937_64& rng) {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::normal_distribution<double> noise(0.0, 1.0);
        detail::Split s;
        s.train.inputs.resize(cfg.n_train, 2);
        s.train.outputs.resize(cfg.n_train, 2);
        s.train.noise_std = cfg.noise_std;
        for (int a = 0; a < cfg.n_train; ++a) {
            for (int i = 0; i < 2; ++i) {
                const auto iu = static_cast<std::size_t>(i);
                s.train.inputs(a, i) = cfg.lower[iu] + (cfg.upper[iu] - cfg.lower[iu]) * unit(rng);
            }
            const Eigen::Vector2d f = simulated_field(s.train.inputs.row(a).transpose(), cfg.field_a);
            for (int i = 0; i < 2; ++i) s.train.outputs(a, i) = f(i) + cfg.noise_std * noise(rng);
        }
        s.test_inputs = grid;
        s.test_truth = truth;
        return s;
    });
}

/// Repeated random disjoint train/test splits of a recorded data set.
inline RmseReport run_real_data(const ExperimentConfig& cfg, const Dataset& data) {
    cfg.validate();
    data.validate();
    const Eigen::Index needed = static_cast<Eigen::Index>(cfg.n_train) + cfg.n_test;
    if (data.size() < needed)
        throw Error("real-data experiment needs " + std::to_string(needed) + " rows, data set has " +
                    std::to_string(data.size()));
    detail::Runner runner(cfg);
    return runner.run([&](std::mt19937_64& rng) {
        std::vector<Eigen::Index> perm(static_cast<std::size_t>(data.size()));
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        detail::Split s;
        s.train.inputs.resize(cfg.n_train, data.input_dim());
        s.train.outputs.resize(cfg.n_train, data.output_dim());
        s.train.noise_std = data.noise_std;
        for (int a = 0; a < cfg.n_train; ++a) {
            s.train.inputs.row(a) = data.inputs.row(perm[static_cast<std::size_t>(a)]);
            s.train.outputs.row(a) = data.outputs.row(perm[static_cast<std::size_t>(a)]);
        }
        s.test_inputs.resize(cfg.n_test, data.input_dim());
        s.test_truth.resize(cfg.n_test, data.output_dim());
        for (int b = 0; b < cfg.n_test; ++b) {
            const auto src = perm[static_cast<std::size_t>(cfg.n_train + b)];
            s.test_inputs.row(b) = data.inputs.row(src);
            s.test_truth.row(b) = data.outputs.row(src);
        }
        return s;
    });
}

inline RmseReport run_real_data(const ExperimentConfig& cfg, const std::string& dataset_path) {
    return run_real_data(cfg, read_field_csv(dataset_path));
}

} // namespace opgp
