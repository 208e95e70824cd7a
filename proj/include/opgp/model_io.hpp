#pragma once

// Saved model JSON:
//   {"kernel": <kernel spec>, "training_data": "path.csv", "noise_std": s}
// The training CSV has a header row; the first input_dim columns are inputs and
// the next output_dim columns are outputs. A relative data path is resolved
// against the directory of the model file.

#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "opgp/csv.hpp"
#include "opgp/errors.hpp"
#include "opgp/gp.hpp"
#include "opgp/kernel.hpp"
#include "opgp/operator_json.hpp"

namespace opgp {

struct SavedModel {
    MatrixKernel kernel;
    Dataset data;
    std::string data_path;
};

inline Dataset read_dataset_csv(const std::string& path, std::size_t input_dim, std::size_t output_dim) {
    const NumericTable t = read_numeric_csv(path);
    const auto d = static_cast<Eigen::Index>(input_dim);
    const auto k = static_cast<Eigen::Index>(output_dim);
    if (t.values.cols() < d + k)
        throw ParseError(path + ": expected at least " + std::to_string(d + k) + " columns");
    Dataset data{t.values.leftCols(d), t.values.middleCols(d, k), 0.0};
    data.validate();
    return data;
}

inline void write_dataset_csv(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    for (Eigen::Index i = 0; i < data.input_dim(); ++i) out << (i ? "," : "") << 'x' << (i + 1);
    for (Eigen::Index i = 0; i < data.output_dim(); ++i) out << ",y" << (i + 1);
    out << '\n';
    for (Eigen::Index a = 0; a < data.size(); ++a) {
        for (Eigen::Index i = 0; i < data.input_dim(); ++i) out << (i ? "," : "") << format_double(data.inputs(a, i));
        for (Eigen::Index i = 0; i < data.output_dim(); ++i) out << ',' << format_double(data.outputs(a, i));
        out << '\n';
    }
}

inline void save_model(const std::string& path, const MatrixKernel& kernel, const std::string& data_path,
                       double noise_std = 0.0) {
    nlohmann::json j;
    j["kernel"] = kernel_to_spec(kernel);
    j["training_data"] = data_path;
    j["noise_std"] = noise_std;
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << j.dump(2) << '\n';
}

inline SavedModel load_model(const std::string& path) {
    const nlohmann::json j = read_json_file(path);
    try {
        MatrixKernel kernel = kernel_from_spec(j.at("kernel"));
        std::filesystem::path data_path = j.at("training_data").get<std::string>();
        if (data_path.is_relative()) data_path = std::filesystem::path(path).parent_path() / data_path;
        Dataset data = read_dataset_csv(data_path.string(), kernel.input_dim(), kernel.output_dim());
        data.noise_std = j.value("noise_std", 0.0);
        return {std::move(kernel), std::move(data), data_path.string()};
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(path + ": " + ex.what());
    }
}

} // namespace opgp
