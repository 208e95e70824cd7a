#pragma once

// Operator-spec JSON:
//   {"vars": p, "rows": m, "cols": n,
//    "entries": [{"row": i, "col": j, "terms": [{"coeff": c, "exponents": [e1, ..., ep]}]}]}
// Indices are 0-based; omitted entries are zero.

#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "opgp/errors.hpp"
#include "opgp/operator_algebra.hpp"

namespace opgp {

inline OperatorMatrix operator_from_json(const nlohmann::json& j) {
    try {
        const auto vars = j.at("vars").get<std::size_t>();
        const auto rows = j.at("rows").get<std::size_t>();
        const auto cols = j.at("cols").get<std::size_t>();
        if (rows == 0 || cols == 0) throw ParseError("operator spec: rows and cols must be positive");
        OperatorMatrix m(rows, cols, vars);
        if (j.contains("entries")) {
            for (const auto& e : j.at("entries")) {
                const auto r = e.at("row").get<std::size_t>();
                const auto c = e.at("col").get<std::size_t>();
                if (r >= rows || c >= cols)
                    throw ParseError("operator spec: entry (" + std::to_string(r) + "," + std::to_string(c) +
                                     ") out of range");
                for (const auto& t : e.at("terms")) {
                    auto exps = t.at("exponents").get<std::vector<int>>();
                    if (exps.size() != vars)
                        throw ParseError("operator spec: exponent vector length " + std::to_string(exps.size()) +
                                         " != vars " + std::to_string(vars));
                    m.at(r, c).add_term(Monomial(std::move(exps)), t.at("coeff").get<double>());
                }
            }
        }
        return m;
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("operator spec: ") + ex.what());
    } catch (const ParseError&) {
        throw;
    } catch (const Error& ex) {
        throw ParseError(std::string("operator spec: ") + ex.what());
    }
}

inline nlohmann::json operator_to_json(const OperatorMatrix& m, bool with_rendering = false) {
    nlohmann::json j;
    j["vars"] = m.vars();
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    j["entries"] = nlohmann::json::array();
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) {
            const auto& p = m.at(r, c);
            if (p.is_zero()) continue;
            nlohmann::json terms = nlohmann::json::array();
            for (const auto& [mono, coeff] : p.terms())
                terms.push_back({{"coeff", coeff}, {"exponents", mono.exponents()}});
            j["entries"].push_back({{"row", r}, {"col", c}, {"terms", terms}});
        }
    if (with_rendering) {
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t r = 0; r < m.rows(); ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(render(m.at(r, c)));
            rows.push_back(row);
        }
        j["rendering"] = rows;
    }
    return j;
}

/// Parses a JSON file; syntax errors carry the line and column.
inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& ex) {
        // ex.byte is 1-based offset of the failure
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < ex.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError(path + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + ex.what());
    }
}

/// A spec that is either an operator object or one of the names
/// "divergence_2d", "divergence_3d", "curl_3d".
inline OperatorMatrix operator_from_spec(const nlohmann::json& j) {
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        if (name == "divergence_2d") return make_divergence_operator(2);
        if (name == "divergence_3d") return make_divergence_operator(3);
        if (name == "curl_3d") return make_curl_operator_3d();
        throw ParseError("unknown operator name '" + name + "'");
    }
    return operator_from_json(j);
}

} // namespace opgp
