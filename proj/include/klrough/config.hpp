#pragma once

// Declarative experiment configuration, read from JSON with snake_case keys mirroring the fields
// below. Unknown keys are rejected so that typos do not silently fall back to defaults.

#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "klrough/error.hpp"
#include "klrough/gaussian_process.hpp"
#include "klrough/io.hpp"
#include "klrough/records.hpp"

namespace klrough {

struct ExperimentConfig {
    std::string experiment;
    std::string kernel = "brownian";  // brownian | fbm | table
    double hurst = 0.5;
    std::string table_path;           // table kernels only
    int d = 2;
    int n = 128;                      // grid segments
    std::vector<int> m = {4, 8, 16, 32, 64};
    std::string index_policy;          // prefix | random | empty | full; empty = experiment default
    int subset_size = 4;              // |A| for martingale checks
    int index_sets = 50;              // number of random A
    double p = 3.2;
    double q = 2.0;
    int samples = 200;
    std::uint64_t seed = 1;
    std::string output;
    std::string format;               // csv | json; empty = infer from output extension
    std::string mode = "kl";          // kl | dyadic (convergence); dp | brute (pvar)
    std::vector<std::pair<int, int>> pairs;  // (s,t) node pairs; empty = experiment default
    std::vector<int> lengths;         // interval lengths in grid segments (uniform modulus, Young-Wiener)
    std::string input;                // path CSV for lift / pvar
    int depth = 3;
    double rho = 1.0;
    std::string rho_mode = "fullgrid";
    double alpha = -1.0;              // Hoelder exponent; negative = 1/p
    bool holder = true;               // also report Hoelder statistics where applicable

    // rho = max(1, 1/(2H)) for fBm, 1 for Brownian; tables report 1 (not validated).
    double rho_of_kernel() const {
        if (kernel == "fbm") return std::max(1.0, 1.0 / (2.0 * hurst));
        return 1.0;
    }
};

inline ExperimentConfig parse_config(const nlohmann::json& j) {
    static const std::set<std::string> known = {
        "experiment", "kernel", "hurst", "table_path", "d", "n", "m", "index_policy", "subset_size",
        "index_sets", "p", "q", "samples", "seed", "output", "format", "mode", "pairs", "lengths",
        "input", "depth", "rho", "rho_mode", "alpha", "holder"};
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, value] : j.items())
        if (!known.count(key)) throw ConfigError("unknown config key: " + key);
    ExperimentConfig c;
    try {
        auto get = [&](const char* key, auto& field) {
            if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
        };
        get("experiment", c.experiment);
        get("kernel", c.kernel);
        get("hurst", c.hurst);
        get("table_path", c.table_path);
        get("d", c.d);
        get("n", c.n);
        get("m", c.m);
        get("index_policy", c.index_policy);
        get("subset_size", c.subset_size);
        get("index_sets", c.index_sets);
        get("p", c.p);
        get("q", c.q);
        get("samples", c.samples);
        get("seed", c.seed);
        get("output", c.output);
        get("format", c.format);
        get("mode", c.mode);
        get("lengths", c.lengths);
        get("input", c.input);
        get("depth", c.depth);
        get("rho", c.rho);
        get("rho_mode", c.rho_mode);
        get("alpha", c.alpha);
        get("holder", c.holder);
        if (j.contains("pairs"))
            for (const auto& pr : j.at("pairs")) c.pairs.emplace_back(pr.at(0).get<int>(), pr.at(1).get<int>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config type error: ") + e.what());
    }
    if (c.kernel == "brownian") c.hurst = 0.5;
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::string text;
    try {
        text = read_text(path);
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
    try {
        return parse_config(nlohmann::json::parse(text));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
}

namespace detail {

inline bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace detail

// Checks shared by every experiment. `lifts` marks experiments that build step-3 lifts.
inline void validate_common(const ExperimentConfig& c, bool lifts) {
    if (c.kernel != "brownian" && c.kernel != "fbm" && c.kernel != "table")
        throw ConfigError("kernel must be brownian, fbm or table");
    if (c.kernel == "fbm" && !(c.hurst > 0.0 && c.hurst < 1.0)) throw ConfigError("fbm needs hurst in (0,1)");
    if (c.kernel == "table" && c.table_path.empty()) throw ConfigError("table kernel needs table_path");
    if (lifts && c.kernel == "fbm" && c.hurst <= 0.25)
        throw ConfigError("lifting fbm needs hurst > 1/4");
    if (c.d < 1) throw ConfigError("d must be positive");
    if (c.n < 1) throw ConfigError("n must be positive");
    if (c.samples < 0) throw ConfigError("samples must be nonnegative");
    if (c.depth < 1 || c.depth > 3) throw ConfigError("depth must be 1, 2 or 3");
    if (!c.format.empty() && c.format != "csv" && c.format != "json") throw ConfigError("format must be csv or json");
}

// p > 2 rho for p-variation statistics of lifted paths.
inline void validate_p(const ExperimentConfig& c) {
    if (!(c.q >= 1.0)) throw ConfigError("q must be >= 1");
    if (!(c.p > 2.0 * c.rho_of_kernel())) throw ConfigError("p must exceed 2*rho for the kernel");
}

inline CovKernel make_kernel(const ExperimentConfig& c) {
    if (c.kernel == "brownian") return CovKernel::brownian();
    if (c.kernel == "fbm") return CovKernel::fbm(c.hurst);
    return table_kernel_from_csv(read_text(c.table_path));
}

inline OutputFormat output_format(const ExperimentConfig& c, const std::string& out_path) {
    if (c.format == "json") return OutputFormat::json;
    if (c.format == "csv") return OutputFormat::csv;
    const std::string ext = ".json";
    if (out_path.size() >= ext.size() && out_path.compare(out_path.size() - ext.size(), ext.size(), ext) == 0)
        return OutputFormat::json;
    return OutputFormat::csv;
}

}  // namespace klrough
