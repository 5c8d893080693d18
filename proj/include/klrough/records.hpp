#pragma once

// Result records and their CSV / JSON serialization.
//
// CSV header: experiment,kernel,hurst,n,m,p,q,samples,statistic,value,stderr,seed
// Reals are written with 17 significant digits so a parse round trip is lossless.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "klrough/error.hpp"

namespace klrough {

struct ResultRecord {
    std::string experiment;
    std::string kernel;
    double hurst = 0.0;
    int n = 0;
    int m = 0;
    double p = 0.0;
    double q = 0.0;
    int samples = 0;
    std::string statistic;
    double value = 0.0;
    double stderr_value = 0.0;
    std::uint64_t seed = 0;

    bool operator==(const ResultRecord&) const = default;
};

inline constexpr const char* kCsvHeader = "experiment,kernel,hurst,n,m,p,q,samples,statistic,value,stderr,seed";

enum class OutputFormat { csv, json };

inline std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string to_csv(const std::vector<ResultRecord>& records) {
    std::string out = kCsvHeader;
    out += '\n';
    for (const auto& r : records) {
        if (r.statistic.find(',') != std::string::npos || r.experiment.find(',') != std::string::npos ||
            r.kernel.find(',') != std::string::npos)
            throw InputError("record text fields must not contain commas");
        out += r.experiment + ',' + r.kernel + ',' + format_real(r.hurst) + ',' + std::to_string(r.n) + ',' +
               std::to_string(r.m) + ',' + format_real(r.p) + ',' + format_real(r.q) + ',' +
               std::to_string(r.samples) + ',' + r.statistic + ',' + format_real(r.value) + ',' +
               format_real(r.stderr_value) + ',' + std::to_string(r.seed) + '\n';
    }
    return out;
}

inline std::string to_json(const std::vector<ResultRecord>& records) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : records) {
        nlohmann::ordered_json o;
        o["experiment"] = r.experiment;
        o["kernel"] = r.kernel;
        o["hurst"] = r.hurst;
        o["n"] = r.n;
        o["m"] = r.m;
        o["p"] = r.p;
        o["q"] = r.q;
        o["samples"] = r.samples;
        o["statistic"] = r.statistic;
        o["value"] = r.value;
        o["stderr"] = r.stderr_value;
        o["seed"] = r.seed;
        arr.push_back(std::move(o));
    }
    return arr.dump(2) + "\n";
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_real(const std::string& s) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw DataError("trailing characters in number: " + s);
        return v;
    } catch (const std::logic_error&) {
        // stod reports "inf"/"nan" fine; anything else is malformed.
        throw DataError("malformed number: " + s);
    }
}

}  // namespace detail

inline std::vector<ResultRecord> parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) throw DataError("unexpected result CSV header");
    std::vector<ResultRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != 12) throw DataError("result CSV row needs 12 fields");
        ResultRecord r;
        r.experiment = f[0];
        r.kernel = f[1];
        r.hurst = detail::parse_real(f[2]);
        r.n = std::stoi(f[3]);
        r.m = std::stoi(f[4]);
        r.p = detail::parse_real(f[5]);
        r.q = detail::parse_real(f[6]);
        r.samples = std::stoi(f[7]);
        r.statistic = f[8];
        r.value = detail::parse_real(f[9]);
        r.stderr_value = detail::parse_real(f[10]);
        r.seed = std::stoull(f[11]);
        out.push_back(std::move(r));
    }
    return out;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open output file: " + path);
    out << text;
    if (!out) throw DataError("write failed: " + path);
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open input file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void emit(const std::vector<ResultRecord>& records, OutputFormat format, const std::string& path) {
    write_text(path, format == OutputFormat::csv ? to_csv(records) : to_json(records));
}

}  // namespace klrough
