#pragma once

// CSV layouts for sample paths, lifted paths and covariance tables.
//
//   paths:  sample,component,node,t,value
//   lifts:  sample,node,t,level,word,value      (word = dot-separated letters, e.g. 0.1.1)
//   tables: either long form with header s,t,value covering every (s,t) pair of one time set,
//           or full-matrix form whose first line is t,<t_0>,...,<t_n> followed by one line
//           <t_i>,<R(t_i,t_0)>,...,<R(t_i,t_n)> per node.

#include <Eigen/Dense>

#include <algorithm>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "klrough/error.hpp"
#include "klrough/gaussian_process.hpp"
#include "klrough/path_lift.hpp"
#include "klrough/records.hpp"

namespace klrough {

inline std::string paths_to_csv(const std::vector<SamplePath>& paths) {
    std::string out = "sample,component,node,t,value\n";
    for (std::size_t s = 0; s < paths.size(); ++s) {
        const auto& p = paths[s];
        for (int i = 0; i < p.dim(); ++i)
            for (int k = 0; k < p.nodes(); ++k)
                out += std::to_string(s) + ',' + std::to_string(i) + ',' + std::to_string(k) + ',' +
                       format_real(p.grid()[k]) + ',' + format_real(p(i, k)) + '\n';
    }
    return out;
}

inline std::vector<SamplePath> paths_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "sample,component,node,t,value") throw DataError("unexpected path CSV header");
    struct Row {
        int sample, component, node;
        double t, value;
    };
    std::vector<Row> rows;
    int max_sample = -1, max_component = -1, max_node = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != 5) throw DataError("path CSV row needs 5 fields");
        Row r{std::stoi(f[0]), std::stoi(f[1]), std::stoi(f[2]), detail::parse_real(f[3]), detail::parse_real(f[4])};
        if (r.sample < 0 || r.component < 0 || r.node < 0) throw DataError("negative index in path CSV");
        max_sample = std::max(max_sample, r.sample);
        max_component = std::max(max_component, r.component);
        max_node = std::max(max_node, r.node);
        rows.push_back(r);
    }
    if (rows.empty()) return {};
    const std::size_t expected = static_cast<std::size_t>(max_sample + 1) * (max_component + 1) * (max_node + 1);
    if (rows.size() != expected) throw DataError("path CSV is not a complete sample x component x node table");
    std::vector<double> times(static_cast<std::size_t>(max_node) + 1, -1.0);
    for (const auto& r : rows) times[static_cast<std::size_t>(r.node)] = r.t;
    TimeGrid grid = [&] {
        try {
            return TimeGrid(times);
        } catch (const InputError& e) {
            throw DataError(std::string("path CSV times: ") + e.what());
        }
    }();
    std::vector<SamplePath> out(static_cast<std::size_t>(max_sample) + 1, SamplePath(grid, max_component + 1));
    for (const auto& r : rows) out[static_cast<std::size_t>(r.sample)](r.component, r.node) = r.value;
    return out;
}

inline std::string word_name(int level, std::size_t flat, int dim) {
    std::vector<int> letters(static_cast<std::size_t>(level));
    for (int k = level - 1; k >= 0; --k) {
        letters[static_cast<std::size_t>(k)] = static_cast<int>(flat % static_cast<std::size_t>(dim));
        flat /= static_cast<std::size_t>(dim);
    }
    std::string s;
    for (std::size_t k = 0; k < letters.size(); ++k) {
        if (k) s += '.';
        s += std::to_string(letters[k]);
    }
    return s;
}

inline std::string lifts_to_csv(const std::vector<GroupPath>& lifts) {
    std::string out = "sample,node,t,level,word,value\n";
    for (std::size_t s = 0; s < lifts.size(); ++s) {
        const auto& gp = lifts[s];
        for (int k = 0; k < gp.nodes(); ++k) {
            const auto& g = gp.points[static_cast<std::size_t>(k)];
            for (int level = 1; level <= g.depth(); ++level) {
                const auto coeffs = g.level(level);
                for (std::size_t w = 0; w < coeffs.size(); ++w)
                    out += std::to_string(s) + ',' + std::to_string(k) + ',' + format_real(gp.grid[k]) + ',' +
                           std::to_string(level) + ',' + word_name(level, w, g.dim()) + ',' + format_real(coeffs[w]) + '\n';
            }
        }
    }
    return out;
}

// Table kernel from either CSV layout described above.
inline CovKernel table_kernel_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty covariance table");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<double> times;
    Eigen::MatrixXd values;
    if (line == "s,t,value") {
        std::map<std::pair<double, double>, double> cells;
        std::vector<double> ts;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto f = detail::split_csv_line(line);
            if (f.size() != 3) throw DataError("table row needs s,t,value");
            const double s = detail::parse_real(f[0]), t = detail::parse_real(f[1]);
            cells[{s, t}] = detail::parse_real(f[2]);
            ts.push_back(s);
            ts.push_back(t);
        }
        std::sort(ts.begin(), ts.end());
        ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
        times = ts;
        const auto n = static_cast<Eigen::Index>(times.size());
        values.resize(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) {
                auto it = cells.find({times[static_cast<std::size_t>(i)], times[static_cast<std::size_t>(j)]});
                if (it == cells.end()) throw DataError("covariance table is missing an (s,t) pair");
                values(i, j) = it->second;
            }
    } else {
        const auto head = detail::split_csv_line(line);
        if (head.empty() || head[0] != "t") throw DataError("covariance table needs header s,t,value or t,<times>");
        for (std::size_t k = 1; k < head.size(); ++k) times.push_back(detail::parse_real(head[k]));
        const auto n = static_cast<Eigen::Index>(times.size());
        values.resize(n, n);
        Eigen::Index row = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto f = detail::split_csv_line(line);
            if (static_cast<Eigen::Index>(f.size()) != n + 1 || row >= n) throw DataError("covariance table shape mismatch");
            if (detail::parse_real(f[0]) != times[static_cast<std::size_t>(row)]) throw DataError("covariance table row time mismatch");
            for (Eigen::Index j = 0; j < n; ++j) values(row, j) = detail::parse_real(f[static_cast<std::size_t>(j) + 1]);
            ++row;
        }
        if (row != n) throw DataError("covariance table shape mismatch");
    }
    try {
        check_psd(values);
        return CovKernel::from_table(std::move(times), std::move(values));
    } catch (const InputError& e) {
        throw DataError(std::string("covariance table: ") + e.what());
    }
}

}  // namespace klrough
