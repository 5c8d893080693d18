#pragma once

// Covariance kernels, grid covariance matrices and exact Gaussian sampling.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "klrough/error.hpp"
#include "klrough/parallel.hpp"
#include "klrough/path_lift.hpp"
#include "klrough/rng.hpp"

namespace klrough {

struct CovKernel {
    enum class Kind { brownian, fbm, table };

    Kind kind = Kind::brownian;
    double hurst = 0.5;
    // Table kernels: covariance values on their own time grid, bilinearly interpolated.
    std::vector<double> table_times;
    Eigen::MatrixXd table;

    static CovKernel brownian() { return {}; }

    static CovKernel fbm(double h) {
        if (!(h > 0.0 && h < 1.0)) throw InputError("fbm needs Hurst parameter in (0,1)");
        CovKernel k;
        k.kind = Kind::fbm;
        k.hurst = h;
        return k;
    }

    static CovKernel from_table(std::vector<double> times, Eigen::MatrixXd values) {
        TimeGrid check(times);  // validates ordering and endpoints
        const auto n = static_cast<Eigen::Index>(times.size());
        if (values.rows() != n || values.cols() != n) throw InputError("table kernel shape does not match its times");
        CovKernel k;
        k.kind = Kind::table;
        k.hurst = 0.0;
        k.table_times = std::move(times);
        k.table = std::move(values);
        return k;
    }

    std::string name() const {
        switch (kind) {
            case Kind::brownian: return "brownian";
            case Kind::fbm: return "fbm";
            case Kind::table: return "table";
        }
        return "unknown";
    }

    // Effective Hurst index for reporting; Brownian is 1/2, tables report 0.
    double reported_hurst() const { return kind == Kind::brownian ? 0.5 : hurst; }
};

namespace detail {

inline std::pair<int, double> locate(const std::vector<double>& times, double t) {
    auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.end()) return {static_cast<int>(times.size()) - 2, 1.0};
    const int k = static_cast<int>(it - times.begin()) - 1;
    const auto uk = static_cast<std::size_t>(k);
    return {k, (t - times[uk]) / (times[uk + 1] - times[uk])};
}

}  // namespace detail

inline double kernel_eval(const CovKernel& k, double s, double t) {
    constexpr double slack = 1e-12;
    if (s < -slack || s > 1.0 + slack || t < -slack || t > 1.0 + slack)
        throw InputError("kernel_eval: time outside [0,1]");
    s = std::clamp(s, 0.0, 1.0);
    t = std::clamp(t, 0.0, 1.0);
    switch (k.kind) {
        case CovKernel::Kind::brownian: return std::min(s, t);
        case CovKernel::Kind::fbm: {
            const double e = 2.0 * k.hurst;
            return 0.5 * (std::pow(s, e) + std::pow(t, e) - std::pow(std::abs(t - s), e));
        }
        case CovKernel::Kind::table: {
            const auto [i, u] = detail::locate(k.table_times, s);
            const auto [j, v] = detail::locate(k.table_times, t);
            const auto& m = k.table;
            return (1 - u) * (1 - v) * m(i, j) + u * (1 - v) * m(i + 1, j) + (1 - u) * v * m(i, j + 1) +
                   u * v * m(i + 1, j + 1);
        }
    }
    return 0.0;
}

// Symmetric covariance matrix R(t_i, t_j) on a grid.
struct CovMatrix {
    TimeGrid grid;
    Eigen::MatrixXd entries;

    double operator()(int i, int j) const { return entries(i, j); }
    int nodes() const { return grid.nodes(); }
};

// Throws DataError if the smallest eigenvalue is below -tol * max(1, largest |eigenvalue|).
inline void check_psd(const Eigen::MatrixXd& m, double tol = 1e-10) {
    if (m.rows() == 0) return;
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff()))
        throw DataError("covariance matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    if (lo < -tol * scale) throw DataError("covariance matrix is not positive semidefinite");
}

inline CovMatrix cov_matrix(const CovKernel& k, const TimeGrid& grid) {
    const int n = grid.nodes();
    CovMatrix r{grid, Eigen::MatrixXd(n, n)};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) r.entries(i, j) = r.entries(j, i) = kernel_eval(k, grid[i], grid[j]);
    check_psd(r.entries);
    return r;
}

// Lower-triangular factor L with L L^T = R (up to jitter on degenerate pivots).
//
// Pivots that are numerically zero are replaced by 1e-12 * trace(R); if the trace is zero the
// column stays zero. A node whose covariance row vanishes (t = 0 for processes started at zero)
// is excluded and produces exact zeros.
inline Eigen::MatrixXd gaussian_factor(const CovMatrix& r) {
    const Eigen::Index n = r.entries.rows();
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
    const double trace = r.entries.trace();
    const double jitter = 1e-12 * trace;
    const double neg_tol = 1e-10 * std::max(1.0, trace);
    for (Eigen::Index j = 0; j < n; ++j) {
        if (r.entries.row(j).cwiseAbs().maxCoeff() == 0.0) continue;
        double pivot = r.entries(j, j) - l.row(j).head(j).squaredNorm();
        if (pivot < -neg_tol) throw DataError("Cholesky factorization failed: negative pivot");
        if (pivot <= jitter) pivot = jitter;
        if (pivot <= 0.0) continue;
        const double root = std::sqrt(pivot);
        l(j, j) = root;
        for (Eigen::Index i = j + 1; i < n; ++i)
            l(i, j) = (r.entries(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / root;
    }
    return l;
}

// `count` independent draws of a d-dimensional process whose components are i.i.d. N(0, R).
// Sample s uses substream (seed, s).
inline std::vector<SamplePath> sample(const CovMatrix& r, int d, int count, std::uint64_t seed) {
    detail::require(d >= 1, "sample needs at least one component");
    detail::require(count >= 0, "sample count must be nonnegative");
    std::vector<SamplePath> out(static_cast<std::size_t>(count));
    if (count == 0) return out;
    const Eigen::MatrixXd l = gaussian_factor(r);
    const Eigen::Index n = l.rows();
    parallel_for(static_cast<std::size_t>(count), [&](std::size_t s) {
        NormalStream rng(seed, s);
        SamplePath path(r.grid, d);
        Eigen::VectorXd z(n);
        for (int i = 0; i < d; ++i) {
            for (Eigen::Index k = 0; k < n; ++k) z(k) = rng();
            const Eigen::VectorXd x = l.triangularView<Eigen::Lower>() * z;
            for (Eigen::Index k = 0; k < n; ++k) path(i, static_cast<int>(k)) = x(k);
        }
        out[s] = std::move(path);
    });
    return out;
}

// Brownian motion on an arbitrary grid via independent N(0, dt) increments; O(n) per path
// instead of the O(n^2) triangular product. Same law as sample(cov_matrix(brownian, grid), ...),
// different random numbers.
inline std::vector<SamplePath> sample_brownian(const TimeGrid& grid, int d, int count, std::uint64_t seed) {
    detail::require(d >= 1, "sample needs at least one component");
    detail::require(count >= 0, "sample count must be nonnegative");
    std::vector<SamplePath> out(static_cast<std::size_t>(count));
    parallel_for(static_cast<std::size_t>(count), [&](std::size_t s) {
        NormalStream rng(seed, s);
        SamplePath path(grid, d);
        for (int i = 0; i < d; ++i)
            for (int k = 1; k < grid.nodes(); ++k)
                path(i, k) = path(i, k - 1) + std::sqrt(grid[k] - grid[k - 1]) * rng();
        out[s] = std::move(path);
    });
    return out;
}

}  // namespace klrough
