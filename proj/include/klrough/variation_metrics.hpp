#pragma once

// p-variation and Hoelder distances between group-valued paths on a common grid, and the 2D
// rho-variation of a covariance matrix over a common dissection of both axes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "klrough/error.hpp"
#include "klrough/gaussian_process.hpp"
#include "klrough/path_lift.hpp"
#include "klrough/tensor_group.hpp"

namespace klrough {

// Sorted node indices of a grid, first and last node included.
using Dissection = std::vector<int>;

enum class PvarMode { dp, brute };
enum class RhoVarMode { fullgrid, hillclimb, brute };

inline constexpr int kPvarBruteMaxSegments = 14;
inline constexpr int kRhoVarBruteMaxSegments = 10;

namespace detail {

// Upper-triangular table dist[i][j] = d(X_{i,j}, Y_{i,j}) for node pairs i < j; with no Y this is
// hom_norm(X_{i,j}).
class PairDistances {
public:
    PairDistances(const GroupPath& x, const GroupPath* y) : n_(x.nodes()), table_(static_cast<std::size_t>(n_) * n_, 0.0) {
        if (y != nullptr) {
            if (!(x.grid == y->grid)) throw InputError("paths live on different grids");
            if (x.dim() != y->dim() || x.depth() != y->depth()) throw InputError("paths differ in dimension or depth");
        }
        std::vector<GroupElement> x_inv, w, w_inv, y_inv;
        x_inv.reserve(static_cast<std::size_t>(n_));
        for (const auto& g : x.points) x_inv.push_back(inverse(g));
        if (y != nullptr) {
            for (int i = 0; i < n_; ++i) {
                const auto ui = static_cast<std::size_t>(i);
                y_inv.push_back(inverse(y->points[ui]));
                w.push_back(x.points[ui] * y_inv.back());
                w_inv.push_back(y->points[ui] * x_inv[ui]);
            }
        }
        for (int i = 0; i < n_; ++i)
            for (int j = i + 1; j < n_; ++j) {
                const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
                double v;
                if (y == nullptr) {
                    const GroupElement inc = x_inv[ui] * x.points[uj];
                    const GroupElement inc_inv = x_inv[uj] * x.points[ui];
                    v = std::max(one_sided_hom_norm(inc.tensor()), one_sided_hom_norm(inc_inv.tensor()));
                } else {
                    // X_{ij}^{-1} Y_{ij} = X_j^{-1} (X_i Y_i^{-1}) Y_j, and its inverse.
                    const GroupElement g = x_inv[uj] * (w[ui] * y->points[uj]);
                    const GroupElement g_inv = y_inv[uj] * (w_inv[ui] * x.points[uj]);
                    v = std::max(one_sided_hom_norm(g.tensor()), one_sided_hom_norm(g_inv.tensor()));
                }
                table_[ui * static_cast<std::size_t>(n_) + uj] = v;
            }
    }

    double operator()(int i, int j) const { return table_[static_cast<std::size_t>(i) * n_ + static_cast<std::size_t>(j)]; }
    int nodes() const { return n_; }

private:
    int n_;
    std::vector<double> table_;
};

inline double pvar_from_table(const PairDistances& dist, double p, PvarMode mode) {
    const int n = dist.nodes();
    if (mode == PvarMode::dp) {
        // best[j] = sup over dissections of [t_0, t_j] of sum d^p.
        std::vector<double> best(static_cast<std::size_t>(n), 0.0);
        for (int j = 1; j < n; ++j) {
            double b = 0.0;
            for (int i = 0; i < j; ++i) b = std::max(b, best[static_cast<std::size_t>(i)] + std::pow(dist(i, j), p));
            best[static_cast<std::size_t>(j)] = b;
        }
        return std::pow(best.back(), 1.0 / p);
    }
    const int interior = n - 2;
    if (interior + 1 > kPvarBruteMaxSegments) throw InputError("brute-force p-variation limited to 14 segments");
    double best = 0.0;
    for (std::uint32_t mask = 0; mask < (1u << interior); ++mask) {
        double s = 0.0;
        int prev = 0;
        for (int k = 1; k <= interior; ++k)
            if (mask & (1u << (k - 1))) {
                s += std::pow(dist(prev, k), p);
                prev = k;
            }
        s += std::pow(dist(prev, n - 1), p);
        best = std::max(best, s);
    }
    return std::pow(best, 1.0 / p);
}

}  // namespace detail

// sup over grid dissections of (sum_i d(X_{t_i,t_{i+1}}, Y_{t_i,t_{i+1}})^p)^{1/p}.
inline double pvar_dist(const GroupPath& x, const GroupPath& y, double p, PvarMode mode = PvarMode::dp) {
    if (!(p >= 1.0)) throw InputError("p-variation needs p >= 1");
    return detail::pvar_from_table(detail::PairDistances(x, &y), p, mode);
}

// ||X||_{p-var}, i.e. the distance to the constant path.
inline double pvar_norm(const GroupPath& x, double p, PvarMode mode = PvarMode::dp) {
    if (!(p >= 1.0)) throw InputError("p-variation needs p >= 1");
    return detail::pvar_from_table(detail::PairDistances(x, nullptr), p, mode);
}

namespace detail {

inline double holder_from_table(const PairDistances& dist, const TimeGrid& grid, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InputError("Hoelder exponent must lie in [0,1]");
    double best = 0.0;
    for (int i = 0; i < dist.nodes(); ++i)
        for (int j = i + 1; j < dist.nodes(); ++j)
            best = std::max(best, dist(i, j) / std::pow(grid[j] - grid[i], alpha));
    return best;
}

}  // namespace detail

// max over node pairs s < t of d(X_{s,t}, Y_{s,t}) / (t - s)^alpha. alpha = 0 gives the
// uniform increment distance.
inline double holder_dist(const GroupPath& x, const GroupPath& y, double alpha) {
    return detail::holder_from_table(detail::PairDistances(x, &y), x.grid, alpha);
}

inline double holder_norm(const GroupPath& x, double alpha) {
    return detail::holder_from_table(detail::PairDistances(x, nullptr), x.grid, alpha);
}

// R(b,d) - R(b,c) - R(a,d) + R(a,c) = E(X_{a,b} X_{c,d}).
inline double rect_increment(const CovMatrix& r, int a, int b, int c, int d) {
    if (a > b || c > d) throw InputError("rect_increment needs a <= b and c <= d");
    return r(b, d) - r(b, c) - r(a, d) + r(a, c);
}

namespace detail {

// sum_{k,l} |rect([t_k,t_{k+1}] x [t_l,t_{l+1}])|^rho for one dissection.
inline double rho_sum(const Eigen::MatrixXd& r, const Dissection& dis, double rho) {
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < dis.size(); ++k)
        for (std::size_t l = 0; l + 1 < dis.size(); ++l) {
            const int a = dis[k], b = dis[k + 1], c = dis[l], d = dis[l + 1];
            s += std::pow(std::abs(r(b, d) - r(b, c) - r(a, d) + r(a, c)), rho);
        }
    return s;
}

inline Dissection from_mask(int lo, int hi, const std::vector<char>& inside) {
    Dissection dis{lo};
    for (int k = lo + 1; k < hi; ++k)
        if (inside[static_cast<std::size_t>(k - lo)]) dis.push_back(k);
    dis.push_back(hi);
    return dis;
}

// First-improvement local search over single interior-node toggles.
inline double hill_climb(const Eigen::MatrixXd& r, int lo, int hi, std::vector<char> inside, double rho) {
    double best = rho_sum(r, from_mask(lo, hi, inside), rho);
    bool improved = true;
    while (improved) {
        improved = false;
        for (int k = lo + 1; k < hi && !improved; ++k) {
            auto& flag = inside[static_cast<std::size_t>(k - lo)];
            flag = !flag;
            const double v = rho_sum(r, from_mask(lo, hi, inside), rho);
            if (v > best) {
                best = v;
                improved = true;
            } else {
                flag = !flag;
            }
        }
    }
    return best;
}

}  // namespace detail

inline constexpr int kHillClimbRestarts = 8;

// 2D rho-variation of R restricted to the node range [lo, hi] (whole grid by default), taken
// over dissections shared by both axes, returned as the rho-th root of the sup of sums.
//   fullgrid:  the finest dissection only
//   hillclimb: best local optimum from the finest dissection and 8 seeded random starts
//   brute:     exact sup over all dissections (at most 10 segments)
inline double rho_var_2d(const CovMatrix& r, double rho, RhoVarMode mode, int lo = 0, int hi = -1,
                         std::uint64_t seed = 0) {
    if (!(rho >= 1.0)) throw InputError("rho-variation needs rho >= 1");
    if (hi < 0) hi = r.nodes() - 1;
    detail::require(lo >= 0 && lo < hi && hi < r.nodes(), "rho-variation node range invalid");
    const int interior = hi - lo - 1;
    std::vector<char> full(static_cast<std::size_t>(hi - lo + 1), 1);
    switch (mode) {
        case RhoVarMode::fullgrid: return std::pow(detail::rho_sum(r.entries, detail::from_mask(lo, hi, full), rho), 1.0 / rho);
        case RhoVarMode::hillclimb: {
            double best = detail::hill_climb(r.entries, lo, hi, full, rho);
            std::mt19937_64 engine(stream_seed(seed, 0));
            std::bernoulli_distribution coin(0.5);
            for (int restart = 0; restart < kHillClimbRestarts; ++restart) {
                std::vector<char> start(full.size(), 0);
                for (auto& f : start) f = coin(engine) ? 1 : 0;
                best = std::max(best, detail::hill_climb(r.entries, lo, hi, std::move(start), rho));
            }
            return std::pow(best, 1.0 / rho);
        }
        case RhoVarMode::brute: {
            if (interior + 1 > kRhoVarBruteMaxSegments) throw InputError("brute-force rho-variation limited to 10 segments");
            double best = 0.0;
            std::vector<char> inside(full.size(), 0);
            for (std::uint32_t mask = 0; mask < (1u << interior); ++mask) {
                for (int k = 0; k < interior; ++k) inside[static_cast<std::size_t>(k + 1)] = (mask >> k) & 1u;
                best = std::max(best, detail::rho_sum(r.entries, detail::from_mask(lo, hi, inside), rho));
            }
            return std::pow(best, 1.0 / rho);
        }
    }
    return 0.0;
}

}  // namespace klrough
