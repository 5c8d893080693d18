#pragma once

// Discrete Karhunen-Loeve expansion on a grid, conditional projections X^A = E[X | F_A], residual
// covariances, and the exact conditional correction of the step-3 log-signature.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "klrough/error.hpp"
#include "klrough/gaussian_process.hpp"
#include "klrough/parallel.hpp"
#include "klrough/path_lift.hpp"
#include "klrough/rng.hpp"
#include "klrough/tensor_group.hpp"
#include "klrough/variation_metrics.hpp"

namespace klrough {

// Eigenpairs of R ordered by decreasing eigenvalue, truncated to the numerical rank.
// Column k of `phi` is Euclidean-orthonormal; column k of `h` is sqrt(lambda_k) * phi_k.
struct KLBasis {
    TimeGrid grid;
    std::vector<double> eigenvalues;
    Eigen::MatrixXd phi;
    Eigen::MatrixXd h;

    int rank() const { return static_cast<int>(eigenvalues.size()); }
    int nodes() const { return grid.nodes(); }
};

// Sorted subset of basis indices, 0-based.
class IndexSet {
public:
    IndexSet() = default;
    explicit IndexSet(std::vector<int> idx) : idx_(std::move(idx)) {
        std::sort(idx_.begin(), idx_.end());
        idx_.erase(std::unique(idx_.begin(), idx_.end()), idx_.end());
        if (!idx_.empty() && idx_.front() < 0) throw InputError("index set contains a negative index");
    }

    static IndexSet empty() { return {}; }
    static IndexSet range(int first, int last) {
        std::vector<int> v;
        for (int k = first; k < last; ++k) v.push_back(k);
        return IndexSet(std::move(v));
    }
    // A_m = first m basis functions.
    static IndexSet prefix(int m) { return range(0, m); }
    static IndexSet full(int rank) { return range(0, rank); }

    IndexSet complement(int rank) const {
        std::vector<int> v;
        std::size_t p = 0;
        for (int k = 0; k < rank; ++k) {
            while (p < idx_.size() && idx_[p] < k) ++p;
            if (p == idx_.size() || idx_[p] != k) v.push_back(k);
        }
        return IndexSet(std::move(v));
    }

    std::size_t size() const { return idx_.size(); }
    bool empty_set() const { return idx_.empty(); }
    auto begin() const { return idx_.begin(); }
    auto end() const { return idx_.end(); }
    const std::vector<int>& indices() const { return idx_; }

    void check_within(int rank) const {
        if (!idx_.empty() && idx_.back() >= rank) throw InputError("index set exceeds basis rank");
    }

private:
    std::vector<int> idx_;
};

inline constexpr double kRankCutoff = 1e-10;

inline KLBasis kl_decompose(const CovMatrix& r) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r.entries);
    if (es.info() != Eigen::Success) throw DataError("eigendecomposition failed");
    const Eigen::VectorXd& ev = es.eigenvalues();  // ascending
    const Eigen::Index n = ev.size();
    const double lmax = n > 0 ? std::max(0.0, ev(n - 1)) : 0.0;
    if (n > 0 && ev(0) < -kRankCutoff * std::max(1.0, lmax))
        throw DataError("covariance matrix is not positive semidefinite");

    KLBasis basis;
    basis.grid = r.grid;
    std::vector<Eigen::Index> kept;
    for (Eigen::Index k = n - 1; k >= 0; --k)
        if (ev(k) > kRankCutoff * lmax && ev(k) > 0.0) kept.push_back(k);
    const auto rank = static_cast<Eigen::Index>(kept.size());
    basis.phi.resize(n, rank);
    basis.h.resize(n, rank);
    for (Eigen::Index c = 0; c < rank; ++c) {
        const Eigen::Index k = kept[static_cast<std::size_t>(c)];
        Eigen::VectorXd v = es.eigenvectors().col(k);
        // Sign convention: the entry of largest magnitude is positive.
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0) v = -v;
        basis.eigenvalues.push_back(ev(k));
        basis.phi.col(c) = v;
        basis.h.col(c) = std::sqrt(ev(k)) * v;
    }
    return basis;
}

// Paley-Wiener coordinates Z_k = phi_k . x / sqrt(lambda_k).
inline Eigen::VectorXd coefficients(std::span<const double> x, const KLBasis& basis) {
    if (static_cast<int>(x.size()) != basis.nodes()) throw InputError("coefficients: grid mismatch");
    const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
    Eigen::VectorXd z = basis.phi.transpose() * xv;
    for (int k = 0; k < basis.rank(); ++k) z(k) /= std::sqrt(basis.eigenvalues[static_cast<std::size_t>(k)]);
    return z;
}

namespace detail {

inline void check_bases(std::span<const KLBasis> bases, const TimeGrid& grid, int dim) {
    if (static_cast<int>(bases.size()) != dim) throw InputError("need one KL basis per component");
    for (const auto& b : bases)
        if (!(b.grid == grid)) throw InputError("KL basis grid mismatch");
}

}  // namespace detail

// sum_{k in A} Z_k h_k per component, from given coordinates.
inline SamplePath synthesize(std::span<const Eigen::VectorXd> z, std::span<const KLBasis> bases, const IndexSet& a) {
    const int d = static_cast<int>(bases.size());
    detail::require(d >= 1 && static_cast<int>(z.size()) == d, "synthesize: one coordinate vector per component");
    SamplePath out(bases[0].grid, d);
    for (int i = 0; i < d; ++i) {
        const KLBasis& b = bases[static_cast<std::size_t>(i)];
        a.check_within(b.rank());
        auto comp = out.component(i);
        for (int k : a) {
            const double zk = z[static_cast<std::size_t>(i)](k);
            for (int m = 0; m < b.nodes(); ++m) comp[static_cast<std::size_t>(m)] += zk * b.h(m, k);
        }
    }
    return out;
}

inline std::vector<Eigen::VectorXd> path_coefficients(const SamplePath& x, std::span<const KLBasis> bases) {
    detail::check_bases(bases, x.grid(), x.dim());
    std::vector<Eigen::VectorXd> z;
    for (int i = 0; i < x.dim(); ++i) z.push_back(coefficients(x.component(i), bases[static_cast<std::size_t>(i)]));
    return z;
}

// X^A = E[X | F_A] = sum_{k in A} Z_k h_k, componentwise.
inline SamplePath project(const SamplePath& x, std::span<const KLBasis> bases, const IndexSet& a) {
    const auto z = path_coefficients(x, bases);
    return synthesize(z, bases, a);
}

// R^A = sum_{k in A} h_k h_k^T.
inline CovMatrix partial_cov(const KLBasis& basis, const IndexSet& a) {
    a.check_within(basis.rank());
    const Eigen::Index n = basis.nodes();
    Eigen::MatrixXd hs(n, static_cast<Eigen::Index>(a.size()));
    Eigen::Index c = 0;
    for (int k : a) hs.col(c++) = basis.h.col(k);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    if (c > 0) m.selfadjointView<Eigen::Lower>().rankUpdate(hs);
    Eigen::MatrixXd full = m.selfadjointView<Eigen::Lower>();
    return {basis.grid, std::move(full)};
}

// pi_2 entry (i,j) at node t of the lifted projection, written as the double sum
//   sum_{k,l in A} Z_k^i Z_l^j int_0^t h^{i,k} dh^{j,l}
// with each pairwise integral evaluated by the trapezoid rule (exact for piecewise-linear paths).
inline double level2_double_sum(std::span<const KLBasis> bases, std::span<const Eigen::VectorXd> z,
                                const IndexSet& a, int t, int i, int j) {
    if (i == j) throw InputError("level2_double_sum needs i != j");
    const int d = static_cast<int>(bases.size());
    detail::require(i >= 0 && j >= 0 && i < d && j < d, "component index out of range");
    detail::require(static_cast<int>(z.size()) == d, "one coordinate vector per component");
    const KLBasis& bi = bases[static_cast<std::size_t>(i)];
    const KLBasis& bj = bases[static_cast<std::size_t>(j)];
    detail::require(t >= 0 && t < bi.nodes(), "node out of range");
    a.check_within(std::min(bi.rank(), bj.rank()));
    double total = 0.0;
    for (int k : a)
        for (int l : a) {
            double integral = 0.0;
            const double base = bi.h(0, k);
            for (int m = 0; m < t; ++m)
                integral += (0.5 * (bi.h(m, k) + bi.h(m + 1, k)) - base) * (bj.h(m + 1, l) - bj.h(m, l));
            total += z[static_cast<std::size_t>(i)](k) * z[static_cast<std::size_t>(j)](l) * integral;
        }
    return total;
}

// Exact level-3 correction
//   sum_{i != j} [ X^{A;j}_{s,t} R_i([s,t]x[s,t]) / 12
//                  - (1/2) int_s^t R_i([u,t]x[s,u]) dX^{A;j}_u ] [e_i,[e_i,e_j]]
// where R_i is the residual covariance of component i. The integrand is piecewise quadratic in u
// for grid processes; midpoint values come from bilinear interpolation of node covariances.
inline LieElement level3_correction(std::span<const CovMatrix> residual_cov, const SamplePath& xa, int s, int t) {
    if (s >= t) throw InputError("level3_correction needs s < t");
    const int d = xa.dim();
    detail::require(static_cast<int>(residual_cov.size()) == d, "one residual covariance per component");
    detail::require(s >= 0 && t < xa.nodes(), "node out of range");
    LieElement out(d, 3);
    const int n = xa.nodes();
    std::vector<double> f_nodes(static_cast<std::size_t>(n), 0.0), f_mids(static_cast<std::size_t>(n - 1), 0.0);
    for (int i = 0; i < d; ++i) {
        const Eigen::MatrixXd& r = residual_cov[static_cast<std::size_t>(i)].entries;
        const double diag = rect_increment(residual_cov[static_cast<std::size_t>(i)], s, t, s, t);
        for (int m = s; m <= t; ++m) f_nodes[static_cast<std::size_t>(m)] = r(t, m) - r(t, s) - r(m, m) + r(m, s);
        for (int m = s; m < t; ++m) {
            // Covariances involving the segment midpoint u = (t_m + t_{m+1})/2.
            const double r_tu = 0.5 * (r(t, m) + r(t, m + 1));
            const double r_su = 0.5 * (r(s, m) + r(s, m + 1));
            const double r_uu = 0.25 * (r(m, m) + 2.0 * r(m, m + 1) + r(m + 1, m + 1));
            f_mids[static_cast<std::size_t>(m)] = r_tu - r(t, s) - r_uu + r_su;
        }
        for (int j = 0; j < d; ++j) {
            if (j == i) continue;
            const double xj = xa(j, t) - xa(j, s);
            const double integral = young_integral_quadratic(f_nodes, f_mids, xa, j, s, t);
            const double coeff = xj * diag / 12.0 - 0.5 * integral;
            out += coeff * bracket_iij_tensor(i, j, d);
        }
    }
    return out;
}

inline std::vector<CovMatrix> residual_covariances(std::span<const KLBasis> bases, const IndexSet& a) {
    std::vector<CovMatrix> out;
    for (const auto& b : bases) out.push_back(partial_cov(b, a.complement(b.rank())));
    return out;
}

inline LieElement level3_correction(std::span<const KLBasis> bases, const IndexSet& a, const SamplePath& xa, int s, int t) {
    detail::check_bases(bases, xa.grid(), xa.dim());
    return level3_correction(residual_covariances(bases, a), xa, s, t);
}

// Componentwise mean and standard error of a Monte Carlo average of log-signatures.
struct LogMoments {
    LieElement mean;
    TensorElement std_error;
};

namespace detail {

// Welford accumulation over draws in index order.
inline LogMoments moments(const std::vector<LieElement>& draws) {
    const auto& first = draws.front().tensor();
    TensorElement mean(first.dim(), first.depth()), m2(first.dim(), first.depth());
    std::size_t count = 0;
    for (const auto& l : draws) {
        ++count;
        auto x = l.tensor().coefficients();
        auto mu = mean.coefficients();
        auto q = m2.coefficients();
        for (std::size_t c = 0; c < x.size(); ++c) {
            const double delta = x[c] - mu[c];
            mu[c] += delta / static_cast<double>(count);
            q[c] += delta * (x[c] - mu[c]);
        }
    }
    TensorElement se(first.dim(), first.depth());
    auto q = m2.coefficients();
    auto out = se.coefficients();
    for (std::size_t c = 0; c < q.size(); ++c)
        out[c] = count > 1 ? std::sqrt(q[c] / static_cast<double>(count - 1) / static_cast<double>(count)) : 0.0;
    mean.scalar() = 0.0;
    return {LieElement::from_tensor(std::move(mean)), std::move(se)};
}

}  // namespace detail

// Monte Carlo estimate of E[ln X_{s,t} | F_A] for each requested (s,t): draws residuals
// X^{A^c} = sum_{k not in A} Z_k h_k with fresh standard normal Z (draw r uses substream (seed, r)),
// lifts xA + residual and averages the log-signature increments.
inline std::vector<LogMoments> conditional_log_mc(std::span<const KLBasis> bases, const IndexSet& a,
                                                  const SamplePath& xa, std::span<const std::pair<int, int>> pairs,
                                                  int draws, std::uint64_t seed) {
    if (draws <= 0) throw InputError("conditional_log_mc needs at least one draw");
    detail::check_bases(bases, xa.grid(), xa.dim());
    for (auto [s, t] : pairs)
        if (s >= t || s < 0 || t >= xa.nodes()) throw InputError("conditional_log_mc needs 0 <= s < t <= n");
    const int d = xa.dim();
    std::vector<IndexSet> residual_sets;
    for (const auto& b : bases) residual_sets.push_back(a.complement(b.rank()));

    std::vector<std::vector<LieElement>> per_pair(pairs.size(), std::vector<LieElement>(static_cast<std::size_t>(draws)));
    parallel_for(static_cast<std::size_t>(draws), [&](std::size_t r) {
        NormalStream rng(seed, r);
        SamplePath x = xa;
        for (int i = 0; i < d; ++i) {
            const KLBasis& b = bases[static_cast<std::size_t>(i)];
            auto comp = x.component(i);
            for (int k : residual_sets[static_cast<std::size_t>(i)]) {
                const double zk = rng();
                for (int m = 0; m < b.nodes(); ++m) comp[static_cast<std::size_t>(m)] += zk * b.h(m, k);
            }
        }
        for (std::size_t p = 0; p < pairs.size(); ++p)
            per_pair[p][r] = log(segment_signature(x, pairs[p].first, pairs[p].second, 3));
    });
    std::vector<LogMoments> out;
    for (const auto& v : per_pair) out.push_back(detail::moments(v));
    return out;
}

inline LogMoments conditional_log_mc(std::span<const KLBasis> bases, const IndexSet& a, const SamplePath& xa, int s,
                                     int t, int draws, std::uint64_t seed) {
    const std::pair<int, int> pair{s, t};
    return conditional_log_mc(bases, a, xa, std::span(&pair, 1), draws, seed).front();
}

}  // namespace klrough
