#pragma once

// Experiment drivers. Each run_* takes a validated configuration and returns result records;
// Monte Carlo statistics carry a standard error, exact statistics report stderr 0.
//
// Sample s of the underlying process always uses substream (seed, s); draws are aggregated in
// index order, so results are independent of the number of worker threads.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "klrough/config.hpp"
#include "klrough/error.hpp"
#include "klrough/gaussian_process.hpp"
#include "klrough/karhunen_loeve.hpp"
#include "klrough/parallel.hpp"
#include "klrough/path_lift.hpp"
#include "klrough/records.hpp"
#include "klrough/rng.hpp"
#include "klrough/tensor_group.hpp"
#include "klrough/variation_metrics.hpp"

namespace klrough {

struct Estimate {
    double mean = 0.0;
    double se = 0.0;
};

// Sample mean and standard error, accumulated in index order.
inline Estimate estimate(const std::vector<double>& v) {
    double mean = 0.0, m2 = 0.0;
    std::size_t count = 0;
    for (double x : v) {
        ++count;
        const double delta = x - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (x - mean);
    }
    const double se = count > 1 ? std::sqrt(m2 / static_cast<double>(count - 1) / static_cast<double>(count)) : 0.0;
    return {mean, se};
}

// (E[Y^q])^{1/q} from samples of Y^q, standard error by the delta method.
inline Estimate moment_root(const std::vector<double>& powered, double q) {
    const Estimate e = estimate(powered);
    if (e.mean <= 0.0) return {0.0, 0.0};
    const double root = std::pow(e.mean, 1.0 / q);
    return {root, root / (q * e.mean) * e.se};
}

// |z| of a residual against its standard error. Coordinates without sampling spread count as
// exact: zero if the residual is at rounding level, infinite otherwise.
inline double z_score(double residual, double se) {
    if (se > 1e-13) return residual / se;
    return std::abs(residual) <= 1e-10 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), residual);
}

namespace detail {

struct Setup {
    CovKernel kernel;
    TimeGrid grid;
    CovMatrix cov;
    std::vector<KLBasis> bases;

    int rank() const { return bases.front().rank(); }
};

inline Setup make_setup(const ExperimentConfig& c) {
    Setup s;
    s.kernel = make_kernel(c);
    s.grid = TimeGrid::uniform(c.n);
    s.cov = cov_matrix(s.kernel, s.grid);
    const KLBasis basis = kl_decompose(s.cov);
    if (basis.rank() == 0) throw DataError("covariance has rank zero");
    s.bases.assign(static_cast<std::size_t>(c.d), basis);
    return s;
}

inline ResultRecord record(const ExperimentConfig& c, const Setup& s, int m, std::string statistic, double value,
                           double se) {
    ResultRecord r;
    r.experiment = c.experiment;
    r.kernel = s.kernel.name();
    r.hurst = s.kernel.reported_hurst();
    r.n = c.n;
    r.m = m;
    r.p = c.p;
    r.q = c.q;
    r.samples = c.samples;
    r.statistic = std::move(statistic);
    r.value = value;
    r.stderr_value = se;
    r.seed = c.seed;
    return r;
}

// Standard normal KL coordinates for every component, full rank.
inline std::vector<Eigen::VectorXd> draw_coordinates(NormalStream& rng, const std::vector<KLBasis>& bases) {
    std::vector<Eigen::VectorXd> z;
    for (const auto& b : bases) {
        Eigen::VectorXd v(b.rank());
        for (int k = 0; k < b.rank(); ++k) v(k) = rng();
        z.push_back(std::move(v));
    }
    return z;
}

// Random index set: inclusion probability u ~ U(0,1) drawn per set, then Bernoulli(u) per index.
inline IndexSet random_index_set(int rank, std::mt19937_64& engine) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(engine);
    std::vector<int> idx;
    for (int k = 0; k < rank; ++k)
        if (unif(engine) < u) idx.push_back(k);
    return IndexSet(std::move(idx));
}

inline std::string index_policy(const ExperimentConfig& c, const char* fallback) {
    return c.index_policy.empty() ? fallback : c.index_policy;
}

inline std::vector<IndexSet> index_sets(const ExperimentConfig& c, int rank, const char* fallback) {
    const std::string policy = index_policy(c, fallback);
    std::vector<IndexSet> sets;
    if (policy == "random") {
        if (c.index_sets < 1) throw ConfigError("index_sets must be positive");
        std::mt19937_64 engine(stream_seed(c.seed, 0xA5A5A5A5ULL));
        for (int a = 0; a < c.index_sets; ++a) sets.push_back(random_index_set(rank, engine));
    } else if (policy == "prefix") {
        for (int m : c.m) {
            if (m < 0 || m > rank) throw ConfigError("KL level m outside [0, rank]");
            sets.push_back(IndexSet::prefix(m));
        }
    } else if (policy == "empty") {
        sets.push_back(IndexSet::empty());
    } else if (policy == "full") {
        sets.push_back(IndexSet::full(rank));
    } else {
        throw ConfigError("index_policy must be prefix, random, empty or full");
    }
    return sets;
}

inline double holder_alpha(const ExperimentConfig& c) { return c.alpha < 0.0 ? 1.0 / c.p : c.alpha; }

// Piecewise-linear interpolation through every (n / pieces)-th node, on the original grid.
inline SamplePath dyadic_interpolant(const SamplePath& x, int pieces) {
    const int n = x.grid().segments();
    const int step = n / pieces;
    SamplePath out(x.grid(), x.dim());
    for (int i = 0; i < x.dim(); ++i)
        for (int k = 0; k <= n; ++k) {
            const int left = (k / step) * step;
            if (left == k) {
                out(i, k) = x(i, k);
                continue;
            }
            const int right = left + step;
            const double w = (x.grid()[k] - x.grid()[left]) / (x.grid()[right] - x.grid()[left]);
            out(i, k) = (1.0 - w) * x(i, left) + w * x(i, right);
        }
    return out;
}

// Ordinary least-squares slope of y on x, with the standard error propagated from per-point
// standard errors of y.
inline Estimate ols_slope(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& y_se) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k] / n;
        my += y[k] / n;
    }
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
    }
    double var = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double w = (x[k] - mx) / sxx;
        var += w * w * y_se[k] * y_se[k];
    }
    return {sxy / sxx, std::sqrt(var)};
}

}  // namespace detail

// Convergence of KL (mode "kl") or dyadic piecewise-linear (mode "dyadic") approximations in
// p-variation and 1/p-Hoelder distance, as (E[stat^q])^{1/q}.
inline std::vector<ResultRecord> run_convergence(const ExperimentConfig& c) {
    validate_common(c, true);
    validate_p(c);
    const auto setup = detail::make_setup(c);
    const double alpha = detail::holder_alpha(c);
    std::vector<ResultRecord> out;

    if (c.mode == "kl") {
        const int rank = setup.rank();
        for (int m : c.m)
            if (m < 0 || m > rank) throw ConfigError("KL level m outside [0, rank]");
        const std::size_t levels = c.m.size();
        constexpr int kStats = 4;  // pvar_dist, pvar_tail_norm, holder_dist, holder_tail_norm
        std::vector<std::vector<double>> vals(levels * kStats, std::vector<double>(static_cast<std::size_t>(c.samples)));
        parallel_for(static_cast<std::size_t>(c.samples), [&](std::size_t s) {
            NormalStream rng(c.seed, s);
            const auto z = detail::draw_coordinates(rng, setup.bases);
            const SamplePath x = synthesize(z, setup.bases, IndexSet::full(rank));
            const GroupPath lx = lift_pl(x, 3);
            for (std::size_t l = 0; l < levels; ++l) {
                const SamplePath xa = synthesize(z, setup.bases, IndexSet::prefix(c.m[l]));
                const SamplePath xc = x - xa;
                const GroupPath la = lift_pl(xa, 3);
                const GroupPath lc = lift_pl(xc, 3);
                const detail::PairDistances dist(la, &lx);
                const detail::PairDistances tail(lc, nullptr);
                vals[l * kStats + 0][s] = std::pow(detail::pvar_from_table(dist, c.p, PvarMode::dp), c.q);
                vals[l * kStats + 1][s] = std::pow(detail::pvar_from_table(tail, c.p, PvarMode::dp), c.q);
                vals[l * kStats + 2][s] = std::pow(detail::holder_from_table(dist, setup.grid, alpha), c.q);
                vals[l * kStats + 3][s] = std::pow(detail::holder_from_table(tail, setup.grid, alpha), c.q);
            }
        });
        static const char* names[kStats] = {"pvar_dist", "pvar_tail_norm", "holder_dist", "holder_tail_norm"};
        for (std::size_t l = 0; l < levels; ++l)
            for (int k = 0; k < kStats; ++k) {
                if (k >= 2 && !c.holder) continue;
                const Estimate e = moment_root(vals[l * kStats + static_cast<std::size_t>(k)], c.q);
                out.push_back(detail::record(c, setup, c.m[l], names[k], e.mean, e.se));
            }
        return out;
    }

    if (c.mode == "dyadic") {
        if (!detail::is_power_of_two(c.n)) throw ConfigError("dyadic mode needs n a power of two");
        int levels = 0;
        while ((1 << (levels + 1)) <= c.n) ++levels;  // compare 2^k with 2^{k+1}, k < levels
        const auto paths = sample(setup.cov, c.d, c.samples, c.seed);
        std::vector<std::vector<double>> pv(static_cast<std::size_t>(levels), std::vector<double>(paths.size()));
        std::vector<std::vector<double>> hv = pv;
        parallel_for(paths.size(), [&](std::size_t s) {
            std::vector<GroupPath> lifts;
            for (int k = 0; k <= levels; ++k) lifts.push_back(lift_pl(detail::dyadic_interpolant(paths[s], 1 << k), 3));
            for (int k = 0; k < levels; ++k) {
                const detail::PairDistances dist(lifts[static_cast<std::size_t>(k)], &lifts[static_cast<std::size_t>(k) + 1]);
                pv[static_cast<std::size_t>(k)][s] = std::pow(detail::pvar_from_table(dist, c.p, PvarMode::dp), c.q);
                hv[static_cast<std::size_t>(k)][s] = std::pow(detail::holder_from_table(dist, setup.grid, alpha), c.q);
            }
        });
        for (int k = 0; k < levels; ++k) {
            const Estimate e = moment_root(pv[static_cast<std::size_t>(k)], c.q);
            out.push_back(detail::record(c, setup, 1 << k, "dyadic_pvar_dist", e.mean, e.se));
            if (c.holder) {
                const Estimate h = moment_root(hv[static_cast<std::size_t>(k)], c.q);
                out.push_back(detail::record(c, setup, 1 << k, "dyadic_holder_dist", h.mean, h.se));
            }
        }
        return out;
    }
    throw ConfigError("convergence mode must be kl or dyadic");
}

// max_A E ||X^A_{0,l}||^2 for interval lengths l (in grid segments) and its log-log slope in l.
inline std::vector<ResultRecord> run_uniform_modulus(const ExperimentConfig& c) {
    validate_common(c, true);
    if (c.kernel == "table") throw ConfigError("uniform modulus needs a brownian or fbm kernel");
    if (c.kernel == "fbm" && c.hurst < 0.3) throw ConfigError("uniform modulus needs hurst >= 0.3");
    std::vector<int> lengths = c.lengths;
    if (lengths.empty())
        for (int l = std::max(1, c.n / 64); l <= c.n; l *= 2) lengths.push_back(l);
    for (int l : lengths)
        if (l < 1 || l > c.n) throw ConfigError("interval length outside [1, n]");
    if (lengths.size() < 2) throw ConfigError("uniform modulus needs at least two lengths");

    const auto setup = detail::make_setup(c);
    const auto sets = detail::index_sets(c, setup.rank(), "random");
    const std::size_t nl = lengths.size();
    // second[a][l][s]
    std::vector<std::vector<std::vector<double>>> second(
        sets.size(), std::vector<std::vector<double>>(nl, std::vector<double>(static_cast<std::size_t>(c.samples))));
    parallel_for(static_cast<std::size_t>(c.samples), [&](std::size_t s) {
        NormalStream rng(c.seed, s);
        const auto z = detail::draw_coordinates(rng, setup.bases);
        for (std::size_t a = 0; a < sets.size(); ++a) {
            const GroupPath lx = lift_pl(synthesize(z, setup.bases, sets[a]), 3);
            for (std::size_t l = 0; l < nl; ++l) {
                const double norm = hom_norm(lx.points[static_cast<std::size_t>(lengths[l])]);
                second[a][l][s] = norm * norm;
            }
        }
    });
    std::vector<ResultRecord> out;
    std::vector<double> xs, ys, yse;
    bool all_zero = true;
    for (std::size_t l = 0; l < nl; ++l) {
        Estimate best{-1.0, 0.0};
        for (std::size_t a = 0; a < sets.size(); ++a) {
            const Estimate e = estimate(second[a][l]);
            if (e.mean > best.mean) best = e;
        }
        out.push_back(detail::record(c, setup, lengths[l], "max_second_moment", best.mean, best.se));
        if (best.mean > 0.0) {
            all_zero = false;
            xs.push_back(std::log(static_cast<double>(lengths[l]) / c.n));
            ys.push_back(std::log(best.mean));
            yse.push_back(best.se / best.mean);
        }
    }
    Estimate slope{0.0, 0.0};
    if (!all_zero) {
        if (xs.size() != nl) throw DataError("uniform modulus: some but not all moments vanish");
        slope = detail::ols_slope(xs, ys, yse);
    }
    out.push_back(detail::record(c, setup, 0, "loglog_slope", slope.mean, slope.se));
    out.push_back(detail::record(c, setup, 0, "target_slope", all_zero ? 0.0 : 2.0 * setup.kernel.reported_hurst(), 0.0));
    return out;
}

inline std::string node_pair_tag(int s, int t) { return "_s" + std::to_string(s) + "_t" + std::to_string(t); }

// Conditional log-signature identities: levels 1 and 2 are martingale-exact, level 3 needs the
// analytic correction. Also reports the unconditional mean of ln X_{s,t}.
inline std::vector<ResultRecord> run_martingale_checks(const ExperimentConfig& c) {
    validate_common(c, true);
    if (c.d < 2) throw ConfigError("martingale checks need d >= 2");
    if (c.samples < 2) throw ConfigError("martingale checks need at least two samples");
    const auto setup = detail::make_setup(c);
    const int rank = setup.rank();

    IndexSet a;
    const std::string policy = detail::index_policy(c, "prefix");
    if (policy == "prefix") {
        if (c.subset_size < 0 || c.subset_size > rank) throw ConfigError("subset_size outside [0, rank]");
        a = IndexSet::prefix(c.subset_size);
    } else if (policy == "random") {
        if (c.subset_size < 0 || c.subset_size > rank) throw ConfigError("subset_size outside [0, rank]");
        std::mt19937_64 engine(stream_seed(c.seed, 0xA5A5A5A5ULL));
        std::vector<int> all(static_cast<std::size_t>(rank));
        for (int k = 0; k < rank; ++k) all[static_cast<std::size_t>(k)] = k;
        std::shuffle(all.begin(), all.end(), engine);
        all.resize(static_cast<std::size_t>(c.subset_size));
        a = IndexSet(std::move(all));
    } else if (policy == "full") {
        a = IndexSet::full(rank);
    } else if (policy == "empty") {
        a = IndexSet::empty();
    } else {
        throw ConfigError("index_policy must be prefix, random, empty or full");
    }

    std::vector<std::pair<int, int>> pairs = c.pairs;
    if (pairs.empty()) pairs = {{0, c.n}, {0, c.n / 2}, {c.n / 4, (3 * c.n) / 4}};
    for (auto [s, t] : pairs)
        if (!(0 <= s && s < t && t <= c.n)) throw ConfigError("pairs must satisfy 0 <= s < t <= n");

    // The conditioning path uses a substream outside the range used by residual draws.
    NormalStream xa_rng(c.seed, 1ULL << 40);
    const SamplePath xa = synthesize(detail::draw_coordinates(xa_rng, setup.bases), setup.bases, a);
    const auto mc = conditional_log_mc(setup.bases, a, xa, pairs, c.samples, c.seed);
    const auto rc = residual_covariances(setup.bases, a);

    // Unconditional draws of the full process: A empty, zero conditioning path.
    const SamplePath zero(setup.grid, c.d);
    const auto uncond = conditional_log_mc(setup.bases, IndexSet::empty(), zero, pairs, c.samples, splitmix64(c.seed ^ 0x5DEECE66DULL));

    std::vector<ResultRecord> out;
    double max_z[3] = {0.0, 0.0, 0.0};
    double max_z_uncorrected = 0.0, max_z_uncond = 0.0;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto [s, t] = pairs[p];
        const LieElement ln_xa = log(segment_signature(xa, s, t, 3));
        const LieElement corr = level3_correction(std::span<const CovMatrix>(rc), xa, s, t);
        const TensorElement expected = (ln_xa + corr).tensor();
        const TensorElement& mean = mc[p].mean.tensor();
        const TensorElement& se = mc[p].std_error;
        for (int level = 1; level <= 3; ++level) {
            const auto e = expected.level(level);
            const auto u = ln_xa.level(level);
            const auto mu = mean.level(level);
            const auto sd = se.level(level);
            const auto mu0 = uncond[p].mean.level(level);
            const auto sd0 = uncond[p].std_error.level(level);
            for (std::size_t w = 0; w < e.size(); ++w) {
                const std::string tag = "_L" + std::to_string(level) + "_" + word_name(level, w, c.d) + node_pair_tag(s, t);
                const double resid = mu[w] - e[w];
                out.push_back(detail::record(c, setup, static_cast<int>(a.size()), "resid" + tag, resid, sd[w]));
                max_z[level - 1] = std::max(max_z[level - 1], std::abs(z_score(resid, sd[w])));
                if (level == 3) {
                    const double raw = mu[w] - u[w];
                    out.push_back(detail::record(c, setup, static_cast<int>(a.size()), "uncorrected_resid" + tag, raw, sd[w]));
                    max_z_uncorrected = std::max(max_z_uncorrected, std::abs(z_score(raw, sd[w])));
                }
                out.push_back(detail::record(c, setup, static_cast<int>(a.size()), "uncond_mean" + tag, mu0[w], sd0[w]));
                max_z_uncond = std::max(max_z_uncond, std::abs(z_score(mu0[w], sd0[w])));
            }
        }
    }
    const int m = static_cast<int>(a.size());
    out.push_back(detail::record(c, setup, m, "max_abs_z_level1", max_z[0], 0.0));
    out.push_back(detail::record(c, setup, m, "max_abs_z_level2", max_z[1], 0.0));
    out.push_back(detail::record(c, setup, m, "max_abs_z_level3", max_z[2], 0.0));
    out.push_back(detail::record(c, setup, m, "max_abs_z_level3_uncorrected", max_z_uncorrected, 0.0));
    out.push_back(detail::record(c, setup, m, "max_abs_z_unconditional", max_z_uncond, 0.0));
    return out;
}

// Full-grid 2-variation of R^A against that of R over many index sets A, plus the triangle bound
// |R^A|_rho <= |R|_rho + sum_{k not in A} |h_k h_k^T|_rho at rho of the kernel.
inline std::vector<ResultRecord> run_2var_bound(const ExperimentConfig& c) {
    validate_common(c, false);
    const auto setup = detail::make_setup(c);
    const KLBasis& basis = setup.bases.front();
    const auto sets = detail::index_sets(c, basis.rank(), "random");
    const double reference = rho_var_2d(setup.cov, 2.0, RhoVarMode::fullgrid);
    const double rho = c.rho_of_kernel();
    const double reference_rho = rho_var_2d(setup.cov, rho, RhoVarMode::fullgrid);
    // |h h^T|_rho on the full grid equals (sum_a |dh_a|^rho)^{2/rho}.
    std::vector<double> rank_one(static_cast<std::size_t>(basis.rank()));
    for (int k = 0; k < basis.rank(); ++k) {
        double s = 0.0;
        for (int m = 0; m + 1 < basis.nodes(); ++m) s += std::pow(std::abs(basis.h(m + 1, k) - basis.h(m, k)), rho);
        rank_one[static_cast<std::size_t>(k)] = std::pow(s, 2.0 / rho);
    }
    std::vector<double> lhs(sets.size()), regularity(sets.size());
    parallel_for(sets.size(), [&](std::size_t i) {
        const CovMatrix ra = partial_cov(basis, sets[i]);
        lhs[i] = rho_var_2d(ra, 2.0, RhoVarMode::fullgrid);
        double bound = reference_rho;
        for (int k : sets[i].complement(basis.rank())) bound += rank_one[static_cast<std::size_t>(k)];
        regularity[i] = rho_var_2d(ra, rho, RhoVarMode::fullgrid) - bound;
    });
    double max_violation = -std::numeric_limits<double>::infinity(), max_lhs = 0.0, min_lhs = std::numeric_limits<double>::infinity();
    double max_reg = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sets.size(); ++i) {
        max_violation = std::max(max_violation, lhs[i] - reference);
        max_lhs = std::max(max_lhs, lhs[i]);
        min_lhs = std::min(min_lhs, lhs[i]);
        max_reg = std::max(max_reg, regularity[i]);
    }
    const int count = static_cast<int>(sets.size());
    return {detail::record(c, setup, count, "reference_2var", reference, 0.0),
            detail::record(c, setup, count, "max_partial_2var", max_lhs, 0.0),
            detail::record(c, setup, count, "min_partial_2var", min_lhs, 0.0),
            detail::record(c, setup, count, "max_violation", max_violation, 0.0),
            detail::record(c, setup, count, "max_regularity_violation", max_reg, 0.0)};
}

// Pathwise translation identity project(x - g_n, A_m) = project(x, {n+1..m}) for all n < m, and the
// p-variation norm of the lifted tail projection project(x, {n+1..K}) for n in the configured levels.
inline std::vector<ResultRecord> run_translation_check(const ExperimentConfig& c) {
    validate_common(c, true);
    validate_p(c);
    const auto setup = detail::make_setup(c);
    const int rank = setup.rank();
    for (int m : c.m)
        if (m < 0 || m > rank) throw ConfigError("KL level m outside [0, rank]");
    const int d = c.d;
    std::vector<double> max_err(static_cast<std::size_t>(c.samples), 0.0);
    std::vector<std::vector<double>> tails(c.m.size(), std::vector<double>(static_cast<std::size_t>(c.samples)));
    parallel_for(static_cast<std::size_t>(c.samples), [&](std::size_t s) {
        NormalStream rng(c.seed, s);
        const auto z = detail::draw_coordinates(rng, setup.bases);
        const SamplePath x = synthesize(z, setup.bases, IndexSet::full(rank));
        double err = 0.0;
        for (int n0 = 0; n0 < rank; ++n0) {
            const SamplePath shifted = x - synthesize(z, setup.bases, IndexSet::prefix(n0));
            const auto zs = path_coefficients(shifted, setup.bases);
            // Grow both sides one basis function at a time.
            SamplePath lhs(setup.grid, d), rhs(setup.grid, d);
            for (int k = 0; k < n0; ++k)
                for (int i = 0; i < d; ++i) {
                    auto comp = lhs.component(i);
                    const auto& b = setup.bases[static_cast<std::size_t>(i)];
                    for (int node = 0; node < b.nodes(); ++node) comp[static_cast<std::size_t>(node)] += zs[static_cast<std::size_t>(i)](k) * b.h(node, k);
                }
            for (int m = n0 + 1; m <= rank; ++m) {
                const int k = m - 1;
                for (int i = 0; i < d; ++i) {
                    const auto& b = setup.bases[static_cast<std::size_t>(i)];
                    auto lc = lhs.component(i);
                    auto rc = rhs.component(i);
                    for (int node = 0; node < b.nodes(); ++node) {
                        lc[static_cast<std::size_t>(node)] += zs[static_cast<std::size_t>(i)](k) * b.h(node, k);
                        rc[static_cast<std::size_t>(node)] += z[static_cast<std::size_t>(i)](k) * b.h(node, k);
                    }
                }
                for (int i = 0; i < d; ++i)
                    for (int node = 0; node < setup.grid.nodes(); ++node) err = std::max(err, std::abs(lhs(i, node) - rhs(i, node)));
            }
        }
        max_err[s] = err;
        for (std::size_t l = 0; l < c.m.size(); ++l) {
            const SamplePath tail = synthesize(z, setup.bases, IndexSet::range(c.m[l], rank));
            tails[l][s] = pvar_norm(lift_pl(tail, 3), c.p);
        }
    });
    std::vector<ResultRecord> out;
    double worst = 0.0;
    for (double e : max_err) worst = std::max(worst, e);
    out.push_back(detail::record(c, setup, rank, "max_translation_error", worst, 0.0));
    for (std::size_t l = 0; l < c.m.size(); ++l) {
        const Estimate e = estimate(tails[l]);
        out.push_back(detail::record(c, setup, c.m[l], "tail_pvar_norm", e.mean, e.se));
    }
    return out;
}

// Second moment of the Young-Wiener integral I = int_0^l R_{A^c}([u,l]x[0,u]) dX_u over intervals
// [0, l], maximized over prefix sets A = A_m, m = 1, 2, 4, ..., K. The integrand is deterministic,
// so the Monte Carlo estimate (integrator drawn from the full process) is reported together with
// the exact value w^T Cov(dX) w. The log-log slope of the Monte Carlo maxima in l is the statistic
// compared with 3 / rho.
inline std::vector<ResultRecord> run_young_wiener(const ExperimentConfig& c) {
    validate_common(c, false);
    if (c.samples < 2) throw ConfigError("young-wiener needs at least two samples");
    const auto setup = detail::make_setup(c);
    const KLBasis& basis = setup.bases.front();
    std::vector<int> lengths = c.lengths;
    if (lengths.empty())
        for (int l = std::max(1, c.n / 64); l <= c.n; l *= 2) lengths.push_back(l);
    for (int l : lengths)
        if (l < 1 || l > c.n) throw ConfigError("interval length outside [1, n]");
    if (lengths.size() < 2) throw ConfigError("young-wiener needs at least two lengths");
    std::vector<int> levels;
    for (int m = 1; m <= basis.rank(); m *= 2) levels.push_back(m);

    const int nodes = setup.grid.nodes();
    // Segment weights w[m][l][seg]: Simpson averages of the integrand on each segment of [0, l].
    std::vector<std::vector<std::vector<double>>> weights(levels.size(), std::vector<std::vector<double>>(lengths.size()));
    for (std::size_t li = 0; li < levels.size(); ++li) {
        const CovMatrix rc = partial_cov(basis, IndexSet::prefix(levels[li]).complement(basis.rank()));
        const auto& r = rc.entries;
        for (std::size_t l = 0; l < lengths.size(); ++l) {
            const int t = lengths[l], s = 0;
            std::vector<double> w(static_cast<std::size_t>(t));
            for (int m = s; m < t; ++m) {
                const double f0 = r(t, m) - r(t, s) - r(m, m) + r(m, s);
                const double f1 = r(t, m + 1) - r(t, s) - r(m + 1, m + 1) + r(m + 1, s);
                const double fm = 0.5 * (r(t, m) + r(t, m + 1)) - r(t, s) - 0.25 * (r(m, m) + 2.0 * r(m, m + 1) + r(m + 1, m + 1)) +
                                  0.5 * (r(s, m) + r(s, m + 1));
                w[static_cast<std::size_t>(m)] = (f0 + 4.0 * fm + f1) / 6.0;
            }
            weights[li][l] = std::move(w);
        }
    }
    // Integrator: one component of the full process, sampled through its KL coordinates.
    std::vector<std::vector<std::vector<double>>> sq(levels.size(), std::vector<std::vector<double>>(
                                                                        lengths.size(), std::vector<double>(static_cast<std::size_t>(c.samples))));
    parallel_for(static_cast<std::size_t>(c.samples), [&](std::size_t s) {
        NormalStream rng(c.seed, s);
        Eigen::VectorXd z(basis.rank());
        for (int k = 0; k < basis.rank(); ++k) z(k) = rng();
        const Eigen::VectorXd x = basis.h * z;
        for (std::size_t li = 0; li < levels.size(); ++li)
            for (std::size_t l = 0; l < lengths.size(); ++l) {
                double integral = 0.0;
                const auto& w = weights[li][l];
                for (std::size_t m = 0; m < w.size(); ++m) integral += w[m] * (x(static_cast<Eigen::Index>(m) + 1) - x(static_cast<Eigen::Index>(m)));
                sq[li][l][s] = integral * integral;
            }
    });
    // Covariance of grid increments for the exact second moments.
    Eigen::MatrixXd inc_cov(nodes - 1, nodes - 1);
    for (int a = 0; a + 1 < nodes; ++a)
        for (int b = 0; b + 1 < nodes; ++b) inc_cov(a, b) = rect_increment(setup.cov, a, a + 1, b, b + 1);

    std::vector<ResultRecord> out;
    std::vector<double> xs, ys, yse;
    for (std::size_t l = 0; l < lengths.size(); ++l) {
        Estimate best{-1.0, 0.0};
        double best_exact = 0.0;
        int best_m = 0;
        for (std::size_t li = 0; li < levels.size(); ++li) {
            const Estimate e = estimate(sq[li][l]);
            const auto& w = weights[li][l];
            const Eigen::Map<const Eigen::VectorXd> wv(w.data(), static_cast<Eigen::Index>(w.size()));
            const double exact = wv.dot(inc_cov.topLeftCorner(wv.size(), wv.size()) * wv);
            best_exact = std::max(best_exact, exact);
            if (e.mean > best.mean) {
                best = e;
                best_m = levels[li];
            }
        }
        out.push_back(detail::record(c, setup, lengths[l], "max_second_moment", best.mean, best.se));
        out.push_back(detail::record(c, setup, lengths[l], "max_exact_second_moment", best_exact, 0.0));
        out.push_back(detail::record(c, setup, lengths[l], "argmax_level", best_m, 0.0));
        if (best.mean <= 0.0) throw DataError("young-wiener: vanishing second moment");
        xs.push_back(std::log(static_cast<double>(lengths[l]) / c.n));
        ys.push_back(std::log(best.mean));
        yse.push_back(best.se / best.mean);
    }
    const Estimate slope = detail::ols_slope(xs, ys, yse);
    out.push_back(detail::record(c, setup, 0, "loglog_slope", slope.mean, slope.se));
    out.push_back(detail::record(c, setup, 0, "target_slope", 3.0 / c.rho_of_kernel(), 0.0));
    return out;
}

// Levy area of planar Brownian motion over [0,1] from the piecewise-linear lift on the grid:
// Var(A) with A = (X^{12} - X^{21})/2, and E[(X^{12})^2].
inline std::vector<ResultRecord> run_levy_area(const ExperimentConfig& c) {
    validate_common(c, true);
    if (c.kernel != "brownian") throw ConfigError("levy-area needs the brownian kernel");
    if (c.d != 2) throw ConfigError("levy-area needs d = 2");
    if (c.samples < 2) throw ConfigError("levy-area needs at least two samples");
    const TimeGrid grid = TimeGrid::uniform(c.n);
    std::vector<double> area_sq(static_cast<std::size_t>(c.samples)), x12_sq(static_cast<std::size_t>(c.samples));
    parallel_for(static_cast<std::size_t>(c.samples), [&](std::size_t s) {
        // Independent N(0, dt) increments; the same law as the Cholesky sampler, O(n) per path.
        const SamplePath x = sample_brownian(grid, 2, 1, stream_seed(c.seed, s)).front();
        const GroupElement g = segment_signature(x, 0, c.n, 2);
        const double area = 0.5 * (g(0, 1) - g(1, 0));
        area_sq[s] = area * area;
        x12_sq[s] = g(0, 1) * g(0, 1);
    });
    detail::Setup info;
    info.kernel = CovKernel::brownian();
    const Estimate a = estimate(area_sq);
    const Estimate b = estimate(x12_sq);
    return {detail::record(c, info, 0, "levy_area_variance", a.mean, a.se),
            detail::record(c, info, 0, "x12_second_moment", b.mean, b.se)};
}

// Path-level subcommands.

inline std::vector<SamplePath> run_simulate(const ExperimentConfig& c) {
    validate_common(c, false);
    const CovKernel k = make_kernel(c);
    return sample(cov_matrix(k, TimeGrid::uniform(c.n)), c.d, c.samples, c.seed);
}

inline std::vector<GroupPath> run_lift(const ExperimentConfig& c) {
    if (c.input.empty()) throw ConfigError("lift needs an input path CSV");
    if (c.depth < 1 || c.depth > 3) throw ConfigError("depth must be 1, 2 or 3");
    std::vector<GroupPath> out;
    for (const auto& p : paths_from_csv(read_text(c.input))) out.push_back(lift_pl(p, c.depth));
    return out;
}

// p-variation and 1/p-Hoelder norms of the lifted input paths, one record per sample plus means.
inline std::vector<ResultRecord> run_pvar(const ExperimentConfig& c) {
    if (c.input.empty()) throw ConfigError("pvar needs an input path CSV");
    if (!(c.p >= 1.0)) throw ConfigError("p must be >= 1");
    if (c.mode != "dp" && c.mode != "brute") throw ConfigError("pvar mode must be dp or brute");
    if (c.depth < 1 || c.depth > 3) throw ConfigError("depth must be 1, 2 or 3");
    const auto paths = paths_from_csv(read_text(c.input));
    const PvarMode mode = c.mode == "dp" ? PvarMode::dp : PvarMode::brute;
    const double alpha = detail::holder_alpha(c);
    std::vector<double> pv(paths.size()), hv(paths.size());
    for (std::size_t s = 0; s < paths.size(); ++s) {
        const GroupPath g = lift_pl(paths[s], c.depth);
        const detail::PairDistances table(g, nullptr);
        pv[s] = detail::pvar_from_table(table, c.p, mode);
        hv[s] = detail::holder_from_table(table, g.grid, alpha);
    }
    detail::Setup info;
    info.kernel = c.kernel == "fbm" ? CovKernel::fbm(c.hurst) : CovKernel::brownian();
    ExperimentConfig meta = c;
    meta.samples = static_cast<int>(paths.size());
    meta.n = paths.empty() ? 0 : paths.front().grid().segments();
    std::vector<ResultRecord> out;
    for (std::size_t s = 0; s < paths.size(); ++s) {
        out.push_back(detail::record(meta, info, 0, "pvar_norm_sample" + std::to_string(s), pv[s], 0.0));
        out.push_back(detail::record(meta, info, 0, "holder_norm_sample" + std::to_string(s), hv[s], 0.0));
    }
    if (!paths.empty()) {
        const Estimate ep = estimate(pv), eh = estimate(hv);
        out.push_back(detail::record(meta, info, 0, "pvar_norm_mean", ep.mean, ep.se));
        out.push_back(detail::record(meta, info, 0, "holder_norm_mean", eh.mean, eh.se));
    }
    return out;
}

inline std::vector<ResultRecord> run_rhovar(const ExperimentConfig& c) {
    validate_common(c, false);
    if (!(c.rho >= 1.0)) throw ConfigError("rho must be >= 1");
    RhoVarMode mode;
    if (c.rho_mode == "fullgrid") mode = RhoVarMode::fullgrid;
    else if (c.rho_mode == "hillclimb") mode = RhoVarMode::hillclimb;
    else if (c.rho_mode == "brute") mode = RhoVarMode::brute;
    else throw ConfigError("rho_mode must be fullgrid, hillclimb or brute");
    if (mode == RhoVarMode::brute && c.n > kRhoVarBruteMaxSegments) throw ConfigError("brute rho-variation needs n <= 10");
    detail::Setup info;
    info.kernel = make_kernel(c);
    const CovMatrix r = cov_matrix(info.kernel, TimeGrid::uniform(c.n));
    return {detail::record(c, info, 0, "rho_var_" + c.rho_mode, rho_var_2d(r, c.rho, mode, 0, -1, c.seed), 0.0)};
}

// Record-producing experiments by CLI subcommand name. Throws ConfigError for unknown names.
inline std::vector<ResultRecord> run_experiment(const std::string& name, ExperimentConfig c) {
    if (c.experiment.empty()) c.experiment = name;
    if (name == "kl-converge") return run_convergence(c);
    if (name == "uniform-modulus") return run_uniform_modulus(c);
    if (name == "martingale-check") return run_martingale_checks(c);
    if (name == "twovar-bound") return run_2var_bound(c);
    if (name == "translate-check") return run_translation_check(c);
    if (name == "young-wiener") return run_young_wiener(c);
    if (name == "levy-area") return run_levy_area(c);
    if (name == "pvar") return run_pvar(c);
    if (name == "rhovar") return run_rhovar(c);
    throw ConfigError("unknown experiment: " + name);
}

}  // namespace klrough
