#pragma once

// Piecewise-linear paths on a time grid and their exact step-N signature lifts.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "klrough/error.hpp"
#include "klrough/tensor_group.hpp"

namespace klrough {

// Strictly increasing times t_0 = 0 < ... < t_n = 1.
class TimeGrid {
public:
    TimeGrid() = default;
    explicit TimeGrid(std::vector<double> times) : times_(std::move(times)) {
        if (times_.size() < 2) throw InputError("time grid needs at least two nodes");
        if (std::abs(times_.front()) > 1e-12 || std::abs(times_.back() - 1.0) > 1e-12)
            throw InputError("time grid must start at 0 and end at 1");
        times_.front() = 0.0;
        times_.back() = 1.0;
        for (std::size_t k = 1; k < times_.size(); ++k)
            if (!(times_[k] > times_[k - 1])) throw InputError("time grid must be strictly increasing");
    }

    static TimeGrid uniform(int segments) {
        detail::require(segments >= 1, "uniform grid needs at least one segment");
        std::vector<double> t(static_cast<std::size_t>(segments) + 1);
        for (int k = 0; k <= segments; ++k) t[static_cast<std::size_t>(k)] = static_cast<double>(k) / segments;
        return TimeGrid(std::move(t));
    }

    // Number of segments n; there are n + 1 nodes.
    int segments() const { return static_cast<int>(times_.size()) - 1; }
    int nodes() const { return static_cast<int>(times_.size()); }
    double operator[](int k) const { return times_[static_cast<std::size_t>(k)]; }
    std::span<const double> times() const { return times_; }

    bool operator==(const TimeGrid& o) const { return times_ == o.times_; }

private:
    std::vector<double> times_;
};

// R^d-valued path given by its node values, linearly interpolated between nodes.
class SamplePath {
public:
    SamplePath() = default;
    SamplePath(TimeGrid grid, int dim) : grid_(std::move(grid)), dim_(dim) {
        detail::require(dim >= 1, "path dimension must be positive");
        values_.assign(static_cast<std::size_t>(dim_) * grid_.nodes(), 0.0);
    }

    const TimeGrid& grid() const { return grid_; }
    int dim() const { return dim_; }
    int nodes() const { return grid_.nodes(); }

    double& operator()(int component, int node) { return values_[index(component, node)]; }
    double operator()(int component, int node) const { return values_[index(component, node)]; }

    std::span<double> component(int i) {
        return {values_.data() + static_cast<std::size_t>(i) * grid_.nodes(), static_cast<std::size_t>(grid_.nodes())};
    }
    std::span<const double> component(int i) const {
        return {values_.data() + static_cast<std::size_t>(i) * grid_.nodes(), static_cast<std::size_t>(grid_.nodes())};
    }

    SamplePath& operator+=(const SamplePath& o) {
        check_compatible(o);
        for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
        return *this;
    }
    SamplePath& operator-=(const SamplePath& o) {
        check_compatible(o);
        for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
        return *this;
    }
    SamplePath& operator*=(double s) {
        for (double& v : values_) v *= s;
        return *this;
    }
    friend SamplePath operator+(SamplePath a, const SamplePath& b) { return a += b; }
    friend SamplePath operator-(SamplePath a, const SamplePath& b) { return a -= b; }
    friend SamplePath operator*(double s, SamplePath a) { return a *= s; }

    void check_compatible(const SamplePath& o) const {
        if (dim_ != o.dim_ || !(grid_ == o.grid_)) throw InputError("sample path grid/dimension mismatch");
    }

    // Linear interpolation of component i at time t in [0,1].
    double at_time(int i, double t) const {
        detail::require(t >= 0.0 && t <= 1.0, "interpolation time outside [0,1]");
        const auto ts = grid_.times();
        auto it = std::upper_bound(ts.begin(), ts.end(), t);
        if (it == ts.end()) return (*this)(i, grid_.segments());
        const int k = static_cast<int>(it - ts.begin()) - 1;
        const double w = (t - ts[static_cast<std::size_t>(k)]) / (ts[static_cast<std::size_t>(k) + 1] - ts[static_cast<std::size_t>(k)]);
        return (1.0 - w) * (*this)(i, k) + w * (*this)(i, k + 1);
    }

private:
    std::size_t index(int component, int node) const {
        return static_cast<std::size_t>(component) * grid_.nodes() + static_cast<std::size_t>(node);
    }
    TimeGrid grid_;
    int dim_ = 0;
    std::vector<double> values_;
};

// Piecewise-linear interpolant of `path` evaluated at the nodes of `grid`.
inline SamplePath resample(const SamplePath& path, const TimeGrid& grid) {
    SamplePath out(grid, path.dim());
    for (int i = 0; i < path.dim(); ++i)
        for (int k = 0; k < grid.nodes(); ++k) out(i, k) = path.at_time(i, grid[k]);
    return out;
}

// Group-valued path with points[0] = e.
struct GroupPath {
    TimeGrid grid;
    std::vector<GroupElement> points;

    int nodes() const { return static_cast<int>(points.size()); }
    int dim() const { return points.front().dim(); }
    int depth() const { return points.front().depth(); }
};

// Exact step-`depth` signature of the piecewise-linear interpolant:
// points[k] = exp(dx_0) (x) ... (x) exp(dx_{k-1}). The start value is subtracted.
inline GroupPath lift_pl(const SamplePath& path, int depth) {
    detail::require(depth >= 1 && depth <= kMaxDepth, "lift depth must be in {1,2,3}");
    const int d = path.dim();
    GroupPath out{path.grid(), {}};
    out.points.reserve(static_cast<std::size_t>(path.nodes()));
    GroupElement g = GroupElement::identity(d, depth);
    out.points.push_back(g);
    std::vector<double> dx(static_cast<std::size_t>(d));
    for (int k = 1; k < path.nodes(); ++k) {
        for (int i = 0; i < d; ++i) dx[static_cast<std::size_t>(i)] = path(i, k) - path(i, k - 1);
        g.mul_exp_vector(dx);
        out.points.push_back(g);
    }
    return out;
}

// Lift of a Cameron-Martin path given on the grid. Grid elements of H are piecewise linear,
// so iterated Young integration reduces to the piecewise-linear lift.
inline GroupPath lift_cameron_martin(const SamplePath& h, int depth) { return lift_pl(h, depth); }

// x_{a,b} = x_a^{-1} (x) x_b between nodes a <= b.
inline GroupElement signature_increment(const GroupPath& gp, int a, int b) {
    if (a > b) throw InputError("signature_increment needs a <= b");
    detail::require(a >= 0 && b < gp.nodes(), "signature_increment node out of range");
    if (a == 0) return gp.points[static_cast<std::size_t>(b)];
    return increment(gp.points[static_cast<std::size_t>(a)], gp.points[static_cast<std::size_t>(b)]);
}

// Signature of the piecewise-linear path between nodes a <= b, built directly from the segment
// exponentials. Agrees with signature_increment(lift_pl(path, depth), a, b) up to rounding.
inline GroupElement segment_signature(const SamplePath& path, int a, int b, int depth) {
    if (a > b) throw InputError("segment_signature needs a <= b");
    detail::require(a >= 0 && b < path.nodes(), "segment_signature node out of range");
    const int d = path.dim();
    GroupElement g = GroupElement::identity(d, depth);
    std::vector<double> dx(static_cast<std::size_t>(d));
    for (int k = a + 1; k <= b; ++k) {
        for (int i = 0; i < d; ++i) dx[static_cast<std::size_t>(i)] = path(i, k) - path(i, k - 1);
        g.mul_exp_vector(dx);
    }
    return g;
}

// int_{t_a}^{t_b} f dx^j for f piecewise quadratic (values at nodes and at segment midpoints)
// and x piecewise linear. Simpson's rule per segment is exact in this setting.
inline double young_integral_quadratic(std::span<const double> f_nodes, std::span<const double> f_mids,
                                       const SamplePath& integrator, int j, int a, int b) {
    if (a > b) throw InputError("young_integral_quadratic needs a <= b");
    detail::require(a >= 0 && b < integrator.nodes(), "integration node out of range");
    detail::require(static_cast<int>(f_nodes.size()) == integrator.nodes(), "integrand node count mismatch");
    detail::require(static_cast<int>(f_mids.size()) == integrator.nodes() - 1, "integrand midpoint count mismatch");
    detail::require(j >= 0 && j < integrator.dim(), "integrator component out of range");
    double acc = 0.0;
    for (int m = a; m < b; ++m) {
        const auto um = static_cast<std::size_t>(m);
        const double dx = integrator(j, m + 1) - integrator(j, m);
        acc += dx * (f_nodes[um] + 4.0 * f_mids[um] + f_nodes[um + 1]) / 6.0;
    }
    return acc;
}

}  // namespace klrough
