#pragma once

// Truncated tensor algebra T^N(R^d) and the free step-N nilpotent group G^N(R^d), N <= 3.
//
// Coefficients are stored level by level in one flat buffer:
//   [ level0 | level1 (d) | level2 (d*d, row-major) | level3 (d*d*d, row-major) ]
// Products whose degrees add up above the depth are dropped.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "klrough/error.hpp"

namespace klrough {

inline constexpr int kMaxDepth = 3;

class TensorElement {
public:
    TensorElement() = default;

    // Zero element of T^depth(R^dim).
    TensorElement(int dim, int depth) : dim_(dim), depth_(depth) {
        detail::require(dim >= 1, "tensor dimension must be positive");
        detail::require(depth >= 1 && depth <= kMaxDepth, "tensor depth must be in {1,2,3}");
        data_.assign(offset(depth_ + 1), 0.0);
    }

    static TensorElement unit(int dim, int depth) {
        TensorElement t(dim, depth);
        t.data_[0] = 1.0;
        return t;
    }

    int dim() const { return dim_; }
    int depth() const { return depth_; }

    // Start of level k inside the flat buffer.
    std::size_t offset(int k) const {
        std::size_t off = 0, width = 1;
        for (int i = 0; i < k; ++i) {
            off += width;
            width *= static_cast<std::size_t>(dim_);
        }
        return off;
    }
    std::size_t level_size(int k) const {
        std::size_t width = 1;
        for (int i = 0; i < k; ++i) width *= static_cast<std::size_t>(dim_);
        return width;
    }

    std::span<double> level(int k) {
        detail::require(k >= 0 && k <= depth_, "tensor level out of range");
        return {data_.data() + offset(k), level_size(k)};
    }
    std::span<const double> level(int k) const {
        detail::require(k >= 0 && k <= depth_, "tensor level out of range");
        return {data_.data() + offset(k), level_size(k)};
    }

    double scalar() const { return data_[0]; }
    double& scalar() { return data_[0]; }

    double& operator()(int i) { return data_[1 + i]; }
    double operator()(int i) const { return data_[1 + i]; }
    double& operator()(int i, int j) { return data_[1 + dim_ + i * dim_ + j]; }
    double operator()(int i, int j) const { return data_[1 + dim_ + i * dim_ + j]; }
    double& operator()(int i, int j, int k) {
        return data_[1 + dim_ + dim_ * dim_ + (i * dim_ + j) * dim_ + k];
    }
    double operator()(int i, int j, int k) const {
        return data_[1 + dim_ + dim_ * dim_ + (i * dim_ + j) * dim_ + k];
    }

    std::span<double> coefficients() { return data_; }
    std::span<const double> coefficients() const { return data_; }

    TensorElement& operator+=(const TensorElement& o) {
        check_same_shape(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    TensorElement& operator-=(const TensorElement& o) {
        check_same_shape(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    TensorElement& operator*=(double s) {
        for (double& v : data_) v *= s;
        return *this;
    }
    friend TensorElement operator+(TensorElement a, const TensorElement& b) { return a += b; }
    friend TensorElement operator-(TensorElement a, const TensorElement& b) { return a -= b; }
    friend TensorElement operator*(double s, TensorElement a) { return a *= s; }
    friend TensorElement operator-(TensorElement a) { return a *= -1.0; }

    bool same_shape(const TensorElement& o) const { return dim_ == o.dim_ && depth_ == o.depth_; }
    void check_same_shape(const TensorElement& o) const {
        if (!same_shape(o)) throw InputError("tensor dimension/depth mismatch");
    }

    // Largest absolute coefficient difference.
    double max_abs_diff(const TensorElement& o) const {
        check_same_shape(o);
        double m = 0.0;
        for (std::size_t i = 0; i < data_.size(); ++i) m = std::max(m, std::abs(data_[i] - o.data_[i]));
        return m;
    }

private:
    int dim_ = 0;
    int depth_ = 0;
    std::vector<double> data_;
};

// Truncated tensor product.
inline TensorElement mul(const TensorElement& a, const TensorElement& b) {
    a.check_same_shape(b);
    const int d = a.dim();
    const int n = a.depth();
    TensorElement c(d, n);
    const double a0 = a.scalar(), b0 = b.scalar();
    c.scalar() = a0 * b0;
    for (int i = 0; i < d; ++i) c(i) = a0 * b(i) + a(i) * b0;
    if (n >= 2) {
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) c(i, j) = a0 * b(i, j) + a(i) * b(j) + a(i, j) * b0;
    }
    if (n >= 3) {
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                for (int k = 0; k < d; ++k)
                    c(i, j, k) = a0 * b(i, j, k) + a(i) * b(j, k) + a(i, j) * b(k) + a(i, j, k) * b0;
    }
    return c;
}

class LieElement;

// Group-like element: scalar part one, shuffle relations hold.
class GroupElement {
public:
    GroupElement() = default;
    static GroupElement identity(int dim, int depth) { return GroupElement(TensorElement::unit(dim, depth)); }

    // Throws InputError unless the scalar part is one. Shuffle relations are not checked here;
    // see shuffle_defect().
    static GroupElement from_tensor(TensorElement t) {
        if (std::abs(t.scalar() - 1.0) > 1e-12) throw InputError("group element needs scalar part 1");
        t.scalar() = 1.0;
        return GroupElement(std::move(t));
    }

    const TensorElement& tensor() const { return t_; }
    int dim() const { return t_.dim(); }
    int depth() const { return t_.depth(); }
    double operator()(int i) const { return t_(i); }
    double operator()(int i, int j) const { return t_(i, j); }
    double operator()(int i, int j, int k) const { return t_(i, j, k); }
    std::span<const double> level(int k) const { return t_.level(k); }

    friend GroupElement operator*(const GroupElement& a, const GroupElement& b) {
        return GroupElement(mul(a.t_, b.t_));
    }

    // In-place right multiplication by exp(v) for a level-one vector v. Used by path lifting.
    void mul_exp_vector(std::span<const double> v) {
        const int d = t_.dim();
        const int n = t_.depth();
        if (n >= 3) {
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) {
                    const double g2 = t_(i, j);
                    const double g1vi = t_(i) * v[j] * 0.5;
                    const double vivj = v[i] * v[j] / 6.0;
                    for (int k = 0; k < d; ++k) t_(i, j, k) += g2 * v[k] + (g1vi + vivj) * v[k];
                }
        }
        if (n >= 2) {
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) t_(i, j) += t_(i) * v[j] + 0.5 * v[i] * v[j];
        }
        for (int i = 0; i < d; ++i) t_(i) += v[i];
    }

private:
    explicit GroupElement(TensorElement t) : t_(std::move(t)) {}
    friend GroupElement exp(const LieElement& l);
    friend GroupElement dilate(double lambda, const GroupElement& g);
    TensorElement t_;
};

// Element of the step-N free Lie algebra, i.e. zero scalar part. Lie membership of levels two
// and three is by construction (outputs of log, brackets, sums thereof).
class LieElement {
public:
    LieElement() = default;
    LieElement(int dim, int depth) : t_(dim, depth) {}

    // Throws InputError on nonzero scalar part.
    static LieElement from_tensor(TensorElement t) {
        if (std::abs(t.scalar()) > 1e-12) throw InputError("Lie element needs zero scalar part");
        t.scalar() = 0.0;
        LieElement l;
        l.t_ = std::move(t);
        return l;
    }
    static LieElement from_vector(std::span<const double> v, int depth) {
        LieElement l(static_cast<int>(v.size()), depth);
        for (std::size_t i = 0; i < v.size(); ++i) l.t_(static_cast<int>(i)) = v[i];
        return l;
    }

    const TensorElement& tensor() const { return t_; }
    TensorElement& tensor() { return t_; }
    int dim() const { return t_.dim(); }
    int depth() const { return t_.depth(); }
    double operator()(int i) const { return t_(i); }
    double operator()(int i, int j) const { return t_(i, j); }
    double operator()(int i, int j, int k) const { return t_(i, j, k); }
    std::span<const double> level(int k) const { return t_.level(k); }

    LieElement& operator+=(const LieElement& o) {
        t_ += o.t_;
        return *this;
    }
    LieElement& operator-=(const LieElement& o) {
        t_ -= o.t_;
        return *this;
    }
    LieElement& operator*=(double s) {
        t_ *= s;
        return *this;
    }
    friend LieElement operator+(LieElement a, const LieElement& b) { return a += b; }
    friend LieElement operator-(LieElement a, const LieElement& b) { return a -= b; }
    friend LieElement operator*(double s, LieElement a) { return a *= s; }
    friend LieElement operator-(LieElement a) { return a *= -1.0; }

private:
    TensorElement t_;
};

// 1 + l + l^2/2 + l^3/6, truncated.
inline GroupElement exp(const LieElement& l) {
    const TensorElement& x = l.tensor();
    TensorElement result = TensorElement::unit(x.dim(), x.depth());
    result += x;
    if (x.depth() >= 2) {
        TensorElement x2 = mul(x, x);
        TensorElement acc = 0.5 * x2;
        if (x.depth() >= 3) acc += (1.0 / 6.0) * mul(x2, x);
        result += acc;
    }
    return GroupElement(std::move(result));
}

inline GroupElement exp(const TensorElement& t) { return exp(LieElement::from_tensor(t)); }

// (g-1) - (g-1)^2/2 + (g-1)^3/3, truncated.
inline LieElement log(const GroupElement& g) {
    TensorElement x = g.tensor();
    x.scalar() = 0.0;
    TensorElement result = x;
    if (x.depth() >= 2) {
        TensorElement x2 = mul(x, x);
        result -= 0.5 * x2;
        if (x.depth() >= 3) result += (1.0 / 3.0) * mul(x2, x);
    }
    return LieElement::from_tensor(std::move(result));
}

inline LieElement log(const TensorElement& t) { return log(GroupElement::from_tensor(t)); }

// 1 - x + x^2 - x^3 with x = g - 1.
inline GroupElement inverse(const GroupElement& g) {
    TensorElement x = g.tensor();
    x.scalar() = 0.0;
    TensorElement result = TensorElement::unit(x.dim(), x.depth());
    result -= x;
    if (x.depth() >= 2) {
        TensorElement x2 = mul(x, x);
        result += x2;
        if (x.depth() >= 3) result -= mul(x2, x);
    }
    return GroupElement::from_tensor(std::move(result));
}

// Rough-path increment g_s^{-1} (x) g_t.
inline GroupElement increment(const GroupElement& gs, const GroupElement& gt) {
    gs.tensor().check_same_shape(gt.tensor());
    return inverse(gs) * gt;
}

inline GroupElement dilate(double lambda, const GroupElement& g) {
    TensorElement t = g.tensor();
    double scale = 1.0;
    for (int k = 1; k <= t.depth(); ++k) {
        scale *= lambda;
        for (double& v : t.level(k)) v *= scale;
    }
    return GroupElement(std::move(t));
}

namespace detail {

inline double level_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline double one_sided_hom_norm(const TensorElement& t) {
    double m = 0.0;
    for (int k = 1; k <= t.depth(); ++k) m = std::max(m, std::pow(level_norm(t.level(k)), 1.0 / k));
    return m;
}

}  // namespace detail

// Symmetrized homogeneous norm: max over levels and over {g, g^{-1}} of |pi_k|^{1/k}.
inline double hom_norm(const GroupElement& g) {
    return std::max(detail::one_sided_hom_norm(g.tensor()), detail::one_sided_hom_norm(inverse(g).tensor()));
}

// Left-invariant distance hom_norm(g^{-1} (x) h).
inline double dist(const GroupElement& g, const GroupElement& h) { return hom_norm(increment(g, h)); }

// [e_i,[e_i,e_j]] in tensor coordinates: +1 at (i,i,j), -2 at (i,j,i), +1 at (j,i,i).
inline LieElement bracket_iij_tensor(int i, int j, int dim) {
    detail::require(i != j, "bracket [e_i,[e_i,e_j]] needs i != j");
    detail::require(i >= 0 && j >= 0 && i < dim && j < dim, "bracket index out of range");
    LieElement l(dim, 3);
    l.tensor()(i, i, j) += 1.0;
    l.tensor()(i, j, i) -= 2.0;
    l.tensor()(j, i, i) += 1.0;
    return l;
}

// Largest violation of the shuffle relations
//   g^i g^j = g^{ij} + g^{ji}
//   g^i g^{jk} = g^{ijk} + g^{jik} + g^{jki}
// together with |g^0 - 1|.
inline double shuffle_defect(const TensorElement& g) {
    const int d = g.dim();
    double m = std::abs(g.scalar() - 1.0);
    if (g.depth() >= 2)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) m = std::max(m, std::abs(g(i) * g(j) - g(i, j) - g(j, i)));
    if (g.depth() >= 3)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                for (int k = 0; k < d; ++k)
                    m = std::max(m, std::abs(g(i) * g(j, k) - g(i, j, k) - g(j, i, k) - g(j, k, i)));
    return m;
}

inline double shuffle_defect(const GroupElement& g) { return shuffle_defect(g.tensor()); }

}  // namespace klrough
