#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "vbal/core.hpp"
#include "vbal/errors.hpp"

namespace vbal {

/// Fractional signing s in [-1, 1]^N. Frozen coordinates sit exactly at +-1.
/// The window holds the lowest-index unfrozen coordinates (at most m + 1 of
/// them); every kernel direction is supported there.
struct FractionalState {
    std::vector<double> s;
    std::vector<bool> frozen;
    std::size_t n_frozen = 0;
    std::vector<std::size_t> window;
    std::size_t cursor = 0;  // next never-touched index

    static FractionalState zero(std::size_t count) {
        FractionalState st;
        st.s.assign(count, 0.0);
        st.frozen.assign(count, false);
        return st;
    }

    std::size_t unfrozen() const noexcept { return s.size() - n_frozen; }
};

namespace detail {

// Kernel vector of the dense rows x cols matrix `a` (row-major), cols > rank.
// Partial pivoting picks the first non-pivot column as the free variable;
// complete pivoting picks the column left over after full elimination.
// Returns an empty vector if every column is a pivot.
inline std::vector<double> kernel_vector(std::vector<double> a, std::size_t rows, std::size_t cols,
                                         bool complete) {
    auto at = [&](std::size_t r, std::size_t c) -> double& { return a[r * cols + c]; };
    double scale = 0.0;
    for (double x : a) scale = std::max(scale, std::abs(x));
    const double tol = std::max(scale, 1e-300) * 1e-12 * static_cast<double>(cols);

    std::vector<std::size_t> order(cols);
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::size_t> pivot_cols;
    std::size_t r = 0;
    std::size_t free_col = cols;

    for (std::size_t step = 0; step < cols; ++step) {
        if (r == rows) {
            free_col = order[step];
            break;
        }
        std::size_t best_r = r, best_step = step;
        double best = -1.0;
        const std::size_t last_step = complete ? cols : step + 1;
        for (std::size_t cs = step; cs < last_step; ++cs) {
            for (std::size_t rr = r; rr < rows; ++rr) {
                const double v = std::abs(at(rr, order[cs]));
                if (v > best) {
                    best = v;
                    best_r = rr;
                    best_step = cs;
                }
            }
        }
        if (best <= tol) {
            free_col = order[step];
            break;
        }
        std::swap(order[step], order[best_step]);
        const std::size_t c = order[step];
        if (best_r != r) {
            for (std::size_t k = 0; k < cols; ++k) std::swap(at(r, k), at(best_r, k));
        }
        const double p = at(r, c);
        for (std::size_t k = 0; k < cols; ++k) at(r, k) /= p;
        for (std::size_t rr = 0; rr < rows; ++rr) {
            if (rr == r) continue;
            const double f = at(rr, c);
            if (f == 0.0) continue;
            for (std::size_t k = 0; k < cols; ++k) at(rr, k) -= f * at(r, k);
        }
        pivot_cols.push_back(c);
        ++r;
    }
    if (free_col == cols) return {};

    std::vector<double> v(cols, 0.0);
    v[free_col] = 1.0;
    for (std::size_t i = 0; i < pivot_cols.size(); ++i) v[pivot_cols[i]] = -at(i, free_col);
    return v;
}

inline void fill_window(const VectorSet& x, FractionalState& st) {
    const std::size_t want = std::min(x.dim() + 1, st.unfrozen());
    while (st.window.size() < want && st.cursor < st.s.size()) {
        if (!st.frozen[st.cursor]) st.window.push_back(st.cursor);
        ++st.cursor;
    }
}

}  // namespace detail

inline constexpr double kFreezeTolerance = 1e-9;

/// One elimination step: a kernel direction v of X supported on unfrozen
/// coordinates, s += lambda v with the smallest lambda > 0 (over both
/// orientations of v) that drives a coordinate to +-1; newly saturated
/// coordinates are snapped and frozen.
inline void nullspace_step(const VectorSet& x, FractionalState& st) {
    const std::size_t m = x.dim();
    if (st.s.size() != x.count()) throw DimensionError("nullspace_step: state length != column count");
    if (st.unfrozen() <= m) {
        throw DomainError("nullspace_step: need more than m unfrozen coordinates");
    }
    detail::fill_window(x, st);
    const std::size_t w = st.window.size();

    std::vector<double> a(m * w);
    for (std::size_t c = 0; c < w; ++c) {
        auto col = x.column(st.window[c]);
        for (std::size_t r = 0; r < m; ++r) a[r * w + c] = col[r];
    }
    auto residual_ok = [&](const std::vector<double>& v) {
        if (v.empty()) return false;
        double vmax = 0.0;
        for (double t : v) vmax = std::max(vmax, std::abs(t));
        for (std::size_t r = 0; r < m; ++r) {
            double acc = 0.0, mass = 0.0;
            for (std::size_t c = 0; c < w; ++c) {
                acc += a[r * w + c] * v[c];
                mass += std::abs(a[r * w + c] * v[c]);
            }
            if (std::abs(acc) > 1e-9 * std::max(mass, 1e-300) + 1e-300) return false;
        }
        return vmax > 0.0;
    };
    // Row and column scaling leave the kernel unchanged (up to the column
    // factors), so eliminate on an equilibrated copy.
    std::vector<double> col_scale(w, 1.0);
    std::vector<double> v;
    for (std::size_t c = 0; c < w && v.empty(); ++c) {
        double b = 0.0;
        for (std::size_t r = 0; r < m; ++r) b = std::max(b, std::abs(a[r * w + c]));
        if (b == 0.0) {
            v.assign(w, 0.0);
            v[c] = 1.0;
        } else {
            col_scale[c] = 1.0 / b;
        }
    }
    if (v.empty()) {
        std::vector<double> eq(a);
        for (std::size_t r = 0; r < m; ++r) {
            double b = 0.0;
            for (std::size_t c = 0; c < w; ++c) b = std::max(b, std::abs(eq[r * w + c] *= col_scale[c]));
            if (b > 0.0) {
                for (std::size_t c = 0; c < w; ++c) eq[r * w + c] /= b;
            }
        }
        auto unscale = [&](std::vector<double> u) {
            for (std::size_t c = 0; c < u.size(); ++c) u[c] *= col_scale[c];
            return u;
        };
        v = unscale(detail::kernel_vector(eq, m, w, false));
        if (!residual_ok(v)) v = unscale(detail::kernel_vector(eq, m, w, true));
    }
    if (!residual_ok(v)) {
        throw ReduceError("nullspace_step: no kernel vector found", m);
    }

    auto hit = [&](double sign) {
        double lambda = std::numeric_limits<double>::infinity();
        std::size_t arg = w;
        for (std::size_t c = 0; c < w; ++c) {
            const double d = sign * v[c];
            if (d == 0.0) continue;
            const double sj = st.s[st.window[c]];
            const double l = d > 0.0 ? (1.0 - sj) / d : (-1.0 - sj) / d;
            if (l < lambda) {
                lambda = l;
                arg = c;
            }
        }
        return std::pair{lambda, arg};
    };
    const auto [lp, ap] = hit(+1.0);
    const auto [ln, an] = hit(-1.0);
    const double sign = ln < lp ? -1.0 : 1.0;
    const double lambda = sign > 0 ? lp : ln;
    const std::size_t arg = sign > 0 ? ap : an;
    if (!(lambda >= 0.0) || arg == w) throw ReduceError("nullspace_step: no admissible step length", m);

    for (std::size_t c = 0; c < w; ++c) {
        double& sj = st.s[st.window[c]];
        sj = std::clamp(sj + lambda * sign * v[c], -1.0, 1.0);
    }
    st.s[st.window[arg]] = sign * v[arg] > 0.0 ? 1.0 : -1.0;

    std::vector<std::size_t> keep;
    keep.reserve(w);
    for (auto j : st.window) {
        double& sj = st.s[j];
        if (std::abs(std::abs(sj) - 1.0) <= kFreezeTolerance) {
            sj = sj > 0.0 ? 1.0 : -1.0;
            st.frozen[j] = true;
            ++st.n_frozen;
        } else {
            keep.push_back(j);
        }
    }
    st.window = std::move(keep);
}

/// Sum of the m largest column sup-norms (all of them when N < m).
inline double reduce_bound(const VectorSet& x) {
    std::vector<double> norms(x.count());
    for (std::size_t i = 0; i < x.count(); ++i) norms[i] = x.column_sup_norm(i);
    const std::size_t k = std::min(x.dim(), norms.size());
    std::nth_element(norms.begin(), norms.begin() + static_cast<std::ptrdiff_t>(k) - 1, norms.end(),
                     std::greater<>());
    std::sort(norms.begin(), norms.begin() + static_cast<std::ptrdiff_t>(k), std::greater<>());
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) total += norms[i];
    return total;
}

struct ReduceResult {
    Signing signing;
    std::vector<double> sum;
    double sup_norm = 0.0;
    double bound = 0.0;
    std::size_t iterations = 0;
    std::vector<double> fractional;
};

/// Beck-Fiala style rounding: walks s from 0 along kernel directions of X until
/// at most m coordinates are fractional, then rounds with sign(0) = +1.
/// The result satisfies |X sigma|_inf <= reduce_bound(X).
inline ReduceResult reduce(const VectorSet& x) {
    x.validate();
    const std::size_t n = x.count();
    const std::size_t m = x.dim();
    ReduceResult out;
    auto st = FractionalState::zero(n);
    while (st.unfrozen() > m) {
        nullspace_step(x, st);
        ++out.iterations;
    }
    std::vector<std::int8_t> signs(n);
    for (std::size_t j = 0; j < n; ++j) signs[j] = st.s[j] < 0.0 ? -1 : 1;
    out.signing = Signing(std::move(signs));
    out.sum = signed_sum(x, out.signing);
    out.sup_norm = sup_norm(out.sum);
    out.bound = reduce_bound(x);
    out.fractional = std::move(st.s);
#ifdef VBAL_CHECK_INVARIANTS
    if (out.sup_norm > out.bound * (1.0 + 1e-9) + 1e-12) {
        throw InvariantViolation("reduce: bound violated");
    }
#endif
    return out;
}

}  // namespace vbal
