#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace vbal::quad {

struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Gauss-Legendre rule on [-1, 1]; nodes by Newton iteration on P_n.
inline Rule gauss_legendre(std::size_t order) {
    Rule r;
    r.nodes.resize(order);
    r.weights.resize(order);
    const double n = static_cast<double>(order);
    for (std::size_t i = 0; i < (order + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= order; ++k) {
                const double kk = static_cast<double>(k);
                const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
                p0 = p1;
                p1 = p2;
            }
            if (order == 1) p0 = 1.0;
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        r.nodes[i] = -x;
        r.nodes[order - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.weights[i] = w;
        r.weights[order - 1 - i] = w;
    }
    return r;
}

inline const Rule& default_rule() {
    static const Rule rule = gauss_legendre(10);
    return rule;
}

struct Panel {
    double x0, x1, y0, y1;
    double value;  // refined estimate (sum over the four quadrants)
    double error;

    bool operator<(const Panel& o) const { return error < o.error; }
};

struct Result2D {
    double value = 0.0;
    double error = 0.0;
    std::size_t panels = 0;
    bool converged = false;
};

/// Adaptive tensor-product Gauss-Legendre on a rectangle. Each panel's error is
/// the gap between its own rule and the sum over its four quadrants; the panel
/// with the largest error is split until the total error is at most
/// max(abs_tol, rel_tol * |value|) or max_panels is reached.
template <class F>
Result2D integrate_2d(F&& f, double x0, double x1, double y0, double y1, double abs_tol, double rel_tol,
                      std::size_t max_panels = 20000) {
    const Rule& rule = default_rule();
    auto tensor = [&](double a0, double a1, double b0, double b1) {
        const double hx = 0.5 * (a1 - a0), cx = 0.5 * (a1 + a0);
        const double hy = 0.5 * (b1 - b0), cy = 0.5 * (b1 + b0);
        double s = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            double row = 0.0;
            const double x = cx + hx * rule.nodes[i];
            for (std::size_t j = 0; j < rule.nodes.size(); ++j) row += rule.weights[j] * f(x, cy + hy * rule.nodes[j]);
            s += rule.weights[i] * row;
        }
        return s * hx * hy;
    };
    auto make = [&](double a0, double a1, double b0, double b1, double coarse) {
        const double xm = 0.5 * (a0 + a1), ym = 0.5 * (b0 + b1);
        const double fine =
            tensor(a0, xm, b0, ym) + tensor(xm, a1, b0, ym) + tensor(a0, xm, ym, b1) + tensor(xm, a1, ym, b1);
        return Panel{a0, a1, b0, b1, fine, std::abs(fine - coarse)};
    };

    std::vector<Panel> heap{make(x0, x1, y0, y1, tensor(x0, x1, y0, y1))};
    Result2D out;
    out.value = heap.front().value;
    out.error = heap.front().error;
    while (true) {
        if (out.error <= std::max(abs_tol, rel_tol * std::abs(out.value))) {
            out.converged = true;
            break;
        }
        if (heap.size() + 3 > max_panels) break;
        std::pop_heap(heap.begin(), heap.end());
        const Panel p = heap.back();
        heap.pop_back();
        const double xm = 0.5 * (p.x0 + p.x1), ym = 0.5 * (p.y0 + p.y1);
        const std::array<std::array<double, 4>, 4> kids{{{p.x0, xm, p.y0, ym},
                                                         {xm, p.x1, p.y0, ym},
                                                         {p.x0, xm, ym, p.y1},
                                                         {xm, p.x1, ym, p.y1}}};
        for (const auto& k : kids) {
            heap.push_back(make(k[0], k[1], k[2], k[3], tensor(k[0], k[1], k[2], k[3])));
            std::push_heap(heap.begin(), heap.end());
        }
        double v = 0.0, e = 0.0;
        for (const auto& q : heap) {
            v += q.value;
            e += q.error;
        }
        out.value = v;
        out.error = e;
    }
    out.panels = heap.size();
    return out;
}

}  // namespace vbal::quad
