#pragma once

#include <cmath>
#include <cstdint>
#include <queue>
#include <span>
#include <utility>
#include <vector>

#include "vbal/core.hpp"
#include "vbal/errors.hpp"
#include "vbal/rng.hpp"

namespace vbal {

/// Independent fair signs, one draw per column.
inline DiscrepancyReport random_signing(const VectorSet& x, RngStream& rng) {
    std::vector<std::int8_t> signs(x.count());
    for (auto& s : signs) s = static_cast<std::int8_t>(rng.sign());
    return discrepancy(x, Signing(std::move(signs)));
}

struct Kk1dResult {
    DiscrepancyReport report;
    double residual = 0.0;  // value left in the heap
};

/// Largest differencing on |x|: the two largest are replaced by their
/// difference until one value remains; signs come from the difference tree.
inline Kk1dResult kk1d(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n == 0) throw ValidationError("kk1d: empty input");
    // node i < n is a leaf; node n + j is the j-th difference (big - small)
    std::vector<std::uint32_t> plus_child, minus_child;
    plus_child.reserve(n);
    minus_child.reserve(n);
    std::priority_queue<std::pair<double, std::uint32_t>> heap;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(values[i])) throw ValidationError("kk1d: non-finite value");
        heap.emplace(std::abs(values[i]), static_cast<std::uint32_t>(i));
    }
    while (heap.size() > 1) {
        const auto [a, ia] = heap.top();
        heap.pop();
        const auto [b, ib] = heap.top();
        heap.pop();
        plus_child.push_back(ia);
        minus_child.push_back(ib);
        heap.emplace(a - b, static_cast<std::uint32_t>(n + plus_child.size() - 1));
    }
    Kk1dResult out;
    out.residual = heap.top().first;

    std::vector<std::int8_t> node_sign(n + plus_child.size(), 1);
    for (std::size_t j = plus_child.size(); j-- > 0;) {
        const std::int8_t s = node_sign[n + j];
        node_sign[plus_child[j]] = s;
        node_sign[minus_child[j]] = static_cast<std::int8_t>(-s);
    }
    std::vector<std::int8_t> signs(n);
    for (std::size_t i = 0; i < n; ++i) signs[i] = static_cast<std::int8_t>(values[i] < 0.0 ? -node_sign[i] : node_sign[i]);

    std::vector<double> col(values.begin(), values.end());
    const VectorSet x(1, n, std::move(col));
    out.report = discrepancy(x, Signing(std::move(signs)));
    return out;
}

inline Kk1dResult kk1d(const VectorSet& x) {
    if (x.dim() != 1) throw DomainError("kk1d: requires m = 1");
    return kk1d(x.data());
}

}  // namespace vbal
