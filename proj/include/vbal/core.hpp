#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "vbal/errors.hpp"

namespace vbal {

/// An m x n instance: n column vectors of dimension m, stored column-major.
class VectorSet {
public:
    VectorSet() = default;

    VectorSet(std::size_t dim, std::size_t count) : dim_(dim), count_(count), data_(dim * count, 0.0) {
        if (dim == 0 || count == 0) {
            throw ValidationError("VectorSet: dim and count must be positive");
        }
    }

    /// Takes ownership of column-major data; every entry must be finite.
    VectorSet(std::size_t dim, std::size_t count, std::vector<double> column_major)
        : dim_(dim), count_(count), data_(std::move(column_major)) {
        if (dim == 0 || count == 0) {
            throw ValidationError("VectorSet: dim and count must be positive");
        }
        if (data_.size() != dim * count) {
            throw DimensionError("VectorSet: data size " + std::to_string(data_.size()) + " != " +
                                 std::to_string(dim) + "*" + std::to_string(count));
        }
        validate();
    }

    static VectorSet from_columns(const std::vector<std::vector<double>>& columns) {
        if (columns.empty()) {
            throw ValidationError("VectorSet: no columns");
        }
        const std::size_t m = columns.front().size();
        std::vector<double> data;
        data.reserve(m * columns.size());
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (columns[i].size() != m) {
                throw DimensionError("VectorSet: column " + std::to_string(i) + " has length " +
                                     std::to_string(columns[i].size()) + ", expected " + std::to_string(m));
            }
            data.insert(data.end(), columns[i].begin(), columns[i].end());
        }
        return VectorSet(m, columns.size(), std::move(data));
    }

    std::size_t dim() const noexcept { return dim_; }
    std::size_t count() const noexcept { return count_; }

    std::span<const double> column(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
    std::span<double> column(std::size_t i) { return {data_.data() + i * dim_, dim_}; }
    std::span<const double> data() const noexcept { return data_; }

    double operator()(std::size_t row, std::size_t col) const { return data_[col * dim_ + row]; }

    double column_sup_norm(std::size_t i) const {
        double best = 0.0;
        for (double x : column(i)) best = std::max(best, std::abs(x));
        return best;
    }

    double max_abs_entry() const {
        double best = 0.0;
        for (double x : data_) best = std::max(best, std::abs(x));
        return best;
    }

    void validate() const {
        for (std::size_t k = 0; k < data_.size(); ++k) {
            if (!std::isfinite(data_[k])) {
                throw ValidationError("VectorSet: non-finite entry at row " + std::to_string(k % dim_) +
                                      ", column " + std::to_string(k / dim_));
            }
        }
    }

private:
    std::size_t dim_ = 0;
    std::size_t count_ = 0;
    std::vector<double> data_;
};

/// A sign vector over {-1, +1}. Printed as a string of '+' and '-'.
class Signing {
public:
    Signing() = default;

    explicit Signing(std::size_t n, int value = +1) : signs_(n, static_cast<std::int8_t>(value)) {
        if (value != 1 && value != -1) throw ValidationError("Signing: entries must be +1 or -1");
    }

    explicit Signing(std::vector<std::int8_t> signs) : signs_(std::move(signs)) {
        for (auto s : signs_) {
            if (s != 1 && s != -1) throw ValidationError("Signing: entries must be +1 or -1");
        }
    }

    static Signing parse(std::string_view text) {
        std::vector<std::int8_t> signs;
        signs.reserve(text.size());
        for (char c : text) {
            if (c == '+') {
                signs.push_back(1);
            } else if (c == '-') {
                signs.push_back(-1);
            } else if (c == '\n' || c == '\r' || c == ' ') {
                continue;
            } else {
                throw ValidationError(std::string("Signing: unexpected character '") + c + "'");
            }
        }
        return Signing(std::move(signs));
    }

    std::string to_string() const {
        std::string out(signs_.size(), '+');
        for (std::size_t i = 0; i < signs_.size(); ++i) {
            if (signs_[i] < 0) out[i] = '-';
        }
        return out;
    }

    std::size_t size() const noexcept { return signs_.size(); }
    int operator[](std::size_t i) const { return signs_[i]; }

    void set(std::size_t i, int value) {
        if (value != 1 && value != -1) throw ValidationError("Signing: entries must be +1 or -1");
        signs_[i] = static_cast<std::int8_t>(value);
    }

    std::span<const std::int8_t> signs() const noexcept { return signs_; }

    friend bool operator==(const Signing&, const Signing&) = default;

private:
    std::vector<std::int8_t> signs_;
};

struct SignedIndex {
    std::uint32_t index;
    std::int8_t sign;
};

/// A working vector of the differencing process together with the signed
/// original columns it is made of. Supports of live combinations are disjoint.
class SignedCombination {
public:
    SignedCombination() = default;

    static SignedCombination zero(std::size_t dim) {
        SignedCombination c;
        c.value_.assign(dim, 0.0);
        return c;
    }

    static SignedCombination column(const VectorSet& x, std::size_t i) {
        SignedCombination c;
        auto col = x.column(i);
        c.value_.assign(col.begin(), col.end());
        c.support_.push_back({static_cast<std::uint32_t>(i), 1});
        return c;
    }

    /// Builds a combination from an explicit value; used for synthetic inputs.
    static SignedCombination from_parts(std::vector<double> value, std::vector<SignedIndex> support) {
        SignedCombination c;
        c.value_ = std::move(value);
        c.support_ = std::move(support);
        return c;
    }

    std::span<const double> value() const noexcept { return value_; }
    std::span<const SignedIndex> support() const noexcept { return support_; }
    std::size_t dim() const noexcept { return value_.size(); }

    /// this += sign * other; other's support is appended with its signs multiplied by `sign`.
    void absorb(const SignedCombination& other, int sign) {
        if (other.value_.size() != value_.size()) {
            throw DimensionError("SignedCombination::absorb: dimension mismatch");
        }
        for (std::size_t k = 0; k < value_.size(); ++k) value_[k] += sign * other.value_[k];
        support_.reserve(support_.size() + other.support_.size());
        for (auto s : other.support_) {
            support_.push_back({s.index, static_cast<std::int8_t>(s.sign * sign)});
        }
    }

    void negate() {
        for (auto& x : value_) x = -x;
        for (auto& s : support_) s.sign = static_cast<std::int8_t>(-s.sign);
    }

    /// p - q with merged support; q's signs are negated.
    static SignedCombination difference(SignedCombination p, const SignedCombination& q) {
        p.absorb(q, -1);
        return p;
    }

    double sup_norm() const {
        double best = 0.0;
        for (double x : value_) best = std::max(best, std::abs(x));
        return best;
    }

    double norm2_squared() const {
        double s = 0.0;
        for (double x : value_) s += x * x;
        return s;
    }

    double norm2() const { return std::sqrt(norm2_squared()); }

    /// Sum over the support of sign_i * X_i, accumulated in support order.
    std::vector<double> recompute(const VectorSet& x) const {
        std::vector<double> out(x.dim(), 0.0);
        for (auto s : support_) {
            auto col = x.column(s.index);
            for (std::size_t k = 0; k < out.size(); ++k) out[k] += s.sign * col[k];
        }
        return out;
    }

    /// True when the tracked value agrees with the recomputed sum. The allowed
    /// gap is rel_tol relative to the value plus a rounding floor proportional
    /// to the absolute mass of the support.
    bool consistent_with(const VectorSet& x, double rel_tol = 1e-9) const {
        auto fresh = recompute(x);
        for (std::size_t k = 0; k < fresh.size(); ++k) {
            double mass = 0.0;
            for (auto s : support_) mass += std::abs(x.column(s.index)[k]);
            const double scale = std::max(std::abs(fresh[k]), std::abs(value_[k]));
            const double floor = 64.0 * std::numeric_limits<double>::epsilon() * mass;
            if (std::abs(fresh[k] - value_[k]) > rel_tol * scale + floor) return false;
        }
        return true;
    }

private:
    std::vector<double> value_;
    std::vector<SignedIndex> support_;
};

struct DiscrepancyReport {
    Signing signing;
    double sup_norm = 0.0;
    std::vector<double> coordinate_sums;
};

/// Sum of sigma_i X_i, accumulated left to right over i.
inline std::vector<double> signed_sum(const VectorSet& x, const Signing& sigma) {
    if (sigma.size() != x.count()) {
        throw DimensionError("signed_sum: signing length " + std::to_string(sigma.size()) +
                             " != column count " + std::to_string(x.count()));
    }
    std::vector<double> sum(x.dim(), 0.0);
    for (std::size_t i = 0; i < x.count(); ++i) {
        auto col = x.column(i);
        const double s = sigma[i];
        for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += s * col[k];
    }
    return sum;
}

inline double sup_norm(std::span<const double> v) {
    double best = 0.0;
    for (double x : v) best = std::max(best, std::abs(x));
    return best;
}

inline DiscrepancyReport discrepancy(const VectorSet& x, const Signing& sigma) {
    DiscrepancyReport report;
    report.coordinate_sums = signed_sum(x, sigma);
    report.sup_norm = sup_norm(report.coordinate_sums);
    report.signing = sigma;
    return report;
}

/// Rebuilds a full signing from a combination's support. Columns absent from
/// the support get +1.
inline Signing signing_from_support(const SignedCombination& c, std::size_t count) {
    Signing sigma(count, +1);
    for (auto s : c.support()) {
        if (s.index >= count) throw DimensionError("signing_from_support: index out of range");
        sigma.set(s.index, s.sign);
    }
    return sigma;
}

/// Throws InvariantViolation if two combinations share an original column.
inline void check_disjoint_supports(std::span<const SignedCombination> items, std::size_t count) {
    std::vector<bool> seen(count, false);
    for (const auto& c : items) {
        for (auto s : c.support()) {
            if (s.index >= count) throw InvariantViolation("support index out of range");
            if (seen[s.index]) {
                throw InvariantViolation("support collision on column " + std::to_string(s.index));
            }
            seen[s.index] = true;
        }
    }
}

inline constexpr std::size_t kBruteForceDefaultCap = 26;

namespace detail {

struct OracleBest {
    double value = std::numeric_limits<double>::infinity();
    std::uint64_t key = 0;  // bit b set <=> position n-1-b is '-'; smaller key = lexicographically smaller

    void offer(double v, std::uint64_t k) {
        if (v < value || (v == value && k < key)) {
            value = v;
            key = k;
        }
    }
};

// Scans Gray indices [first_block*block, last_block*block). Each block starts
// from a freshly accumulated sum so values do not depend on how blocks are
// distributed across workers.
inline OracleBest scan_blocks(const VectorSet& x, std::uint64_t first_block, std::uint64_t last_block,
                              std::uint64_t block) {
    const std::size_t n = x.count();
    const std::size_t m = x.dim();
    OracleBest best;
    std::vector<double> sum(m);
    for (std::uint64_t b = first_block; b < last_block; ++b) {
        const std::uint64_t g0 = b * block;
        std::uint64_t code = g0 ^ (g0 >> 1);
        std::fill(sum.begin(), sum.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t bit = n - 1 - i;
            const double s = (bit < 64 && ((code >> bit) & 1u)) ? -1.0 : 1.0;
            auto col = x.column(i);
            for (std::size_t k = 0; k < m; ++k) sum[k] += s * col[k];
        }
        best.offer(sup_norm(sum), code);
        for (std::uint64_t g = g0 + 1; g < g0 + block; ++g) {
            const unsigned flip = static_cast<unsigned>(std::countr_zero(g));
            code ^= (std::uint64_t{1} << flip);
            const bool now_negative = (code >> flip) & 1u;
            auto col = x.column(n - 1 - flip);
            const double delta = now_negative ? -2.0 : 2.0;
            double v = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                sum[k] += delta * col[k];
                v = std::max(v, std::abs(sum[k]));
            }
            best.offer(v, code);
        }
    }
    return best;
}

}  // namespace detail

/// Exact minimizer of |X sigma|_inf over all signings with sigma_1 = +1.
/// Ties go to the lexicographically smallest signing with '+' < '-'.
inline DiscrepancyReport brute_force_min(const VectorSet& x, std::size_t cap = kBruteForceDefaultCap,
                                         unsigned workers = 1) {
    const std::size_t n = x.count();
    if (n > cap) {
        throw SizeError("brute_force_min: n = " + std::to_string(n) + " exceeds cap " + std::to_string(cap));
    }
    if (n > 63) throw SizeError("brute_force_min: n must be at most 63");
    const std::uint64_t total = std::uint64_t{1} << (n - 1);
    const std::uint64_t block = std::min<std::uint64_t>(total, std::uint64_t{1} << 12);
    const std::uint64_t blocks = total / block;

    detail::OracleBest best;
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(blocks)));
    if (workers == 1) {
        best = detail::scan_blocks(x, 0, blocks, block);
    } else {
        std::vector<detail::OracleBest> partial(workers);
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            const std::uint64_t lo = blocks * w / workers;
            const std::uint64_t hi = blocks * (w + 1) / workers;
            pool.emplace_back([&, w, lo, hi] { partial[w] = detail::scan_blocks(x, lo, hi, block); });
        }
        pool.clear();
        for (const auto& p : partial) best.offer(p.value, p.key);
    }

    Signing sigma(n, +1);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t bit = n - 1 - i;
        if ((best.key >> bit) & 1u) sigma.set(i, -1);
    }
    return discrepancy(x, sigma);
}

}  // namespace vbal
