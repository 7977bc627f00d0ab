#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vbal/core.hpp"
#include "vbal/errors.hpp"
#include "vbal/io.hpp"
#include "vbal/rng.hpp"

namespace vbal {

enum class DensityKind { uniform, triangular, truncated_gaussian, tabulated };

inline std::string_view to_string(DensityKind k) {
    switch (k) {
        case DensityKind::uniform: return "uniform";
        case DensityKind::triangular: return "triangular";
        case DensityKind::truncated_gaussian: return "truncated_gaussian";
        case DensityKind::tabulated: return "tabulated";
    }
    return "unknown";
}

/// A one-dimensional density on [-half_width, half_width] with Lipschitz
/// constant L and sup bound D. Products of it give the m-dimensional laws.
class BoundedDensity {
public:
    static BoundedDensity uniform(double half_width) {
        BoundedDensity d(DensityKind::uniform, half_width);
        d.sup_bound_ = 1.0 / (2.0 * half_width);
        d.lipschitz_ = 0.0;
        return d;
    }

    /// Law of u - v with u, v uniform on [0, half_width].
    static BoundedDensity triangular(double half_width) {
        BoundedDensity d(DensityKind::triangular, half_width);
        d.sup_bound_ = 1.0 / half_width;
        d.lipschitz_ = 1.0 / (half_width * half_width);
        return d;
    }

    /// N(0, sigma^2) conditioned on |x| <= half_width.
    static BoundedDensity truncated_gaussian(double half_width, double sigma = 1.0) {
        if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("truncated_gaussian: sigma must be positive");
        BoundedDensity d(DensityKind::truncated_gaussian, half_width);
        d.sigma_ = sigma;
        d.mass_ = std::erf(half_width / (sigma * std::numbers::sqrt2));
        d.sup_bound_ = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi) * d.mass_);
        // |phi'(t)| = t phi(t) peaks at t = 1
        const double t = std::min(1.0, half_width / sigma);
        d.lipschitz_ = t * std::exp(-0.5 * t * t) / (std::sqrt(2.0 * std::numbers::pi) * sigma * sigma * d.mass_);
        return d;
    }

    /// Piecewise-linear density through (xs[i], ys[i]) on a uniform grid from
    /// -half_width to +half_width. The table is renormalized to unit mass.
    static BoundedDensity tabulated(std::vector<double> xs, std::vector<double> ys) {
        if (xs.size() != ys.size() || xs.size() < 2) {
            throw ValidationError("tabulated density: need at least two (x, y) rows");
        }
        const double half = xs.back();
        if (!(half > 0.0) || std::abs(xs.front() + half) > 1e-9 * half) {
            throw ValidationError("tabulated density: grid must span [-D, D] symmetrically");
        }
        const double h = (xs.back() - xs.front()) / static_cast<double>(xs.size() - 1);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (std::abs(xs[i] - (xs.front() + h * static_cast<double>(i))) > 1e-9 * half) {
                throw ValidationError("tabulated density: grid must be uniform");
            }
            if (!(ys[i] >= 0.0) || !std::isfinite(ys[i])) {
                throw ValidationError("tabulated density: values must be finite and nonnegative");
            }
        }
        double mass = 0.0;
        for (std::size_t i = 0; i + 1 < ys.size(); ++i) mass += 0.5 * h * (ys[i] + ys[i + 1]);
        if (!(mass > 0.0)) throw ValidationError("tabulated density: zero total mass");
        for (auto& y : ys) y /= mass;

        BoundedDensity d(DensityKind::tabulated, half);
        d.step_ = h;
        d.xs_ = std::move(xs);
        d.ys_ = std::move(ys);
        d.cumulative_.assign(d.ys_.size(), 0.0);
        for (std::size_t i = 0; i + 1 < d.ys_.size(); ++i) {
            d.cumulative_[i + 1] = d.cumulative_[i] + 0.5 * h * (d.ys_[i] + d.ys_[i + 1]);
            d.lipschitz_ = std::max(d.lipschitz_, std::abs(d.ys_[i + 1] - d.ys_[i]) / h);
        }
        d.sup_bound_ = *std::max_element(d.ys_.begin(), d.ys_.end());
        return d;
    }

    static BoundedDensity tabulated_from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ValidationError("cannot open density table '" + path + "'");
        auto [xs, ys] = io::read_table(in);
        return tabulated(std::move(xs), std::move(ys));
    }

    DensityKind kind() const noexcept { return kind_; }
    double half_width() const noexcept { return half_width_; }
    double lipschitz() const noexcept { return lipschitz_; }
    double sup_bound() const noexcept { return sup_bound_; }
    double sigma() const noexcept { return sigma_; }

    bool in_support(double x) const { return x >= -half_width_ && x <= half_width_; }

    /// Density value; zero outside the support.
    double pdf(double x) const {
        if (!in_support(x)) return 0.0;
        switch (kind_) {
            case DensityKind::uniform: return sup_bound_;
            case DensityKind::triangular: return (half_width_ - std::abs(x)) / (half_width_ * half_width_);
            case DensityKind::truncated_gaussian: {
                const double t = x / sigma_;
                return std::exp(-0.5 * t * t) * sup_bound_;
            }
            case DensityKind::tabulated: {
                const auto [i, frac] = locate(x);
                return ys_[i] + frac * (ys_[i + 1] - ys_[i]);
            }
        }
        return 0.0;
    }

    double cdf(double x) const {
        if (x <= -half_width_) return 0.0;
        if (x >= half_width_) return 1.0;
        const double w = half_width_;
        switch (kind_) {
            case DensityKind::uniform: return (x + w) / (2.0 * w);
            case DensityKind::triangular:
                return x < 0.0 ? (w + x) * (w + x) / (2.0 * w * w) : 1.0 - (w - x) * (w - x) / (2.0 * w * w);
            case DensityKind::truncated_gaussian: {
                const double s = sigma_ * std::numbers::sqrt2;
                return 0.5 * (std::erf(x / s) + mass_) / mass_;
            }
            case DensityKind::tabulated: {
                const auto [i, frac] = locate(x);
                const double dy = ys_[i + 1] - ys_[i];
                return cumulative_[i] + step_ * (ys_[i] * frac + 0.5 * dy * frac * frac);
            }
        }
        return 0.0;
    }

    /// Minimum of the density over [lo, hi] (a subset of the support).
    /// Exact for every kind: the three analytic kinds are symmetric and
    /// nonincreasing in |x|, and the tabulated kind attains its minimum at an
    /// endpoint or a grid knot.
    double min_on_interval(double lo, double hi) const {
        if (lo > hi || !in_support(lo) || !in_support(hi)) {
            throw DomainError("min_on_interval: interval outside support");
        }
        double best = std::min(pdf(lo), pdf(hi));
        if (kind_ == DensityKind::tabulated) {
            const auto first = static_cast<std::size_t>(std::ceil((lo - xs_.front()) / step_));
            for (std::size_t i = first; i < xs_.size() && xs_[i] < hi; ++i) {
                if (xs_[i] > lo) best = std::min(best, ys_[i]);
            }
        }
        return best;
    }

    /// One variate. Draws consumed: uniform 1, triangular 2, tabulated 1,
    /// truncated Gaussian 2 per attempt (rejections are added to *rejections).
    double sample(RngStream& rng, std::uint64_t* rejections = nullptr) const {
        switch (kind_) {
            case DensityKind::uniform: return rng.uniform(-half_width_, half_width_);
            case DensityKind::triangular: {
                const double u = rng.uniform();
                const double v = rng.uniform();
                return half_width_ * (u - v);
            }
            case DensityKind::truncated_gaussian: {
                while (true) {
                    const double z = sigma_ * rng.normal();
                    if (std::abs(z) <= half_width_) return z;
                    if (rejections) ++*rejections;
                }
            }
            case DensityKind::tabulated: return sample_tabulated(rng.uniform());
        }
        return 0.0;
    }

    std::string describe() const {
        std::string out(to_string(kind_));
        out += ":" + io::format_double(half_width_);
        if (kind_ == DensityKind::truncated_gaussian && sigma_ != 1.0) out += ":" + io::format_double(sigma_);
        return out;
    }

private:
    BoundedDensity(DensityKind kind, double half_width) : kind_(kind), half_width_(half_width) {
        if (!(half_width > 0.0) || !std::isfinite(half_width)) {
            throw DomainError("density half-width must be positive and finite");
        }
    }

    std::pair<std::size_t, double> locate(double x) const {
        const double pos = (x - xs_.front()) / step_;
        auto i = static_cast<std::size_t>(std::clamp(std::floor(pos), 0.0, static_cast<double>(xs_.size() - 2)));
        return {i, std::clamp(pos - static_cast<double>(i), 0.0, 1.0)};
    }

    double sample_tabulated(double u) const {
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        std::size_t i = it == cumulative_.begin() ? 0 : static_cast<std::size_t>(it - cumulative_.begin()) - 1;
        i = std::min(i, xs_.size() - 2);
        const double r = u - cumulative_[i];
        const double a = 0.5 * (ys_[i + 1] - ys_[i]) * step_;
        const double b = ys_[i] * step_;
        const double disc = std::max(0.0, b * b + 4.0 * a * r);
        const double denom = b + std::sqrt(disc);
        const double t = denom > 0.0 ? std::clamp(2.0 * r / denom, 0.0, 1.0) : 0.0;
        return std::clamp(xs_[i] + t * step_, -half_width_, half_width_);
    }

    DensityKind kind_;
    double half_width_;
    double lipschitz_ = 0.0;
    double sup_bound_ = 0.0;
    double sigma_ = 1.0;
    double mass_ = 1.0;
    double step_ = 0.0;
    std::vector<double> xs_, ys_, cumulative_;
};

/// Default Gaussian truncation 3 * sqrt(max(1, ln n)).
inline double default_gaussian_truncation(std::size_t n) {
    return 3.0 * std::sqrt(std::max(1.0, std::log(static_cast<double>(n))));
}

/// Parses "uniform[:D]", "triangular[:D]", "gaussian[:D[:sigma]]" (truncated,
/// D defaults to 3 sqrt(max(1, ln n))) or "tabulated:<csv path>".
inline BoundedDensity parse_density_spec(std::string_view spec, std::size_t n = 1) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto colon = spec.find(':', start);
        parts.emplace_back(spec.substr(start, colon - start));
        if (colon == std::string_view::npos) break;
        start = colon + 1;
    }
    const std::string& kind = parts[0];
    auto number = [&](std::size_t i, double fallback) {
        if (parts.size() <= i || parts[i].empty()) return fallback;
        return io::detail::parse_double(parts[i], 0);
    };
    if (kind == "uniform") return BoundedDensity::uniform(number(1, 1.0));
    if (kind == "triangular") return BoundedDensity::triangular(number(1, 1.0));
    if (kind == "gaussian" || kind == "truncated_gaussian") {
        return BoundedDensity::truncated_gaussian(number(1, default_gaussian_truncation(n)), number(2, 1.0));
    }
    if (kind == "tabulated") {
        if (parts.size() < 2) throw ValidationError("tabulated density needs a file path");
        std::string path(spec.substr(spec.find(':') + 1));
        return BoundedDensity::tabulated_from_file(path);
    }
    throw ValidationError("unknown density kind '" + kind + "'");
}

/// m*n iid variates filled column-major (column 0 rows 0..m-1 first).
inline VectorSet sample_instance(const BoundedDensity& rho, std::size_t m, std::size_t n, RngStream& rng,
                                 std::uint64_t* rejections = nullptr) {
    if (m == 0 || n == 0) throw ValidationError("sample_instance: m and n must be positive");
    std::vector<double> data(m * n);
    for (auto& x : data) x = rho.sample(rng, rejections);
    return VectorSet(m, n, std::move(data));
}

struct TruncatedSample {
    VectorSet instance;
    std::uint64_t rejections = 0;
};

/// Standard Gaussian entries conditioned on |entry| <= delta by per-entry rejection.
inline TruncatedSample truncate_gaussian(std::size_t m, std::size_t n, double delta, RngStream& rng) {
    TruncatedSample out;
    const auto rho = BoundedDensity::truncated_gaussian(delta, 1.0);
    out.instance = sample_instance(rho, m, n, rng, &out.rejections);
    return out;
}

/// Product density prod_i rho(x_i); every coordinate must lie in the support.
inline double product_density_eval(const BoundedDensity& rho, std::span<const double> x) {
    double p = 1.0;
    for (double xi : x) {
        if (!rho.in_support(xi)) {
            throw DomainError("product_density_eval: coordinate " + io::format_double(xi) + " outside support");
        }
        p *= rho.pdf(xi);
    }
    return p;
}

/// Axis-aligned box [lo_i, hi_i].
struct Box {
    std::vector<double> lo;
    std::vector<double> hi;

    bool contains(std::span<const double> x) const {
        for (std::size_t i = 0; i < lo.size(); ++i) {
            if (x[i] < lo[i] || x[i] > hi[i]) return false;
        }
        return true;
    }
};

/// Minimum of the product density over the box: the product of per-axis minima.
inline double subcube_density_min(const BoundedDensity& rho, const Box& cube) {
    double p = 1.0;
    for (std::size_t i = 0; i < cube.lo.size(); ++i) p *= rho.min_on_interval(cube.lo[i], cube.hi[i]);
    return p;
}

}  // namespace vbal
