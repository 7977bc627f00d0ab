#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vbal/errors.hpp"
#include "vbal/quadrature.hpp"

namespace vbal::theory {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kLn2 = std::numbers::ln2;

/// Natural log of gamma * sqrt(pi n / 2) * 2^(-n/m).
inline double log_epsilon_threshold(std::size_t n, std::size_t m, double gamma) {
    if (n == 0 || m == 0) throw DomainError("epsilon_threshold: n and m must be positive");
    if (!(gamma > 0.0)) throw DomainError("epsilon_threshold: gamma must be positive");
    const double nn = static_cast<double>(n);
    return std::log(gamma) + 0.5 * std::log(std::numbers::pi * nn / 2.0) - nn / static_cast<double>(m) * kLn2;
}

inline double epsilon_threshold(std::size_t n, std::size_t m, double gamma) {
    return std::exp(log_epsilon_threshold(n, m, gamma));
}

/// P(|Z| <= z) for standard normal Z.
inline double gauss_interval(double z) {
    if (z < 0.0 || std::isnan(z)) throw DomainError("gauss_interval: z must be nonnegative");
    const double a = z / std::numbers::sqrt2;
    return a < 1.0 ? std::erf(a) : 1.0 - std::erfc(a);
}

/// log P(|Z| <= e^t), accurate for any t including e^t below the double range.
inline double log_gauss_interval_at_log(double t) {
    if (t == -kInf) return -kInf;
    if (t < -20.0) {
        // P = sqrt(2/pi) z (1 - z^2/6 + ...)
        const double z2 = std::exp(2.0 * t);
        return 0.5 * std::log(2.0 / std::numbers::pi) + t + std::log1p(-z2 / 6.0);
    }
    const double a = std::exp(t) / std::numbers::sqrt2;
    if (a < 1.0) return std::log(std::erf(a));
    return std::log1p(-std::erfc(a));
}

inline double log_gauss_interval(double z) {
    if (z < 0.0 || std::isnan(z)) throw DomainError("log_gauss_interval: z must be nonnegative");
    if (z == 0.0) return -kInf;
    return log_gauss_interval_at_log(std::log(z));
}

namespace detail {

inline constexpr double kZClamp = 40.0;

// log P_rho(|X| <= z, |Y| <= z) with z = e^t, given 1 - rho^2 directly so that
// correlations near +-1 keep full precision. Scaled form: P = z^2 I with
// I = int over [-1,1]^2 of psi_rho(z u, z v).
inline double log_bivariate_rect(double rho, double one_minus_rho2, double t) {
    if (one_minus_rho2 <= 0.0) return log_gauss_interval_at_log(t);
    if (t == -kInf) return -kInf;
    if (t > std::log(kZClamp)) return 0.0;
    const double z = std::exp(t);
    const double det = one_minus_rho2;
    const double norm = 1.0 / (2.0 * std::numbers::pi * std::sqrt(det));
    const double z2 = z * z;
    const double r = std::abs(rho);  // P_rho = P_{-rho} on the symmetric square
    auto psi = [&](double u, double v) { return norm * std::exp(-z2 * (u * u - 2.0 * r * u * v + v * v) / (2.0 * det)); };
    const double abs_tol = z2 > 0.0 ? 1e-12 / z2 : kInf;
    const auto res = quad::integrate_2d(psi, -1.0, 1.0, -1.0, 1.0, abs_tol, 1e-13);
    return 2.0 * t + std::log(res.value);
}

}  // namespace detail

/// P_rho(|X| <= z, |Y| <= z) for a standard bivariate normal with correlation rho.
inline double bivariate_rect(double rho, double z) {
    if (!(std::abs(rho) < 1.0)) throw DomainError("bivariate_rect: need |rho| < 1");
    if (z < 0.0 || std::isnan(z)) throw DomainError("bivariate_rect: z must be nonnegative");
    if (z == 0.0) return 0.0;
    return std::exp(detail::log_bivariate_rect(rho, (1.0 - rho) * (1.0 + rho), std::log(z)));
}

inline double log_bivariate_rect(double rho, double z) {
    if (!(std::abs(rho) < 1.0)) throw DomainError("log_bivariate_rect: need |rho| < 1");
    if (z < 0.0 || std::isnan(z)) throw DomainError("log_bivariate_rect: z must be nonnegative");
    if (z == 0.0) return -kInf;
    return detail::log_bivariate_rect(rho, (1.0 - rho) * (1.0 + rho), std::log(z));
}

/// 2 z^2 / (pi sqrt(1 - rho^2)).
inline double bivariate_rect_upper(double rho, double z) {
    if (!(std::abs(rho) < 1.0)) throw DomainError("bivariate_rect_upper: need |rho| < 1");
    return 2.0 * z * z / (std::numbers::pi * std::sqrt((1.0 - rho) * (1.0 + rho)));
}

/// Either gamma or eps must be set; gamma wins when both are.
struct MomentQuery {
    std::size_t n = 1;
    std::size_t m = 1;
    std::optional<double> gamma;
    std::optional<double> eps;

    static MomentQuery with_gamma(std::size_t n, std::size_t m, double gamma) { return {n, m, gamma, std::nullopt}; }
    static MomentQuery with_eps(std::size_t n, std::size_t m, double eps) { return {n, m, std::nullopt, eps}; }

    void validate() const {
        if (n == 0 || m == 0) throw DomainError("MomentQuery: n and m must be positive");
        if (gamma && !(*gamma > 0.0)) throw DomainError("MomentQuery: gamma must be positive");
        if (!gamma && !eps) throw DomainError("MomentQuery: set gamma or eps");
        if (!gamma && (*eps < 0.0 || std::isnan(*eps))) throw DomainError("MomentQuery: eps must be nonnegative");
    }

    double log_eps() const {
        validate();
        if (gamma) return log_epsilon_threshold(n, m, *gamma);
        return *eps == 0.0 ? -kInf : std::log(*eps);
    }

    double epsilon() const { return std::exp(log_eps()); }

    /// log of eps / sqrt(n), the per-coordinate threshold.
    double log_z() const { return log_eps() - 0.5 * std::log(static_cast<double>(n)); }
};

struct FirstMoment {
    double value = 0.0;   // ln E[S]
    bool underflow = false;
};

/// ln E[S] = n ln 2 + m ln P(|Z| <= eps / sqrt(n)).
inline FirstMoment first_moment_log(const MomentQuery& q) {
    const double lg = log_gauss_interval_at_log(q.log_z());
    FirstMoment out;
    if (lg == -kInf) {
        out.value = -kInf;
        out.underflow = true;
        return out;
    }
    out.value = static_cast<double>(q.n) * kLn2 + static_cast<double>(q.m) * lg;
    return out;
}

inline double log_binomial(std::size_t n, std::size_t k) {
    if (k > n) return -kInf;
    return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
           std::lgamma(static_cast<double>(n - k) + 1.0);
}

/// -a ln a - (1 - a) ln(1 - a).
inline double binary_entropy(double a) {
    if (a <= 0.0 || a >= 1.0) return 0.0;
    return -a * std::log(a) - (1.0 - a) * std::log1p(-a);
}

inline double log_sum_exp(std::span<const double> xs) {
    double hi = -kInf;
    for (double x : xs) hi = std::max(hi, x);
    if (hi == -kInf) return -kInf;
    if (hi == kInf) return kInf;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - hi);
    return hi + std::log(s);
}

inline constexpr std::size_t kSecondMomentCap = 4000;

struct SecondMoment {
    double value = 0.0;                // ln E[S^2]
    std::vector<double> log_terms;     // ln binom(n,k) + m ln P_{rho_k}, k = 0..n
};

/// ln E[S^2] = n ln 2 + ln sum_k binom(n,k) P_{rho_k}(|X|,|Y| <= eps/sqrt(n))^m,
/// rho_k = 1 - 2k/n.
inline SecondMoment second_moment_log(const MomentQuery& q, std::size_t cap = kSecondMomentCap) {
    if (q.n > cap) {
        throw SizeError("second_moment_log: n = " + std::to_string(q.n) + " exceeds cap " + std::to_string(cap));
    }
    const std::size_t n = q.n;
    const double nn = static_cast<double>(n);
    const double t = q.log_z();
    SecondMoment out;
    out.log_terms.assign(n + 1, 0.0);
    for (std::size_t k = 0; k <= n / 2; ++k) {
        const double kk = static_cast<double>(k);
        const double rho = 1.0 - 2.0 * kk / nn;
        const double omr2 = 4.0 * kk * (nn - kk) / (nn * nn);
        const double lf = detail::log_bivariate_rect(rho, omr2, t);
        const double term = log_binomial(n, k) + static_cast<double>(q.m) * lf;
        out.log_terms[k] = term;
        out.log_terms[n - k] = term;
    }
    out.value = nn * kLn2 + log_sum_exp(out.log_terms);
    return out;
}

/// exp(ln E[S^2] - 2 ln E[S]).
inline double moment_ratio(const MomentQuery& q) {
    return std::exp(second_moment_log(q).value - 2.0 * first_moment_log(q).value);
}

struct PhiProfile {
    std::vector<double> alphas;
    std::vector<double> values;
    std::vector<double> second_diffs;  // second_diffs[i] sits at alphas[i + 1]
    double step = 0.0;

    std::size_t argmax() const {
        return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
    }

    /// Second difference at the grid midpoint alpha = 1/2.
    double second_diff_at_half() const { return second_diffs[alphas.size() / 2 - 1]; }
};

/// phi(alpha) = n h(alpha) + m ln P_{1-2 alpha}(...) - ln(alpha (1 - alpha)) / 2
/// on an odd uniform grid over [1/4, 3/4] centred at 1/2.
inline PhiProfile phi_profile(const MomentQuery& q, std::size_t grid_size = 101) {
    if (grid_size < 101 || grid_size % 2 == 0) {
        throw DomainError("phi_profile: grid_size must be odd and at least 101");
    }
    const double t = q.log_z();
    PhiProfile p;
    const auto mid = static_cast<std::ptrdiff_t>(grid_size / 2);
    p.step = 0.5 / static_cast<double>(grid_size - 1);
    p.alphas.resize(grid_size);
    p.values.resize(grid_size);
    for (std::ptrdiff_t j = 0; j <= mid; ++j) {
        const double a = 0.5 - p.step * static_cast<double>(j);  // alpha <= 1/2, mirrored to 1 - alpha
        const double omr2 = 4.0 * a * (1.0 - a);
        const double v = static_cast<double>(q.n) * binary_entropy(a) +
                         static_cast<double>(q.m) * detail::log_bivariate_rect(1.0 - 2.0 * a, omr2, t) -
                         0.5 * std::log(a * (1.0 - a));
        p.alphas[static_cast<std::size_t>(mid - j)] = a;
        p.alphas[static_cast<std::size_t>(mid + j)] = 1.0 - a;
        p.values[static_cast<std::size_t>(mid - j)] = v;
        p.values[static_cast<std::size_t>(mid + j)] = v;
    }
    const double h2 = p.step * p.step;
    for (std::size_t i = 1; i + 1 < grid_size; ++i) {
        p.second_diffs.push_back((p.values[i + 1] - 2.0 * p.values[i] + p.values[i - 1]) / h2);
    }
    return p;
}

struct SmallBallViolation {
    std::string inequality;
    double z = 0.0;
    double rho = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
};

struct SmallBallReport {
    std::size_t checked = 0;
    std::vector<SmallBallViolation> violations;
    bool ok() const { return violations.empty(); }
};

/// Checks P(|Z|<=z) <= sqrt(2/pi) z, P(|Z|<=z) >= sqrt(2/pi) z - z^3 and
/// P_rho(square) <= 2 z^2 / (pi sqrt(1 - rho^2)) at every grid point.
inline SmallBallReport small_ball_checks(std::span<const double> z_grid, std::span<const double> rho_grid) {
    SmallBallReport rep;
    const double c1 = std::sqrt(2.0 / std::numbers::pi);
    for (double z : z_grid) {
        if (!(z > 0.0 && z < 1.0)) throw DomainError("small_ball_checks: z must lie in (0, 1)");
        const double g = gauss_interval(z);
        ++rep.checked;
        if (g > c1 * z) rep.violations.push_back({"upper", z, 0.0, g, c1 * z});
        ++rep.checked;
        if (g < c1 * z - z * z * z) rep.violations.push_back({"lower", z, 0.0, g, c1 * z - z * z * z});
        for (double rho : rho_grid) {
            if (!(rho > -0.5 && rho < 0.5)) throw DomainError("small_ball_checks: rho must lie in (-0.5, 0.5)");
            const double f = bivariate_rect(rho, z);
            const double b = bivariate_rect_upper(rho, z);
            ++rep.checked;
            if (f > b) rep.violations.push_back({"bivariate", z, rho, f, b});
        }
    }
    return rep;
}

/// ln x where x > 0 solves P(|Z| <= x) = 2^(-1/delta); bisection on ln x.
inline double log_c_delta(double delta) {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw DomainError("c_delta: delta must be positive and finite");
    const double target = -kLn2 / delta;
    // P(|Z| <= x) <= sqrt(2/pi) x gives the lower end of the bracket.
    double lo = target + 0.5 * std::log(std::numbers::pi / 2.0);
    double hi = lo + 1.0;
    while (log_gauss_interval_at_log(hi) < target) hi += 1.0;
    while (log_gauss_interval_at_log(lo) > target) lo -= 1.0;
    for (int iter = 0; iter < 400 && hi - lo > 1e-13; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (log_gauss_interval_at_log(mid) < target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

inline double c_delta(double delta) { return std::exp(log_c_delta(delta)); }

}  // namespace vbal::theory
