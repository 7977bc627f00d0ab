#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vbal/core.hpp"
#include "vbal/density.hpp"
#include "vbal/errors.hpp"
#include "vbal/io.hpp"
#include "vbal/prdc.hpp"
#include "vbal/reduce.hpp"
#include "vbal/rng.hpp"

namespace vbal {

/// C* = 1 / (2 ln(10/3)).
inline const double kPhaseConstant = 1.0 / (2.0 * std::log(10.0 / 3.0));

/// ceil(C* ln n), at least 1.
inline std::size_t default_phase_cap(std::size_t n) {
    const double t = std::ceil(kPhaseConstant * std::log(static_cast<double>(n)));
    return std::max<std::size_t>(1, static_cast<std::size_t>(t));
}

inline std::size_t default_min_set_size(std::size_t m) {
    const std::size_t cubes = m < 60 ? (std::size_t{4} << m) : std::numeric_limits<std::size_t>::max();
    return std::max<std::size_t>(cubes, 64);
}

/// Zero means "use the default" for every field.
struct GkkConfig {
    double gamma = 0.0;
    double c_star = 0.0;
    std::size_t phase_cap = 0;
    std::size_t min_set_size = 0;
    int retries = 1;
    bool record_configuration = false;
    bool check_invariants = false;

    GkkConfig resolved(std::size_t n, std::size_t m) const {
        GkkConfig c = *this;
        if (c.c_star <= 0.0) c.c_star = cached_khintchine(m);
        if (c.gamma <= 0.0) c.gamma = default_gamma(c.c_star);
        if (c.phase_cap == 0) c.phase_cap = default_phase_cap(n);
        if (c.min_set_size == 0) c.min_set_size = default_min_set_size(m);
        return c;
    }

    void validate() const {
        if (!(c_star > 0.0)) throw DomainError("GkkConfig: c_star must be positive");
        if (!(gamma > 0.0)) throw DomainError("GkkConfig: gamma must be positive");
        if (gamma < 2.0 / c_star) throw DomainError("GkkConfig: gamma must be at least 2 / c_star");
        if (phase_cap < 1) throw DomainError("GkkConfig: phase_cap must be at least 1");
        if (retries < 0) throw DomainError("GkkConfig: retries must be nonnegative");
    }
};

enum class StopReason { phase_cap, small_set, degenerate_partition };

inline std::string_view to_string(StopReason r) {
    switch (r) {
        case StopReason::phase_cap: return "phase_cap";
        case StopReason::small_set: return "small_set";
        case StopReason::degenerate_partition: return "degenerate_partition";
    }
    return "unknown";
}

struct GkkResult {
    Signing signing;
    DiscrepancyReport report;
    std::vector<PhaseDiagnostics> phases;
    std::vector<double> alpha_trace;
    std::vector<std::size_t> set_sizes;
    StopReason stop = StopReason::phase_cap;
    GkkConfig config;
    std::size_t final_reduce_size = 0;
    double final_reduce_bound = 0.0;
    std::vector<double> tracked;  // final vector carried through differencing
    int retries_used = 0;
    std::uint64_t work = 0;  // sum of phase work plus the final REDUCE
};

/// alpha_1 = delta, alpha_{t+1} = alpha_t / ceil(sizes_t^(1/(4m))).
inline std::vector<double> alpha_schedule(double delta, std::size_t m, std::span<const std::size_t> sizes) {
    std::vector<double> out{delta};
    for (auto s : sizes) {
        if (s == 0) throw DomainError("alpha_schedule: sizes must be positive");
        out.push_back(out.back() / static_cast<double>(partition_factor(s, m)));
    }
    return out;
}

/// Runs up to T phases of partition / resample / difference / clean-up, then a
/// final REDUCE over what is left, and verifies the signing against X.
inline GkkResult gkk_run(const VectorSet& x, const BoundedDensity& rho, const GkkConfig& cfg, RngStream rng) {
    const std::size_t n = x.count();
    const std::size_t m = x.dim();
    if (n < 2) throw ValidationError("gkk_run: need at least two columns");
    x.validate();
    if (x.max_abs_entry() > rho.half_width()) {
        throw DomainError("gkk_run: instance has entries outside the density support [-" +
                          io::format_double(rho.half_width()) + ", " + io::format_double(rho.half_width()) + "]");
    }

    GkkResult result;
    result.config = cfg.resolved(n, m);
    result.config.validate();
    const auto& c = result.config;

    auto state = PhaseState::initial(x, rho);
    result.alpha_trace.push_back(state.alpha);
    result.set_sizes.push_back(state.S.size());
    for (std::size_t t = 1; t <= c.phase_cap; ++t) {
        if (state.S.size() < c.min_set_size) {
            result.stop = StopReason::small_set;
            break;
        }
        if (partition_factor(state.S.size(), m) == 1) {
            result.stop = StopReason::degenerate_partition;
            break;
        }
        std::optional<std::pair<PhaseState, PhaseDiagnostics>> out;
        for (int attempt = 0; attempt <= c.retries; ++attempt) {
            try {
                out = run_phase(state, c.gamma, n, rng.derive({t, static_cast<std::uint64_t>(attempt)}),
                                c.record_configuration);
                out->second.attempt = attempt;
                result.retries_used += attempt;
                break;
            } catch (const PhaseFailure&) {
                if (attempt == c.retries) throw;
            }
        }
        state = std::move(out->first);
        result.phases.push_back(std::move(out->second));
        result.alpha_trace.push_back(state.alpha);
        result.set_sizes.push_back(state.S.size());
        if (c.check_invariants) check_phase_state(state, x, c.gamma, true);
    }

    std::vector<SignedCombination> items;
    items.reserve(state.S.size() + 1);
    items.push_back(std::move(state.v));
    for (auto& s : state.S) items.push_back(std::move(s));
    result.final_reduce_size = items.size();
    auto [final_vec, red] = reduce_combinations(items, m);
    result.final_reduce_bound = red.bound;
    for (const auto& d : result.phases) result.work += d.work;
    result.work += static_cast<std::uint64_t>(m) * result.final_reduce_size +
                   static_cast<std::uint64_t>(m * m * (m + 1)) * red.iterations;

    result.signing = signing_from_support(final_vec, n);
    result.report = discrepancy(x, result.signing);

    // Untouched columns contribute with sign +1.
    std::vector<bool> touched(n, false);
    for (auto s : final_vec.support()) touched[s.index] = true;
    for (std::size_t i = 0; i < n; ++i) {
        if (!touched[i]) final_vec.absorb(SignedCombination::column(x, i), 1);
    }
    result.tracked.assign(final_vec.value().begin(), final_vec.value().end());
    if (!final_vec.consistent_with(x)) {
        throw InvariantViolation("gkk_run: tracked vector disagrees with X sigma");
    }
    for (std::size_t k = 0; k < m; ++k) {
        double mass = 0.0;
        for (std::size_t i = 0; i < n; ++i) mass += std::abs(x(k, i));
        const double gap = std::abs(result.tracked[k] - result.report.coordinate_sums[k]);
        const double scale = std::max(std::abs(result.tracked[k]), std::abs(result.report.coordinate_sums[k]));
        if (gap > 1e-9 * scale + 64.0 * std::numeric_limits<double>::epsilon() * mass) {
            throw InvariantViolation("gkk_run: report disagrees with tracked vector");
        }
    }
    return result;
}

}  // namespace vbal
