#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vbal/core.hpp"
#include "vbal/density.hpp"
#include "vbal/errors.hpp"
#include "vbal/reduce.hpp"
#include "vbal/rng.hpp"

namespace vbal {

/// State handed between phases: the working set S, the carried vector v, the
/// half-width alpha of the cube holding S, and the per-axis law g of S.
struct PhaseState {
    std::vector<SignedCombination> S;
    SignedCombination v;
    double alpha = 1.0;
    BoundedDensity g = BoundedDensity::uniform(1.0);
    int phase = 1;

    std::size_t dim() const noexcept { return v.dim(); }

    static PhaseState initial(const VectorSet& x, const BoundedDensity& rho) {
        PhaseState st;
        st.S.reserve(x.count());
        for (std::size_t i = 0; i < x.count(); ++i) st.S.push_back(SignedCombination::column(x, i));
        st.v = SignedCombination::zero(x.dim());
        st.alpha = rho.half_width();
        st.g = rho;
        st.phase = 1;
        return st;
    }
};

namespace detail {

inline std::uint64_t saturating_pow(std::uint64_t base, std::uint64_t exp) {
    std::uint64_t out = 1;
    for (std::uint64_t i = 0; i < exp; ++i) {
        if (out > std::numeric_limits<std::uint64_t>::max() / base) return std::numeric_limits<std::uint64_t>::max();
        out *= base;
    }
    return out;
}

}  // namespace detail

/// Smallest integer k with k^(4m) >= set_size, i.e. ceil(set_size^(1/(4m))).
inline std::uint64_t partition_factor(std::uint64_t set_size, std::size_t m) {
    if (set_size == 0) throw DomainError("partition_factor: set_size must be positive");
    std::uint64_t k = 1;
    while (detail::saturating_pow(k, 4 * m) < set_size) ++k;
    return k;
}

/// Grid of (2k)^m half-open cubes of side child_alpha tiling [-alpha, alpha]^m.
/// The right boundary +alpha belongs to the last cube on each axis.
struct CubePartition {
    std::size_t dim = 1;
    std::uint64_t per_axis = 1;  // k
    double alpha = 1.0;
    double child_alpha = 1.0;
    std::uint64_t cube_count = 2;

    std::uint64_t cells_per_axis() const noexcept { return 2 * per_axis; }

    double cell_lo(std::uint64_t i) const { return -alpha + static_cast<double>(i) * child_alpha; }
    double cell_hi(std::uint64_t i) const {
        return i + 1 == cells_per_axis() ? alpha : -alpha + static_cast<double>(i + 1) * child_alpha;
    }

    std::uint64_t axis_cell(double x) const {
        if (!(x >= -alpha && x <= alpha)) {
            throw DomainError("CubePartition: coordinate " + std::to_string(x) + " outside [-alpha, alpha]");
        }
        const std::uint64_t cells = cells_per_axis();
        const double pos = std::floor((x + alpha) / child_alpha);
        auto i = static_cast<std::uint64_t>(std::clamp(pos, 0.0, static_cast<double>(cells - 1)));
        while (i > 0 && x < cell_lo(i)) --i;
        while (i + 1 < cells && x >= cell_lo(i + 1)) ++i;
        return i;
    }

    std::uint64_t index_of(std::span<const double> x) const {
        std::uint64_t id = 0, stride = 1;
        for (std::size_t a = 0; a < dim; ++a) {
            id += axis_cell(x[a]) * stride;
            stride *= cells_per_axis();
        }
        return id;
    }

    std::vector<std::uint64_t> axis_cells(std::uint64_t id) const {
        std::vector<std::uint64_t> cells(dim);
        for (std::size_t a = 0; a < dim; ++a) {
            cells[a] = id % cells_per_axis();
            id /= cells_per_axis();
        }
        return cells;
    }

    Box box(std::uint64_t id) const {
        Box b;
        for (auto i : axis_cells(id)) {
            b.lo.push_back(cell_lo(i));
            b.hi.push_back(cell_hi(i));
        }
        return b;
    }
};

inline CubePartition partition(double alpha, std::uint64_t set_size, std::size_t m) {
    if (!(alpha > 0.0)) throw DomainError("partition: alpha must be positive");
    if (m == 0) throw DomainError("partition: m must be positive");
    CubePartition p;
    p.dim = m;
    p.alpha = alpha;
    p.per_axis = partition_factor(set_size, m);
    p.child_alpha = alpha / static_cast<double>(p.per_axis);
    p.cube_count = detail::saturating_pow(2 * p.per_axis, m);
    if (p.cube_count == std::numeric_limits<std::uint64_t>::max()) {
        throw SizeError("partition: cube count overflows 64 bits");
    }
    return p;
}

struct PointLabel {
    std::uint64_t cube;
    bool good;
};

struct PhaseDiagnostics {
    int phase = 0;
    double alpha = 0.0;
    double child_alpha = 0.0;
    std::uint64_t per_axis = 0;
    std::uint64_t cube_count = 0;
    std::size_t n_in = 0;
    std::size_t n_good = 0;
    std::size_t n_bad = 0;
    std::size_t n_leftover = 0;
    std::size_t n_differences = 0;
    std::size_t cleanup_draws = 0;
    std::size_t cleanup_budget = 0;
    bool cleanup_stopped = false;
    double reduce_sup_norm = 0.0;
    double v_norm_initial = 0.0;
    double v_norm_final = 0.0;
    double threshold = 0.0;
    std::size_t n_out = 0;
    int attempt = 0;
    std::uint64_t work = 0;  // arithmetic proxy: m per point touched plus m^2 (m + 1) per elimination step
    std::optional<std::vector<PointLabel>> configuration;

    double bad_fraction() const { return n_in ? static_cast<double>(n_bad) / static_cast<double>(n_in) : 0.0; }
};

struct ResampleResult {
    std::vector<SignedCombination> good;
    std::vector<std::uint64_t> good_cubes;
    std::vector<SignedCombination> bad;
    std::vector<PointLabel> labels;
};

/// Per-axis density minima over the partition's cells; their products are the
/// exact cube minima of a product density.
inline std::vector<double> axis_minima(const BoundedDensity& g, const CubePartition& part) {
    std::vector<double> mins(part.cells_per_axis());
    for (std::uint64_t i = 0; i < mins.size(); ++i) {
        const double lo = std::max(part.cell_lo(i), -g.half_width());
        const double hi = std::min(part.cell_hi(i), g.half_width());
        mins[i] = g.min_on_interval(lo, hi);
    }
    return mins;
}

/// Labels each point good with probability min_C g / g(x), C its cube.
/// One uniform draw per point, in order.
inline ResampleResult resample(std::vector<SignedCombination> S, const BoundedDensity& g, const CubePartition& part,
                               RngStream& rng) {
    const auto mins = axis_minima(g, part);
    ResampleResult out;
    out.labels.reserve(S.size());
    for (auto& p : S) {
        const auto value = p.value();
        const std::uint64_t id = part.index_of(value);
        double cube_min = 1.0;
        std::uint64_t rest = id;
        for (std::size_t a = 0; a < part.dim; ++a) {
            cube_min *= mins[rest % part.cells_per_axis()];
            rest /= part.cells_per_axis();
        }
        const double gx = product_density_eval(g, value);
        if (!(gx > 0.0)) throw InvariantViolation("resample: density vanishes at a sampled point");
        const bool good = rng.uniform() < cube_min / gx;
        out.labels.push_back({id, good});
        if (good) {
            out.good.push_back(std::move(p));
            out.good_cubes.push_back(id);
        } else {
            out.bad.push_back(std::move(p));
        }
    }
    return out;
}

struct DifferenceResult {
    std::vector<SignedCombination> differences;
    std::vector<SignedCombination> leftovers;
};

/// Pairs points within each cube uniformly at random (Fisher-Yates, then
/// adjacent pairs) and returns the pairwise differences. Cubes are visited in
/// increasing id; an odd cube leaves one leftover.
inline DifferenceResult difference(std::vector<SignedCombination> good, std::span<const std::uint64_t> cubes,
                                   std::size_t column_count, RngStream& rng) {
    if (cubes.size() != good.size()) throw DimensionError("difference: one cube id per point required");
    std::vector<bool> seen(column_count, false);
    for (const auto& p : good) {
        for (auto s : p.support()) {
            if (s.index >= column_count || seen[s.index]) {
                throw InvariantViolation("difference: support collision on column " + std::to_string(s.index));
            }
            seen[s.index] = true;
        }
    }

    std::map<std::uint64_t, std::vector<std::size_t>> by_cube;
    for (std::size_t i = 0; i < good.size(); ++i) by_cube[cubes[i]].push_back(i);

    DifferenceResult out;
    out.differences.reserve(good.size() / 2);
    for (auto& [id, members] : by_cube) {
        for (std::size_t i = members.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(rng.below(i));
            std::swap(members[i - 1], members[j]);
        }
        std::size_t i = 0;
        for (; i + 1 < members.size(); i += 2) {
            out.differences.push_back(SignedCombination::difference(std::move(good[members[i]]), good[members[i + 1]]));
        }
        if (i < members.size()) out.leftovers.push_back(std::move(good[members[i]]));
    }
    return out;
}

/// Combines items into one vector with REDUCE's signing.
inline std::pair<SignedCombination, ReduceResult> reduce_combinations(std::span<const SignedCombination> items,
                                                                       std::size_t dim) {
    std::vector<double> data;
    data.reserve(items.size() * dim);
    for (const auto& c : items) data.insert(data.end(), c.value().begin(), c.value().end());
    auto res = reduce(VectorSet(dim, items.size(), std::move(data)));
    auto combined = SignedCombination::zero(dim);
    for (std::size_t i = 0; i < items.size(); ++i) combined.absorb(items[i], res.signing[i]);
    return {std::move(combined), std::move(res)};
}

/// The sign a in {-1, +1} minimizing |v + a u|_2; +1 on ties.
inline int cleanup_sign(std::span<const double> v, std::span<const double> u) {
    double dot = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) dot += v[k] * u[k];
    return dot > 0.0 ? -1 : 1;
}

inline std::size_t cleanup_budget(std::size_t n_differences) {
    return static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(n_differences), 0.75)));
}

struct CleanupResult {
    SignedCombination v;
    std::vector<SignedCombination> survivors;
    std::size_t draws = 0;
    std::size_t budget = 0;
    bool stopped = false;
    double reduce_sup_norm = 0.0;
    double v_norm_initial = 0.0;
    std::size_t reduce_iterations = 0;
};

/// REDUCE folds v and the stragglers into one vector; then random differences
/// are added with the sign that shortens it (ties +1) until its l2 norm drops
/// below gamma * m * child_alpha. Throws PhaseFailure when the draw budget
/// ceil(|D|^(3/4)) runs out first.
inline CleanupResult cleanup(std::vector<SignedCombination> stragglers, SignedCombination v,
                             std::vector<SignedCombination> differences, double child_alpha, double gamma,
                             RngStream& rng, int phase = 0) {
    const std::size_t m = v.dim();
    std::vector<SignedCombination> items;
    items.reserve(stragglers.size() + 1);
    items.push_back(std::move(v));
    for (auto& s : stragglers) items.push_back(std::move(s));

    CleanupResult out;
    auto [current, red] = reduce_combinations(items, m);
    out.reduce_sup_norm = current.sup_norm();
    out.reduce_iterations = red.iterations;
    out.v_norm_initial = current.norm2();
    out.budget = cleanup_budget(differences.size());

    const double threshold = gamma * static_cast<double>(m) * child_alpha;
    double norm = out.v_norm_initial;
    double best = norm;
    while (norm >= threshold) {
        if (out.draws >= out.budget || differences.empty()) {
            throw PhaseFailure("cleanup: draw budget exhausted with |v|_2 = " + std::to_string(best) +
                                   " above threshold " + std::to_string(threshold),
                               phase, best);
        }
        const auto idx = static_cast<std::size_t>(rng.below(differences.size()));
        std::swap(differences[idx], differences.back());
        SignedCombination u = std::move(differences.back());
        differences.pop_back();
        current.absorb(u, cleanup_sign(current.value(), u.value()));
        ++out.draws;
        norm = current.norm2();
        best = std::min(best, norm);
    }
    out.stopped = true;
    out.v = std::move(current);
    out.survivors = std::move(differences);
    return out;
}

/// Partition, resample, difference and clean up: state t to state t + 1.
inline std::pair<PhaseState, PhaseDiagnostics> run_phase(PhaseState state, double gamma, std::size_t column_count,
                                                         RngStream rng, bool record_configuration = false) {
    const std::size_t m = state.dim();
    PhaseDiagnostics diag;
    diag.phase = state.phase;
    diag.alpha = state.alpha;
    diag.n_in = state.S.size();
    if (state.S.empty()) throw DomainError("run_phase: empty working set");

    const auto part = partition(state.alpha, state.S.size(), m);
    diag.per_axis = part.per_axis;
    diag.cube_count = part.cube_count;
    diag.child_alpha = part.child_alpha;

    auto rs_rng = rng.derive(1);
    auto df_rng = rng.derive(2);
    auto cu_rng = rng.derive(3);

    auto rs = resample(std::move(state.S), state.g, part, rs_rng);
    diag.n_good = rs.good.size();
    diag.n_bad = rs.bad.size();
    if (record_configuration) diag.configuration = std::move(rs.labels);

    auto df = difference(std::move(rs.good), rs.good_cubes, column_count, df_rng);
    diag.n_leftover = df.leftovers.size();
    diag.n_differences = df.differences.size();

    std::vector<SignedCombination> stragglers = std::move(rs.bad);
    for (auto& l : df.leftovers) stragglers.push_back(std::move(l));
    auto cu = cleanup(std::move(stragglers), std::move(state.v), std::move(df.differences), part.child_alpha, gamma,
                      cu_rng, state.phase);
    diag.cleanup_draws = cu.draws;
    diag.cleanup_budget = cu.budget;
    diag.cleanup_stopped = cu.stopped;
    diag.reduce_sup_norm = cu.reduce_sup_norm;
    diag.v_norm_initial = cu.v_norm_initial;
    diag.v_norm_final = cu.v.norm2();
    diag.threshold = gamma * static_cast<double>(m) * part.child_alpha;
    diag.work = static_cast<std::uint64_t>(m) * (diag.n_in + diag.n_differences + cu.draws) +
                static_cast<std::uint64_t>(m * m * (m + 1)) * cu.reduce_iterations;

    PhaseState next;
    next.S = std::move(cu.survivors);
    next.v = std::move(cu.v);
    next.alpha = part.child_alpha;
    next.g = BoundedDensity::triangular(part.child_alpha);
    next.phase = state.phase + 1;
    diag.n_out = next.S.size();
    return {std::move(next), std::move(diag)};
}

/// Checks the structural invariants of a phase state; throws InvariantViolation.
inline void check_phase_state(const PhaseState& st, const VectorSet& x, double gamma, bool check_v_norm) {
    std::vector<bool> seen(x.count(), false);
    auto visit = [&](const SignedCombination& c) {
        for (auto s : c.support()) {
            if (s.index >= x.count() || seen[s.index]) {
                throw InvariantViolation("phase state: support collision on column " + std::to_string(s.index));
            }
            seen[s.index] = true;
        }
        if (!c.consistent_with(x)) throw InvariantViolation("phase state: value drifted from its support");
    };
    visit(st.v);
    for (const auto& c : st.S) {
        visit(c);
        for (double t : c.value()) {
            if (std::abs(t) > st.alpha) throw InvariantViolation("phase state: point outside [-alpha, alpha]^m");
        }
    }
    if (check_v_norm && st.v.norm2() > gamma * static_cast<double>(st.dim()) * st.alpha * (1.0 + 1e-12)) {
        throw InvariantViolation("phase state: carried vector above gamma m alpha");
    }
}

/// Monte Carlo lower estimate of c* = min over unit nu of E|<nu, u>| for u
/// triangular on [-1, 1]^m: 100 random directions share 1e5 samples; each
/// direction's mean is lowered by three standard errors.
inline double khintchine_estimate(std::size_t m, std::size_t samples = 100000, std::size_t directions = 100,
                                  std::uint64_t seed = 0x6b68696e) {
    if (m == 0) throw DomainError("khintchine_estimate: m must be positive");
    RngStream rng(seed, m);
    auto u_rng = rng.derive(1);
    auto d_rng = rng.derive(2);
    const auto tri = BoundedDensity::triangular(1.0);
    std::vector<double> u(samples * m);
    for (auto& t : u) t = tri.sample(u_rng);
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> nu(m);
    for (std::size_t d = 0; d < directions; ++d) {
        double norm = 0.0;
        for (auto& t : nu) {
            t = d_rng.normal();
            norm += t * t;
        }
        norm = std::sqrt(norm);
        for (auto& t : nu) t /= norm;
        double sum = 0.0, sum2 = 0.0;
        for (std::size_t s = 0; s < samples; ++s) {
            double dot = 0.0;
            for (std::size_t k = 0; k < m; ++k) dot += nu[k] * u[s * m + k];
            const double a = std::abs(dot);
            sum += a;
            sum2 += a * a;
        }
        const double ns = static_cast<double>(samples);
        const double mean = sum / ns;
        const double var = std::max(0.0, sum2 / ns - mean * mean);
        best = std::min(best, mean - 3.0 * std::sqrt(var / ns));
    }
    return best;
}

/// khintchine_estimate with default settings, memoized per m.
inline double cached_khintchine(std::size_t m) {
    static std::mutex mu;
    static std::map<std::size_t, double> cache;
    std::lock_guard lock(mu);
    auto it = cache.find(m);
    if (it != cache.end()) return it->second;
    const double c = khintchine_estimate(m);
    cache.emplace(m, c);
    return c;
}

inline double default_gamma(double c_star) { return std::max(2.0 / c_star, 2.0); }

}  // namespace vbal
