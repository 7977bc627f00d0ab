#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "vbal/baselines.hpp"
#include "vbal/core.hpp"
#include "vbal/density.hpp"
#include "vbal/gkk.hpp"
#include "vbal/io.hpp"
#include "vbal/reduce.hpp"
#include "vbal/rng.hpp"
#include "vbal/serialize.hpp"
#include "vbal/theory.hpp"

namespace vbal::bench {

enum class Signer : int { gkk = 0, random = 1, oracle = 2, reduce_only = 3, kk1d = 4 };

inline std::string_view to_string(Signer s) {
    switch (s) {
        case Signer::gkk: return "gkk";
        case Signer::random: return "random";
        case Signer::oracle: return "oracle";
        case Signer::reduce_only: return "reduce_only";
        case Signer::kk1d: return "kk1d";
    }
    return "unknown";
}

inline Signer parse_signer(std::string_view name) {
    for (int i = 0; i <= 4; ++i) {
        if (to_string(static_cast<Signer>(i)) == name) return static_cast<Signer>(i);
    }
    throw ValidationError("unknown signer '" + std::string(name) + "'");
}

inline bool schedulable(Signer s, std::size_t n, std::size_t m) {
    if (s == Signer::oracle) return n <= kBruteForceDefaultCap;
    if (s == Signer::kk1d) return m == 1;
    return true;
}

struct Cell {
    std::size_t n = 0;
    std::size_t m = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
};

/// Key-value run description. One "key = value" per line; '#' starts a comment.
///   density  = uniform:1 | triangular:1 | gaussian[:D[:sigma]] | tabulated:<csv>
///   grid     = 20x1, 20x2          (n x m cells)
///   signers  = gkk, random, oracle, reduce_only, kk1d
///   trials   = 300
///   seed     = 42
///   gammas   = 0.5, 1, 2           (threshold overlays)
///   timing   = false               (true records wall_ms; false keeps reruns byte-identical)
///   workers  = 1
///   gkk_gamma = 0                  (0 selects the default)
struct RunConfig {
    std::string density = "gaussian";
    std::vector<Cell> grid;
    std::vector<Signer> signers;
    std::size_t trials = 1;
    std::uint64_t seed = 0;
    std::vector<double> gammas;
    bool timing = false;
    unsigned workers = 1;
    double gkk_gamma = 0.0;
};

namespace detail {

inline std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        auto item = io::detail::trim(s.substr(start, comma - start));
        if (!item.empty()) out.emplace_back(item);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

inline std::uint64_t parse_u64(std::string_view s, std::string_view key) {
    std::uint64_t v = 0;
    s = io::detail::trim(s);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ValidationError("config: '" + std::string(key) + "' expects a nonnegative integer");
    }
    return v;
}

inline bool parse_bool(std::string_view s, std::string_view key) {
    s = io::detail::trim(s);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ValidationError("config: '" + std::string(key) + "' expects true or false");
}

}  // namespace detail

inline RunConfig parse_run_config(std::istream& in) {
    RunConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto view = io::detail::trim(line);
        if (view.empty() || view.front() == '#') continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) {
            throw ValidationError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key(io::detail::trim(view.substr(0, eq)));
        const auto value = io::detail::trim(view.substr(eq + 1));
        if (key == "density") {
            cfg.density = std::string(value);
        } else if (key == "grid") {
            cfg.grid.clear();
            for (const auto& item : detail::split_list(value)) {
                const auto x = item.find('x');
                if (x == std::string::npos) throw ValidationError("config: grid cell '" + item + "' is not NxM");
                const auto n = detail::parse_u64(std::string_view(item).substr(0, x), "grid");
                const auto m = detail::parse_u64(std::string_view(item).substr(x + 1), "grid");
                if (n == 0 || m == 0) throw ValidationError("config: grid cells need positive n and m");
                cfg.grid.push_back({n, m});
            }
        } else if (key == "signers") {
            cfg.signers.clear();
            for (const auto& item : detail::split_list(value)) cfg.signers.push_back(parse_signer(item));
        } else if (key == "trials") {
            cfg.trials = detail::parse_u64(value, key);
        } else if (key == "seed") {
            cfg.seed = detail::parse_u64(value, key);
        } else if (key == "gammas") {
            cfg.gammas.clear();
            for (const auto& item : detail::split_list(value)) cfg.gammas.push_back(io::detail::parse_double(item, line_no));
        } else if (key == "timing") {
            cfg.timing = detail::parse_bool(value, key);
        } else if (key == "workers") {
            cfg.workers = static_cast<unsigned>(std::max<std::uint64_t>(1, detail::parse_u64(value, key)));
        } else if (key == "gkk_gamma") {
            cfg.gkk_gamma = io::detail::parse_double(value, line_no);
        } else {
            throw ValidationError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
    }
    return cfg;
}

inline RunConfig parse_run_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config '" + path + "'");
    return parse_run_config(in);
}

struct TrialRecord {
    std::size_t cell = 0;
    std::size_t n = 0;
    std::size_t m = 0;
    Signer signer = Signer::random;
    std::size_t trial = 0;
    double sup_norm = 0.0;
    double wall_ms = 0.0;
    std::uint64_t seed_hi = 0;  // master seed
    std::uint64_t seed_lo = 0;  // instance stream id
    std::string error;
    Signing signing;
    std::vector<PhaseDiagnostics> phases;
};

struct CompareResult {
    std::vector<TrialRecord> records;
    std::size_t verified = 0;
    std::vector<std::string> verification_failures;
    std::size_t oracle_violations = 0;  // cells/trials where gkk beat the oracle
};

/// Stream of the instance for (cell, trial); the signer for the same trial uses tag signer + 1.
inline RngStream instance_stream(std::uint64_t seed, std::size_t cell, std::size_t trial) {
    return RngStream(seed, 0).derive({cell, trial, 0});
}

inline RngStream signer_stream(std::uint64_t seed, std::size_t cell, std::size_t trial, Signer s) {
    return RngStream(seed, 0).derive({cell, trial, static_cast<std::uint64_t>(s) + 1});
}

inline VectorSet regenerate_instance(const std::string& density, std::size_t n, std::size_t m, std::uint64_t seed_hi,
                                     std::uint64_t seed_lo) {
    RngStream rng(seed_hi, seed_lo);
    return sample_instance(parse_density_spec(density, n), m, n, rng);
}

inline TrialRecord run_signer(const RunConfig& cfg, const VectorSet& x, const BoundedDensity& rho, std::size_t cell,
                              std::size_t trial, Signer s, std::uint64_t instance_id) {
    TrialRecord rec;
    rec.cell = cell;
    rec.n = x.count();
    rec.m = x.dim();
    rec.signer = s;
    rec.trial = trial;
    rec.seed_hi = cfg.seed;
    rec.seed_lo = instance_id;
    auto rng = signer_stream(cfg.seed, cell, trial, s);
    const auto t0 = std::chrono::steady_clock::now();
    try {
        switch (s) {
            case Signer::gkk: {
                GkkConfig gc;
                gc.gamma = cfg.gkk_gamma;
                auto r = gkk_run(x, rho, gc, rng);
                rec.signing = r.signing;
                rec.sup_norm = r.report.sup_norm;
                rec.phases = std::move(r.phases);
                break;
            }
            case Signer::random: {
                auto r = random_signing(x, rng);
                rec.signing = r.signing;
                rec.sup_norm = r.sup_norm;
                break;
            }
            case Signer::oracle: {
                auto r = brute_force_min(x);
                rec.signing = r.signing;
                rec.sup_norm = r.sup_norm;
                break;
            }
            case Signer::reduce_only: {
                auto r = reduce(x);
                rec.signing = r.signing;
                rec.sup_norm = r.sup_norm;
                break;
            }
            case Signer::kk1d: {
                auto r = kk1d(x);
                rec.signing = r.report.signing;
                rec.sup_norm = r.report.sup_norm;
                break;
            }
        }
    } catch (const std::exception& e) {
        rec.sup_norm = std::numeric_limits<double>::quiet_NaN();
        rec.error = e.what();
    }
    if (cfg.timing) {
        rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }
    return rec;
}

/// Runs every (cell, trial, signer); output order is (cell, signer, trial)
/// regardless of the number of workers. About 1% of the records are
/// re-verified by regenerating their instance from the seed coordinates.
inline CompareResult compare(const RunConfig& cfg) {
    struct Task {
        std::size_t cell, trial;
    };
    std::vector<Task> tasks;
    for (std::size_t c = 0; c < cfg.grid.size(); ++c) {
        for (std::size_t t = 0; t < cfg.trials; ++t) tasks.push_back({c, t});
    }
    std::vector<std::vector<TrialRecord>> slots(tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            const auto [c, t] = tasks[i];
            const auto [n, m] = cfg.grid[c];
            const auto rho = parse_density_spec(cfg.density, n);
            auto rng = instance_stream(cfg.seed, c, t);
            const std::uint64_t id = rng.stream_id();
            const auto x = sample_instance(rho, m, n, rng);
            for (auto s : cfg.signers) {
                if (!schedulable(s, n, m)) continue;
                slots[i].push_back(run_signer(cfg, x, rho, c, t, s, id));
            }
        }
    };
    if (cfg.workers <= 1 || tasks.size() <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < std::min<std::size_t>(cfg.workers, tasks.size()); ++w) pool.emplace_back(worker);
    }

    CompareResult out;
    for (auto& s : slots) {
        for (auto& r : s) out.records.push_back(std::move(r));
    }
    std::stable_sort(out.records.begin(), out.records.end(), [](const TrialRecord& a, const TrialRecord& b) {
        return std::tuple(a.cell, static_cast<int>(a.signer), a.trial) <
               std::tuple(b.cell, static_cast<int>(b.signer), b.trial);
    });

    for (std::size_t i = 0; i < out.records.size(); i += 100) {
        const auto& r = out.records[i];
        if (!r.error.empty()) continue;
        const auto x = regenerate_instance(cfg.density, r.n, r.m, r.seed_hi, r.seed_lo);
        const double again = discrepancy(x, r.signing).sup_norm;
        ++out.verified;
        if (std::abs(again - r.sup_norm) > 1e-9 * std::max(1.0, std::abs(again))) {
            out.verification_failures.push_back("cell " + std::to_string(r.cell) + " trial " + std::to_string(r.trial) +
                                                " " + std::string(to_string(r.signer)));
        }
    }

    std::map<std::pair<std::size_t, std::size_t>, double> oracle;
    for (const auto& r : out.records) {
        if (r.signer == Signer::oracle && r.error.empty()) oracle[{r.cell, r.trial}] = r.sup_norm;
    }
    for (const auto& r : out.records) {
        if (r.signer != Signer::gkk || !r.error.empty()) continue;
        auto it = oracle.find({r.cell, r.trial});
        if (it != oracle.end() && r.sup_norm < it->second) ++out.oracle_violations;
    }
    return out;
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

inline void write_csv(std::ostream& out, const std::vector<TrialRecord>& records) {
    out << "n,m,signer,trial,sup_norm,wall_ms,seed_hi,seed_lo,error\n";
    for (const auto& r : records) {
        out << r.n << ',' << r.m << ',' << to_string(r.signer) << ',' << r.trial << ','
            << (std::isnan(r.sup_norm) ? std::string("NaN") : io::format_double(r.sup_norm)) << ','
            << io::format_double(r.wall_ms) << ',' << r.seed_hi << ',' << r.seed_lo << ',' << csv_escape(r.error)
            << '\n';
    }
}

/// Linear-interpolated quantile of sorted data.
inline double quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return quantile(v, 0.5);
}

inline nlohmann::json summarize(const RunConfig& cfg, const CompareResult& res) {
    using nlohmann::json;
    json cells = json::array();
    for (std::size_t c = 0; c < cfg.grid.size(); ++c) {
        const auto [n, m] = cfg.grid[c];
        json cj = {{"n", n}, {"m", m}};
        std::map<Signer, std::vector<double>> values;
        std::map<Signer, std::size_t> failures;
        for (const auto& r : res.records) {
            if (r.cell != c) continue;
            if (r.error.empty()) {
                values[r.signer].push_back(r.sup_norm);
            } else {
                ++failures[r.signer];
            }
        }
        json sj = json::object();
        for (auto s : cfg.signers) {
            if (!schedulable(s, n, m)) {
                sj[std::string(to_string(s))] = {{"scheduled", false}};
                continue;
            }
            auto v = values[s];
            std::sort(v.begin(), v.end());
            sj[std::string(to_string(s))] = {{"scheduled", true},
                                             {"count", v.size()},
                                             {"failures", failures[s]},
                                             {"median", finite_or_null(quantile(v, 0.5))},
                                             {"q1", finite_or_null(quantile(v, 0.25))},
                                             {"q3", finite_or_null(quantile(v, 0.75))}};
        }
        cj["signers"] = sj;
        json tj = json::array();
        for (double g : cfg.gammas) {
            const double eps = theory::epsilon_threshold(n, m, g);
            json frac = json::object();
            for (auto& [s, v] : values) {
                const auto below = std::count_if(v.begin(), v.end(), [&](double x) { return x <= eps; });
                frac[std::string(to_string(s))] = v.empty() ? 0.0 : static_cast<double>(below) / static_cast<double>(v.size());
            }
            tj.push_back({{"gamma", g},
                          {"epsilon", eps},
                          {"limit_1_minus_exp_neg_2_gamma_m", 1.0 - std::exp(-2.0 * std::pow(g, static_cast<double>(m)))},
                          {"fraction_below", frac}});
        }
        cj["thresholds"] = tj;
        cells.push_back(cj);
    }
    return {{"seed", cfg.seed},
            {"density", cfg.density},
            {"trials", cfg.trials},
            {"cells", cells},
            {"verified_records", res.verified},
            {"verification_failures", res.verification_failures},
            {"gkk_below_oracle", res.oracle_violations}};
}

inline void write_outputs(const RunConfig& cfg, const CompareResult& res, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "results.csv");
        write_csv(out, res.records);
    }
    {
        std::ofstream out(dir / "summary.json");
        out << summarize(cfg, res).dump(2) << '\n';
    }
    std::ofstream out(dir / "phases.jsonl");
    for (const auto& r : res.records) {
        for (const auto& p : r.phases) {
            nlohmann::json j = p;
            j["n"] = r.n;
            j["m"] = r.m;
            j["trial"] = r.trial;
            out << j.dump() << '\n';
        }
    }
}

}  // namespace vbal::bench
