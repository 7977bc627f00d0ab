#pragma once

#include <cmath>

#include "json.hpp"
#include "vbal/gkk.hpp"
#include "vbal/prdc.hpp"
#include "vbal/theory.hpp"

namespace vbal {

// JSON has no NaN or infinity.
inline nlohmann::json finite_or_null(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

inline void to_json(nlohmann::json& j, const PhaseDiagnostics& d) {
    j = {{"phase", d.phase},
         {"alpha", d.alpha},
         {"child_alpha", d.child_alpha},
         {"per_axis", d.per_axis},
         {"cube_count", d.cube_count},
         {"n_in", d.n_in},
         {"n_good", d.n_good},
         {"n_bad", d.n_bad},
         {"n_leftover", d.n_leftover},
         {"n_differences", d.n_differences},
         {"cleanup_draws", d.cleanup_draws},
         {"cleanup_budget", d.cleanup_budget},
         {"cleanup_stopped", d.cleanup_stopped},
         {"reduce_sup_norm", d.reduce_sup_norm},
         {"v_norm_initial", d.v_norm_initial},
         {"v_norm_final", d.v_norm_final},
         {"threshold", d.threshold},
         {"n_out", d.n_out},
         {"attempt", d.attempt},
         {"work", d.work}};
    if (d.configuration) {
        auto& cfg = j["configuration"] = nlohmann::json::array();
        for (const auto& p : *d.configuration) cfg.push_back({p.cube, p.good});
    }
}

inline void to_json(nlohmann::json& j, const GkkResult& r) {
    j = {{"signing", r.signing.to_string()},
         {"sup_norm", r.report.sup_norm},
         {"coordinate_sums", r.report.coordinate_sums},
         {"alpha_trace", r.alpha_trace},
         {"set_sizes", r.set_sizes},
         {"stop_reason", to_string(r.stop)},
         {"gamma", r.config.gamma},
         {"c_star", r.config.c_star},
         {"phase_cap", r.config.phase_cap},
         {"min_set_size", r.config.min_set_size},
         {"final_reduce_size", r.final_reduce_size},
         {"final_reduce_bound", r.final_reduce_bound},
         {"retries_used", r.retries_used},
         {"work", r.work},
         {"phases", r.phases}};
}

/// Two-column CSV "alpha,phi".
inline std::string phi_csv(const theory::PhiProfile& p) {
    std::string out = "alpha,phi\n";
    for (std::size_t i = 0; i < p.alphas.size(); ++i) {
        out += io::format_double(p.alphas[i]) + "," + io::format_double(p.values[i]) + "\n";
    }
    return out;
}

}  // namespace vbal
