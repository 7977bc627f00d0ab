// vbal: command-line front end for the vector balancing library.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "vbal/vbal.hpp"

namespace {

void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw vbal::ValidationError("cannot write '" + path + "'");
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Vector balancing: GKK differencing, REDUCE rounding, baselines and moment computations"};
    app.require_subcommand(1);

    // sample
    auto* sample = app.add_subcommand("sample", "Draw an instance with iid entries and write it as CSV");
    std::string sample_density = "uniform:1";
    std::size_t sample_m = 1, sample_n = 1;
    std::uint64_t sample_seed = 0, sample_stream = 0;
    std::string sample_out;
    sample->add_option("--density", sample_density, "Density spec")->capture_default_str();
    sample->add_option("--m", sample_m, "Dimension")->required();
    sample->add_option("--n", sample_n, "Number of vectors")->required();
    sample->add_option("--seed", sample_seed, "Master seed")->capture_default_str();
    sample->add_option("--stream", sample_stream, "Stream id")->capture_default_str();
    sample->add_option("--out", sample_out, "Output path (default stdout)");

    // gkk run
    auto* gkk = app.add_subcommand("gkk", "Generalized Karmarkar-Karp");
    gkk->require_subcommand(1);
    auto* gkk_run = gkk->add_subcommand("run", "Sign an instance with GKK");
    std::string gkk_instance, gkk_density = "uniform:1", gkk_out;
    std::uint64_t gkk_seed = 0;
    double gkk_gamma = 0.0;
    std::size_t gkk_phases = 0;
    bool gkk_configuration = false;
    gkk_run->add_option("--instance", gkk_instance, "Instance CSV")->required()->check(CLI::ExistingFile);
    gkk_run->add_option("--density", gkk_density, "Density the instance was drawn from")->capture_default_str();
    gkk_run->add_option("--seed", gkk_seed, "Seed of the algorithm's randomness")->capture_default_str();
    gkk_run->add_option("--gamma", gkk_gamma, "Clean-up radius constant (default max(2/c*, 2))");
    gkk_run->add_option("--phases", gkk_phases, "Phase cap (default ceil(C* ln n))");
    gkk_run->add_flag("--configuration", gkk_configuration, "Record per-point cube and label");
    gkk_run->add_option("--out", gkk_out, "Output JSON path (default stdout)");

    // reduce
    auto* red = app.add_subcommand("reduce", "Round an instance with REDUCE");
    std::string red_instance;
    red->add_option("instance", red_instance, "Instance CSV")->required()->check(CLI::ExistingFile);

    // oracle
    auto* orc = app.add_subcommand("oracle", "Exact minimum discrepancy by enumeration");
    std::string orc_instance;
    std::size_t orc_cap = vbal::kBruteForceDefaultCap;
    unsigned orc_workers = 1;
    orc->add_option("instance", orc_instance, "Instance CSV")->required()->check(CLI::ExistingFile);
    orc->add_option("--cap", orc_cap, "Largest n accepted")->capture_default_str();
    orc->add_option("--workers", orc_workers, "Threads")->capture_default_str();

    // theory
    auto* th = app.add_subcommand("theory", "Moments, phi profile and c(delta)");
    th->require_subcommand(1);
    auto* th_mom = th->add_subcommand("moments", "First and second moments of the solution count");
    std::size_t mom_n = 0, mom_m = 0;
    double mom_gamma = 1.0;
    th_mom->add_option("--n", mom_n)->required();
    th_mom->add_option("--m", mom_m)->required();
    th_mom->add_option("--gamma", mom_gamma)->capture_default_str();

    auto* th_phi = th->add_subcommand("phi", "Exponent profile of the second-moment summand");
    std::size_t phi_n = 0, phi_m = 0, phi_grid = 101;
    std::optional<double> phi_eps, phi_gamma;
    std::string phi_out;
    th_phi->add_option("--n", phi_n)->required();
    th_phi->add_option("--m", phi_m)->required();
    th_phi->add_option("--eps", phi_eps, "Threshold epsilon");
    th_phi->add_option("--gamma", phi_gamma, "Use the threshold for this gamma instead of --eps");
    th_phi->add_option("--grid", phi_grid, "Odd grid size >= 101")->capture_default_str();
    th_phi->add_option("--out", phi_out, "Output CSV path (default stdout)");

    auto* th_cd = th->add_subcommand("cdelta", "Linear-regime constant c(delta)");
    double cd_delta = 1.0;
    th_cd->add_option("--delta", cd_delta)->required();

    // bench compare
    auto* bench = app.add_subcommand("bench", "Multi-trial signer comparisons");
    bench->require_subcommand(1);
    auto* cmp = bench->add_subcommand("compare", "Run a configuration and write results.csv, summary.json, phases.jsonl");
    std::string cmp_config, cmp_dir;
    cmp->add_option("--config", cmp_config, "Key-value config file")->required()->check(CLI::ExistingFile);
    cmp->add_option("--out-dir", cmp_dir, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sample) {
            vbal::RngStream rng(sample_seed, sample_stream);
            const auto rho = vbal::parse_density_spec(sample_density, sample_n);
            const auto x = vbal::sample_instance(rho, sample_m, sample_n, rng);
            std::ostringstream os;
            vbal::io::write_instance(os, x);
            emit(sample_out, os.str());
        } else if (*gkk_run) {
            const auto x = vbal::io::read_instance_file(gkk_instance);
            const auto rho = vbal::parse_density_spec(gkk_density, x.count());
            vbal::GkkConfig cfg;
            cfg.gamma = gkk_gamma;
            cfg.phase_cap = gkk_phases;
            cfg.record_configuration = gkk_configuration;
            const auto res = vbal::gkk_run(x, rho, cfg, vbal::RngStream(gkk_seed, 0));
            nlohmann::json j = res;
            j["density"] = rho.describe();
            j["seed"] = gkk_seed;
            emit(gkk_out, j.dump(2) + "\n");
        } else if (*red) {
            const auto x = vbal::io::read_instance_file(red_instance);
            const auto res = vbal::reduce(x);
            std::cout << res.signing.to_string() << '\n'
                      << "sup_norm " << vbal::io::format_double(res.sup_norm) << '\n'
                      << "bound " << vbal::io::format_double(res.bound) << '\n';
        } else if (*orc) {
            const auto x = vbal::io::read_instance_file(orc_instance);
            const auto res = vbal::brute_force_min(x, orc_cap, orc_workers);
            std::cout << res.signing.to_string() << '\n'
                      << "sup_norm " << vbal::io::format_double(res.sup_norm) << '\n';
        } else if (*th_mom) {
            const auto q = vbal::theory::MomentQuery::with_gamma(mom_n, mom_m, mom_gamma);
            const auto first = vbal::theory::first_moment_log(q);
            nlohmann::json j = {{"n", mom_n},
                                {"m", mom_m},
                                {"gamma", mom_gamma},
                                {"log_epsilon", q.log_eps()},
                                {"log_first_moment", vbal::finite_or_null(first.value)},
                                {"first_moment_underflow", first.underflow}};
            if (mom_n <= vbal::theory::kSecondMomentCap) {
                const auto second = vbal::theory::second_moment_log(q);
                j["log_second_moment"] = vbal::finite_or_null(second.value);
                j["ratio"] = vbal::finite_or_null(std::exp(second.value - 2.0 * first.value));
            }
            std::cout << j.dump(2) << '\n';
        } else if (*th_phi) {
            if (!phi_eps && !phi_gamma) throw vbal::ValidationError("theory phi: give --eps or --gamma");
            const auto q = phi_gamma ? vbal::theory::MomentQuery::with_gamma(phi_n, phi_m, *phi_gamma)
                                     : vbal::theory::MomentQuery::with_eps(phi_n, phi_m, *phi_eps);
            const auto p = vbal::theory::phi_profile(q, phi_grid);
            emit(phi_out, vbal::phi_csv(p));
        } else if (*th_cd) {
            std::cout << vbal::io::format_double(vbal::theory::c_delta(cd_delta)) << '\n';
        } else if (*cmp) {
            const auto cfg = vbal::bench::parse_run_config_file(cmp_config);
            const auto res = vbal::bench::compare(cfg);
            vbal::bench::write_outputs(cfg, res, cmp_dir);
            std::cout << res.records.size() << " records, " << res.verified << " re-verified, "
                      << res.verification_failures.size() << " verification failures\n";
            if (!res.verification_failures.empty()) return 3;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
