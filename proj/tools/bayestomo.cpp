#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bayestomo/commands.hpp"

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
    std::vector<std::uint64_t> seeds;
    std::string cur;
    for (char c : s + ",") {
        if (c == ',') {
            if (!cur.empty()) seeds.push_back(std::stoull(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    return seeds;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian travel-time tomography with GMRF spatial priors"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed_override;
    int workers = 1;
    bool quiet = false;
    app.add_option("--config", config_path, "run configuration (JSON)");
    app.add_option("--seed", seed_override, "override the chain seed");
    app.add_option("--out", out_dir, "output directory (overrides the config)");
    app.add_option("--workers", workers, "concurrent study cells")->check(CLI::PositiveNumber);
    app.add_flag("--quiet", quiet, "suppress progress output");

    auto* generate = app.add_subcommand("generate", "build geometry, forward matrix and data");
    auto* sample = app.add_subcommand("sample", "run the Gibbs-Metropolis chain");
    bool export_csv = false;
    sample->add_flag("--export-csv", export_csv, "also export the trace as CSV");
    auto* diagnose = app.add_subcommand("diagnose", "posterior summary of a trace");
    std::string beta_true_path;
    diagnose->add_option("--beta-true", beta_true_path, "known truth for model misfit");
    auto* lsqr_cmd = app.add_subcommand("lsqr", "damped least-squares baseline");
    double damping = 1.0;
    lsqr_cmd->add_option("--damping", damping, "LSQR damping parameter");
    auto* study = app.add_subcommand("study", "run a scenario matrix across seeds");
    std::string setup_name;
    std::string seeds_arg;
    study->add_option("--setup", setup_name, "I_a, I_b, II_a or II_b")->required();
    study->add_option("--seeds", seeds_arg, "comma-separated seed list")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        bayestomo::CommandOptions opt;
        opt.out_dir = out_dir;
        opt.quiet = quiet;
        opt.workers = workers;
        opt.export_csv = export_csv;

        if (study->parsed()) {
            auto seeds = parse_seed_list(seeds_arg);
            return bayestomo::cmd_study(bayestomo::parse_setup(setup_name), seeds, opt);
        }

        if (config_path.empty())
            throw bayestomo::ConfigError("--config is required for this subcommand");
        bayestomo::RunConfig cfg = bayestomo::RunConfig::load(config_path);
        if (seed_override) cfg.chain.seed = *seed_override;

        if (generate->parsed()) return bayestomo::cmd_generate(cfg, opt);
        if (sample->parsed()) return bayestomo::cmd_sample(cfg, opt);
        if (diagnose->parsed()) {
            std::optional<std::filesystem::path> bt;
            if (!beta_true_path.empty()) bt = beta_true_path;
            return bayestomo::cmd_diagnose(cfg, opt, bt);
        }
        if (lsqr_cmd->parsed()) return bayestomo::cmd_lsqr(cfg, opt, damping);
        return 2;
    } catch (const bayestomo::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const bayestomo::NotPositiveDefinite& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const bayestomo::IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
