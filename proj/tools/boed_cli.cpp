// Command-line front end: search, evaluate, replay, simulate.

#include <CLI11.hpp>

#include <iostream>

#include "boed/errors.hpp"
#include "boed/harness.hpp"

namespace {

boed::CampaignConfig load_config(const std::string& path, const std::optional<std::uint64_t>& seed) {
    boed::CampaignConfig cfg = boed::CampaignConfig::load(path);
    if (seed) cfg.seed = *seed;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian experimental design for multi-armed bandit learner models"};
    app.require_subcommand(1);

    std::string config_path, out_dir, design_text = "baseline";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs, n_test;
    std::size_t n_traj = 100;
    bool verify_only = false, quiet = false;
    app.add_flag("-q,--quiet", quiet, "Suppress progress output");

    auto* search = app.add_subcommand("search", "Optimize the design for a campaign");
    search->add_option("-c,--config", config_path, "Campaign config file")->required()->check(CLI::ExistingFile);
    search->add_option("--seed", seed, "Override the config seed");
    search->add_option("-o,--out", out_dir, "Output directory (default: output_dir from the config)");
    search->add_option("-j,--jobs", jobs, "Parallel workers for the initial design phase");

    auto* evaluate = app.add_subcommand("evaluate", "Evaluate a design against held-out simulations");
    evaluate->add_option("-c,--config", config_path, "Campaign config file")->required()->check(CLI::ExistingFile);
    evaluate->add_option("-d,--design", design_text,
                         "optimal:<run dir> | explicit:<r0c0,r0c1;r1c0,...> | baseline");
    evaluate->add_option("--seed", seed, "Override the config seed");
    evaluate->add_option("-o,--out", out_dir, "Output directory")->required();
    evaluate->add_option("--n-test", n_test, "Override eval.n_test");

    auto* rep = app.add_subcommand("replay", "Verify a run directory and re-execute it");
    std::string run_dir;
    rep->add_option("run_dir", run_dir, "Run directory containing manifest.json")->required();
    rep->add_flag("--verify-only", verify_only, "Only check the files on disk");

    auto* sim = app.add_subcommand("simulate", "Dump prior-predictive trajectories at a design");
    sim->add_option("-c,--config", config_path, "Campaign config file")->required()->check(CLI::ExistingFile);
    sim->add_option("-d,--design", design_text, "explicit:<rows> (rows separated by ';')")->required();
    sim->add_option("-n", n_traj, "Number of trajectories");
    sim->add_option("--seed", seed, "Override the config seed");
    sim->add_option("-o,--out", out_dir, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);
    std::ostream* log = quiet ? nullptr : &std::cerr;

    try {
        if (*search) {
            boed::CampaignConfig cfg = load_config(config_path, seed);
            if (jobs) cfg.parallelism = *jobs;
            const auto outcome = boed::run_design_search(cfg, out_dir.empty() ? cfg.output_dir : out_dir, log);
            std::cout << outcome.dir.string() << '\n';
        } else if (*evaluate) {
            boed::CampaignConfig cfg = load_config(config_path, seed);
            if (n_test) cfg.eval.n_test = *n_test;
            boed::run_evaluation(cfg, boed::DesignSource::parse(design_text), out_dir, log);
            std::cout << out_dir << '\n';
        } else if (*rep) {
            const auto report = boed::replay(run_dir, verify_only, log);
            boed::print_replay_report(std::cout, report);
            return report.ok() ? 0 : 1;
        } else if (*sim) {
            const boed::CampaignConfig cfg = load_config(config_path, seed);
            const auto src = boed::DesignSource::parse(design_text);
            if (src.kind != boed::DesignSource::Kind::Explicit) throw boed::ConfigError("simulate needs explicit:<rows>");
            boed::simulate_to_directory(cfg, boed::Design(src.rows), n_traj, out_dir);
            std::cout << out_dir << '\n';
        }
    } catch (const boed::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const boed::ArtifactError& e) {
        std::cerr << "artifact error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
