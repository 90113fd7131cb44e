#include "porogas/app.hpp"
#include "porogas/errors.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
    CLI::App cli{"Poroelastic single-component gas flow simulator"};
    std::string config_path, preset, out_dir, study;
    std::uint64_t seed = 0;
    double t_end = 0.0;
    int max_steps = 0, snapshot_every = 0;

    auto* cfg_opt = cli.add_option("--config", config_path, "key = value configuration file");
    auto* preset_opt = cli.add_option("--preset", preset, "example1 | example2 | example3 | example4_2d");
    cfg_opt->excludes(preset_opt);
    auto* out_opt = cli.add_option("--out-dir", out_dir, "output directory");
    auto* seed_opt = cli.add_option("--seed", seed, "RNG seed");
    auto* tend_opt = cli.add_option("--t-end", t_end, "final time (s)");
    auto* steps_opt = cli.add_option("--max-steps", max_steps, "maximum number of steps")->check(CLI::NonNegativeNumber);
    auto* snap_opt = cli.add_option("--snapshot-every", snapshot_every, "snapshot cadence in steps")->check(CLI::PositiveNumber);
    cli.add_option("--refinement-study", study, "run a convergence study instead of a time loop")
        ->check(CLI::IsMember({"temporal", "spatial"}));
    CLI11_PARSE(cli, argc, argv);

    if (cfg_opt->count() + preset_opt->count() != 1) {
        std::cerr << "exactly one of --config or --preset is required\n";
        return 2;
    }
    try {
        porogas::RunConfig cfg = cfg_opt->count() ? porogas::load_config(config_path) : porogas::build_preset(preset);
        if (out_opt->count()) cfg.out_dir = out_dir;
        if (seed_opt->count()) cfg.seed = seed;
        if (tend_opt->count()) cfg.t_end = t_end;
        if (steps_opt->count()) cfg.max_steps = max_steps;
        if (snap_opt->count()) cfg.snapshot_every = snapshot_every;

        if (!study.empty()) {
            const auto result = study == "temporal" ? porogas::temporal_study(cfg, std::cerr)
                                                    : porogas::spatial_study(cfg, std::cerr);
            std::filesystem::create_directories(cfg.out_dir);
            const auto path = std::filesystem::path(cfg.out_dir) / "study.csv";
            std::ofstream out(path);
            porogas::write_study(out, result, study == "temporal" ? "tau" : "h");
            porogas::write_study(std::cout, result, study == "temporal" ? "tau" : "h");
            return 0;
        }
        const auto summary = porogas::run(cfg, std::cerr);
        std::cout << "completed " << summary.steps << " steps, t = " << summary.t << '\n';
        return 0;
    } catch (const porogas::StepFailure& e) {
        std::cerr << "step failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
