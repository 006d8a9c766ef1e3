#include "fwdsat/errors.hpp"
#include "fwdsat/report.hpp"
#include "fwdsat/runner.hpp"
#include "fwdsat/scenario.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>

namespace {

struct CommonArgs {
    std::string scenario_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string grid_spec;
    double horizon = 0;
    bool horizon_set = false;
    double step = 0;
    bool step_set = false;
};

fwdsat::GridSpec parse_grid_spec(const std::string& spec) {
    fwdsat::GridSpec g;
    std::size_t* slots[] = {&g.angular, &g.radial, &g.input, &g.disturbance,
                            &g.quasi_random};
    std::size_t pos = 0, slot = 0;
    while (pos <= spec.size() && slot < 5) {
        const std::size_t x = std::min(spec.find('x', pos), spec.size());
        *slots[slot++] = std::stoull(spec.substr(pos, x - pos));
        if (x == spec.size()) break;
        pos = x + 1;
    }
    return g;
}

void add_common(CLI::App* cmd, CommonArgs& args, bool scenario_required = true) {
    auto* opt = cmd->add_option("--scenario", args.scenario_path, "scenario file");
    if (scenario_required) opt->required();
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "override all scenario seeds")
        ->each([&args](const std::string&) { args.seed_set = true; });
    cmd->add_option("--grid", args.grid_spec,
                    "grid spec angular x radial x input x disturbance [x qmc]");
    cmd->add_option("--horizon", args.horizon, "override schedule.horizon")
        ->each([&args](const std::string&) { args.horizon_set = true; });
    cmd->add_option("--step", args.step, "override integration.step")
        ->each([&args](const std::string&) { args.step_set = true; });
}

int run(const std::string& name, const CommonArgs& args) {
    namespace fs = std::filesystem;
    fwdsat::RunOptions opt;
    opt.out_dir = args.out_dir;
    try {
        const fs::path spath = args.scenario_path;
        const std::string text = fwdsat::read_file(spath);
        opt.base_dir = spath.has_parent_path() ? spath.parent_path() : fs::path(".");
        if (args.seed_set) opt.seed = args.seed;
        if (!args.grid_spec.empty()) opt.grid = parse_grid_spec(args.grid_spec);
        if (args.horizon_set) opt.horizon = args.horizon;
        if (args.step_set) opt.step = args.step;
        const fwdsat::Scenario scenario =
            fwdsat::parse_scenario(text, spath.filename().string());
        return fwdsat::run_subcommand(name, scenario, opt);
    } catch (const fwdsat::IoError& e) {
        std::cerr << "error (io): " << e.what() << "\n";
        return fwdsat::kExitIo;
    } catch (const fwdsat::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        try {
            fwdsat::write_file(fs::path(args.out_dir) / "error.json",
                               fwdsat::error_record_to_json("validation", e.what(),
                                                            fwdsat::kExitValidation));
        } catch (const std::exception&) {
        }
        return fwdsat::kExitValidation;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"saturation-based forwarding sampled-data control toolkit"};
    app.require_subcommand(1);

    const char* names[] = {"synthesize", "certify", "simulate", "delayed", "masp",
                           "report"};
    const char* descs[] = {
        "construct and export controller gains",
        "grid-certify the design inequalities",
        "simulate the sampled-data closed loop",
        "simulate the delayed loop with predictor compensation",
        "estimate the maximum allowable sampling period",
        "emit plot-ready columns from a trajectory file",
    };
    CommonArgs args[6];
    for (int i = 0; i < 6; ++i) add_common(app.add_subcommand(names[i], descs[i]), args[i]);

    CLI11_PARSE(app, argc, argv);
    for (int i = 0; i < 6; ++i)
        if (app.get_subcommand(static_cast<std::size_t>(i))->parsed())
            return run(names[i], args[i]);
    return 1;
}
