#pragma once

#include "fwdsat/design.hpp"
#include "fwdsat/scenario.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace fwdsat {

struct RunOptions {
    std::filesystem::path out_dir = ".";
    std::filesystem::path base_dir = "."; // resolves controller.file
    std::optional<std::uint64_t> seed;
    std::optional<GridSpec> grid;
    std::optional<double> horizon;
    std::optional<double> step;
    bool quiet = false;
};

// Exit codes shared by the library runner and the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitDivergence = 3;
inline constexpr int kExitInfeasible = 4;
inline constexpr int kExitIo = 5;

// Executes one subcommand (synthesize, certify, simulate, delayed, masp,
// report) against the scenario, writing artifacts under out_dir. Returns the
// exit code; on error also writes <out_dir>/error.json.
int run_subcommand(const std::string& name, const Scenario& scenario,
                   const RunOptions& options);

} // namespace fwdsat
