#pragma once

#include "fwdsat/controller.hpp"
#include "fwdsat/design.hpp"
#include "fwdsat/simulate.hpp"
#include "fwdsat/systems.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fwdsat {

// Parsed scenario document. The format is line-oriented `key = value` with
// dotted section keys; see the README for the grammar.
struct Scenario {
    // system
    std::string system = "example41"; // example41 | example42 | scalar_chain | inline_chain
    std::size_t chain_n = 0;
    double k1 = 0, k2 = 0, L1 = 0;     // example42 parameters
    std::vector<std::string> inline_g; // inline_chain: g2, g3, ... expressions
    std::size_t disturbance_dim = 0;   // inline_chain only
    double disturbance_bound = 1.0;

    // controller
    std::string controller_kind = "recursive_forwarding";
    std::string gains;      // paper_4_5 | paper_4_6 (named schedules)
    std::string gains_file; // GainSchedule JSON produced by synthesize
    double K0 = 1.0, omega0 = 1.0;
    double ctrl_R = 0, ctrl_omega = 1.0, ctrl_K = 0; // single_stage (example42)

    // schedule
    double r = 0;
    std::string w = "zero"; // zero | const:V | paper_sine | seeded:SEED
    double horizon = 0;

    // delays (optional)
    bool has_delays = false;
    double tau = 0, T = 0;

    // initial condition(s)
    Vec x0;
    std::vector<Vec> x0_bank;

    // disturbance realization
    std::string d_mode = "none"; // none | constant | seeded
    Vec d_const;
    std::uint64_t d_seed = 1;

    // integration
    double step = 1e-3;

    // masp search
    double r_hi = 0;
    std::uint64_t masp_seed = 1;
    std::size_t masp_w_bank = 3;

    // certification
    std::size_t certify_stage = 1;
    double delta = 0; // 0 = module default
    GridSpec grid;

    // output file names, resolved against the --out directory
    std::string out_trajectory = "trajectory.csv";
    std::string out_report = "report.json";
    std::string out_certificates = "certificates.json";
    std::string out_predictions = "predictions.csv";
    std::string out_gains = "gains.json";

    std::uint64_t seed = 1;

    bool operator==(const Scenario&) const = default;
};

// Parses and validates a scenario document. Diagnostics carry
// "<source>:<line>:" prefixes. Malformed text raises ParseError; inconsistent
// values raise ValidationError.
Scenario parse_scenario(const std::string& text, const std::string& source = "scenario");

// Canonical serialization; parse(serialize(s)) == s.
std::string serialize_scenario(const Scenario& s);

// Resolved runtime objects for the simulation-facing subcommands.
struct ResolvedScenario {
    SystemModel system;
    ControllerSpec controller;
    PerturbationSpec w;
    DisturbanceSpec disturbance;
};

// Builds the system and controller, checking cross-field consistency
// (dimensions, gain files, windows). base_dir resolves gains_file.
ResolvedScenario resolve_scenario(const Scenario& s, const std::string& base_dir = ".");

// Named gain schedules for the worked example.
GainSchedule named_gain_schedule(const std::string& name);

// Perturbation spec from its scenario token.
PerturbationSpec parse_w_spec(const std::string& token);

} // namespace fwdsat
