#include "fwdsat/scenario.hpp"

#include "fwdsat/errors.hpp"
#include "fwdsat/report.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>

namespace fwdsat {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

struct Diag {
    std::string source;
    std::size_t line = 0;
    [[noreturn]] void parse_fail(const std::string& msg) const {
        throw ParseError(source + ":" + std::to_string(line) + ": " + msg);
    }
    [[noreturn]] void invalid(const std::string& msg) const {
        throw ValidationError(source + ":" + std::to_string(line) + ": " + msg);
    }
};

double parse_number(const std::string& v, const Diag& d) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        d.parse_fail("expected a number, got '" + v + "'");
    }
}

std::uint64_t parse_u64(const std::string& v, const Diag& d) {
    try {
        std::size_t used = 0;
        const unsigned long long x = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        d.parse_fail("expected a nonnegative integer, got '" + v + "'");
    }
}

Vec parse_vector(const std::string& v, const Diag& d) {
    if (v.size() < 2 || v.front() != '[' || v.back() != ']')
        d.parse_fail("expected a bracketed list like [1, 2, 3]");
    std::vector<double> xs;
    std::string body = v.substr(1, v.size() - 2);
    std::size_t pos = 0;
    while (pos <= body.size()) {
        const std::size_t comma = std::min(body.find(',', pos), body.size());
        const std::string cell = trim(body.substr(pos, comma - pos));
        if (!cell.empty()) xs.push_back(parse_number(cell, d));
        if (comma == body.size()) break;
        pos = comma + 1;
    }
    Vec out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = xs[i];
    return out;
}

std::string vector_to_string(const Vec& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.dim(); ++i) {
        if (i) out += ", ";
        out += format_double(v[i]);
    }
    return out + "]";
}

bool starts_with(const std::string& s, const std::string& prefix) {
    return s.rfind(prefix, 0) == 0;
}

} // namespace

PerturbationSpec parse_w_spec(const std::string& token) {
    if (token == "zero") return PerturbationSpec::zero();
    if (token == "paper_sine") return PerturbationSpec::paper_sine();
    if (starts_with(token, "const:")) {
        const double v = std::stod(token.substr(6));
        if (!(v >= 0.0))
            throw ValidationError("schedule.w constant must be nonnegative");
        return PerturbationSpec::constant(v);
    }
    if (starts_with(token, "seeded:")) {
        const auto seed = static_cast<std::uint64_t>(std::stoull(token.substr(7)));
        return PerturbationSpec::seeded(seed, 65536, std::log(2.0));
    }
    throw ValidationError("unknown schedule.w spec '" + token + "'");
}

GainSchedule named_gain_schedule(const std::string& name) {
    if (name == "paper_4_5") return example41_gains_conservative();
    if (name == "paper_4_6") return example41_gains_fast();
    throw ValidationError("unknown named gain schedule '" + name + "'");
}

Scenario parse_scenario(const std::string& text, const std::string& source) {
    Scenario s;
    std::istringstream in(text);
    std::string line;
    Diag d{source, 0};
    std::map<std::size_t, Vec> bank; // ordered by index
    bool r_set = false, horizon_set = false, x0_set = false;

    while (std::getline(in, line)) {
        ++d.line;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) d.parse_fail("expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) d.parse_fail("empty key or value");

        if (key == "system.name") s.system = value;
        else if (key == "system.n") s.chain_n = parse_u64(value, d);
        else if (key == "system.k1") s.k1 = parse_number(value, d);
        else if (key == "system.k2") s.k2 = parse_number(value, d);
        else if (key == "system.L1") s.L1 = parse_number(value, d);
        else if (key == "system.disturbance_dim") s.disturbance_dim = parse_u64(value, d);
        else if (key == "system.disturbance_bound") s.disturbance_bound = parse_number(value, d);
        else if (starts_with(key, "system.g")) {
            const std::size_t idx = parse_u64(key.substr(8), d);
            if (idx < 2) d.invalid("g indices start at 2");
            if (s.inline_g.size() < idx - 1) s.inline_g.resize(idx - 1);
            s.inline_g[idx - 2] = value;
        } else if (key == "controller.kind") s.controller_kind = value;
        else if (key == "controller.gains") s.gains = value;
        else if (key == "controller.file") s.gains_file = value;
        else if (key == "controller.K0") s.K0 = parse_number(value, d);
        else if (key == "controller.omega0") s.omega0 = parse_number(value, d);
        else if (key == "controller.R") s.ctrl_R = parse_number(value, d);
        else if (key == "controller.omega") s.ctrl_omega = parse_number(value, d);
        else if (key == "controller.K") s.ctrl_K = parse_number(value, d);
        else if (key == "schedule.r") { s.r = parse_number(value, d); r_set = true; }
        else if (key == "schedule.w") s.w = value;
        else if (key == "schedule.horizon") { s.horizon = parse_number(value, d); horizon_set = true; }
        else if (key == "delays.tau") { s.tau = parse_number(value, d); s.has_delays = true; }
        else if (key == "delays.T") { s.T = parse_number(value, d); s.has_delays = true; }
        else if (key == "initial.x0") { s.x0 = parse_vector(value, d); x0_set = true; }
        else if (starts_with(key, "initial.bank.")) {
            bank[parse_u64(key.substr(13), d)] = parse_vector(value, d);
        } else if (key == "disturbance.mode") s.d_mode = value;
        else if (key == "disturbance.value") s.d_const = parse_vector(value, d);
        else if (key == "disturbance.seed") s.d_seed = parse_u64(value, d);
        else if (key == "integration.step") s.step = parse_number(value, d);
        else if (key == "masp.r_hi") s.r_hi = parse_number(value, d);
        else if (key == "masp.seed") s.masp_seed = parse_u64(value, d);
        else if (key == "masp.w_bank") s.masp_w_bank = parse_u64(value, d);
        else if (key == "certify.stage") s.certify_stage = parse_u64(value, d);
        else if (key == "certify.delta") s.delta = parse_number(value, d);
        else if (key == "grid.angular") s.grid.angular = parse_u64(value, d);
        else if (key == "grid.radial") s.grid.radial = parse_u64(value, d);
        else if (key == "grid.input") s.grid.input = parse_u64(value, d);
        else if (key == "grid.disturbance") s.grid.disturbance = parse_u64(value, d);
        else if (key == "grid.quasi_random") s.grid.quasi_random = parse_u64(value, d);
        else if (key == "outputs.trajectory") s.out_trajectory = value;
        else if (key == "outputs.report") s.out_report = value;
        else if (key == "outputs.certificates") s.out_certificates = value;
        else if (key == "outputs.predictions") s.out_predictions = value;
        else if (key == "outputs.gains") s.out_gains = value;
        else if (key == "seed") s.seed = parse_u64(value, d);
        else d.parse_fail("unknown key '" + key + "'");
    }
    for (auto& [idx, v] : bank) s.x0_bank.push_back(std::move(v));

    // document-level validation (line numbers no longer apply)
    d.line = 0;
    if (s.system != "example41" && s.system != "example42" &&
        s.system != "scalar_chain" && s.system != "inline_chain")
        throw ValidationError(source + ": unknown builtin system '" + s.system + "'");
    if ((s.system == "scalar_chain" || s.system == "inline_chain") && s.chain_n == 0)
        throw ValidationError(source + ": system.n is required for chain systems");
    if (s.system == "example42" && !(s.k1 > 0 && s.k2 > 0 && s.L1 > 0))
        throw ValidationError(source + ": example42 needs positive k1, k2, L1");
    if (s.controller_kind != "recursive_forwarding" &&
        s.controller_kind != "single_stage" && s.controller_kind != "linear_outer")
        throw ValidationError(source + ": unknown controller.kind '" +
                              s.controller_kind + "'");
    if (r_set && !(s.r > 0.0))
        throw ValidationError(source + ": schedule.r must be positive");
    if (horizon_set && !(s.horizon > 0.0))
        throw ValidationError(source + ": schedule.horizon must be positive");
    if (!(s.step > 0.0))
        throw ValidationError(source + ": integration.step must be positive");
    if (s.has_delays) {
        if (!(s.tau > 0.0) || !(s.T > 0.0))
            throw ValidationError(source + ": delays require positive tau and T");
        if (r_set) DelaySpec::make(s.tau, s.T, s.r); // integer-multiple check
    }
    if (x0_set && !s.x0.all_finite())
        throw ValidationError(source + ": initial.x0 must be finite");
    parse_w_spec(s.w); // validates the token
    if (!s.gains.empty()) {
        const GainSchedule g = named_gain_schedule(s.gains);
        const std::size_t sys_dim =
            s.system == "example41" || s.system == "example42" ? 3 : s.chain_n;
        if (s.controller_kind == "recursive_forwarding" && g.n != sys_dim)
            throw ValidationError(source + ": controller of dimension " +
                                  std::to_string(g.n) + " does not match system of dimension " +
                                  std::to_string(sys_dim));
    }
    if (s.d_mode != "none" && s.d_mode != "constant" && s.d_mode != "seeded")
        throw ValidationError(source + ": unknown disturbance.mode '" + s.d_mode + "'");
    return s;
}

std::string serialize_scenario(const Scenario& s) {
    std::string out;
    const auto kv = [&out](const std::string& k, const std::string& v) {
        out += k + " = " + v + "\n";
    };
    kv("system.name", s.system);
    if (s.chain_n) kv("system.n", std::to_string(s.chain_n));
    if (s.k1 != 0) kv("system.k1", format_double(s.k1));
    if (s.k2 != 0) kv("system.k2", format_double(s.k2));
    if (s.L1 != 0) kv("system.L1", format_double(s.L1));
    if (s.disturbance_dim) kv("system.disturbance_dim", std::to_string(s.disturbance_dim));
    if (s.disturbance_bound != 1.0)
        kv("system.disturbance_bound", format_double(s.disturbance_bound));
    for (std::size_t i = 0; i < s.inline_g.size(); ++i)
        if (!s.inline_g[i].empty()) kv("system.g" + std::to_string(i + 2), s.inline_g[i]);
    kv("controller.kind", s.controller_kind);
    if (!s.gains.empty()) kv("controller.gains", s.gains);
    if (!s.gains_file.empty()) kv("controller.file", s.gains_file);
    kv("controller.K0", format_double(s.K0));
    kv("controller.omega0", format_double(s.omega0));
    if (s.ctrl_R != 0) kv("controller.R", format_double(s.ctrl_R));
    if (s.ctrl_omega != 1.0) kv("controller.omega", format_double(s.ctrl_omega));
    if (s.ctrl_K != 0) kv("controller.K", format_double(s.ctrl_K));
    if (s.r != 0) kv("schedule.r", format_double(s.r));
    kv("schedule.w", s.w);
    if (s.horizon != 0) kv("schedule.horizon", format_double(s.horizon));
    if (s.has_delays) {
        kv("delays.tau", format_double(s.tau));
        kv("delays.T", format_double(s.T));
    }
    if (s.x0.dim()) kv("initial.x0", vector_to_string(s.x0));
    for (std::size_t i = 0; i < s.x0_bank.size(); ++i)
        kv("initial.bank." + std::to_string(i + 1), vector_to_string(s.x0_bank[i]));
    kv("disturbance.mode", s.d_mode);
    if (s.d_const.dim()) kv("disturbance.value", vector_to_string(s.d_const));
    kv("disturbance.seed", std::to_string(s.d_seed));
    kv("integration.step", format_double(s.step));
    if (s.r_hi != 0) kv("masp.r_hi", format_double(s.r_hi));
    kv("masp.seed", std::to_string(s.masp_seed));
    kv("masp.w_bank", std::to_string(s.masp_w_bank));
    kv("certify.stage", std::to_string(s.certify_stage));
    if (s.delta != 0) kv("certify.delta", format_double(s.delta));
    kv("grid.angular", std::to_string(s.grid.angular));
    kv("grid.radial", std::to_string(s.grid.radial));
    kv("grid.input", std::to_string(s.grid.input));
    kv("grid.disturbance", std::to_string(s.grid.disturbance));
    kv("grid.quasi_random", std::to_string(s.grid.quasi_random));
    kv("outputs.trajectory", s.out_trajectory);
    kv("outputs.report", s.out_report);
    kv("outputs.certificates", s.out_certificates);
    kv("outputs.predictions", s.out_predictions);
    kv("outputs.gains", s.out_gains);
    kv("seed", std::to_string(s.seed));
    return out;
}

ResolvedScenario resolve_scenario(const Scenario& s, const std::string& base_dir) {
    ResolvedScenario r;
    if (s.system == "example41") {
        r.system = example41_system();
    } else if (s.system == "example42") {
        r.system = example42_system(s.k1, s.k2, s.L1);
    } else if (s.system == "scalar_chain") {
        r.system = scalar_chain_system(s.chain_n);
    } else {
        r.system = inline_chain_system(s.chain_n, s.inline_g, s.disturbance_dim,
                                       s.disturbance_bound);
    }

    if (s.controller_kind == "recursive_forwarding") {
        GainSchedule g;
        if (!s.gains.empty()) {
            g = named_gain_schedule(s.gains);
        } else if (!s.gains_file.empty()) {
            const auto path = std::filesystem::path(base_dir) / s.gains_file;
            g = gain_schedule_from_json(read_file(path));
        } else {
            throw ValidationError("recursive controller needs controller.gains or "
                                  "controller.file");
        }
        if (g.n != r.system.n)
            throw ValidationError("controller of dimension " + std::to_string(g.n) +
                                  " does not match system of dimension " +
                                  std::to_string(r.system.n));
        r.controller = ControllerSpec::recursive(std::move(g));
    } else if (s.controller_kind == "single_stage") {
        if (s.system != "example42")
            throw ValidationError("single_stage controller is defined for example42");
        if (!(s.ctrl_R > 0.0))
            throw ValidationError("single_stage controller needs controller.R > 0");
        r.controller = example42_controller(s.k1, s.k2, s.L1, s.ctrl_R, s.ctrl_omega,
                                            s.ctrl_K);
    } else {
        r.controller = ControllerSpec::outer(s.K0, s.omega0, r.system.n);
    }

    r.w = parse_w_spec(s.w);

    if (s.d_mode == "none") {
        // disturbed systems still need a d value to evaluate: use zero
        r.disturbance = r.system.D.dim() == 0
                            ? DisturbanceSpec::none()
                            : DisturbanceSpec::constant(Vec(r.system.D.dim()));
    } else if (s.d_mode == "constant") {
        if (s.d_const.dim() != r.system.D.dim())
            throw ValidationError("disturbance.value dimension mismatch");
        r.disturbance = DisturbanceSpec::constant(s.d_const);
    } else {
        r.disturbance = DisturbanceSpec::seeded(s.d_seed);
    }

    if (s.x0.dim() != 0 && s.x0.dim() != r.system.n)
        throw ValidationError("initial.x0 dimension does not match the system");
    for (const Vec& v : s.x0_bank)
        if (v.dim() != r.system.n)
            throw ValidationError("initial.bank entry dimension does not match the system");
    return r;
}

} // namespace fwdsat
