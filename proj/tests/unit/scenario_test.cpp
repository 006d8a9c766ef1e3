#include "fwdsat/errors.hpp"
#include "fwdsat/report.hpp"
#include "fwdsat/runner.hpp"
#include "fwdsat/scenario.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace fwdsat;
namespace fs = std::filesystem;

namespace {

const char* kBenchmark = R"(# benchmark scenario
system.name = example41
controller.kind = recursive_forwarding
controller.gains = paper_4_6
schedule.r = 0.2
schedule.w = paper_sine
schedule.horizon = 100
initial.x0 = [1, 1, 1]
integration.step = 0.001
)";

fs::path temp_dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / ("fwdsat_test_" + tag);
    fs::create_directories(p);
    return p;
}

} // namespace

TEST_CASE("minimal scenario parses into the benchmark setup") {
    const Scenario s = parse_scenario(kBenchmark, "benchmark_fast.scn");
    CHECK(s.system == "example41");
    CHECK(s.gains == "paper_4_6");
    CHECK(s.r == doctest::Approx(0.2));
    CHECK(s.w == "paper_sine");
    CHECK(s.horizon == doctest::Approx(100.0));
    REQUIRE(s.x0.dim() == 3);
    CHECK(s.x0[0] == 1.0);
    const ResolvedScenario rs = resolve_scenario(s);
    CHECK(rs.system.n == 3);
    CHECK(rs.controller.kind == ControllerSpec::Kind::recursive_forwarding);
    CHECK(rs.controller.schedule.stages[1].R == doctest::Approx(1.0));
}

TEST_CASE("negative sampling period is rejected") {
    CHECK_THROWS_AS(parse_scenario("system.name = example41\nschedule.r = -1\n", "bad"),
                    ValidationError);
}

TEST_CASE("controller dimension mismatch is rejected") {
    const char* text = "system.name = scalar_chain\nsystem.n = 2\n"
                       "controller.kind = recursive_forwarding\n"
                       "controller.gains = paper_4_6\n";
    CHECK_THROWS_AS(parse_scenario(text, "bad"), ValidationError);
}

TEST_CASE("unknown keys and malformed lines are parse errors with line anchors") {
    try {
        parse_scenario("system.name = example41\nnot_a_key = 3\n", "doc.scn");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("doc.scn:2") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_scenario("schedule.r 0.2\n", "doc"), ParseError);
    CHECK_THROWS_AS(parse_scenario("schedule.r = abc\n", "doc"), ParseError);
    CHECK_THROWS_AS(parse_scenario("system.name = example99\n", "doc"), ValidationError);
}

TEST_CASE("scenario round-trips through its serialization") {
    const Scenario s = parse_scenario(kBenchmark, "benchmark_fast.scn");
    const std::string text = serialize_scenario(s);
    const Scenario again = parse_scenario(text, "roundtrip");
    CHECK(again == s);
    CHECK(serialize_scenario(again) == text);
}

TEST_CASE("inline chain scenario builds and simulates") {
    const char* text = "system.name = inline_chain\nsystem.n = 3\n"
                       "system.g2 = x1*u\nsystem.g3 = x1^2\n"
                       "controller.kind = recursive_forwarding\n"
                       "controller.gains = paper_4_6\n"
                       "schedule.r = 0.2\nschedule.horizon = 5\n"
                       "initial.x0 = [0.5, 0.5, 0.5]\n";
    const Scenario s = parse_scenario(text, "inline");
    const ResolvedScenario rs = resolve_scenario(s);
    // the inline catalog reproduces the benchmark chain exactly
    Vec dx(3), dx_ref(3);
    const Vec x{0.3, -0.7, 2.0};
    rs.system.rhs(Vec(0), x, 0.4, dx);
    example41_system().rhs(Vec(0), x, 0.4, dx_ref);
    CHECK((dx - dx_ref).norm() == 0.0);
}

TEST_CASE("inline chain rejects upper-triangular violations") {
    const char* text = "system.name = inline_chain\nsystem.n = 3\n"
                       "system.g2 = x2*u\n"
                       "controller.kind = linear_outer\n";
    CHECK_THROWS_AS(
        [&] {
            const Scenario s = parse_scenario(text, "inline");
            resolve_scenario(s);
        }(),
        ValidationError);
}

TEST_CASE("named w specs") {
    CHECK(parse_w_spec("zero").kind == PerturbationSpec::Kind::zero);
    CHECK(parse_w_spec("const:0.3").value == doctest::Approx(0.3));
    CHECK(parse_w_spec("paper_sine").kind == PerturbationSpec::Kind::paper_sine);
    CHECK(parse_w_spec("seeded:7").kind == PerturbationSpec::Kind::sequence);
    CHECK_THROWS_AS(parse_w_spec("const:-1"), ValidationError);
    CHECK_THROWS_AS(parse_w_spec("mystery"), ValidationError);
}

TEST_CASE("gain schedule files round-trip and feed the resolver") {
    const GainSchedule g = example41_gains_conservative();
    const std::string json = gain_schedule_to_json(g);
    const GainSchedule back = gain_schedule_from_json(json);
    CHECK(back.n == 3);
    CHECK(back.stages[1].K == doctest::Approx(0.05));
    CHECK(back.stages[1].c[0] == doctest::Approx(0.5).epsilon(1e-14));

    const fs::path dir = temp_dir("gains");
    write_file(dir / "gains.json", json);
    Scenario s = parse_scenario(kBenchmark, "benchmark");
    s.gains.clear();
    s.gains_file = "gains.json";
    const ResolvedScenario rs = resolve_scenario(s, dir.string());
    CHECK(rs.controller.schedule.stages[1].R == doctest::Approx(0.05));
}

TEST_CASE("runner: simulate produces deterministic artifacts and exit codes") {
    const fs::path dir = temp_dir("run_sim");
    Scenario s = parse_scenario(kBenchmark, "benchmark");
    s.horizon = 5.0; // keep the unit suite quick
    RunOptions opt;
    opt.out_dir = dir;
    opt.quiet = true;
    CHECK(run_subcommand("simulate", s, opt) == kExitOk);
    CHECK(fs::exists(dir / "trajectory.csv"));
    CHECK(fs::exists(dir / "report.json"));
    const std::string first = read_file(dir / "trajectory.csv");
    CHECK(run_subcommand("simulate", s, opt) == kExitOk);
    CHECK(read_file(dir / "trajectory.csv") == first);
}

TEST_CASE("runner: certify stage 1 passes and exits zero") {
    const fs::path dir = temp_dir("run_cert");
    Scenario s;
    s.system = "example41";
    s.certify_stage = 1;
    s.grid.quasi_random = 2000;
    RunOptions opt;
    opt.out_dir = dir;
    opt.quiet = true;
    CHECK(run_subcommand("certify", s, opt) == kExitOk);
    const std::string json = read_file(dir / "certificates.json");
    CHECK(json.find("\"pass\": true") != std::string::npos);
    CHECK(json.find("3.3") != std::string::npos);
    CHECK(json.find("3.5") != std::string::npos);
}

TEST_CASE("runner: invalid scenario yields exit 2 and an error record") {
    const fs::path dir = temp_dir("run_bad");
    Scenario s;
    s.system = "example41"; // no r/horizon/x0: simulate must refuse
    RunOptions opt;
    opt.out_dir = dir;
    opt.quiet = true;
    CHECK(run_subcommand("simulate", s, opt) == kExitValidation);
    CHECK(fs::exists(dir / "error.json"));
}

TEST_CASE("runner: synthesize emits a loadable gain schedule") {
    const fs::path dir = temp_dir("run_synth");
    Scenario s;
    s.system = "example41";
    RunOptions opt;
    opt.out_dir = dir;
    opt.quiet = true;
    CHECK(run_subcommand("synthesize", s, opt) == kExitOk);
    const GainSchedule g = gain_schedule_from_json(read_file(dir / "gains.json"));
    CHECK(g.n == 3);
    CHECK(g.stages[0].K <= g.stages[0].R);
    CHECK(g.stages[1].K <= g.stages[1].R);
}

TEST_CASE("runner: report emits plot columns") {
    const fs::path dir = temp_dir("run_report");
    Scenario s = parse_scenario(kBenchmark, "benchmark");
    s.horizon = 2.0;
    RunOptions opt;
    opt.out_dir = dir;
    opt.quiet = true;
    REQUIRE(run_subcommand("simulate", s, opt) == kExitOk);
    CHECK(run_subcommand("report", s, opt) == kExitOk);
    CHECK(fs::exists(dir / "report_x1.dat"));
    CHECK(fs::exists(dir / "report_x3.dat"));
    CHECK(fs::exists(dir / "report_u.dat"));
}

TEST_CASE("every committed scenario file parses and validates") {
#ifdef FWDSAT_SOURCE_DIR
    const fs::path dir = fs::path(FWDSAT_SOURCE_DIR) / "scenarios";
    REQUIRE(fs::exists(dir));
    std::size_t seen = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() != ".scn") continue;
        ++seen;
        const Scenario s = parse_scenario(read_file(entry.path()),
                                          entry.path().filename().string());
        const Scenario again = parse_scenario(serialize_scenario(s), "roundtrip");
        CHECK(again == s);
    }
    CHECK(seen >= 8);
#endif
}
