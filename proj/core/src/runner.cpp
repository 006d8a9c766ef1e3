#include "fwdsat/runner.hpp"

#include "fwdsat/errors.hpp"
#include "fwdsat/parallel.hpp"
#include "fwdsat/predictor.hpp"
#include "fwdsat/report.hpp"
#include "fwdsat/rng.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <mutex>
#include <vector>

namespace fwdsat {

namespace {

Scenario apply_overrides(Scenario s, const RunOptions& opt) {
    if (opt.seed) {
        s.seed = *opt.seed;
        s.d_seed = *opt.seed;
        s.masp_seed = *opt.seed;
    }
    if (opt.grid) s.grid = *opt.grid;
    if (opt.horizon) s.horizon = *opt.horizon;
    if (opt.step) s.step = *opt.step;
    return s;
}

struct CertifySetup {
    DesignStage stage;
    VectorField f;
    ScalarField g;
    DisturbanceBox D;
};

CertifySetup certify_setup(const Scenario& s) {
    CertifySetup cs;
    if (s.system == "example41") {
        if (s.certify_stage == 1) {
            const double R = s.ctrl_R > 0 ? s.ctrl_R : 3.0 / 8.0;
            const double K = s.ctrl_K > 0 ? s.ctrl_K : 0.25;
            cs.stage = example41_stage1(R, K, s.delta);
        } else if (s.certify_stage == 2) {
            const double R = s.ctrl_R > 0 ? s.ctrl_R : 0.05;
            const double K = s.ctrl_K > 0 ? s.ctrl_K : 0.05;
            cs.stage = example41_stage2(R, K, s.delta);
        } else {
            throw ValidationError("certify: example41 has stages 1 and 2");
        }
        cs.f = example41_stage_f(s.certify_stage);
        cs.g = example41_stage_g(s.certify_stage);
        cs.D = DisturbanceBox::none();
        return cs;
    }
    if (s.system == "example42") {
        ControllerSpec ctrl = example42_controller(s.k1, s.k2, s.L1,
                                                   s.ctrl_R > 0 ? s.ctrl_R : 1.0,
                                                   s.ctrl_omega, s.ctrl_K);
        cs.stage = ctrl.stage;
        if (s.delta > 0) cs.stage.delta = s.delta;
        const double eps = s.L1 / std::max({s.k1, s.k2, std::sqrt(2.0)});
        const double k1 = s.k1, k2 = s.k2;
        cs.f = [eps, k1, k2](const Vec& d, const Vec& x, double) {
            return Vec{eps * k1 * d[0] * x[0], eps * k2 * d[1] * x[1]};
        };
        cs.g = [eps](const Vec& d, const Vec& x, double) {
            return eps * d[2] * std::sin(x[0] + x[1]);
        };
        cs.D = DisturbanceBox::symmetric(3, 1.0);
        return cs;
    }
    throw ValidationError("certify: supported for example41 and example42");
}

int do_certify(const Scenario& s, const RunOptions& opt) {
    const CertifySetup cs = certify_setup(s);
    std::vector<Certificate> certs;
    certs.push_back(certify_condition_33(cs.f, cs.D, cs.stage, s.grid));
    certs.push_back(certify_condition_34(cs.f, cs.g, cs.D, cs.stage, s.grid));
    certs.push_back(certify_condition_35(cs.f, cs.g, cs.D, cs.stage, s.grid));
    write_file(opt.out_dir / s.out_certificates, certificates_to_json(certs));
    bool all = true;
    for (const Certificate& c : certs) {
        all = all && c.pass;
        if (!opt.quiet)
            std::cout << "condition " << c.condition << ": "
                      << (c.pass ? "pass" : "fail")
                      << " margin=" << format_double(c.margin)
                      << " points=" << c.grid_points << "\n";
    }
    return all ? kExitOk : kExitInfeasible;
}

int do_synthesize(const Scenario& s, const RunOptions& opt) {
    if (s.system == "example42") {
        const Example42Design d = example42_design(s.k1, s.k2);
        const auto sw = sandwich_constants(d.P);
        const ChainData ch = chain_matrices(2);
        const Vec c = c_vector(ch.A, ch.b, d.p);
        const double R = s.ctrl_R > 0 ? s.ctrl_R : 1.0;
        const GainWindow w = example42_gain_window(s.L1, d.P, d.p, c, d.q, R, sw.a1,
                                                   sw.a2, s.ctrl_omega);
        std::string json = "{\n";
        json += "  \"P\": [[" + format_double(d.P(0, 0)) + ", " + format_double(d.P(0, 1)) +
                "], [" + format_double(d.P(1, 0)) + ", " + format_double(d.P(1, 1)) + "]],\n";
        json += "  \"p\": [" + format_double(d.p[0]) + ", " + format_double(d.p[1]) + "],\n";
        json += "  \"c\": [" + format_double(c[0]) + ", " + format_double(c[1]) + "],\n";
        json += "  \"S\": " + format_double(d.S) + ",\n";
        json += "  \"q\": " + format_double(d.q) + ",\n";
        json += "  \"a1\": " + format_double(sw.a1) + ",\n";
        json += "  \"a2\": " + format_double(sw.a2) + ",\n";
        json += "  \"R\": " + format_double(R) + ",\n";
        json += "  \"K_lo\": " + format_double(w.K_lo) + ",\n";
        json += "  \"K_hi\": " + format_double(w.K_hi) + ",\n";
        json += "  \"M\": " + format_double(w.M) + "\n}\n";
        write_file(opt.out_dir / s.out_gains, json);
        if (!opt.quiet)
            std::cout << "design window K in (" << format_double(w.K_lo) << ", "
                      << format_double(w.K_hi) << "), M = " << format_double(w.M) << "\n";
        return kExitOk;
    }

    std::size_t n = 0;
    NonlinearityBound L = NonlinearityBound::zero();
    if (s.system == "example41") {
        n = 3;
        L = NonlinearityBound::constant(1.0);
    } else if (s.system == "scalar_chain") {
        n = s.chain_n;
        L = NonlinearityBound::zero();
    } else {
        throw ValidationError("synthesize: supported for example41, example42, "
                              "scalar_chain");
    }

    GainSchedule g;
    g.n = n;
    g.K0 = s.K0;
    g.omega0 = s.omega0;
    for (std::size_t i = 1; i < n; ++i) {
        // default stage shapes: the worked example's (P, p) for i <= 2,
        // identity P with a stabilizing p otherwise
        Mat P;
        Vec p;
        if (i == 1) {
            P = Mat{{1.0}};
            p = Vec{-1.0};
        } else if (i == 2) {
            P = Mat{{1.0, 1.0}, {1.0, 2.0}};
            p = Vec{-2.0, -2.0};
        } else {
            throw ValidationError("synthesize: chains longer than 3 need explicit "
                                  "stage matrices");
        }
        const double R_req = s.ctrl_R > 0 ? s.ctrl_R : 1.0;
        const Lemma36Constants lc = lemma36_constants(L, P, p, s.ctrl_omega, R_req);
        const double delta = s.delta > 0 ? s.delta
                             : lc.delta_hint > 0 ? lc.delta_hint
                                                 : 1e-6;
        g.stages.push_back(
            DesignStage::make(i, P, p, lc.K, lc.R, s.ctrl_omega, lc.M, delta));
        if (!opt.quiet)
            std::cout << "stage " << i << ": C=" << format_double(lc.C)
                      << " R*=" << format_double(lc.R_star)
                      << " R=" << format_double(lc.R) << " K=" << format_double(lc.K)
                      << " M=" << format_double(lc.M)
                      << " delta=" << format_double(delta) << "\n";
    }
    g.validate();
    write_file(opt.out_dir / s.out_gains, gain_schedule_to_json(g));
    return kExitOk;
}

const DesignStage* report_stage(const ControllerSpec& ctrl) {
    if (ctrl.kind == ControllerSpec::Kind::recursive_forwarding &&
        !ctrl.schedule.stages.empty())
        return &ctrl.schedule.stages.back();
    if (ctrl.kind == ControllerSpec::Kind::single_stage) return &ctrl.stage;
    return nullptr;
}

int do_simulate(const Scenario& s, const RunOptions& opt) {
    const ResolvedScenario rs = resolve_scenario(s, opt.base_dir.string());
    if (!(s.r > 0.0)) throw ValidationError("simulate: schedule.r is required");
    if (!(s.horizon > 0.0)) throw ValidationError("simulate: schedule.horizon is required");
    std::vector<Vec> x0s = s.x0_bank;
    if (x0s.empty()) {
        if (s.x0.dim() == 0) throw ValidationError("simulate: initial.x0 is required");
        x0s.push_back(s.x0);
    }
    const Schedule sched = make_schedule(s.r, rs.w, s.horizon);
    std::vector<Trajectory> trajs(x0s.size());
    std::exception_ptr error;
    std::mutex error_mutex;
    parallel_chunks(x0s.size(), [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            try {
                DisturbanceSpec d = rs.disturbance;
                if (d.kind == DisturbanceSpec::Kind::seeded)
                    d.seed = Rng::derive(s.d_seed, i);
                trajs[i] = simulate_closed_loop(rs.system, rs.controller, x0s[i], sched,
                                                d, s.step);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    });
    if (error) std::rethrow_exception(error);

    if (trajs.size() == 1) {
        write_file(opt.out_dir / s.out_trajectory, trajectory_to_csv(trajs[0]));
    } else {
        for (std::size_t i = 0; i < trajs.size(); ++i) {
            auto path = opt.out_dir / s.out_trajectory;
            path.replace_filename(path.stem().string() + "_" + std::to_string(i + 1) +
                                  path.extension().string());
            write_file(path, trajectory_to_csv(trajs[i]));
        }
    }
    const StabilityReport rep = stability_metrics(trajs, report_stage(rs.controller));
    write_file(opt.out_dir / s.out_report, stability_report_to_json(rep));
    if (!opt.quiet)
        std::cout << "simulated " << trajs.size() << " trajectory(ies), sup|x| = "
                  << format_double(rep.sup_norm) << "\n";
    return kExitOk;
}

int do_delayed(const Scenario& s, const RunOptions& opt) {
    if (!s.has_delays) throw ValidationError("delayed: delays.tau and delays.T required");
    if (!(s.r > 0.0) || !(s.horizon > 0.0))
        throw ValidationError("delayed: schedule.r and schedule.horizon required");
    const ResolvedScenario rs = resolve_scenario(s, opt.base_dir.string());
    if (rs.system.name != "example41")
        throw ValidationError("delayed: the predictor targets example41");
    if (s.x0.dim() != 3) throw ValidationError("delayed: initial.x0 must be 3-dim");
    const DelaySpec delays = DelaySpec::make(s.tau, s.T, s.r);
    const Vec x0 = s.x0;
    InputHistory u0(-delays.T - delays.tau);
    u0.append(0.0, 0.0);
    const DelayedRunResult run = simulate_delayed_loop(
        rs.controller, delays, [&x0](double) { return x0; }, u0, s.horizon, s.step);

    double max_err = 0.0;
    std::size_t audited = 0;
    for (const PredictionSample& ps : run.predictions) {
        if (!ps.x_true || ps.tau_i < delays.T + delays.tau - 1e-12) continue;
        ++audited;
        max_err = std::max(max_err, (ps.X - *ps.x_true).norm());
    }
    write_file(opt.out_dir / s.out_trajectory, trajectory_to_csv(run.traj));
    write_file(opt.out_dir / s.out_predictions, predictions_to_csv(run.predictions));
    write_file(opt.out_dir / s.out_report,
               delayed_report_to_json(run, max_err, audited));
    if (!opt.quiet)
        std::cout << "delayed run: ugas " << format_double(run.ugas_initial) << " -> "
                  << format_double(run.ugas_final)
                  << ", max prediction error = " << format_double(max_err) << " over "
                  << audited << " audited samples\n";
    return kExitOk;
}

int do_masp(const Scenario& s, const RunOptions& opt) {
    const ResolvedScenario rs = resolve_scenario(s, opt.base_dir.string());
    if (!(s.r_hi > 0.0)) throw ValidationError("masp: masp.r_hi is required");
    if (!(s.horizon > 0.0)) throw ValidationError("masp: schedule.horizon is required");
    MaspBanks banks;
    banks.x0_set = s.x0_bank;
    if (banks.x0_set.empty()) {
        if (s.x0.dim() == 0) throw ValidationError("masp: initial.x0 or a bank required");
        banks.x0_set.push_back(s.x0);
    }
    banks.w_bank.push_back(PerturbationSpec::zero());
    for (std::size_t k = 1; k < std::max<std::size_t>(1, s.masp_w_bank); ++k)
        banks.w_bank.push_back(
            PerturbationSpec::seeded(Rng::derive(s.masp_seed, k), 65536, std::log(2.0)));
    if (rs.system.D.dim() == 0)
        banks.d_bank.push_back(DisturbanceSpec::none());
    else
        banks.d_bank.push_back(DisturbanceSpec::seeded(s.d_seed));
    banks.horizon = s.horizon;
    banks.step_cap = s.step;
    const double masp = masp_search(rs.system, rs.controller, banks, s.r_hi);
    write_file(opt.out_dir / s.out_report,
               masp_result_to_json(masp, s.r_hi,
                                   banks.x0_set.size() * banks.w_bank.size() *
                                       banks.d_bank.size()));
    if (!opt.quiet) std::cout << "masp estimate: " << format_double(masp) << "\n";
    return kExitOk;
}

int do_report(const Scenario& s, const RunOptions& opt) {
    const Trajectory traj =
        trajectory_from_csv(read_file(opt.out_dir / s.out_trajectory));
    for (std::size_t i = 0; i < traj.n; ++i) {
        std::string out;
        for (std::size_t k = 0; k < traj.size(); ++k)
            out += format_double(traj.times[k]) + " " +
                   format_double(traj.states[k][i]) + "\n";
        write_file(opt.out_dir / ("report_x" + std::to_string(i + 1) + ".dat"), out);
    }
    std::string out;
    for (std::size_t k = 0; k < traj.size(); ++k)
        out += format_double(traj.times[k]) + " " + format_double(traj.inputs[k]) + "\n";
    write_file(opt.out_dir / "report_u.dat", out);
    if (!opt.quiet)
        std::cout << "wrote " << traj.n + 1 << " plot series from "
                  << (opt.out_dir / s.out_trajectory).string() << "\n";
    return kExitOk;
}

} // namespace

int run_subcommand(const std::string& name, const Scenario& scenario,
                   const RunOptions& options) {
    const Scenario s = apply_overrides(scenario, options);
    const auto fail = [&](const std::string& kind, const std::string& msg, int code) {
        std::cerr << "error (" << kind << "): " << msg << "\n";
        try {
            write_file(options.out_dir / "error.json",
                       error_record_to_json(kind, msg, code));
        } catch (const std::exception&) {
            // the error record is best effort
        }
        return code;
    };
    try {
        if (name == "synthesize") return do_synthesize(s, options);
        if (name == "certify") return do_certify(s, options);
        if (name == "simulate") return do_simulate(s, options);
        if (name == "delayed") return do_delayed(s, options);
        if (name == "masp") return do_masp(s, options);
        if (name == "report") return do_report(s, options);
        throw ValidationError("unknown subcommand '" + name + "'");
    } catch (const Divergence& e) {
        return fail("divergence", e.what(), kExitDivergence);
    } catch (const InfeasibleDesign& e) {
        return fail("infeasible_design", e.what(), kExitInfeasible);
    } catch (const SmallGainViolated& e) {
        return fail("small_gain_violated", e.what(), kExitInfeasible);
    } catch (const NoStabilizingRate& e) {
        return fail("no_stabilizing_rate", e.what(), kExitInfeasible);
    } catch (const IoError& e) {
        return fail("io", e.what(), kExitIo);
    } catch (const ParseError& e) {
        return fail("parse", e.what(), kExitValidation);
    } catch (const Error& e) {
        return fail("validation", e.what(), kExitValidation);
    }
}

} // namespace fwdsat
