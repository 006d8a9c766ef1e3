#include "fwdsat/simulate.hpp"

#include "fwdsat/errors.hpp"
#include "fwdsat/parallel.hpp"
#include "fwdsat/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fwdsat {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double PerturbationSpec::eval(double t, std::size_t sample_index) const {
    double w = 0.0;
    switch (kind) {
    case Kind::zero: w = 0.0; break;
    case Kind::constant: w = value; break;
    case Kind::paper_sine: w = std::log(2.0 / (1.0 + std::abs(std::sin(t)))); break;
    case Kind::function: w = fn(t); break;
    case Kind::sequence:
        w = seq.empty() ? 0.0 : seq[sample_index % seq.size()];
        break;
    }
    if (!(w >= 0.0))
        throw InvalidPerturbation("schedule perturbation evaluated negative at t = " +
                                  std::to_string(t));
    return w;
}

PerturbationSpec PerturbationSpec::zero() { return {}; }

PerturbationSpec PerturbationSpec::constant(double v) {
    PerturbationSpec s;
    s.kind = Kind::constant;
    s.value = v;
    return s;
}

PerturbationSpec PerturbationSpec::paper_sine() {
    PerturbationSpec s;
    s.kind = Kind::paper_sine;
    return s;
}

PerturbationSpec PerturbationSpec::function(std::function<double(double)> f) {
    PerturbationSpec s;
    s.kind = Kind::function;
    s.fn = std::move(f);
    return s;
}

PerturbationSpec PerturbationSpec::sequence(std::vector<double> values) {
    PerturbationSpec s;
    s.kind = Kind::sequence;
    s.seq = std::move(values);
    return s;
}

PerturbationSpec PerturbationSpec::seeded(std::uint64_t seed, std::size_t count,
                                          double w_max) {
    Rng rng(seed);
    std::vector<double> values(count);
    for (double& v : values) v = rng.uniform(0.0, w_max);
    return sequence(std::move(values));
}

double Schedule::min_gap() const {
    double g = kInf;
    for (std::size_t i = 1; i < tau.size(); ++i) g = std::min(g, tau[i] - tau[i - 1]);
    return g;
}

Schedule make_schedule(double r, const PerturbationSpec& w, double horizon) {
    if (!(r > 0.0)) throw ValidationError("make_schedule: r must be positive");
    if (!(horizon > 0.0)) throw ValidationError("make_schedule: horizon must be positive");
    Schedule s;
    s.r = r;
    s.tau.push_back(0.0);
    std::size_t i = 0;
    while (s.tau.back() < horizon) {
        const double t = s.tau.back();
        const double gap = r * std::exp(-w.eval(t, i++));
        if (!(gap > 0.0)) throw InvalidPerturbation("make_schedule: nonpositive gap");
        s.tau.push_back(t + gap);
        if (s.tau.size() > 200'000'000)
            throw ValidationError("make_schedule: schedule too long");
    }
    return s;
}

DisturbanceSpec DisturbanceSpec::none() { return {}; }

DisturbanceSpec DisturbanceSpec::constant(Vec v) {
    DisturbanceSpec s;
    s.kind = Kind::constant;
    s.value = std::move(v);
    return s;
}

DisturbanceSpec DisturbanceSpec::function(std::function<Vec(double)> f) {
    DisturbanceSpec s;
    s.kind = Kind::function;
    s.fn = std::move(f);
    return s;
}

DisturbanceSpec DisturbanceSpec::seeded(std::uint64_t seed) {
    DisturbanceSpec s;
    s.kind = Kind::seeded;
    s.seed = seed;
    return s;
}

std::size_t Trajectory::index_at(double t, double tol) const {
    const auto it = std::lower_bound(times.begin(), times.end(), t);
    std::size_t best = SIZE_MAX;
    double best_err = tol * std::max(1.0, std::abs(t));
    for (const auto cand : {it, it == times.begin() ? it : std::prev(it)}) {
        if (cand == times.end()) continue;
        const double err = std::abs(*cand - t);
        if (err <= best_err) {
            best_err = err;
            best = static_cast<std::size_t>(cand - times.begin());
        }
    }
    if (best == SIZE_MAX)
        throw ValidationError("Trajectory: no grid point near t = " + std::to_string(t));
    return best;
}

namespace {

// RK4 with the input and disturbance held over the step.
class Rk4 {
public:
    explicit Rk4(std::size_t n) : k1_(n), k2_(n), k3_(n), k4_(n), tmp_(n) {}

    void step(const RhsFn& f, const Vec& d, Vec& x, double u, double h) {
        f(d, x, u, k1_);
        tmp_.assign_sum(x, 0.5 * h, k1_);
        f(d, tmp_, u, k2_);
        tmp_.assign_sum(x, 0.5 * h, k2_);
        f(d, tmp_, u, k3_);
        tmp_.assign_sum(x, h, k3_);
        f(d, tmp_, u, k4_);
        const double w = h / 6.0;
        for (std::size_t i = 0; i < x.dim(); ++i)
            x[i] += w * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    }

private:
    Vec k1_, k2_, k3_, k4_, tmp_;
};

class DisturbanceDraw {
public:
    DisturbanceDraw(const DisturbanceSpec& spec, const DisturbanceBox& box)
        : spec_(spec), box_(box), rng_(spec.seed), current_(box.dim()) {
        if (spec_.kind == DisturbanceSpec::Kind::constant) {
            if (spec_.value.dim() != box_.dim())
                throw DimensionMismatch("disturbance constant has wrong dimension");
            current_ = spec_.value;
        }
    }

    // Value for the step starting at time t.
    const Vec& refresh(double t) {
        switch (spec_.kind) {
        case DisturbanceSpec::Kind::none:
        case DisturbanceSpec::Kind::constant: break;
        case DisturbanceSpec::Kind::function: current_ = spec_.fn(t); break;
        case DisturbanceSpec::Kind::seeded:
            for (std::size_t k = 0; k < box_.dim(); ++k)
                current_[k] = rng_.uniform(box_.lo[k], box_.hi[k]);
            break;
        }
        return current_;
    }

    const Vec& current() const { return current_; }

private:
    const DisturbanceSpec& spec_;
    const DisturbanceBox& box_;
    Rng rng_;
    Vec current_;
};

} // namespace

void integrate_closed_loop(const SystemModel& sys, const ControllerSpec& ctrl,
                           const Vec& x0, const Schedule& sched,
                           const DisturbanceSpec& d_spec, double step,
                           double horizon, const StepObserver& observe) {
    if (x0.dim() != sys.n)
        throw DimensionMismatch("simulate: initial state dimension mismatch");
    if (ctrl.state_dim() != sys.n)
        throw DimensionMismatch("simulate: controller dimension mismatch");
    if (!(step > 0.0)) throw ValidationError("simulate: step must be positive");
    if (!x0.all_finite()) throw ValidationError("simulate: initial state not finite");

    Rk4 rk(sys.n);
    DisturbanceDraw draw(d_spec, sys.D);
    Vec x = x0;
    double u = ctrl.eval(x);
    observe(StepPoint{0.0, x, u, true, draw.refresh(0.0)});

    for (std::size_t i = 0; i + 1 < sched.tau.size(); ++i) {
        if (sched.tau[i] >= horizon) break;
        const double t0 = sched.tau[i];
        const double t1 = std::min(sched.tau[i + 1], horizon);
        const bool ends_on_sample = sched.tau[i + 1] <= horizon;
        const auto nsub = static_cast<std::size_t>(std::ceil((t1 - t0) / step - 1e-12));
        const std::size_t steps = std::max<std::size_t>(1, nsub);
        const double h = (t1 - t0) / static_cast<double>(steps);
        for (std::size_t s = 0; s < steps; ++s) {
            const double ts = t0 + h * static_cast<double>(s);
            rk.step(sys.rhs, draw.current(), x, u, h);
            const double te = s + 1 == steps ? t1 : ts + h;
            const double nx = x.norm();
            if (!(nx < kOverflowGuard))
                throw Divergence("simulate: state escaped the overflow guard at t = " +
                                     std::to_string(te),
                                 te);
            const bool is_sample = (s + 1 == steps) && ends_on_sample;
            if (is_sample && sched.tau[i + 1] < horizon) {
                // advance the hold before reporting so the stored input at a
                // sampling instant is the value used from that instant on
                u = ctrl.eval(x);
            }
            observe(StepPoint{te, x, u, is_sample, draw.refresh(te)});
        }
    }
}

Trajectory simulate_closed_loop(const SystemModel& sys, const ControllerSpec& ctrl,
                                const Vec& x0, const Schedule& sched,
                                const DisturbanceSpec& d_spec, double step) {
    const double mg = sched.min_gap();
    if (step > mg / 4.0 + 1e-15)
        throw ValidationError("simulate: step must be at most a quarter of the "
                              "smallest sampling gap");
    const double horizon = sched.tau.back();
    Trajectory traj;
    traj.n = sys.n;
    const auto estimated = static_cast<std::size_t>(horizon / step) + sched.tau.size() + 8;
    traj.times.reserve(estimated);
    traj.states.reserve(estimated);
    traj.inputs.reserve(estimated);
    traj.sample_flags.reserve(estimated);
    traj.disturbances.reserve(estimated);
    integrate_closed_loop(sys, ctrl, x0, sched, d_spec, step, horizon,
                          [&](const StepPoint& pt) {
                              traj.times.push_back(pt.t);
                              traj.states.push_back(pt.x);
                              traj.inputs.push_back(pt.u);
                              traj.sample_flags.push_back(pt.is_sample ? 1 : 0);
                              traj.disturbances.push_back(pt.d);
                          });
    return traj;
}

Vec exact_step_example41(const Vec& x, double u, double r) {
    if (x.dim() != 3) throw DimensionMismatch("exact_step_example41: state must be 3-dim");
    if (r < 0.0) throw ValidationError("exact_step_example41: r must be nonnegative");
    Vec y(3);
    y[0] = x[0] + u * r;
    y[1] = x[1] + (x[0] + u * x[0]) * r + (u + u * u) * r * r / 2.0;
    y[2] = x[2] + (x[1] + x[0] * x[0]) * r + (x[0] + 3.0 * u * x[0]) * r * r / 2.0 +
           (u + 3.0 * u * u) * r * r * r / 6.0;
    return y;
}

GronwallResult gronwall_check(const Trajectory& traj, std::size_t index_begin,
                              std::size_t index_end, double Q, double G) {
    if (index_end <= index_begin || index_end >= traj.size())
        throw ValidationError("gronwall_check: bad segment indices");
    GronwallResult res;
    const double a = traj.times[index_begin];
    const double b = traj.times[index_end];
    const double xa = traj.states[index_begin].norm();

    // derivative bound via per-substep average slopes; the relative
    // slack absorbs curvature of order h^2
    for (std::size_t k = index_begin; k < index_end; ++k) {
        const double h = traj.times[k + 1] - traj.times[k];
        const double slope = (traj.states[k + 1] - traj.states[k]).norm() / h;
        const double cap = Q * std::max(traj.states[k].norm(), traj.states[k + 1].norm()) +
                           G * xa;
        if (slope > cap * (1.0 + 1e-7 + h * h) + 1e-12 * (1.0 + xa)) return res;
    }
    const double theta = (G + Q) * (b - a) * std::exp(Q * (b - a));
    res.theta = theta;
    if (!(theta < 1.0)) return res;
    res.applicable = true;
    res.holds = true;
    const double factor = theta / (1.0 - theta);
    for (std::size_t k = index_begin; k <= index_end; ++k) {
        const double lhs = (traj.states[k] - traj.states[index_begin]).norm();
        const double rhs = factor * traj.states[k].norm();
        if (lhs == 0.0) continue;
        if (rhs == 0.0) {
            res.holds = false;
            res.worst_ratio = kInf;
            continue;
        }
        const double ratio = lhs / rhs;
        res.worst_ratio = std::max(res.worst_ratio, ratio);
        if (ratio > 1.0) res.holds = false;
    }
    return res;
}

double time_to_ball(const Trajectory& traj, double eps) {
    const double cap = eps * (1.0 + 1e-9);
    std::size_t last_out = SIZE_MAX;
    for (std::size_t k = traj.size(); k-- > 0;) {
        if (traj.states[k].norm() > cap) {
            last_out = k;
            break;
        }
    }
    if (last_out == SIZE_MAX) return traj.times.front();
    if (last_out + 1 >= traj.size()) return kInf;
    return traj.times[last_out + 1];
}

namespace {

struct SuffixFit {
    bool ok = false;
    double mu = 0;
};

SuffixFit fit_decay(const Trajectory& traj, const DesignStage& stage) {
    const std::size_t i = stage.index;
    if (traj.n < i + 1) return {};
    // maximal suffix inside the terminal region
    std::size_t start = traj.size();
    for (std::size_t k = traj.size(); k-- > 0;) {
        const Vec xs = traj.states[k].head(i);
        const double z = traj.states[k][i] + stage.c.dot(xs);
        const bool inside = quadratic_form(stage.P, xs) < stage.R * stage.R &&
                            std::abs(z) <= 1.0 / stage.omega;
        if (!inside) break;
        start = k;
    }
    if (start + 8 > traj.size()) return {};
    double sum_t = 0, sum_v = 0, sum_tt = 0, sum_tv = 0;
    std::size_t m = 0;
    for (std::size_t k = start; k < traj.size(); ++k) {
        const Vec xs = traj.states[k].head(i);
        const double z = traj.states[k][i] + stage.c.dot(xs);
        const double V = 0.5 * stage.M * z * z + 0.5 * quadratic_form(stage.P, xs);
        if (V < 1e-280) break;
        const double t = traj.times[k];
        const double lv = std::log(V);
        sum_t += t;
        sum_v += lv;
        sum_tt += t * t;
        sum_tv += t * lv;
        ++m;
    }
    if (m < 8) return {};
    const double denom = static_cast<double>(m) * sum_tt - sum_t * sum_t;
    if (denom <= 0) return {};
    const double slope = (static_cast<double>(m) * sum_tv - sum_t * sum_v) / denom;
    return {true, -slope};
}

} // namespace

StabilityReport stability_metrics(const std::vector<Trajectory>& trajs,
                                  const DesignStage* stage,
                                  const std::vector<double>& eps_grid) {
    StabilityReport rep;
    rep.trajectories = trajs.size();
    for (double eps : eps_grid) rep.time_to_ball.emplace_back(eps, 0.0);
    for (const Trajectory& traj : trajs) {
        double sup = 0.0;
        for (const Vec& x : traj.states) sup = std::max(sup, x.norm());
        rep.sup_norm = std::max(rep.sup_norm, sup);
        const double x0 = traj.states.front().norm();
        if (x0 > 0.0)
            rep.lyapunov_ratio = std::max(rep.lyapunov_ratio, sup / x0);
        else if (sup > 0.0)
            rep.lyapunov_ratio = kInf;
        for (auto& [eps, worst] : rep.time_to_ball)
            worst = std::max(worst, time_to_ball(traj, eps));
        if (stage != nullptr) {
            const SuffixFit fit = fit_decay(traj, *stage);
            if (fit.ok)
                rep.decay_rate_mu = rep.decay_rate_mu
                                        ? std::min(*rep.decay_rate_mu, fit.mu)
                                        : fit.mu;
        }
    }
    return rep;
}

namespace {

// Convergence probe without dense storage: tracks the last time the state
// was outside the ball, then checks it settled before the horizon.
bool probe_converges(const SystemModel& sys, const ControllerSpec& ctrl,
                     const Vec& x0, double r, const PerturbationSpec& w,
                     const DisturbanceSpec& d, double horizon, double step_cap,
                     double eps) {
    try {
        const Schedule sched = make_schedule(r, w, horizon);
        const double step = std::min(step_cap, sched.min_gap() / 4.0);
        const double cap = eps * (1.0 + 1e-9);
        double last_out = -1.0;
        double last_t = 0.0;
        integrate_closed_loop(sys, ctrl, x0, sched, d, step, horizon,
                              [&](const StepPoint& pt) {
                                  if (pt.x.norm() > cap) last_out = pt.t;
                                  last_t = pt.t;
                              });
        return last_out < last_t; // settled strictly before the final point
    } catch (const Divergence&) {
        return false;
    }
}

} // namespace

double masp_search(const SystemModel& sys, const ControllerSpec& ctrl,
                   const MaspBanks& banks, double r_hi) {
    if (!(r_hi > 0.0)) throw ValidationError("masp_search: r_hi must be positive");
    if (banks.x0_set.empty() || banks.w_bank.empty() || banks.d_bank.empty())
        throw ValidationError("masp_search: banks must be non-empty");

    const std::size_t combos =
        banks.x0_set.size() * banks.w_bank.size() * banks.d_bank.size();
    const auto probe = [&](double r) {
        return parallel_reduce<bool>(
            combos, true,
            [&](std::size_t idx) {
                const std::size_t xi = idx % banks.x0_set.size();
                const std::size_t wi = (idx / banks.x0_set.size()) % banks.w_bank.size();
                const std::size_t di = idx / (banks.x0_set.size() * banks.w_bank.size());
                return probe_converges(sys, ctrl, banks.x0_set[xi], r, banks.w_bank[wi],
                                       banks.d_bank[di], banks.horizon, banks.step_cap,
                                       banks.ball_eps);
            },
            [](bool a, bool b) { return a && b; });
    };

    double lo = r_hi / 1024.0;
    if (!probe(lo))
        throw NoStabilizingRate("masp_search: controller fails even at r_hi/1024");
    if (probe(r_hi)) return r_hi;
    double hi = r_hi;
    while (hi - lo > 1e-3 * lo) {
        const double mid = 0.5 * (lo + hi);
        (probe(mid) ? lo : hi) = mid;
    }
    return lo;
}

} // namespace fwdsat
