#include "fwdsat/predictor.hpp"

#include "fwdsat/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace fwdsat {

void InputHistory::append(double t_end, double value) {
    if (!(t_end > breakpoints_.back()))
        throw ValidationError("InputHistory: segments must advance in time");
    breakpoints_.push_back(t_end);
    values_.push_back(value);
}

void InputHistory::prune_before(double t) {
    std::size_t drop = 0;
    while (drop + 1 < breakpoints_.size() && breakpoints_[drop + 1] <= t) ++drop;
    if (drop == 0) return;
    breakpoints_.erase(breakpoints_.begin(), breakpoints_.begin() + static_cast<long>(drop));
    values_.erase(values_.begin(), values_.begin() + static_cast<long>(drop));
}

double InputHistory::value_at(double t) const {
    if (t < breakpoints_.front() || t >= breakpoints_.back())
        throw WindowNotCovered("InputHistory: query at t = " + std::to_string(t) +
                               " outside [" + std::to_string(breakpoints_.front()) + ", " +
                               std::to_string(breakpoints_.back()) + ")");
    const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
    return values_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
}

double InputHistory::sup_abs(double a, double b) const {
    double m = 0.0;
    for (std::size_t k = 0; k < values_.size(); ++k) {
        if (breakpoints_[k + 1] <= a || breakpoints_[k] >= b) continue;
        m = std::max(m, std::abs(values_[k]));
    }
    return m;
}

HistoryIntegrals history_integrals(const InputHistory& h, double w_begin, double w_end) {
    if (!(w_end >= w_begin))
        throw ValidationError("history_integrals: window must be ordered");
    if (!h.covers(w_begin, w_end))
        throw WindowNotCovered("history_integrals: window not covered by the record");
    HistoryIntegrals out;
    double U = 0, D = 0, W = 0, T3 = 0, S = 0;
    const auto& bp = h.breakpoints();
    const auto& vals = h.values();
    for (std::size_t k = 0; k < vals.size(); ++k) {
        const double a = std::max(bp[k], w_begin);
        const double b = std::min(bp[k + 1], w_end);
        if (b <= a) continue;
        const double v = vals[k];
        const double t = b - a;
        // accumulators are running values at the segment start; the closed
        // forms integrate U(s) = U + v s, W(s) = W + (1+v)(U s + v s^2/2)
        T3 += W * t + (1.0 + v) * (U * t * t / 2.0 + v * t * t * t / 6.0);
        S += U * U * t + U * v * t * t + v * v * t * t * t / 3.0;
        W += (1.0 + v) * (U * t + v * t * t / 2.0);
        D += U * t + v * t * t / 2.0;
        U += v * t;
    }
    out.I_u = U;
    out.I_uu = D;
    out.I_1pu_u = W;
    out.I_triple = T3;
    out.I_sq = S;
    return out;
}

DelaySpec DelaySpec::make(double tau, double T, double r) {
    if (!(tau > 0) || !(T > 0) || !(r > 0))
        throw ValidationError("DelaySpec: tau, T, r must be positive");
    const double ratio = tau / r;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio))
        throw ValidationError("DelaySpec: tau must be an integer multiple of r");
    DelaySpec d;
    d.tau = tau;
    d.T = T;
    d.r = r;
    d.l = static_cast<std::size_t>(rounded);
    return d;
}

Vec predict_state(const Vec& x_meas, const InputHistory& h, const DelaySpec& delays,
                  double t_now) {
    if (x_meas.dim() != 3)
        throw DimensionMismatch("predict_state: measurement must be 3-dimensional");
    const double win = delays.tau + delays.T;
    const HistoryIntegrals I = history_integrals(h, t_now - win, t_now);
    const double x1 = x_meas[0], x2 = x_meas[1], x3 = x_meas[2];
    Vec X(3);
    X[0] = x1 + I.I_u;
    X[1] = x2 + win * x1 + x1 * I.I_u + I.I_1pu_u;
    X[2] = x3 + win * (x2 + x1 * x1) + 0.5 * win * win * x1 + 3.0 * x1 * I.I_uu +
           I.I_triple + I.I_sq;
    return X;
}

namespace {

// Grid split points inside (t0, t1): shifted input breakpoints (the plant
// sees u(t - tau)) and the measurement lookups j r - T.
std::vector<double> split_points(double t0, double t1, const InputHistory& hist,
                                 const DelaySpec& d) {
    std::set<double> pts;
    for (double bp : hist.breakpoints()) {
        const double shifted = bp + d.tau;
        if (shifted > t0 + 1e-12 && shifted < t1 - 1e-12) pts.insert(shifted);
    }
    const auto j0 = static_cast<long long>(std::floor((t0 + d.T) / d.r));
    for (long long j = j0; ; ++j) {
        const double tm = static_cast<double>(j) * d.r - d.T;
        if (tm >= t1 - 1e-12) break;
        if (tm > t0 + 1e-12) pts.insert(tm);
    }
    return {pts.begin(), pts.end()};
}

} // namespace

DelayedRunResult simulate_delayed_loop(const ControllerSpec& ctrl,
                                       const DelaySpec& delays,
                                       const std::function<Vec(double)>& x0_history,
                                       const InputHistory& u0_history,
                                       double horizon, double step) {
    if (ctrl.state_dim() != 3)
        throw DimensionMismatch("simulate_delayed_loop: controller must be 3-dimensional");
    if (!(horizon > 0) || !(step > 0))
        throw ValidationError("simulate_delayed_loop: horizon and step must be positive");
    if (step > delays.r / 4.0 + 1e-15)
        throw ValidationError("simulate_delayed_loop: step must be at most r/4");
    if (u0_history.start() > -delays.T - delays.tau + 1e-12 ||
        std::abs(u0_history.end()) > 1e-12)
        throw WindowNotCovered("simulate_delayed_loop: initial input history must "
                               "cover exactly [-T-tau, 0)");
    const Vec x_init = x0_history(0.0);
    if (x_init.dim() != 3)
        throw DimensionMismatch("simulate_delayed_loop: initial state history must be 3-dim");

    const SystemModel plant = example41_system(); // same chain, input delayed
    InputHistory hist = u0_history;
    DelayedRunResult out;
    out.traj.n = 3;

    // initial windowed norm: state over [-T, 0], input over [-T-tau, 0)
    double n0 = 0.0;
    for (std::size_t k = 0; k <= 512; ++k) {
        const double s = -delays.T + delays.T * static_cast<double>(k) / 512.0;
        n0 = std::max(n0, x0_history(s).norm());
    }
    out.ugas_initial = n0 + hist.sup_abs(-delays.T - delays.tau, 0.0);

    Vec x = x_init;
    Vec k1(3), k2(3), k3(3), k4(3), tmp(3);
    const Vec d_empty(0);
    const auto rk_step = [&](double u_eff, double h) {
        plant.rhs(d_empty, x, u_eff, k1);
        tmp.assign_sum(x, 0.5 * h, k1);
        plant.rhs(d_empty, tmp, u_eff, k2);
        tmp.assign_sum(x, 0.5 * h, k2);
        plant.rhs(d_empty, tmp, u_eff, k3);
        tmp.assign_sum(x, h, k3);
        plant.rhs(d_empty, tmp, u_eff, k4);
        const double w = h / 6.0;
        for (std::size_t i = 0; i < 3; ++i)
            x[i] += w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    };

    const auto push = [&](double t, double u_cmd, bool is_sample) {
        out.traj.times.push_back(t);
        out.traj.states.push_back(x);
        out.traj.inputs.push_back(u_cmd);
        out.traj.sample_flags.push_back(is_sample ? 1 : 0);
        out.traj.disturbances.push_back(d_empty);
    };

    const auto measure = [&](double tm) -> Vec {
        if (tm <= 0.0) return x0_history(tm);
        return out.traj.states[out.traj.index_at(tm)];
    };

    double u_cmd = 0.0;
    for (std::size_t i = 0;; ++i) {
        const double ti = static_cast<double>(i) * delays.r;
        if (ti >= horizon - 1e-12) break;
        const double ti1 = std::min(static_cast<double>(i + 1) * delays.r, horizon);

        const Vec x_meas = measure(ti - delays.T);
        const Vec X = predict_state(x_meas, hist, delays, ti);
        u_cmd = ctrl.eval(X);
        hist.append(static_cast<double>(i + 1) * delays.r, u_cmd);
        out.predictions.push_back(PredictionSample{ti, X, std::nullopt});
        if (i == 0)
            push(0.0, u_cmd, true);
        else
            out.traj.inputs.back() = u_cmd; // new hold starts at this sample

        // integrate to the next sampling instant, splitting wherever the
        // effective input u(t - tau) jumps or a measurement time falls
        std::vector<double> cuts = split_points(ti, ti1, hist, delays);
        cuts.push_back(ti1);
        double t = ti;
        for (double tc : cuts) {
            const double u_eff = hist.value_at(t - delays.tau + 1e-12 * delays.r);
            const auto nsub =
                std::max<std::size_t>(1, static_cast<std::size_t>(
                                             std::ceil((tc - t) / step - 1e-12)));
            const double h = (tc - t) / static_cast<double>(nsub);
            for (std::size_t s = 0; s < nsub; ++s) {
                rk_step(u_eff, h);
                const double te = s + 1 == nsub ? tc : t + h * static_cast<double>(s + 1);
                if (!(x.norm() < kOverflowGuard))
                    throw Divergence("simulate_delayed_loop: overflow at t = " +
                                         std::to_string(te),
                                     te);
                push(te, u_cmd, false);
            }
            t = tc;
        }
        // flag the grid point at the next sampling instant
        if (ti1 < horizon - 1e-12)
            out.traj.sample_flags.back() = 1;
        hist.prune_before(ti - delays.T - delays.tau - delays.r);
    }

    // fill the true states at tau_i + tau for the exactness audit
    const double t_last = out.traj.times.back();
    for (PredictionSample& ps : out.predictions) {
        const double target = ps.tau_i + delays.tau;
        if (target <= t_last + 1e-9)
            ps.x_true = out.traj.states[out.traj.index_at(target)];
    }

    // windowed norm at the horizon
    double nx = 0.0;
    for (std::size_t k = out.traj.size(); k-- > 0;) {
        if (out.traj.times[k] < horizon - delays.T - 1e-12) break;
        nx = std::max(nx, out.traj.states[k].norm());
    }
    out.ugas_final = nx + hist.sup_abs(horizon - delays.T - delays.tau, horizon);
    return out;
}

} // namespace fwdsat
