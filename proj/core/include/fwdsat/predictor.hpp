#pragma once

#include "fwdsat/controller.hpp"
#include "fwdsat/simulate.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace fwdsat {

// Piecewise-constant input record over a contiguous time window. Queries
// outside [start, end) throw WindowNotCovered.
class InputHistory {
public:
    explicit InputHistory(double t_start) { breakpoints_.push_back(t_start); }

    // Extends coverage with value on [end(), t_end).
    void append(double t_end, double value);
    void prune_before(double t);

    double start() const { return breakpoints_.front(); }
    double end() const { return breakpoints_.back(); }
    bool covers(double a, double b) const { return start() <= a + 1e-12 && b <= end() + 1e-12; }
    double value_at(double t) const;
    double sup_abs(double a, double b) const; // over [a, b) intersected segments

    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<double>& values() const { return values_; }

private:
    std::vector<double> breakpoints_; // size m+1
    std::vector<double> values_;      // size m
};

// The iterated input integrals of the predictor, each exact per constant
// segment (polynomial antiderivatives, no quadrature).
struct HistoryIntegrals {
    double I_u = 0;      // int u
    double I_uu = 0;     // int int u
    double I_1pu_u = 0;  // int (1+u) int u
    double I_triple = 0; // int int (1+u(w)) int u dq dw ds
    double I_sq = 0;     // int (int u)^2
};
HistoryIntegrals history_integrals(const InputHistory& h, double w_begin, double w_end);

struct DelaySpec {
    double tau = 0; // input delay
    double T = 0;   // measurement delay
    double r = 0;   // sampling period
    std::size_t l = 0; // tau = l r

    // Validates tau = l r for a positive integer l (relative tolerance 1e-9).
    static DelaySpec make(double tau, double T, double r);
};

// Exact flow-based prediction of x(t_now + tau) from the delayed measurement
// x(t_now - T) and the recorded input over [t_now - T - tau, t_now].
Vec predict_state(const Vec& x_meas, const InputHistory& h, const DelaySpec& delays,
                  double t_now);

struct PredictionSample {
    double tau_i = 0;
    Vec X;
    std::optional<Vec> x_true; // state at tau_i + tau, filled after the run
};

struct DelayedRunResult {
    Trajectory traj;
    std::vector<PredictionSample> predictions;
    double ugas_initial = 0; // windowed state+input norm at t = 0
    double ugas_final = 0;   // the same statistic at t = horizon
};

// Delayed closed loop of the three-integrator benchmark: plant input
// u(t - tau), periodic sampling tau_i = i r, measurement x(tau_i - T),
// control computed from the predicted state.
DelayedRunResult simulate_delayed_loop(const ControllerSpec& ctrl,
                                       const DelaySpec& delays,
                                       const std::function<Vec(double)>& x0_history,
                                       const InputHistory& u0_history,
                                       double horizon, double step);

} // namespace fwdsat
