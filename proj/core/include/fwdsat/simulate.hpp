#pragma once

#include "fwdsat/controller.hpp"
#include "fwdsat/systems.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace fwdsat {

// Perturbation input w >= 0 of the sampling schedule. Either a function of
// time or a sequence indexed by sample count (cycled when exhausted).
struct PerturbationSpec {
    enum class Kind { zero, constant, paper_sine, function, sequence };
    Kind kind = Kind::zero;
    double value = 0.0;
    std::function<double(double)> fn;
    std::vector<double> seq;

    double eval(double t, std::size_t sample_index) const;

    static PerturbationSpec zero();
    static PerturbationSpec constant(double v);
    static PerturbationSpec paper_sine(); // ln(2 / (1 + |sin t|))
    static PerturbationSpec function(std::function<double(double)> f);
    static PerturbationSpec sequence(std::vector<double> values);
    static PerturbationSpec seeded(std::uint64_t seed, std::size_t count,
                                   double w_max); // uniform draws in [0, w_max]
};

// Sampling instants tau_0 = 0, tau_{i+1} = tau_i + r exp(-w(tau_i)),
// generated until the first instant at or past the horizon.
struct Schedule {
    double r = 0;
    std::vector<double> tau;
    double min_gap() const;
};

Schedule make_schedule(double r, const PerturbationSpec& w, double horizon);

// Disturbance realization: none, a constant vector, a function of time, or
// seeded uniform draws from the box refreshed at every integration step.
struct DisturbanceSpec {
    enum class Kind { none, constant, function, seeded };
    Kind kind = Kind::none;
    Vec value;
    std::function<Vec(double)> fn;
    std::uint64_t seed = 1;

    static DisturbanceSpec none();
    static DisturbanceSpec constant(Vec v);
    static DisturbanceSpec function(std::function<Vec(double)> f);
    static DisturbanceSpec seeded(std::uint64_t seed);
};

struct Trajectory {
    std::size_t n = 0;
    std::vector<double> times;
    std::vector<Vec> states;
    std::vector<double> inputs;         // held value; changes only at samples
    std::vector<std::uint8_t> sample_flags;
    std::vector<Vec> disturbances;      // value active on [t_k, t_{k+1})

    std::size_t size() const { return times.size(); }
    // Nearest grid index for t; throws if no grid point lies within tol.
    std::size_t index_at(double t, double tol = 1e-9) const;
};

// Observer invoked at every grid point of the integration; when it is not
// interested in dense output the simulation stores nothing.
struct StepPoint {
    double t;
    const Vec& x;
    double u;
    bool is_sample;
    const Vec& d;
};
using StepObserver = std::function<void(const StepPoint&)>;

inline constexpr double kOverflowGuard = 1e12;

// Core fixed-step RK4 loop with zero-order hold: the input is recomputed
// from the state at each sampling instant and held constant in between.
// Every sampling instant is a grid point. Throws Divergence past the guard.
void integrate_closed_loop(const SystemModel& sys, const ControllerSpec& ctrl,
                           const Vec& x0, const Schedule& sched,
                           const DisturbanceSpec& d_spec, double step,
                           double horizon, const StepObserver& observe);

// Dense simulation: step must not exceed a quarter of the smallest gap.
Trajectory simulate_closed_loop(const SystemModel& sys, const ControllerSpec& ctrl,
                                const Vec& x0, const Schedule& sched,
                                const DisturbanceSpec& d_spec, double step);

// Closed-form one-period map of the three-integrator benchmark under ZOH.
Vec exact_step_example41(const Vec& x, double u, double r);

// Sampled-data contraction estimate over the trajectory segment
// [index_begin, index_end]: checks |x(t) - x(a)| <= th/(1-th) |x(t)| with
// th = (G+Q)(b-a)exp(Q(b-a)), after numerically verifying the derivative
// bound |x'(t)| <= Q|x(t)| + G|x(a)|. applicable = false when the bound fails or th >= 1.
struct GronwallResult {
    bool applicable = false;
    bool holds = false;
    double worst_ratio = 0;
    double theta = 0;
};
GronwallResult gronwall_check(const Trajectory& traj, std::size_t index_begin,
                              std::size_t index_end, double Q, double G);

// First grid time after which |x| never exceeds eps*(1 + 1e-9) up to the
// final grid point; +inf when the trajectory never settles.
double time_to_ball(const Trajectory& traj, double eps);

struct StabilityReport {
    double sup_norm = 0;
    std::vector<std::pair<double, double>> time_to_ball; // (eps, worst time)
    double lyapunov_ratio = 0;
    std::optional<double> decay_rate_mu;
    std::size_t trajectories = 0;
};

// Diagnostics over a batch of trajectories; when a stage is supplied, fits
// the exponential rate of V = M z^2/2 + x'Px/2 on the terminal suffix where
// x'Px < R^2 and |z| <= 1/omega (minimum over trajectories).
StabilityReport stability_metrics(const std::vector<Trajectory>& trajs,
                                  const DesignStage* stage = nullptr,
                                  const std::vector<double>& eps_grid = {
                                      1.0, 0.5, 0.1, 0.05, 0.01, 1e-3});

// Probe banks for the empirical MASP search.
struct MaspBanks {
    std::vector<Vec> x0_set;
    std::vector<PerturbationSpec> w_bank;
    std::vector<DisturbanceSpec> d_bank;
    double horizon = 100.0;
    double step_cap = 2e-3;
    double ball_eps = 1e-3;
};

// Bisection for the largest sampling period for which every bank combination
// converges. The controller must already stabilize at r_hi/1024; relative
// tolerance 1e-3. Throws NoStabilizingRate when the smallest probe fails.
double masp_search(const SystemModel& sys, const ControllerSpec& ctrl,
                   const MaspBanks& banks, double r_hi);

} // namespace fwdsat
