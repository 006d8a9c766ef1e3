#pragma once

#include "fwdsat/design.hpp"
#include "fwdsat/linalg.hpp"

#include <functional>

namespace fwdsat {

// sat(x) = x / max(1, |x|): identity on [-1, 1], sign clipping outside.
inline double sat(double x) {
    const double ax = x < 0 ? -x : x;
    return ax <= 1.0 ? x : (x < 0 ? -1.0 : 1.0);
}

using FeedbackFn = std::function<double(const Vec&)>;

// Single-stage forwarding law: the fallback k(x) outside the ellipsoid
// x'Px >= R^2, the saturated linear law inside (boundary goes to fallback).
double forwarding_feedback(const Vec& x, double y, const DesignStage& stage,
                           const FeedbackFn& fallback);

// Recursive law: the largest stage i whose sliced state satisfies
// x'Q_i'P_iQ_ix < R_i^2 is active; when none is, the saturated outer law.
double recursive_feedback(const Vec& x, const GainSchedule& schedule);

// Printed sup bound on |k|: max{K0, max_i R_i (|p_i| a_i^{-1} + |c_i'b_i|)}
// with a_i = sqrt(lmin(P_i)).
struct BoundCheck {
    double bound;
    bool within;
};
BoundCheck bound_check(const GainSchedule& schedule, double G);

// Controller wiring used by the simulator and the scenario layer.
struct ControllerSpec {
    enum class Kind { recursive_forwarding, single_stage, linear_outer };
    Kind kind = Kind::linear_outer;

    GainSchedule schedule; // recursive_forwarding

    // single_stage: controls the augmented state (x, y) where x is the first
    // stage.dim() components and y the last one.
    DesignStage stage;
    FeedbackFn fallback;

    double K0 = 1.0, omega0 = 1.0; // linear_outer

    std::size_t state_dim() const;
    double eval(const Vec& full_state) const;

    static ControllerSpec recursive(GainSchedule schedule);
    static ControllerSpec single(DesignStage stage, FeedbackFn fallback);
    static ControllerSpec outer(double K0, double omega0, std::size_t dim = 1);

private:
    std::size_t outer_dim_ = 1;
};

} // namespace fwdsat
