#include "fwdsat/controller.hpp"

#include "fwdsat/errors.hpp"

#include <cmath>

namespace fwdsat {

namespace {

// x' P x over the first k components, same accumulation order as
// quadratic_form so branch tests are reproducible.
double sliced_quadratic(const Mat& P, const Vec& x, std::size_t k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < k; ++j) row += P(i, j) * x[j];
        acc += x[i] * row;
    }
    return acc;
}

double sliced_dot(const Vec& v, const Vec& x) {
    double acc = 0.0;
    for (std::size_t j = 0; j < v.dim(); ++j) acc += v[j] * x[j];
    return acc;
}

} // namespace

double forwarding_feedback(const Vec& x, double y, const DesignStage& stage,
                           const FeedbackFn& fallback) {
    if (x.dim() != stage.dim())
        throw DimensionMismatch("forwarding_feedback: state does not match stage");
    if (quadratic_form(stage.P, x) >= stage.R * stage.R) return fallback(x);
    const double z = y + stage.c.dot(x);
    return stage.p.dot(x) - stage.K * stage.cb() * sat(stage.omega * z);
}

double recursive_feedback(const Vec& x, const GainSchedule& schedule) {
    if (x.dim() != schedule.n)
        throw DimensionMismatch("recursive_feedback: state dimension mismatch");
    // largest stage first; membership is strict, boundaries fall outward
    for (std::size_t i = schedule.stages.size(); i >= 1; --i) {
        const DesignStage& s = schedule.stages[i - 1];
        if (sliced_quadratic(s.P, x, i) < s.R * s.R) {
            const double z = x[i] + sliced_dot(s.c, x);
            return sliced_dot(s.p, x) - s.K * s.cb() * sat(s.omega * z);
        }
    }
    return -schedule.K0 * sat(schedule.omega0 * x[0]);
}

BoundCheck bound_check(const GainSchedule& schedule, double G) {
    double bound = schedule.K0;
    for (const DesignStage& s : schedule.stages) {
        const auto sw = sandwich_constants(s.P); // a_i^{-1} = a2 = 1/sqrt(lmin)
        bound = std::max(bound, s.R * (s.p.norm() * sw.a2 + std::abs(s.cb())));
    }
    return {bound, bound <= G};
}

std::size_t ControllerSpec::state_dim() const {
    switch (kind) {
    case Kind::recursive_forwarding: return schedule.n;
    case Kind::single_stage: return stage.dim() + 1;
    case Kind::linear_outer: return outer_dim_;
    }
    return 0;
}

double ControllerSpec::eval(const Vec& full_state) const {
    switch (kind) {
    case Kind::recursive_forwarding:
        return recursive_feedback(full_state, schedule);
    case Kind::single_stage: {
        const Vec xs = full_state.head(stage.dim());
        return forwarding_feedback(xs, full_state[stage.dim()], stage, fallback);
    }
    case Kind::linear_outer:
        return -K0 * sat(omega0 * full_state[0]);
    }
    return 0.0;
}

ControllerSpec ControllerSpec::recursive(GainSchedule schedule) {
    schedule.validate();
    ControllerSpec c;
    c.kind = Kind::recursive_forwarding;
    c.schedule = std::move(schedule);
    return c;
}

ControllerSpec ControllerSpec::single(DesignStage stage, FeedbackFn fallback) {
    ControllerSpec c;
    c.kind = Kind::single_stage;
    c.stage = std::move(stage);
    c.fallback = std::move(fallback);
    return c;
}

ControllerSpec ControllerSpec::outer(double K0, double omega0, std::size_t dim) {
    if (K0 <= 0 || omega0 <= 0)
        throw ValidationError("ControllerSpec: outer gains must be positive");
    ControllerSpec c;
    c.kind = Kind::linear_outer;
    c.K0 = K0;
    c.omega0 = omega0;
    c.outer_dim_ = dim;
    return c;
}

} // namespace fwdsat
