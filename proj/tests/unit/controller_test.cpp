#include "fwdsat/controller.hpp"
#include "fwdsat/rng.hpp"
#include "fwdsat/systems.hpp"

#include <doctest.h>

#include <cmath>

using namespace fwdsat;

TEST_CASE("saturation basics") {
    CHECK(sat(0.0) == 0.0);
    CHECK(sat(2.0) == 1.0);
    CHECK(sat(0.5) == 0.5);
    CHECK(sat(-3.7) == -1.0);
}

TEST_CASE("saturation is odd, bounded, 1-Lipschitz, identity on the band") {
    double prev_x = -5.0, prev_v = sat(-5.0);
    for (int k = 0; k <= 10000; ++k) {
        const double x = -5.0 + 10.0 * static_cast<double>(k) / 10000.0;
        const double v = sat(x);
        CHECK(std::abs(v) <= 1.0);
        CHECK(sat(-x) == -v);
        if (std::abs(x) <= 1.0) CHECK(v == x);
        if (k > 0) CHECK(std::abs(v - prev_v) <= std::abs(x - prev_x) + 1e-15);
        prev_x = x;
        prev_v = v;
    }
}

TEST_CASE("single-stage law switches to the fallback on and outside the shell") {
    const DesignStage s = example41_stage1(3.0 / 8.0, 0.25);
    const FeedbackFn fallback = [](const Vec& x) { return -sat(x[0]); };

    // x'Px >= R^2 picks the fallback bitwise
    const Vec outside{0.5};
    CHECK(forwarding_feedback(outside, 2.0, s, fallback) == fallback(outside));
    const Vec boundary{3.0 / 8.0};
    CHECK(forwarding_feedback(boundary, 0.0, s, fallback) == fallback(boundary));

    // origin maps to zero
    CHECK(forwarding_feedback(Vec{0.0}, 0.0, s, fallback) == 0.0);

    // inside: p'x - K c'b sat(w (y + c'x)) with p = -1, K = 1/4, c = 1
    CHECK(forwarding_feedback(Vec{0.1}, 0.0, s, fallback) == doctest::Approx(-0.125));
}

TEST_CASE("recursive law reproduces the worked example branches") {
    const GainSchedule cons = example41_gains_conservative();
    const GainSchedule fast = example41_gains_fast();

    // far state: outer saturated law
    CHECK(recursive_feedback(Vec{1.0, 1.0, 1.0}, cons) == doctest::Approx(-1.0));

    // third branch of the aggressive set: -2(x1+x2) - (1/2) sat(x3 + x2 + x1/2)
    CHECK(recursive_feedback(Vec{0.0, 0.0, 0.5}, fast) == doctest::Approx(-0.25));
    CHECK(recursive_feedback(Vec{0.1, 0.0, 0.0}, fast) == doctest::Approx(-0.225));

    // equilibrium
    CHECK(recursive_feedback(Vec{0.0, 0.0, 0.0}, cons) == 0.0);
    CHECK(recursive_feedback(Vec{0.0, 0.0, 0.0}, fast) == 0.0);
}

namespace {

// Literal transcriptions of the printed controllers. The dot products keep
// the library's accumulation order so equality is exact.
double transcribed_conservative(double x1, double x2, double x3) {
    const double q2 = x1 * (1.0 * x1 + 1.0 * x2) + x2 * (1.0 * x1 + 2.0 * x2);
    if (q2 < 0.05 * 0.05)
        return (-2.0 * x1 + -2.0 * x2) - 0.05 * 0.5 * sat(1.0 * (x3 + (0.5 * x1 + 1.0 * x2)));
    if (x1 * (1.0 * x1) < 9.0 / 64.0)
        return -1.0 * x1 - 0.25 * 1.0 * sat(1.0 * (x2 + 1.0 * x1));
    return -1.0 * sat(1.0 * x1);
}

double transcribed_fast(double x1, double x2, double x3) {
    const double q2 = x1 * (1.0 * x1 + 1.0 * x2) + x2 * (1.0 * x1 + 2.0 * x2);
    if (q2 < 1.0)
        return (-2.0 * x1 + -2.0 * x2) - 1.0 * 0.5 * sat(1.0 * (x3 + (0.5 * x1 + 1.0 * x2)));
    if (x1 * (1.0 * x1) < 9.0 / 64.0)
        return -1.0 * x1 - 0.25 * 1.0 * sat(1.0 * (x2 + 1.0 * x1));
    return -1.0 * sat(1.0 * x1);
}

} // namespace

TEST_CASE("recursive law equals the printed piecewise controllers bitwise") {
    const GainSchedule cons = example41_gains_conservative();
    const GainSchedule fast = example41_gains_fast();
    Rng rng(101);
    for (int k = 0; k < 100000; ++k) {
        Vec x(3);
        const double scale = k % 3 == 0 ? 0.05 : (k % 3 == 1 ? 1.0 : 20.0);
        for (std::size_t i = 0; i < 3; ++i) x[i] = rng.uniform(-scale, scale);
        CHECK(recursive_feedback(x, cons) == transcribed_conservative(x[0], x[1], x[2]));
        CHECK(recursive_feedback(x, fast) == transcribed_fast(x[0], x[1], x[2]));
    }
}

TEST_CASE("printed sup bound dominates sampled evaluations") {
    const GainSchedule cons = example41_gains_conservative();
    const auto bc = bound_check(cons, 1.0);
    CHECK(bc.bound == doctest::Approx(1.0)); // K0 dominates for this schedule
    CHECK(bc.within);

    Rng rng(55);
    double max_seen = 0.0;
    for (int k = 0; k < 1000000; ++k) {
        Vec x(3);
        const double scale = std::pow(10.0, rng.uniform(-3.0, 3.0));
        for (std::size_t i = 0; i < 3; ++i) x[i] = rng.uniform(-scale, scale);
        max_seen = std::max(max_seen, std::abs(recursive_feedback(x, cons)));
    }
    CHECK(max_seen <= bc.bound * (1.0 + 1e-12));

    const GainSchedule fast = example41_gains_fast();
    const auto bc2 = bound_check(fast, 1.0);
    for (int k = 0; k < 200000; ++k) {
        Vec x(3);
        for (std::size_t i = 0; i < 3; ++i) x[i] = rng.uniform(-50.0, 50.0);
        CHECK(std::abs(recursive_feedback(x, fast)) <= bc2.bound * (1.0 + 1e-12));
    }
}

TEST_CASE("bound check edge shapes") {
    GainSchedule g = example41_gains_conservative();
    // dominate with K0
    g.K0 = 10.0;
    const auto bc = bound_check(g, 10.0);
    CHECK(bc.bound == doctest::Approx(10.0));
    CHECK(bc.within);
    CHECK_FALSE(bound_check(g, 1.0).within);
}

TEST_CASE("the law is Lipschitz along segments inside one region") {
    const GainSchedule fast = example41_gains_fast();
    const DesignStage& s2 = fast.stages[1];
    // constant from the printed structure of the inner law
    const double lip = s2.p.norm() +
                       s2.K * std::abs(s2.cb()) * s2.omega * (1.0 + s2.c.norm());
    Rng rng(77);
    for (int k = 0; k < 2000; ++k) {
        Vec a(3), b(3);
        for (std::size_t i = 0; i < 3; ++i) {
            a[i] = rng.uniform(-0.2, 0.2);
            b[i] = a[i] + rng.uniform(-1e-4, 1e-4);
        }
        // both endpoints deep inside the innermost region
        const double ua = recursive_feedback(a, fast);
        const double ub = recursive_feedback(b, fast);
        CHECK(std::abs(ua - ub) <= lip * (a - b).norm() * (1.0 + 1e-9) + 1e-15);
    }
}
