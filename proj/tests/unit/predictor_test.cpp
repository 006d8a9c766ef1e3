#include "fwdsat/errors.hpp"
#include "fwdsat/predictor.hpp"
#include "fwdsat/rng.hpp"
#include "fwdsat/systems.hpp"

#include <doctest.h>

#include <cmath>

using namespace fwdsat;

TEST_CASE("history integrals of the zero input vanish") {
    InputHistory h(-1.0);
    h.append(1.0, 0.0);
    const auto I = history_integrals(h, -1.0, 1.0);
    CHECK(I.I_u == 0.0);
    CHECK(I.I_uu == 0.0);
    CHECK(I.I_1pu_u == 0.0);
    CHECK(I.I_triple == 0.0);
    CHECK(I.I_sq == 0.0);
}

TEST_CASE("history integrals of a constant input match the antiderivatives") {
    const double u0 = 0.7, len = 1.3;
    InputHistory h(0.0);
    h.append(len, u0);
    const auto I = history_integrals(h, 0.0, len);
    CHECK(I.I_u == doctest::Approx(u0 * len).epsilon(1e-14));
    CHECK(I.I_uu == doctest::Approx(u0 * len * len / 2.0).epsilon(1e-14));
    CHECK(I.I_1pu_u == doctest::Approx((1.0 + u0) * u0 * len * len / 2.0).epsilon(1e-14));
    CHECK(I.I_sq == doctest::Approx(u0 * u0 * len * len * len / 3.0).epsilon(1e-14));
    CHECK(I.I_triple ==
          doctest::Approx((1.0 + u0) * u0 * len * len * len / 6.0).epsilon(1e-14));
}

namespace {

// Riemann-sum oracle for all five integrals, independent of the closed forms.
HistoryIntegrals riemann_oracle(const InputHistory& h, double a, double b,
                                std::size_t cells) {
    HistoryIntegrals out;
    const double dt = (b - a) / static_cast<double>(cells);
    double U = 0, W = 0;
    for (std::size_t k = 0; k < cells; ++k) {
        const double t = a + (static_cast<double>(k) + 0.5) * dt;
        const double u = h.value_at(t);
        // accumulate outer integrals with midpoint values of the inner ones
        out.I_uu += (U + 0.5 * u * dt) * dt;
        out.I_1pu_u += (1.0 + u) * (U + 0.5 * u * dt) * dt;
        out.I_triple += (W + 0.5 * (1.0 + u) * (U + 0.25 * u * dt) * dt) * dt;
        out.I_sq += (U + 0.5 * u * dt) * (U + 0.5 * u * dt) * dt;
        W += (1.0 + u) * (U + 0.5 * u * dt) * dt;
        U += u * dt;
    }
    out.I_u = U;
    return out;
}

InputHistory random_history(Rng& rng, double a, double b, std::size_t segments) {
    InputHistory h(a);
    double t = a;
    for (std::size_t s = 0; s < segments; ++s) {
        const double next = s + 1 == segments ? b : t + (b - t) * rng.uniform(0.2, 0.6);
        h.append(next, rng.uniform(-1.0, 1.0));
        t = next;
    }
    return h;
}

} // namespace

TEST_CASE("two-segment integrals agree with a dense Riemann oracle") {
    InputHistory h(0.0);
    h.append(1.0, 1.0);
    h.append(2.0, 0.0);
    const auto I = history_integrals(h, 0.0, 2.0);
    CHECK(I.I_u == doctest::Approx(1.0).epsilon(1e-14));
    const auto ref = riemann_oracle(h, 0.0, 2.0, 1000000);
    CHECK(I.I_u == doctest::Approx(ref.I_u).epsilon(1e-6));
    CHECK(I.I_uu == doctest::Approx(ref.I_uu).epsilon(1e-6));
    CHECK(I.I_1pu_u == doctest::Approx(ref.I_1pu_u).epsilon(1e-6));
    CHECK(I.I_triple == doctest::Approx(ref.I_triple).epsilon(1e-6));
    CHECK(I.I_sq == doctest::Approx(ref.I_sq).epsilon(1e-6));
}

TEST_CASE("random multi-segment integrals agree with the Riemann oracle") {
    Rng rng(2);
    for (int trial = 0; trial < 10; ++trial) {
        InputHistory h = random_history(rng, -0.6, 0.0, 1 + trial % 8);
        const auto I = history_integrals(h, -0.6, 0.0);
        const auto ref = riemann_oracle(h, -0.6, 0.0, 400000);
        const double tol = 2e-6;
        CHECK(std::abs(I.I_u - ref.I_u) <= tol * std::max(1.0, std::abs(ref.I_u)));
        CHECK(std::abs(I.I_uu - ref.I_uu) <= tol * std::max(1.0, std::abs(ref.I_uu)));
        CHECK(std::abs(I.I_1pu_u - ref.I_1pu_u) <=
              tol * std::max(1.0, std::abs(ref.I_1pu_u)));
        CHECK(std::abs(I.I_triple - ref.I_triple) <=
              tol * std::max(1.0, std::abs(ref.I_triple)));
        CHECK(std::abs(I.I_sq - ref.I_sq) <= tol * std::max(1.0, std::abs(ref.I_sq)));
    }
}

TEST_CASE("window coverage is enforced") {
    InputHistory h(-0.5);
    h.append(0.0, 1.0);
    CHECK_THROWS_AS(history_integrals(h, -0.6, 0.0), WindowNotCovered);
    CHECK_THROWS_AS(h.value_at(0.1), WindowNotCovered);
    CHECK_THROWS_AS(h.value_at(-0.6), WindowNotCovered);
    CHECK(h.value_at(-0.5) == 1.0);
}

TEST_CASE("prediction with an idle input reduces to the drift terms") {
    const DelaySpec d = DelaySpec::make(0.4, 0.2, 0.2);
    InputHistory h(-0.6);
    h.append(0.0, 0.0);
    const Vec x{1.0, -0.5, 2.0};
    const Vec X = predict_state(x, h, d, 0.0);
    const double th = 0.6;
    CHECK(X[0] == doctest::Approx(1.0));
    CHECK(X[1] == doctest::Approx(-0.5 + th * 1.0));
    CHECK(X[2] == doctest::Approx(2.0 + th * (-0.5 + 1.0) + 0.5 * th * th * 1.0));
}

TEST_CASE("constant-history prediction equals the exact one-period map") {
    const DelaySpec d = DelaySpec::make(0.4, 0.2, 0.2);
    Rng rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        Vec x(3);
        for (std::size_t i = 0; i < 3; ++i) x[i] = rng.uniform(-2.0, 2.0);
        const double u0 = rng.uniform(-1.0, 1.0);
        InputHistory h(-0.6);
        h.append(0.0, u0);
        const Vec X = predict_state(x, h, d, 0.0);
        const Vec ref = exact_step_example41(x, u0, 0.6);
        CHECK((X - ref).norm() <= 1e-12 * std::max(1.0, ref.norm()));
    }
}

TEST_CASE("piecewise-constant prediction equals the composed exact flow") {
    const DelaySpec d = DelaySpec::make(0.4, 0.2, 0.2);
    Rng rng(29);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t segments = 1 + rng.next() % 8;
        InputHistory h = random_history(rng, -0.6, 0.0, segments);
        Vec x(3);
        for (std::size_t i = 0; i < 3; ++i) x[i] = rng.uniform(-2.0, 2.0);
        const Vec X = predict_state(x, h, d, 0.0);
        Vec ref = x;
        const auto& bp = h.breakpoints();
        for (std::size_t s = 0; s < h.values().size(); ++s)
            ref = exact_step_example41(ref, h.values()[s], bp[s + 1] - bp[s]);
        CHECK((X - ref).norm() <= 1e-10 * std::max(1.0, ref.norm()));
    }
}

TEST_CASE("delay spec validation") {
    CHECK(DelaySpec::make(0.4, 0.2, 0.2).l == 2);
    CHECK(DelaySpec::make(0.4, 0.2, 0.4 / 5.0).l == 5);
    CHECK_THROWS_AS(DelaySpec::make(0.5, 0.2, 0.2), ValidationError);
    // the sampling-rate rule: any integer l >= 5 tau gives r = tau/l <= 0.2
    const double tau = 0.4;
    const auto l = static_cast<std::size_t>(std::ceil(5.0 * tau));
    const DelaySpec d = DelaySpec::make(tau, 0.2, tau / static_cast<double>(l));
    CHECK(d.r <= 0.2 + 1e-15);
}

TEST_CASE("zero initial data stays at the origin through the delayed loop") {
    const ControllerSpec ctrl = ControllerSpec::recursive(example41_gains_fast());
    const DelaySpec d = DelaySpec::make(0.4, 0.2, 0.2);
    InputHistory u0(-0.6);
    u0.append(0.0, 0.0);
    const auto run = simulate_delayed_loop(
        ctrl, d, [](double) { return Vec{0.0, 0.0, 0.0}; }, u0, 5.0, 1e-2);
    for (const Vec& x : run.traj.states) CHECK(x.norm() == 0.0);
    CHECK(run.ugas_initial == 0.0);
    CHECK(run.ugas_final == 0.0);
}

TEST_CASE("short delayed run: predictions match the future state") {
    const ControllerSpec ctrl = ControllerSpec::recursive(example41_gains_fast());
    const DelaySpec d = DelaySpec::make(0.4, 0.2, 0.2);
    InputHistory u0(-0.6);
    u0.append(0.0, 0.0);
    const auto run = simulate_delayed_loop(
        ctrl, d, [](double) { return Vec{1.0, 1.0, 1.0}; }, u0, 10.0, 1e-3);
    std::size_t audited = 0;
    for (const auto& ps : run.predictions) {
        if (!ps.x_true || ps.tau_i < d.T + d.tau - 1e-12) continue;
        ++audited;
        CHECK((ps.X - *ps.x_true).norm() <= 1e-6);
    }
    CHECK(audited >= 40);
}
