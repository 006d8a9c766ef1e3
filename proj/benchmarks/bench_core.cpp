#include "fwdsat/controller.hpp"
#include "fwdsat/design.hpp"
#include "fwdsat/predictor.hpp"
#include "fwdsat/rng.hpp"
#include "fwdsat/simulate.hpp"
#include "fwdsat/systems.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

using namespace fwdsat;

namespace {

void BM_recursive_feedback(benchmark::State& state) {
    const GainSchedule gains = example41_gains_fast();
    Rng rng(1);
    std::vector<Vec> xs;
    for (int k = 0; k < 1024; ++k) {
        Vec x(3);
        for (std::size_t i = 0; i < 3; ++i) x[i] = rng.uniform(-2.0, 2.0);
        xs.push_back(std::move(x));
    }
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(recursive_feedback(xs[i & 1023], gains));
        ++i;
    }
}
BENCHMARK(BM_recursive_feedback);

void BM_exact_step(benchmark::State& state) {
    const Vec x{1.0, 0.5, -0.25};
    for (auto _ : state)
        benchmark::DoNotOptimize(exact_step_example41(x, 0.3, 0.2));
}
BENCHMARK(BM_exact_step);

void BM_rk4_interval(benchmark::State& state) {
    const SystemModel sys = example41_system();
    const ControllerSpec ctrl = ControllerSpec::recursive(example41_gains_fast());
    const Schedule sched = make_schedule(0.2, PerturbationSpec::zero(), 0.2);
    for (auto _ : state) {
        double last = 0.0;
        integrate_closed_loop(sys, ctrl, Vec{1.0, 1.0, 1.0}, sched,
                              DisturbanceSpec::none(), 1e-3, 0.2,
                              [&](const StepPoint& pt) { last = pt.x[0]; });
        benchmark::DoNotOptimize(last);
    }
    state.SetItemsProcessed(state.iterations() * 200);
}
BENCHMARK(BM_rk4_interval);

void BM_certificate_33(benchmark::State& state) {
    const DesignStage s2 = example41_stage2(0.05, 0.05);
    GridSpec grid;
    grid.quasi_random = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            certify_condition_33(example41_stage_f(2), DisturbanceBox::none(), s2, grid));
    }
}
BENCHMARK(BM_certificate_33)->Arg(1000)->Arg(10000);

void BM_history_integrals(benchmark::State& state) {
    InputHistory h(-0.6);
    Rng rng(5);
    double t = -0.6;
    for (int s = 0; s < 8; ++s) {
        t += 0.075;
        h.append(s == 7 ? 0.0 : t, rng.uniform(-1.0, 1.0));
    }
    for (auto _ : state)
        benchmark::DoNotOptimize(history_integrals(h, -0.6, 0.0));
}
BENCHMARK(BM_history_integrals);

void BM_predict_state(benchmark::State& state) {
    const DelaySpec d = DelaySpec::make(0.4, 0.2, 0.2);
    InputHistory h(-0.6);
    h.append(-0.3, 0.5);
    h.append(0.0, -0.25);
    const Vec x{1.0, 0.5, -0.25};
    for (auto _ : state)
        benchmark::DoNotOptimize(predict_state(x, h, d, 0.0));
}
BENCHMARK(BM_predict_state);

} // namespace

BENCHMARK_MAIN();
