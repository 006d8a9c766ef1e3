#pragma once

#include "fwdsat/controller.hpp"
#include "fwdsat/design.hpp"
#include "fwdsat/linalg.hpp"

#include <functional>
#include <string>
#include <vector>

namespace fwdsat {

// Right-hand side written into a caller-provided buffer (hot path of the
// integrator; no allocation per call).
using RhsFn = std::function<void(const Vec& d, const Vec& x, double u, Vec& dx)>;

struct SystemModel {
    std::string name;
    std::size_t n = 0;
    RhsFn rhs;
    DisturbanceBox D; // dim 0 = undisturbed
    NonlinearityBound L = NonlinearityBound::zero();
};

// Three-integrator benchmark: x1' = u, x2' = x1 + x1 u, x3' = x2 + x1^2.
SystemModel example41_system();

// Perturbed two-chain with an added integrator, state (x1, x2, y),
// d in [-1,1]^3. The nonlinearities are scaled so that both carry envelope
// gain L1: f = e (k1 d1 x1, k2 d2 x2)', g = e d3 sin(x1 + x2) with
// e = L1 / max(k1, k2, sqrt(2)).
SystemModel example42_system(double k1, double k2, double L1);

// Pure integrator chain x1' = u, xi' = x_{i-1}.
SystemModel scalar_chain_system(std::size_t n);

// Chain with per-coordinate extra terms parsed from a small expression
// catalog: sums of terms c * [dK*] (xJ | xJ^2 | xJ*u | u | u^2).
SystemModel inline_chain_system(std::size_t n,
                                const std::vector<std::string>& g_exprs,
                                std::size_t disturbance_dim, double disturbance_bound);

// Stage nonlinearities of the three-integrator benchmark in the form the
// certificates consume (stage 1: f = 0, g = x1 u; stage 2: f = (0, x1 u)',
// g = x1^2).
VectorField example41_stage_f(std::size_t stage_index);
ScalarField example41_stage_g(std::size_t stage_index);

// Stage constants used in the worked example: stage 1 is (P1, p1) = ([1], [-1])
// with the printed M = K/(R+K); stage 2 is (P2, p2) with M = K(2+(3+2v2)R)/(4R).
// delta = 0 picks the default 1e-4 * M K (c'b)^2 omega.
DesignStage example41_stage1(double R, double K, double delta = 0.0);
DesignStage example41_stage2(double R, double K, double delta = 0.0);

// Published gain sets for the benchmark controller.
GainSchedule example41_gains_conservative(); // R2 = K2 = 1/20
GainSchedule example41_gains_fast();         // R2 = K2 = 1

// Single-stage controller for the perturbed chain: linear fallback p'x
// outside the ellipsoid. K = 0 picks the midpoint of the gain window.
ControllerSpec example42_controller(double k1, double k2, double L1, double R,
                                    double omega, double K = 0.0);

} // namespace fwdsat
