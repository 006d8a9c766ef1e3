#pragma once

#include "fwdsat/linalg.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fwdsat {

// f(d, x, u): stage vector nonlinearity. d may be empty (no disturbance).
using VectorField = std::function<Vec(const Vec& d, const Vec& x, double u)>;
// g(d, x, u): scalar nonlinearity of the added integrator.
using ScalarField = std::function<double(const Vec& d, const Vec& x, double u)>;

// Non-decreasing scalar envelope L bounding the stage nonlinearities by
// L(|(x,u)|)|x|^2 + L(|(x,u)|)|x||u|.
class NonlinearityBound {
public:
    NonlinearityBound() : fn_([](double) { return 0.0; }), zero_(true) {}
    explicit NonlinearityBound(std::function<double(double)> fn)
        : fn_(std::move(fn)), zero_(false) {}

    static NonlinearityBound zero() { return NonlinearityBound(); }
    static NonlinearityBound constant(double v);

    double operator()(double s) const { return fn_(s); }
    bool is_zero() const { return zero_; }
    // Spot-checks L(s) >= 0 and monotonicity on a grid over [0, s_max].
    bool looks_monotone(double s_max, std::size_t points = 64) const;

private:
    std::function<double(double)> fn_;
    bool zero_;
};

// Compact per-coordinate disturbance box; dim() == 0 means no disturbance.
struct DisturbanceBox {
    Vec lo, hi;
    std::size_t dim() const { return lo.dim(); }
    static DisturbanceBox none() { return {}; }
    static DisturbanceBox symmetric(std::size_t l, double bound);
};

// One stage of the recursive design: the constants of the forwarding law
// for the i-dimensional subsystem plus the added integrator x_{i+1}.
struct DesignStage {
    std::size_t index = 0; // stage number i >= 1; P is i x i
    Mat P;
    Vec p;
    Vec c; // derived: c = -(A' + pb')^{-1} e_i
    double K = 0, R = 0, omega = 1, M = 0, delta = 0;

    double cb() const { return c[0]; } // c'b with b = e1
    std::size_t dim() const { return P.rows(); }

    // Builds the stage, derives c, and checks that P(A+bp') + (A'+pb')P is
    // negative definite and P symmetric positive definite.
    static DesignStage make(std::size_t index, Mat P, Vec p, double K, double R,
                            double omega, double M, double delta);
};

// Full parameterization of the recursive saturated controller.
struct GainSchedule {
    std::size_t n = 0; // system dimension; stages run i = 1..n-1
    double K0 = 1.0, omega0 = 1.0;
    std::vector<DesignStage> stages;

    void validate() const; // throws ValidationError on inconsistency
};

// Output of the constant construction behind the forwarding lemma's
// feasibility argument.
struct Lemma36Constants {
    double C = 0;         // in (0, 1], half its admissible upper bound
    double R_star = 0;    // +inf when the envelope is identically zero
    double R = 0;         // min(R_requested, 0.999 R_star)
    double K = 0;         // C * R
    double M = 0;
    double delta_hint = 0;
    bool q_branch_positive = false; // which M formula was used (Q(R) > 1e-14)
};

Lemma36Constants lemma36_constants(const NonlinearityBound& L, const Mat& P,
                                   const Vec& p, double omega, double R_requested);

// Product-grid resolutions for the inequality certificates.
struct GridSpec {
    std::size_t angular = 64;
    std::size_t radial = 16;
    std::size_t input = 9;       // points across the input slab / z band
    std::size_t disturbance = 5; // per disturbance dimension
    std::size_t quasi_random = 10000;

    bool operator==(const GridSpec&) const = default;
};

struct WorstPoint {
    Vec x;
    double u = 0;
    std::optional<double> z; // populated for condition 3.5
    Vec d;
};

struct Certificate {
    std::string condition; // "3.3" | "3.4" | "3.5"
    bool pass = false;
    double margin = 0;
    std::size_t grid_points = 0;
    WorstPoint worst;
    GridSpec grid;
};

// Checks max{ x'P(Ax + f + bu) } < 0 on the shell x'Px = R^2 with
// u = p'x + v, |v| <= K|c'b|, d over the box. margin = -(max found).
Certificate certify_condition_33(const VectorField& f, const DisturbanceBox& D,
                                 const DesignStage& stage, const GridSpec& grid);

// Checks max |g + c'f| < K(c'b)^2 over the solid ellipsoid x'Px <= R^2.
Certificate certify_condition_34(const VectorField& f, const ScalarField& g,
                                 const DisturbanceBox& D, const DesignStage& stage,
                                 const GridSpec& grid);

// Checks the mixed inequality tying the z-dynamics to the x-decay over
// {x'Px <= R^2} x {w|z| <= 1} with u = p'x - K c'b w z. margin = min(rhs - lhs);
// the single exact point x = 0, z = 0 (where both sides vanish) is skipped.
Certificate certify_condition_35(const VectorField& f, const ScalarField& g,
                                 const DisturbanceBox& D, const DesignStage& stage,
                                 const GridSpec& grid);

// Closed-form feasibility windows for the three-integrator benchmark.
bool example41_stage1_feasible(double R, double K); // R^2/(1-R) < K < R, R+K < 1
bool example41_stage2_feasible(double R, double K);

// Closed-form design for the perturbed-chain benchmark.
struct Example42Design {
    Mat P;
    Vec p;
    double S = 0, q = 0;
};
Example42Design example42_design(double k1, double k2);
double example42_decay_q(double k2); // the printed q formula alone

// Worst-case sampled margin of the dissipation inequality
// x'P(A+bp')x + x'Pf(d,x) <= -q|x|^2 for the concrete perturbed chain with
// gains (k1, k2) scaled to envelope L1; directions random (seeded), d on a
// per-axis grid. Positive margin = inequality holds on the sample.
double example42_inequality_margin(double k1, double k2,
                                   const Example42Design& design,
                                   std::size_t samples, std::uint64_t seed,
                                   std::size_t d_grid = 5);

struct GainWindow {
    double K_lo = 0, K_hi = 0, M = 0; // M evaluated at K = (K_lo + K_hi)/2
};
// Open K-interval and M formula for the perturbed chain. Throws
// SmallGainViolated when the small-gain condition fails (empty window).
GainWindow example42_gain_window(double L1, const Mat& P, const Vec& p, const Vec& c,
                                 double q, double R, double a1, double a2,
                                 double omega);

} // namespace fwdsat
