#include "fwdsat/design.hpp"

#include "fwdsat/errors.hpp"
#include "fwdsat/parallel.hpp"
#include "fwdsat/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace fwdsat {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

NonlinearityBound NonlinearityBound::constant(double v) {
    if (v == 0.0) return zero();
    return NonlinearityBound([v](double) { return v; });
}

bool NonlinearityBound::looks_monotone(double s_max, std::size_t points) const {
    double prev = (*this)(0.0);
    if (prev < 0.0) return false;
    for (std::size_t k = 1; k <= points; ++k) {
        const double s = s_max * static_cast<double>(k) / static_cast<double>(points);
        const double v = (*this)(s);
        if (v < 0.0 || v + 1e-12 * std::abs(v) < prev) return false;
        prev = v;
    }
    return true;
}

DisturbanceBox DisturbanceBox::symmetric(std::size_t l, double bound) {
    DisturbanceBox box;
    box.lo = Vec(l, -bound);
    box.hi = Vec(l, bound);
    return box;
}

DesignStage DesignStage::make(std::size_t index, Mat P, Vec p, double K, double R,
                              double omega, double M, double delta) {
    const std::size_t n = P.rows();
    if (P.cols() != n || p.dim() != n || index < 1)
        throw DimensionMismatch("DesignStage: inconsistent dimensions");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (std::abs(P(i, j) - P(j, i)) > 1e-12 * (1.0 + std::abs(P(i, j))))
                throw ValidationError("DesignStage: P must be symmetric");
    sandwich_constants(P); // throws if not positive definite
    const auto [A, b] = chain_matrices(n);
    const Mat closed = A + Mat::outer(b, p);
    const Mat N = P * closed + closed.transpose() * P;
    if (!is_neg_definite(N).flag)
        throw NotNegativeDefinite("DesignStage: P(A+bp') + (A'+pb')P not negative definite");
    DesignStage s;
    s.index = index;
    s.P = std::move(P);
    s.p = std::move(p);
    s.c = c_vector(A, b, s.p);
    s.K = K;
    s.R = R;
    s.omega = omega;
    s.M = M;
    s.delta = delta;
    return s;
}

void GainSchedule::validate() const {
    if (n < 1) throw ValidationError("GainSchedule: dimension must be >= 1");
    if (K0 <= 0 || omega0 <= 0)
        throw ValidationError("GainSchedule: K0 and omega0 must be positive");
    if (stages.size() != n - 1)
        throw ValidationError("GainSchedule: expected n-1 stages");
    for (std::size_t i = 0; i < stages.size(); ++i) {
        const DesignStage& s = stages[i];
        if (s.index != i + 1)
            throw ValidationError("GainSchedule: stage indices must be consecutive from 1");
        if (s.dim() != i + 1 || s.p.dim() != i + 1)
            throw ValidationError("GainSchedule: stage dimension must equal its index");
        if (s.K <= 0 || s.R <= 0 || s.omega <= 0)
            throw ValidationError("GainSchedule: stage gains must be positive");
    }
}

Lemma36Constants lemma36_constants(const NonlinearityBound& L, const Mat& P,
                                   const Vec& p, double omega, double R_requested) {
    const std::size_t n = P.rows();
    if (omega <= 0) throw ValidationError("lemma36_constants: omega must be positive");
    if (R_requested <= 0)
        throw InfeasibleDesign("lemma36_constants: requested R must be positive");
    if (!L.looks_monotone(10.0 * std::max(1.0, R_requested)))
        throw ValidationError("lemma36_constants: envelope must be nonnegative and "
                              "non-decreasing");
    const auto [A, b] = chain_matrices(n);
    const Vec c = c_vector(A, b, p);
    const double q = decay_constant_q(P, A, b, p); // throws if not neg. definite
    const auto [a1, a2] = sandwich_constants(P);
    const double cb = std::abs(c[0]);
    const double Pb = (P * b).norm();
    const double Pn = sym_norm(P);
    const double pn = p.norm();
    const double cn = c.norm();

    const double C = 0.5 * std::min(1.0, q * a1 / (Pb * cb));
    const double a22_rhs = (q * a1 - C * Pb * cb) / ((1.0 + pn) * Pn * a2 + Pn * C * cb);
    if (!(a22_rhs > 0.0))
        throw InfeasibleDesign("lemma36_constants: decay too weak for any positive R");
    // first bound: q/(1+|p|) stands in for |P|Q(R)a2R, valid while the
    // companion requirement (1+|p|)|P|Q(R)a2R < q below holds
    const double a20_rhs =
        q * cb / ((1.0 + cn) * (q / (1.0 + pn) + Pb) * (1.0 + pn + C * cb / a2) +
                  (1.0 + pn) * Pn * cb);
    const double a21_rhs = C * cb * cb / ((1.0 + cn) * ((1.0 + pn) * a2 + C * cb));

    const auto Q_of = [&](double R) { return L((1.0 + pn) * a2 * R + R * C * cb); };
    const auto feasible = [&](double R) {
        const double lhs = Q_of(R) * a2 * R;
        return lhs < a20_rhs && lhs < a21_rhs && lhs < a22_rhs &&
               (1.0 + pn) * Pn * Q_of(R) * a2 * R < q;
    };

    Lemma36Constants out;
    out.C = C;
    const double R_big = std::max(1e16, 1e3 * R_requested);
    if (feasible(R_big)) {
        out.R_star = kInf;
        out.R = R_requested;
    } else {
        double lo = 0.0, hi = R_big;
        while (hi - lo > 1e-10 * hi) {
            const double mid = 0.5 * (lo + hi);
            (feasible(mid) ? lo : hi) = mid;
        }
        out.R_star = lo;
        if (!(out.R_star > 0.0))
            throw InfeasibleDesign("lemma36_constants: no positive R satisfies the bounds");
        out.R = std::min(R_requested, out.R_star * (1.0 - 1e-3));
    }
    out.K = C * out.R;

    const double QR = Q_of(out.R);
    out.q_branch_positive = QR > 1e-14;
    if (out.q_branch_positive) {
        out.M = (C * cb * omega / ((1.0 + cn) * QR)) *
                (Pn * QR * a2 * out.R + Pb) / ((1.0 + pn) * a2 + C * cb);
    } else {
        out.M = C * out.R * Pb * Pb * omega / (4.0 * q) + 1.0;
    }

    // slack of the final quadratic-form inequality: largest admissible delta
    // is the smallest eigenvalue of [[A_x, -G/2], [-G/2, A_z]]
    const double A_x = q - (1.0 + pn) * Pn * QR * a2 * out.R;
    const double A_z = out.M * out.K * cb * cb * omega;
    const double G = out.M * (1.0 + cn) * (1.0 + pn) * QR * a2 * out.R +
                     out.K * Pn * cb * omega * QR * a2 * out.R +
                     out.K * cb * Pb * omega + out.M * (1.0 + cn) * QR * out.K * cb;
    const double delta_max =
        0.5 * ((A_x + A_z) - std::sqrt((A_x - A_z) * (A_x - A_z) + G * G));
    out.delta_hint = std::max(0.0, delta_max) / 2.0;
    return out;
}

namespace {

// Deterministic point enumeration shared by the three certificates: a
// product grid followed by a Halton block, with every point reconstructible
// from its flat index (so the worst point can be rebuilt after reduction).
class CertGrid {
public:
    CertGrid(const DesignStage& stage, const DisturbanceBox& D, const GridSpec& spec,
             bool solid)
        : stage_(stage), D_(D), spec_(spec), solid_(solid), n_(stage.dim()) {
        if (n_ > 3)
            throw DimensionMismatch("certify: shell parameterization supports dim <= 3");
        chol_ = cholesky(stage_.P);
        build_directions();
        n_radial_ = solid_ ? std::max<std::size_t>(2, spec_.radial) : 1;
        n_slab_ = std::max<std::size_t>(2, spec_.input);
        l_ = D_.dim();
        n_dist_ = 1;
        for (std::size_t k = 0; k < l_; ++k)
            n_dist_ *= std::max<std::size_t>(1, spec_.disturbance);
        grid_total_ = dirs_.size() * n_radial_ * n_slab_ * n_dist_;
    }

    std::size_t total() const { return grid_total_ + spec_.quasi_random; }

    struct Point {
        Vec x;
        double slab = 0; // v for 3.3/3.4, z for 3.5, in [-1, 1] before scaling
        Vec d;
        double radius = 0;
    };

    // slab_scale maps the generic [-1,1] coordinate to v or z.
    Point at(std::size_t idx, double slab_scale) const {
        Point pt;
        if (idx < grid_total_) {
            std::size_t r = idx;
            const std::size_t di = r % n_dist_;
            r /= n_dist_;
            const std::size_t si = r % n_slab_;
            r /= n_slab_;
            const std::size_t ri = r % n_radial_;
            r /= n_radial_;
            const std::size_t ki = r;
            pt.radius = solid_ ? stage_.R * static_cast<double>(ri) /
                                     static_cast<double>(n_radial_ - 1)
                               : stage_.R;
            pt.x = shell_point(dirs_[ki], pt.radius);
            pt.slab = slab_scale * (-1.0 + 2.0 * static_cast<double>(si) /
                                               static_cast<double>(n_slab_ - 1));
            pt.d = grid_disturbance(di);
        } else {
            const std::uint64_t j = idx - grid_total_;
            Vec s = halton_direction(j);
            double rho = stage_.R;
            if (solid_) {
                const double u = halton(j, 5);
                rho = stage_.R * std::pow(u, 1.0 / static_cast<double>(n_));
            }
            pt.radius = rho;
            pt.x = shell_point(s, rho);
            pt.slab = slab_scale * (2.0 * halton(j, 7) - 1.0);
            pt.d = Vec(l_);
            static const std::uint32_t bases[] = {11, 13, 17, 19, 23, 29, 31};
            for (std::size_t k = 0; k < l_; ++k)
                pt.d[k] = D_.lo[k] + (D_.hi[k] - D_.lo[k]) * halton(j, bases[k % 7]);
        }
        return pt;
    }

private:
    void build_directions() {
        const std::size_t m = std::max<std::size_t>(4, spec_.angular);
        if (n_ == 1) {
            dirs_.push_back(Vec{1.0});
            dirs_.push_back(Vec{-1.0});
        } else if (n_ == 2) {
            for (std::size_t k = 0; k < m; ++k) {
                const double th = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(m);
                dirs_.push_back(Vec{std::cos(th), std::sin(th)});
            }
        } else {
            const std::size_t mp = std::max<std::size_t>(2, m / 2);
            for (std::size_t jp = 0; jp < mp; ++jp) {
                const double th = M_PI * (static_cast<double>(jp) + 0.5) / static_cast<double>(mp);
                for (std::size_t k = 0; k < m; ++k) {
                    const double ph = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(m);
                    dirs_.push_back(Vec{std::sin(th) * std::cos(ph),
                                        std::sin(th) * std::sin(ph), std::cos(th)});
                }
            }
        }
    }

    Vec halton_direction(std::uint64_t j) const {
        if (n_ == 1) return Vec{halton(j, 2) < 0.5 ? -1.0 : 1.0};
        if (n_ == 2) {
            const double th = 2.0 * M_PI * halton(j, 2);
            return Vec{std::cos(th), std::sin(th)};
        }
        const double z = 2.0 * halton(j, 3) - 1.0;
        const double ph = 2.0 * M_PI * halton(j, 2);
        const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
        return Vec{s * std::cos(ph), s * std::sin(ph), z};
    }

    // Solves L' x = rho * s so that x'Px = rho^2 (uniform in the P metric).
    Vec shell_point(const Vec& s, double rho) const {
        Vec x(n_);
        for (std::size_t ii = n_; ii-- > 0;) {
            double acc = rho * s[ii];
            for (std::size_t j = ii + 1; j < n_; ++j) acc -= chol_(j, ii) * x[j];
            x[ii] = acc / chol_(ii, ii);
        }
        return x;
    }

    Vec grid_disturbance(std::size_t di) const {
        Vec d(l_);
        const std::size_t per = std::max<std::size_t>(1, spec_.disturbance);
        for (std::size_t k = 0; k < l_; ++k) {
            const std::size_t dk = di % per;
            di /= per;
            d[k] = per == 1 ? 0.5 * (D_.lo[k] + D_.hi[k])
                            : D_.lo[k] + (D_.hi[k] - D_.lo[k]) * static_cast<double>(dk) /
                                             static_cast<double>(per - 1);
        }
        return d;
    }

    const DesignStage& stage_;
    const DisturbanceBox& D_;
    GridSpec spec_;
    bool solid_;
    std::size_t n_, l_ = 0;
    Mat chol_;
    std::vector<Vec> dirs_;
    std::size_t n_radial_ = 1, n_slab_ = 2, n_dist_ = 1, grid_total_ = 0;
};

struct Extremum {
    double value;
    std::size_t index;
};

// max or min with smallest-index tie break: order independent.
template <bool Max>
Extremum better(const Extremum& a, const Extremum& b) {
    if (a.index == SIZE_MAX) return b;
    if (b.index == SIZE_MAX) return a;
    if (Max ? (b.value > a.value) : (b.value < a.value)) return b;
    if (b.value == a.value && b.index < a.index) return b;
    return a;
}

void check_field_dims(const VectorField& f, const DisturbanceBox& D,
                      const DesignStage& stage) {
    Vec d0(D.dim());
    for (std::size_t k = 0; k < D.dim(); ++k) d0[k] = 0.5 * (D.lo[k] + D.hi[k]);
    const Vec probe = f(d0, Vec(stage.dim()), 0.0);
    if (probe.dim() != stage.dim())
        throw DimensionMismatch("certify: nonlinearity dimension does not match stage");
}

} // namespace

Certificate certify_condition_33(const VectorField& f, const DisturbanceBox& D,
                                 const DesignStage& stage, const GridSpec& grid) {
    check_field_dims(f, D, stage);
    const std::size_t n = stage.dim();
    const ChainData ch = chain_matrices(n);
    const double slab = stage.K * std::abs(stage.cb());
    CertGrid pts(stage, D, grid, /*solid=*/false);

    const auto value_at = [&](std::size_t i) {
        const auto pt = pts.at(i, slab);
        const double u = stage.p.dot(pt.x) + pt.slab;
        Vec w = ch.A * pt.x + f(pt.d, pt.x, u);
        w.add_scaled(u, ch.b);
        return pt.x.dot(stage.P * w);
    };
    const Extremum ext = parallel_reduce<Extremum>(
        pts.total(), Extremum{0.0, SIZE_MAX},
        [&](std::size_t i) { return Extremum{value_at(i), i}; }, better<true>);

    Certificate cert;
    cert.condition = "3.3";
    cert.grid = grid;
    cert.grid_points = pts.total();
    cert.margin = -ext.value;
    cert.pass = cert.margin > 0.0;
    const auto wp = pts.at(ext.index, slab);
    cert.worst.x = wp.x;
    cert.worst.u = stage.p.dot(wp.x) + wp.slab;
    cert.worst.d = wp.d;
    return cert;
}

Certificate certify_condition_34(const VectorField& f, const ScalarField& g,
                                 const DisturbanceBox& D, const DesignStage& stage,
                                 const GridSpec& grid) {
    check_field_dims(f, D, stage);
    const double slab = stage.K * std::abs(stage.cb());
    CertGrid pts(stage, D, grid, /*solid=*/true);

    const auto value_at = [&](std::size_t i) {
        const auto pt = pts.at(i, slab);
        const double u = stage.p.dot(pt.x) + pt.slab;
        return std::abs(g(pt.d, pt.x, u) + stage.c.dot(f(pt.d, pt.x, u)));
    };
    const Extremum ext = parallel_reduce<Extremum>(
        pts.total(), Extremum{0.0, SIZE_MAX},
        [&](std::size_t i) { return Extremum{value_at(i), i}; }, better<true>);

    Certificate cert;
    cert.condition = "3.4";
    cert.grid = grid;
    cert.grid_points = pts.total();
    cert.margin = stage.K * stage.cb() * stage.cb() - ext.value;
    cert.pass = cert.margin > 0.0;
    const auto wp = pts.at(ext.index, slab);
    cert.worst.x = wp.x;
    cert.worst.u = stage.p.dot(wp.x) + wp.slab;
    cert.worst.d = wp.d;
    return cert;
}

Certificate certify_condition_35(const VectorField& f, const ScalarField& g,
                                 const DisturbanceBox& D, const DesignStage& stage,
                                 const GridSpec& grid) {
    check_field_dims(f, D, stage);
    const std::size_t n = stage.dim();
    const ChainData ch = chain_matrices(n);
    const double cb = stage.cb(); // signed here
    const double zmax = 1.0 / stage.omega;
    Mat Acl = ch.A + Mat::outer(ch.b, stage.p);
    for (std::size_t i = 0; i < n; ++i) Acl(i, i) += stage.delta;
    CertGrid pts(stage, D, grid, /*solid=*/true);

    const auto value_at = [&](std::size_t i) -> double {
        const auto pt = pts.at(i, zmax);
        const double z = pt.slab;
        if (pt.radius == 0.0 && z == 0.0)
            return kInf; // both sides vanish identically at the origin
        const double u = stage.p.dot(pt.x) - stage.K * cb * stage.omega * z;
        const Vec fx = f(pt.d, pt.x, u);
        const double bPx = (stage.P * pt.x)[0];
        const double lhs =
            z * (stage.M * g(pt.d, pt.x, u) + stage.M * stage.c.dot(fx) -
                 stage.K * cb * stage.omega * bPx);
        const Vec w = Acl * pt.x + fx;
        const double rhs =
            (stage.M * stage.K * cb * cb * stage.omega - stage.delta) * z * z -
            pt.x.dot(stage.P * w);
        return rhs - lhs;
    };
    const Extremum ext = parallel_reduce<Extremum>(
        pts.total(), Extremum{kInf, SIZE_MAX},
        [&](std::size_t i) {
            const double v = value_at(i);
            return Extremum{v, v == kInf ? SIZE_MAX : i};
        },
        better<false>);

    Certificate cert;
    cert.condition = "3.5";
    cert.grid = grid;
    cert.grid_points = pts.total();
    cert.margin = ext.value;
    cert.pass = cert.margin > 0.0;
    const auto wp = pts.at(ext.index, zmax);
    cert.worst.x = wp.x;
    cert.worst.z = wp.slab;
    cert.worst.u = stage.p.dot(wp.x) - stage.K * cb * stage.omega * wp.slab;
    cert.worst.d = wp.d;
    return cert;
}

bool example41_stage1_feasible(double R, double K) {
    if (!(R > 0.0) || !(R < 1.0)) return false;
    return R * R / (1.0 - R) < K && K < R && R + K < 1.0;
}

bool example41_stage2_feasible(double R, double K) {
    const double s2 = std::sqrt(2.0);
    if (!(R > 0.0) || !(1.0 - 2.0 * s2 * R > 0.0)) return false;
    const double lower = 4.0 * R * R / (1.0 - 2.0 * s2 * R);
    const double upper = 2.0 * R * (1.0 - 2.0 * (2.0 + s2) * R) / (R + 1.0);
    const double third = (4.0 + 2.0 * s2) * R + (3.0 - 2.0 * s2) * R * R;
    return lower < K && K < upper && third < 1.0;
}

double example42_decay_q(double k2) {
    const double root = std::sqrt((1.0 + k2) * (1.0 + k2) + 4.0);
    return (root - 1.0 - k2) / (2.0 + 2.0 * k2 + 2.0 * root);
}

Example42Design example42_design(double k1, double k2) {
    if (!(k1 > 0.0) || !(k2 > 0.0))
        throw ValidationError("example42_design: gains must be positive");
    Example42Design d;
    const double b2 = 1.0 + k2;
    d.P = Mat{{1.0, b2}, {b2, b2 * b2 + 1.0}};
    d.S = 0.5 + k1 + 0.5 * b2 * b2 * (k2 + k1) * (k2 + k1);
    d.p = Vec{-(1.0 + d.S + k2), -(1.0 + d.S * b2)};
    d.q = example42_decay_q(k2);
    return d;
}

double example42_inequality_margin(double k1, double k2,
                                   const Example42Design& design,
                                   std::size_t samples, std::uint64_t seed,
                                   std::size_t d_grid) {
    const auto [A, b] = chain_matrices(2);
    const Mat PA = design.P * (A + Mat::outer(b, design.p));
    const std::size_t nd = std::max<std::size_t>(2, d_grid);
    std::vector<double> dvals(nd);
    for (std::size_t k = 0; k < nd; ++k)
        dvals[k] = -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(nd - 1);

    return parallel_reduce<double>(
        samples, kInf,
        [&](std::size_t i) {
            Rng rng(Rng::derive(seed, i));
            Vec x(2);
            double nn = 0.0;
            do {
                x[0] = rng.uniform(-1.0, 1.0);
                x[1] = rng.uniform(-1.0, 1.0);
                nn = x.norm();
            } while (nn < 1e-6);
            x = x * (1.0 / nn); // homogeneous degree 2: unit sphere suffices
            const double quad = x.dot(PA * x);
            const Vec Px = design.P * x;
            double worst_f = -kInf;
            for (double d1 : dvals)
                for (double d2 : dvals)
                    worst_f = std::max(worst_f, d1 * k1 * x[0] * Px[0] +
                                                    d2 * k2 * x[1] * Px[1]);
            return -design.q - (quad + worst_f);
        },
        [](double a, double bb) { return std::min(a, bb); });
}

GainWindow example42_gain_window(double L1, const Mat& P, const Vec& p, const Vec& c,
                                 double q, double R, double a1, double a2,
                                 double omega) {
    if (!(L1 > 0.0)) throw ValidationError("example42_gain_window: L1 must be positive");
    const Vec b = Vec::basis(p.dim(), 0);
    const double cb = std::abs(c.dot(b));
    const double Pb = (P * b).norm();
    const double cn = c.norm();
    const double threshold = q * a1 * cb / ((1.0 + cn) * a2 * Pb);
    if (!(L1 < threshold))
        throw SmallGainViolated("example42_gain_window: small-gain condition fails");
    GainWindow w;
    w.K_lo = (1.0 + cn) * L1 * a2 * R / (cb * cb);
    w.K_hi = q * a1 * R / (Pb * cb);
    const double K = 0.5 * (w.K_lo + w.K_hi);
    w.M = K * cb * omega * Pb / ((1.0 + cn) * L1);
    return w;
}

} // namespace fwdsat
