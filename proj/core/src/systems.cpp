#include "fwdsat/systems.hpp"

#include "fwdsat/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace fwdsat {

SystemModel example41_system() {
    SystemModel s;
    s.name = "example41";
    s.n = 3;
    s.rhs = [](const Vec&, const Vec& x, double u, Vec& dx) {
        dx[0] = u;
        dx[1] = x[0] + x[0] * u;
        dx[2] = x[1] + x[0] * x[0];
    };
    s.D = DisturbanceBox::none();
    s.L = NonlinearityBound::constant(1.0); // |x1 u| and |x1^2| fit a unit envelope
    return s;
}

SystemModel example42_system(double k1, double k2, double L1) {
    if (!(k1 > 0) || !(k2 > 0) || !(L1 > 0))
        throw ValidationError("example42_system: k1, k2, L1 must be positive");
    SystemModel s;
    s.name = "example42";
    s.n = 3;
    const double eps = L1 / std::max({k1, k2, std::sqrt(2.0)});
    s.rhs = [k1, k2, eps](const Vec& d, const Vec& x, double u, Vec& dx) {
        dx[0] = eps * k1 * d[0] * x[0] + u;
        dx[1] = eps * k2 * d[1] * x[1] + x[0];
        dx[2] = x[1] + eps * d[2] * std::sin(x[0] + x[1]);
    };
    s.D = DisturbanceBox::symmetric(3, 1.0);
    return s;
}

SystemModel scalar_chain_system(std::size_t n) {
    if (n < 1) throw ValidationError("scalar_chain_system: dimension must be >= 1");
    SystemModel s;
    s.name = "scalar_chain";
    s.n = n;
    s.rhs = [](const Vec&, const Vec& x, double u, Vec& dx) {
        dx[0] = u;
        for (std::size_t i = 1; i < x.dim(); ++i) dx[i] = x[i - 1];
    };
    s.D = DisturbanceBox::none();
    s.L = NonlinearityBound::zero();
    return s;
}

namespace {

struct TermPart {
    enum class Kind { coef, x, x2, u, u2, d } kind = Kind::coef;
    double value = 1.0;   // for coef
    std::size_t index = 0; // for x / x2 / xu / d (0-based)
};

using Term = std::vector<TermPart>;

std::size_t parse_index(const std::string& tok, std::size_t pos, char prefix) {
    if (pos >= tok.size() || !std::isdigit(static_cast<unsigned char>(tok[pos])))
        throw ParseError(std::string("inline rhs: expected index after '") + prefix + "'");
    std::size_t idx = 0;
    while (pos < tok.size() && std::isdigit(static_cast<unsigned char>(tok[pos])))
        idx = idx * 10 + static_cast<std::size_t>(tok[pos++] - '0');
    if (pos != tok.size() && !(pos + 2 == tok.size() && tok[pos] == '^' && tok[pos + 1] == '2'))
        throw ParseError("inline rhs: trailing characters in '" + tok + "'");
    if (idx == 0) throw ParseError("inline rhs: indices are 1-based");
    return idx - 1;
}

TermPart parse_part(const std::string& tok) {
    TermPart part;
    if (tok.empty()) throw ParseError("inline rhs: empty factor");
    if (tok == "u") {
        part.kind = TermPart::Kind::u;
    } else if (tok == "u^2") {
        part.kind = TermPart::Kind::u2;
    } else if (tok[0] == 'x') {
        part.index = parse_index(tok, 1, 'x');
        part.kind = tok.size() >= 2 && tok.substr(tok.size() - 2) == "^2"
                        ? TermPart::Kind::x2
                        : TermPart::Kind::x;
    } else if (tok[0] == 'd') {
        part.index = parse_index(tok, 1, 'd');
        part.kind = TermPart::Kind::d;
    } else {
        try {
            std::size_t used = 0;
            part.value = std::stod(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ParseError("inline rhs: cannot parse factor '" + tok + "'");
        }
        part.kind = TermPart::Kind::coef;
    }
    return part;
}

std::vector<Term> parse_expr(const std::string& expr, std::size_t coordinate,
                             std::size_t state_dim, std::size_t dist_dim) {
    std::vector<Term> terms;
    std::string cleaned;
    for (char ch : expr)
        if (!std::isspace(static_cast<unsigned char>(ch))) cleaned.push_back(ch);
    std::size_t pos = 0;
    double sign = 1.0;
    while (pos < cleaned.size()) {
        if (cleaned[pos] == '+') {
            sign = 1.0;
            ++pos;
            continue;
        }
        if (cleaned[pos] == '-') {
            sign = -1.0;
            ++pos;
            continue;
        }
        std::size_t end = pos;
        while (end < cleaned.size() && cleaned[end] != '+' && cleaned[end] != '-') {
            // keep exponent minus signs like 1e-3 inside the term
            if ((cleaned[end] == 'e' || cleaned[end] == 'E') && end + 1 < cleaned.size() &&
                (cleaned[end + 1] == '+' || cleaned[end + 1] == '-'))
                ++end;
            ++end;
        }
        const std::string term_str = cleaned.substr(pos, end - pos);
        pos = end;
        Term term;
        term.push_back(TermPart{TermPart::Kind::coef, sign, 0});
        std::size_t tp = 0;
        while (tp <= term_str.size()) {
            const std::size_t star = std::min(term_str.find('*', tp), term_str.size());
            term.push_back(parse_part(term_str.substr(tp, star - tp)));
            tp = star + 1;
            if (star == term_str.size()) break;
        }
        for (const TermPart& part : term) {
            const bool is_state = part.kind == TermPart::Kind::x ||
                                  part.kind == TermPart::Kind::x2;
            if (is_state && part.index + 1 >= coordinate)
                throw ValidationError("inline rhs: g" + std::to_string(coordinate) +
                                      " may only use x1..x" + std::to_string(coordinate - 2 + 1));
            if (is_state && part.index >= state_dim)
                throw ValidationError("inline rhs: state index out of range");
            if (part.kind == TermPart::Kind::d && part.index >= dist_dim)
                throw ValidationError("inline rhs: disturbance index out of range");
        }
        terms.push_back(std::move(term));
        sign = 1.0;
    }
    return terms;
}

double eval_terms(const std::vector<Term>& terms, const Vec& d, const Vec& x, double u) {
    double acc = 0.0;
    for (const Term& term : terms) {
        double v = 1.0;
        for (const TermPart& part : term) {
            switch (part.kind) {
            case TermPart::Kind::coef: v *= part.value; break;
            case TermPart::Kind::x: v *= x[part.index]; break;
            case TermPart::Kind::x2: v *= x[part.index] * x[part.index]; break;
            case TermPart::Kind::u: v *= u; break;
            case TermPart::Kind::u2: v *= u * u; break;
            case TermPart::Kind::d: v *= d[part.index]; break;
            }
        }
        acc += v;
    }
    return acc;
}

} // namespace

SystemModel inline_chain_system(std::size_t n, const std::vector<std::string>& g_exprs,
                                std::size_t disturbance_dim, double disturbance_bound) {
    if (n < 1) throw ValidationError("inline_chain_system: dimension must be >= 1");
    if (g_exprs.size() + 1 > n)
        throw ValidationError("inline_chain_system: too many g expressions");
    std::vector<std::vector<Term>> parsed(n); // parsed[i] augments equation i+1
    for (std::size_t k = 0; k < g_exprs.size(); ++k) {
        if (g_exprs[k].empty()) continue;
        parsed[k + 1] = parse_expr(g_exprs[k], k + 2, n, disturbance_dim);
    }
    SystemModel s;
    s.name = "inline_chain";
    s.n = n;
    s.D = disturbance_dim == 0 ? DisturbanceBox::none()
                               : DisturbanceBox::symmetric(disturbance_dim, disturbance_bound);
    s.rhs = [parsed](const Vec& d, const Vec& x, double u, Vec& dx) {
        dx[0] = u;
        for (std::size_t i = 1; i < x.dim(); ++i) {
            dx[i] = x[i - 1];
            if (!parsed[i].empty()) dx[i] += eval_terms(parsed[i], d, x, u);
        }
    };
    return s;
}

VectorField example41_stage_f(std::size_t stage_index) {
    if (stage_index == 1)
        return [](const Vec&, const Vec&, double) { return Vec(1); };
    if (stage_index == 2)
        return [](const Vec&, const Vec& x, double u) { return Vec{0.0, x[0] * u}; };
    throw ValidationError("example41_stage_f: stage must be 1 or 2");
}

ScalarField example41_stage_g(std::size_t stage_index) {
    if (stage_index == 1)
        return [](const Vec&, const Vec& x, double u) { return x[0] * u; };
    if (stage_index == 2)
        return [](const Vec&, const Vec& x, double) { return x[0] * x[0]; };
    throw ValidationError("example41_stage_g: stage must be 1 or 2");
}

namespace {
double default_delta(double M, double K, double cb, double omega) {
    return 1e-4 * M * K * cb * cb * omega;
}
} // namespace

DesignStage example41_stage1(double R, double K, double delta) {
    const double M = K / (R + K);
    const double omega = 1.0;
    if (delta <= 0.0) delta = default_delta(M, K, 1.0, omega);
    return DesignStage::make(1, Mat{{1.0}}, Vec{-1.0}, K, R, omega, M, delta);
}

DesignStage example41_stage2(double R, double K, double delta) {
    const double M = K * (2.0 + (3.0 + 2.0 * std::sqrt(2.0)) * R) / (4.0 * R);
    const double omega = 1.0;
    if (delta <= 0.0) delta = default_delta(M, K, 0.5, omega);
    return DesignStage::make(2, Mat{{1.0, 1.0}, {1.0, 2.0}}, Vec{-2.0, -2.0}, K, R,
                             omega, M, delta);
}

GainSchedule example41_gains_conservative() {
    GainSchedule g;
    g.n = 3;
    g.K0 = 1.0;
    g.omega0 = 1.0;
    g.stages.push_back(example41_stage1(3.0 / 8.0, 0.25));
    g.stages.push_back(example41_stage2(0.05, 0.05));
    g.validate();
    return g;
}

GainSchedule example41_gains_fast() {
    GainSchedule g;
    g.n = 3;
    g.K0 = 1.0;
    g.omega0 = 1.0;
    g.stages.push_back(example41_stage1(3.0 / 8.0, 0.25));
    g.stages.push_back(example41_stage2(1.0, 1.0));
    g.validate();
    return g;
}

ControllerSpec example42_controller(double k1, double k2, double L1, double R,
                                    double omega, double K) {
    const Example42Design d = example42_design(k1, k2);
    const auto sw = sandwich_constants(d.P);
    const auto [A, b] = chain_matrices(2);
    const Vec c = c_vector(A, b, d.p);
    const GainWindow w =
        example42_gain_window(L1, d.P, d.p, c, d.q, R, sw.a1, sw.a2, omega);
    if (K <= 0.0) K = 0.5 * (w.K_lo + w.K_hi);
    if (K <= w.K_lo || K >= w.K_hi)
        throw InfeasibleDesign("example42_controller: K outside the gain window");
    const double cb = std::abs(c[0]);
    const double M = K * cb * omega * (d.P * b).norm() / ((1.0 + c.norm()) * L1);
    DesignStage stage = DesignStage::make(2, d.P, d.p, K, R, omega, M,
                                          default_delta(M, K, cb, omega));
    Vec p_copy = d.p;
    return ControllerSpec::single(std::move(stage), [p_copy](const Vec& x) {
        return p_copy.dot(x);
    });
}

} // namespace fwdsat
