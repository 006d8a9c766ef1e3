#include "fwdsat/errors.hpp"
#include "fwdsat/linalg.hpp"
#include "fwdsat/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace fwdsat;

TEST_CASE("chain matrices match the printed pattern") {
    auto [A1, b1] = chain_matrices(1);
    CHECK(A1.rows() == 1);
    CHECK(A1(0, 0) == 0.0);
    CHECK(b1[0] == 1.0);

    auto [A2, b2] = chain_matrices(2);
    CHECK(A2(0, 0) == 0.0);
    CHECK(A2(0, 1) == 0.0);
    CHECK(A2(1, 0) == 1.0);
    CHECK(A2(1, 1) == 0.0);
    CHECK(b2[0] == 1.0);
    CHECK(b2[1] == 0.0);

    auto [A3, b3] = chain_matrices(3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(A3(i, j) == (j + 1 == i ? 1.0 : 0.0));
    CHECK(b3[0] == 1.0);
}

TEST_CASE("chain matrices are nilpotent of their own order") {
    for (std::size_t n = 1; n <= 6; ++n) {
        auto [A, b] = chain_matrices(n);
        Mat power = Mat::identity(n);
        for (std::size_t k = 0; k < n; ++k) power = power * A;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) CHECK(power(i, j) == 0.0);
    }
}

TEST_CASE("c vector reproduces the worked example exactly") {
    const Vec c1 = c_vector(Mat{{0.0}}, Vec{1.0}, Vec{-1.0});
    CHECK(c1[0] == doctest::Approx(1.0).epsilon(1e-14));

    const Vec c2 = c_vector(Mat{{0.0, 0.0}, {1.0, 0.0}}, Vec{1.0, 0.0}, Vec{-2.0, -2.0});
    CHECK(std::abs(c2[0] - 0.5) <= 1e-12);
    CHECK(std::abs(c2[1] - 1.0) <= 1e-12);
}

TEST_CASE("c vector satisfies its defining equation on random data") {
    Rng rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + rng.next() % 4;
        auto [A, b] = chain_matrices(n);
        Vec p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = rng.uniform(-3.0, -0.5);
        const Vec c = c_vector(A, b, p);
        const Mat M = A.transpose() + Mat::outer(p, b);
        Vec residual = M * c;
        residual[n - 1] += 1.0; // (A' + pb')c must equal -e_n
        CHECK(residual.norm() <= 1e-10);
        CHECK(std::abs(c.dot(b)) > 0.0);
    }
}

TEST_CASE("the c identity x_n + c'Ax = -(c'b) p'x holds on random states") {
    Rng rng(7);
    auto [A, b] = chain_matrices(3);
    const Vec p{-1.5, -2.0, -0.75};
    const Vec c = c_vector(A, b, p);
    for (int k = 0; k < 1000; ++k) {
        Vec x(3);
        for (std::size_t i = 0; i < 3; ++i) x[i] = rng.uniform(-10.0, 10.0);
        const double lhs = x[2] + c.dot(A * x);
        const double rhs = -c.dot(b) * p.dot(x);
        CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
    }
}

TEST_CASE("negative definiteness with margins") {
    // 1x1 closed loop from the first worked stage: P(A+bp') + (A'+pb')P = [-2]
    const Mat M1{{-2.0}};
    auto r1 = is_neg_definite(M1);
    CHECK(r1.flag);
    CHECK(r1.margin == doctest::Approx(-2.0));

    auto r2 = is_neg_definite(Mat::identity(2));
    CHECK_FALSE(r2.flag);
    CHECK(r2.margin == doctest::Approx(1.0));

    // second worked stage: P2 (A+bp2') + transpose has eigenvalues -3 +- sqrt 5
    const Mat P2{{1.0, 1.0}, {1.0, 2.0}};
    const Mat A2{{0.0, 0.0}, {1.0, 0.0}};
    const Vec b2{1.0, 0.0};
    const Vec p2{-2.0, -2.0};
    const Mat closed = A2 + Mat::outer(b2, p2);
    const Mat N = P2 * closed + closed.transpose() * P2;
    auto r3 = is_neg_definite(N);
    CHECK(r3.flag);
    CHECK(r3.margin == doctest::Approx(-3.0 + std::sqrt(5.0)).epsilon(1e-12));
}

TEST_CASE("negative definiteness agrees with a brute-force sampling check") {
    Rng rng(11);
    int checked = 0;
    while (checked < 40) {
        const std::size_t n = 2 + rng.next() % 2;
        Mat M(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) M(i, j) = rng.uniform(-2.0, 2.0);
        // shift to get a mix of definite and indefinite cases
        const double shift = rng.uniform(-3.0, 3.0);
        for (std::size_t i = 0; i < n; ++i) M(i, i) += shift;
        const auto result = is_neg_definite(M);
        if (std::abs(result.margin) < 1e-2) continue; // skip borderline draws
        ++checked;
        double min_neg = 1e300;
        for (int s = 0; s < 10000; ++s) {
            Vec v(n);
            double nn = 0;
            do {
                for (std::size_t i = 0; i < n; ++i) v[i] = rng.uniform(-1.0, 1.0);
                nn = v.norm();
            } while (nn < 1e-3);
            v = v * (1.0 / nn);
            min_neg = std::min(min_neg, -v.dot(M * v));
        }
        CHECK(result.flag == (min_neg > 0.0));
    }
}

TEST_CASE("sandwich constants") {
    auto id = sandwich_constants(Mat::identity(2));
    CHECK(id.a1 == doctest::Approx(1.0));
    CHECK(id.a2 == doctest::Approx(1.0));

    auto diag = sandwich_constants(Mat{{4.0, 0.0}, {0.0, 1.0}});
    CHECK(diag.a1 == doctest::Approx(0.5));
    CHECK(diag.a2 == doctest::Approx(1.0));

    // characteristic polynomial of P2 is l^2 - 3l + 1
    auto p2 = sandwich_constants(Mat{{1.0, 1.0}, {1.0, 2.0}});
    CHECK(p2.a1 == doctest::Approx(1.0 / std::sqrt((3.0 + std::sqrt(5.0)) / 2.0)).epsilon(1e-12));
    CHECK(p2.a2 == doctest::Approx(1.0 / std::sqrt((3.0 - std::sqrt(5.0)) / 2.0)).epsilon(1e-12));
    CHECK(p2.a1 <= p2.a2);

    CHECK_THROWS_AS(sandwich_constants(Mat{{1.0, 0.0}, {0.0, -1.0}}), NotPositiveDefinite);
}

TEST_CASE("sandwich inequality holds on random states") {
    Rng rng(5);
    const Mat P{{2.0, 0.5, 0.1}, {0.5, 1.5, -0.2}, {0.1, -0.2, 3.0}};
    const auto sw = sandwich_constants(P);
    for (int k = 0; k < 1000; ++k) {
        Vec x(3);
        for (std::size_t i = 0; i < 3; ++i) x[i] = rng.uniform(-5.0, 5.0);
        const double xpx = quadratic_form(P, x);
        const double nn = x.dot(x);
        CHECK(sw.a1 * sw.a1 * xpx <= nn * (1.0 + 1e-9));
        CHECK(nn <= sw.a2 * sw.a2 * xpx * (1.0 + 1e-9));
    }
}

TEST_CASE("decay constant q") {
    const double q1 = decay_constant_q(Mat{{1.0}}, Mat{{0.0}}, Vec{1.0}, Vec{-1.0});
    CHECK(q1 == doctest::Approx(1.0).epsilon(1e-12));

    // closed loop -I: q = 1
    const double q2 = decay_constant_q(Mat::identity(2), Mat{{-1.0, 0.0}, {1.0, -1.0}},
                                       Vec{1.0, 0.0}, Vec{0.0, -1.0});
    // A + bp' = [[-1,-1],[1,-1]]: symmetric part of P(A+bp') is -I
    CHECK(q2 == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(decay_constant_q(Mat::identity(1), Mat{{0.0}}, Vec{1.0}, Vec{1.0}),
                    NotNegativeDefinite);
}

TEST_CASE("decay inequality holds on random states") {
    Rng rng(13);
    const Mat P{{1.0, 1.0}, {1.0, 2.0}};
    const Mat A{{0.0, 0.0}, {1.0, 0.0}};
    const Vec b{1.0, 0.0};
    const Vec p{-2.0, -2.0};
    const double q = decay_constant_q(P, A, b, p);
    const Mat PA = P * (A + Mat::outer(b, p));
    for (int k = 0; k < 1000; ++k) {
        Vec x(2);
        for (std::size_t i = 0; i < 2; ++i) x[i] = rng.uniform(-4.0, 4.0);
        const double nn = x.dot(x);
        CHECK(x.dot(PA * x) <= -q * nn + 1e-9 * nn);
    }
}

TEST_CASE("solver flags singular systems") {
    CHECK_THROWS_AS(solve(Mat{{1.0, 2.0}, {2.0, 4.0}}, Vec{1.0, 0.0}), SingularMatrix);
    const Vec x = solve(Mat{{2.0, 1.0}, {1.0, 3.0}}, Vec{3.0, 5.0});
    CHECK(x[0] == doctest::Approx(0.8));
    CHECK(x[1] == doctest::Approx(1.4));
}

TEST_CASE("jacobi eigenvalues for a 3x3 symmetric matrix") {
    // eigenvalues of diag(1,2,3) rotated by an orthogonal similarity
    Mat D{{1.0, 0.0, 0.0}, {0.0, 2.0, 0.0}, {0.0, 0.0, 3.0}};
    const double c = std::cos(0.7), s = std::sin(0.7);
    Mat Q{{c, -s, 0.0}, {s, c, 0.0}, {0.0, 0.0, 1.0}};
    const Mat S = Q * D * Q.transpose();
    const auto ev = sym_eigenvalues(S);
    REQUIRE(ev.size() == 3);
    CHECK(ev[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ev[1] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(ev[2] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("c vector rejects a singular pencil") {
    // p = 0 leaves A' singular for the chain matrices
    auto [A, b] = chain_matrices(3);
    CHECK_THROWS_AS(c_vector(A, b, Vec(3)), SingularMatrix);
}
