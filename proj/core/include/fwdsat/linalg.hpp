#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace fwdsat {

// Dense real vector. Sized for the paper's systems (n <= a handful), so the
// implementation favours clarity over blocking; all entries must stay finite.
class Vec {
public:
    Vec() = default;
    explicit Vec(std::size_t dim, double fill = 0.0) : v_(dim, fill) {}
    Vec(std::initializer_list<double> xs) : v_(xs) {}

    static Vec basis(std::size_t dim, std::size_t k);

    std::size_t dim() const { return v_.size(); }
    double& operator[](std::size_t i) { return v_[i]; }
    double operator[](std::size_t i) const { return v_[i]; }

    double dot(const Vec& o) const;
    double norm() const;
    Vec head(std::size_t k) const;
    bool all_finite() const;

    Vec operator+(const Vec& o) const;
    Vec operator-(const Vec& o) const;
    Vec operator*(double s) const;
    // this += s * o, no allocation; used by the integrator hot path.
    void add_scaled(double s, const Vec& o);
    void assign_sum(const Vec& a, double s, const Vec& b); // this = a + s*b

    const std::vector<double>& data() const { return v_; }
    std::vector<double>& data() { return v_; }

    bool operator==(const Vec&) const = default;

private:
    std::vector<double> v_;
};

// Dense row-major matrix.
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), m_(rows * cols, fill) {}
    Mat(std::initializer_list<std::initializer_list<double>> rows);

    static Mat identity(std::size_t n);
    static Mat outer(const Vec& a, const Vec& b); // a b'

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double& operator()(std::size_t i, std::size_t j) { return m_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return m_[i * cols_ + j]; }

    Mat transpose() const;
    Mat operator+(const Mat& o) const;
    Mat operator-(const Mat& o) const;
    Mat operator*(const Mat& o) const;
    Vec operator*(const Vec& x) const;
    bool all_finite() const;

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> m_;
};

// x' M x, accumulated row by row.
double quadratic_form(const Mat& M, const Vec& x);

// Solves A x = rhs with partially pivoted elimination. Throws SingularMatrix
// when a pivot falls below 1e-12 times the largest entry of its row.
Vec solve(const Mat& A, const Vec& rhs);

// Eigenvalues of a symmetric matrix, ascending. Closed form for n <= 2,
// cyclic Jacobi sweeps otherwise.
std::vector<double> sym_eigenvalues(const Mat& S);

// Operator 2-norm of a symmetric matrix (largest |eigenvalue|).
double sym_norm(const Mat& S);

// Lower-triangular Cholesky factor: P = L L'. Throws NotPositiveDefinite.
Mat cholesky(const Mat& P);

// Integrator-chain matrices of the recursive construction: A_i has ones on
// the first subdiagonal, b_i is the first standard basis vector.
struct ChainData {
    Mat A;
    Vec b;
};
ChainData chain_matrices(std::size_t i);

// c = -(A' + p b')^{-1} e_n. Throws SingularMatrix.
Vec c_vector(const Mat& A, const Vec& b, const Vec& p);

// Negative definiteness of the symmetric part of M; margin is the largest
// eigenvalue of (M + M')/2 (negative means pass).
struct Definiteness {
    bool flag;
    double margin;
};
Definiteness is_neg_definite(const Mat& M);

// Constants with a1^2 x'Px <= |x|^2 <= a2^2 x'Px: a1 = 1/sqrt(lmax),
// a2 = 1/sqrt(lmin). Throws NotPositiveDefinite when lmin <= 0.
struct SandwichConstants {
    double a1;
    double a2;
};
SandwichConstants sandwich_constants(const Mat& P);

// Largest q with x'P(A + bp')x <= -q|x|^2 for all x. Throws
// NotNegativeDefinite when the symmetric closed-loop sum is not negative
// definite.
double decay_constant_q(const Mat& P, const Mat& A, const Vec& b, const Vec& p);

} // namespace fwdsat
