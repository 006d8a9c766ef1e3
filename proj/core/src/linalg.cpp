#include "fwdsat/linalg.hpp"

#include "fwdsat/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fwdsat {

Vec Vec::basis(std::size_t dim, std::size_t k) {
    Vec e(dim);
    e[k] = 1.0;
    return e;
}

double Vec::dot(const Vec& o) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < v_.size(); ++i) acc += v_[i] * o.v_[i];
    return acc;
}

double Vec::norm() const { return std::sqrt(dot(*this)); }

Vec Vec::head(std::size_t k) const {
    Vec h(k);
    for (std::size_t i = 0; i < k; ++i) h[i] = v_[i];
    return h;
}

bool Vec::all_finite() const {
    for (double x : v_)
        if (!std::isfinite(x)) return false;
    return true;
}

Vec Vec::operator+(const Vec& o) const {
    Vec r(*this);
    for (std::size_t i = 0; i < v_.size(); ++i) r[i] += o.v_[i];
    return r;
}

Vec Vec::operator-(const Vec& o) const {
    Vec r(*this);
    for (std::size_t i = 0; i < v_.size(); ++i) r[i] -= o.v_[i];
    return r;
}

Vec Vec::operator*(double s) const {
    Vec r(*this);
    for (double& x : r.v_) x *= s;
    return r;
}

void Vec::add_scaled(double s, const Vec& o) {
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += s * o.v_[i];
}

void Vec::assign_sum(const Vec& a, double s, const Vec& b) {
    v_.resize(a.dim());
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] = a[i] + s * b[i];
}

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows.begin()->size();
    m_.reserve(rows_ * cols_);
    for (const auto& row : rows)
        for (double x : row) m_.push_back(x);
}

Mat Mat::identity(std::size_t n) {
    Mat I(n, n);
    for (std::size_t i = 0; i < n; ++i) I(i, i) = 1.0;
    return I;
}

Mat Mat::outer(const Vec& a, const Vec& b) {
    Mat M(a.dim(), b.dim());
    for (std::size_t i = 0; i < a.dim(); ++i)
        for (std::size_t j = 0; j < b.dim(); ++j) M(i, j) = a[i] * b[j];
    return M;
}

Mat Mat::transpose() const {
    Mat T(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) T(j, i) = (*this)(i, j);
    return T;
}

Mat Mat::operator+(const Mat& o) const {
    Mat r(*this);
    for (std::size_t k = 0; k < m_.size(); ++k) r.m_[k] += o.m_[k];
    return r;
}

Mat Mat::operator-(const Mat& o) const {
    Mat r(*this);
    for (std::size_t k = 0; k < m_.size(); ++k) r.m_[k] -= o.m_[k];
    return r;
}

Mat Mat::operator*(const Mat& o) const {
    Mat r(rows_, o.cols_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t k = 0; k < cols_; ++k) {
            double a = (*this)(i, k);
            for (std::size_t j = 0; j < o.cols_; ++j) r(i, j) += a * o(k, j);
        }
    return r;
}

Vec Mat::operator*(const Vec& x) const {
    Vec r(rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < cols_; ++j) acc += (*this)(i, j) * x[j];
        r[i] = acc;
    }
    return r;
}

bool Mat::all_finite() const {
    for (double x : m_)
        if (!std::isfinite(x)) return false;
    return true;
}

double quadratic_form(const Mat& M, const Vec& x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < M.rows(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < M.cols(); ++j) row += M(i, j) * x[j];
        acc += x[i] * row;
    }
    return acc;
}

Vec solve(const Mat& A, const Vec& rhs) {
    const std::size_t n = A.rows();
    if (A.cols() != n || rhs.dim() != n)
        throw DimensionMismatch("solve: matrix must be square and match rhs");
    Mat a(A);
    Vec b(rhs);
    std::vector<double> row_scale(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            row_scale[i] = std::max(row_scale[i], std::abs(a(i, j)));
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a(perm[r], col)) > std::abs(a(perm[piv], col))) piv = r;
        std::swap(perm[col], perm[piv]);
        const std::size_t pr = perm[col];
        const double pivot = a(pr, col);
        if (std::abs(pivot) < 1e-12 * std::max(row_scale[pr], 1e-300))
            throw SingularMatrix("solve: pivot below threshold at column " +
                                 std::to_string(col));
        for (std::size_t r = col + 1; r < n; ++r) {
            const std::size_t rr = perm[r];
            const double factor = a(rr, col) / pivot;
            if (factor == 0.0) continue;
            a(rr, col) = 0.0;
            for (std::size_t j = col + 1; j < n; ++j) a(rr, j) -= factor * a(pr, j);
            b[rr] -= factor * b[pr];
        }
    }
    Vec x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        const std::size_t r = perm[ii];
        double acc = b[r];
        for (std::size_t j = ii + 1; j < n; ++j) acc -= a(r, j) * x[j];
        x[ii] = acc / a(r, ii);
    }
    return x;
}

namespace {

std::vector<double> jacobi_eigenvalues(Mat S) {
    const std::size_t n = S.rows();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += S(i, j) * S(i, j);
        double diag = 0.0;
        for (std::size_t i = 0; i < n; ++i) diag += S(i, i) * S(i, i);
        if (off <= 1e-30 * std::max(diag, 1e-300)) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (S(p, q) == 0.0) continue;
                const double theta = (S(q, q) - S(p, p)) / (2.0 * S(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double skp = S(k, p), skq = S(k, q);
                    S(k, p) = c * skp - s * skq;
                    S(k, q) = s * skp + c * skq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double spk = S(p, k), sqk = S(q, k);
                    S(p, k) = c * spk - s * sqk;
                    S(q, k) = s * spk + c * sqk;
                }
            }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = S(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

} // namespace

std::vector<double> sym_eigenvalues(const Mat& S) {
    const std::size_t n = S.rows();
    if (S.cols() != n) throw DimensionMismatch("sym_eigenvalues: matrix not square");
    if (n == 1) return {S(0, 0)};
    if (n == 2) {
        // roots of l^2 - tr l + det, written to avoid cancellation
        const double tr = S(0, 0) + S(1, 1);
        const double det = S(0, 0) * S(1, 1) - S(0, 1) * S(1, 0);
        const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
        return {tr / 2.0 - disc, tr / 2.0 + disc};
    }
    return jacobi_eigenvalues(S);
}

double sym_norm(const Mat& S) {
    const auto ev = sym_eigenvalues(S);
    return std::max(std::abs(ev.front()), std::abs(ev.back()));
}

Mat cholesky(const Mat& P) {
    const std::size_t n = P.rows();
    Mat L(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double acc = P(i, j);
            for (std::size_t k = 0; k < j; ++k) acc -= L(i, k) * L(j, k);
            if (i == j) {
                if (acc <= 0.0)
                    throw NotPositiveDefinite("cholesky: nonpositive pivot");
                L(i, i) = std::sqrt(acc);
            } else {
                L(i, j) = acc / L(j, j);
            }
        }
    }
    return L;
}

ChainData chain_matrices(std::size_t i) {
    if (i < 1) throw DimensionMismatch("chain_matrices: dimension must be >= 1");
    Mat A(i, i);
    for (std::size_t k = 1; k < i; ++k) A(k, k - 1) = 1.0;
    return {A, Vec::basis(i, 0)};
}

Vec c_vector(const Mat& A, const Vec& b, const Vec& p) {
    const std::size_t n = A.rows();
    if (A.cols() != n || b.dim() != n || p.dim() != n)
        throw DimensionMismatch("c_vector: inconsistent dimensions");
    const Mat M = A.transpose() + Mat::outer(p, b);
    Vec rhs(n);
    rhs[n - 1] = -1.0;
    return solve(M, rhs);
}

Definiteness is_neg_definite(const Mat& M) {
    const std::size_t n = M.rows();
    if (M.cols() != n) throw DimensionMismatch("is_neg_definite: matrix not square");
    Mat S(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) S(i, j) = 0.5 * (M(i, j) + M(j, i));
    const double lmax = sym_eigenvalues(S).back();
    return {lmax < 0.0, lmax};
}

SandwichConstants sandwich_constants(const Mat& P) {
    const auto ev = sym_eigenvalues(P);
    if (ev.front() <= 0.0)
        throw NotPositiveDefinite("sandwich_constants: matrix not positive definite");
    return {1.0 / std::sqrt(ev.back()), 1.0 / std::sqrt(ev.front())};
}

double decay_constant_q(const Mat& P, const Mat& A, const Vec& b, const Vec& p) {
    const Mat closed = A + Mat::outer(b, p);
    const Mat N = P * closed + closed.transpose() * P;
    const auto nd = is_neg_definite(N);
    if (!nd.flag)
        throw NotNegativeDefinite("decay_constant_q: P(A+bp') + (A'+pb')P not negative definite");
    return -nd.margin / 2.0;
}

} // namespace fwdsat
