#include "mpukit/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

// Make LAPACKE use std::complex<double> directly instead of its own struct,
// so buffers pass through without casts.  Must precede <lapacke.h>.
#include <complex>
#define LAPACK_COMPLEX_CUSTOM
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <cblas.h>

#include "mpukit/errors.hpp"

namespace mpukit {

void matmul(const cplx *a, const cplx *b, cplx *c, std::size_t m, std::size_t k, std::size_t n,
            bool conj_a, bool conj_b) {
    if (m == 0 || k == 0 || n == 0) return;
    const cplx one(1.0, 0.0), zero(0.0, 0.0);

    // Entrywise conjugation without transposition is not a native BLAS mode;
    // materialize the conjugate when asked (callers keep these small).
    std::vector<cplx> abuf, bbuf;
    if (conj_a) {
        abuf.assign(a, a + m * k);
        for (auto &z : abuf) z = std::conj(z);
        a = abuf.data();
    }
    if (conj_b) {
        bbuf.assign(b, b + k * n);
        for (auto &z : bbuf) z = std::conj(z);
        b = bbuf.data();
    }
    cblas_zgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, static_cast<int>(m),
                static_cast<int>(n), static_cast<int>(k), &one, a, static_cast<int>(k), b,
                static_cast<int>(n), &zero, c, static_cast<int>(n));
}

void gram(const cplx *a, cplx *g, std::size_t m, std::size_t n) {
    // G = A† A via zgemm with a conjugate-transposed left factor (row-major:
    // pass A with ConjTrans and leading dimension n).
    const cplx one(1.0, 0.0), zero(0.0, 0.0);
    cblas_zgemm(CblasRowMajor, CblasConjTrans, CblasNoTrans, static_cast<int>(n),
                static_cast<int>(n), static_cast<int>(m), &one, a, static_cast<int>(n), a,
                static_cast<int>(n), &zero, g, static_cast<int>(n));
}

std::vector<double> singular_values(const cplx *a, std::size_t m, std::size_t n) {
    if (m == 0 || n == 0) return {};
    std::vector<cplx> buf(a, a + m * n); // zgesdd destroys its input
    std::vector<double> s(std::min(m, n));
    // jobz='N' never touches u/vt, but LAPACKE's row-major wrapper still
    // validates their leading dimensions, so pass full-size ones.
    const lapack_int info =
        LAPACKE_zgesdd(LAPACK_ROW_MAJOR, 'N', static_cast<lapack_int>(m),
                       static_cast<lapack_int>(n), buf.data(), static_cast<lapack_int>(n),
                       s.data(), nullptr, static_cast<lapack_int>(m), nullptr,
                       static_cast<lapack_int>(n));
    if (info != 0)
        throw err::convergence_error(err::msg("singular_values: zgesdd failed, info=", info));
    return s;
}

std::size_t svd_rank(const cplx *a, std::size_t m, std::size_t n, double rel_tol) {
    const auto s = singular_values(a, m, n);
    if (s.empty() || s[0] <= 0.0) return 0;
    const double cut = rel_tol * s[0];
    std::size_t r = 0;
    while (r < s.size() && s[r] > cut) ++r;
    return r;
}

std::size_t svd_rank(const DenseTensor &matrix, double rel_tol) {
    if (matrix.rank() != 2) throw err::assertion_error("svd_rank: expected a rank-2 tensor");
    return svd_rank(matrix.data(), matrix.dim(0), matrix.dim(1), rel_tol);
}

SvdEcon svd_econ(const cplx *a, std::size_t m, std::size_t n) {
    const std::size_t r = std::min(m, n);
    std::vector<cplx> buf(a, a + m * n);
    SvdEcon out;
    out.u.assign(m * r, cplx(0.0, 0.0));
    out.s.assign(r, 0.0);
    out.vh.assign(r * n, cplx(0.0, 0.0));
    const lapack_int info = LAPACKE_zgesdd(
        LAPACK_ROW_MAJOR, 'S', static_cast<lapack_int>(m), static_cast<lapack_int>(n), buf.data(),
        static_cast<lapack_int>(n), out.s.data(), out.u.data(), static_cast<lapack_int>(r),
        out.vh.data(), static_cast<lapack_int>(n));
    if (info != 0) throw err::convergence_error(err::msg("svd_econ: zgesdd info=", info));
    return out;
}

void qr_positive(const DenseTensor &m, DenseTensor &q_out, DenseTensor &r_out) {
    if (m.rank() != 2 || m.dim(0) != m.dim(1))
        throw err::assertion_error("qr_positive: expected a square matrix");
    const std::size_t n = m.dim(0);
    std::vector<cplx> a(m.data(), m.data() + n * n);
    std::vector<cplx> tau(n);
    lapack_int info = LAPACKE_zgeqrf(LAPACK_ROW_MAJOR, static_cast<lapack_int>(n),
                                     static_cast<lapack_int>(n), a.data(),
                                     static_cast<lapack_int>(n), tau.data());
    if (info != 0) throw err::convergence_error(err::msg("qr_positive: zgeqrf info=", info));

    // Upper triangle of the factored array is R.
    DenseTensor r({n, n});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) r.at({i, j}) = a[i * n + j];

    info = LAPACKE_zungqr(LAPACK_ROW_MAJOR, static_cast<lapack_int>(n),
                          static_cast<lapack_int>(n), static_cast<lapack_int>(n), a.data(),
                          static_cast<lapack_int>(n), tau.data());
    if (info != 0) throw err::convergence_error(err::msg("qr_positive: zungqr info=", info));
    DenseTensor q({n, n}, std::vector<cplx>(a.begin(), a.end()));

    // Phase fix: m = (Q Λ)(Λ† R) with Λ = diag(r_ii/|r_ii|) makes diag(R)
    // strictly positive real and the factorization unique.
    double dmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) dmax = std::max(dmax, std::abs(r.at({i, i})));
    for (std::size_t i = 0; i < n; ++i) {
        const cplx rii = r.at({i, i});
        if (std::abs(rii) <= 1e-13 * std::max(dmax, 1.0))
            throw err::assertion_error(
                err::msg("qr_positive: rank-deficient input (R[", i, ",", i, "] ~ 0)"));
        const cplx lam = rii / std::abs(rii);
        for (std::size_t k = 0; k < n; ++k) q.at({k, i}) *= lam;               // Q ← Q·Λ
        for (std::size_t j = i; j < n; ++j) r.at({i, j}) *= std::conj(lam);    // R ← Λ†·R
        r.at({i, i}) = cplx(std::abs(rii), 0.0); // exact, avoids -0 imaginary dust
    }
    q_out = std::move(q);
    r_out = std::move(r);
}

void eigh(const cplx *a, std::size_t n, std::vector<double> &vals, std::vector<cplx> &vecs_rows) {
    std::vector<cplx> buf(a, a + n * n);
    vals.assign(n, 0.0);
    const lapack_int info =
        LAPACKE_zheevd(LAPACK_ROW_MAJOR, 'V', 'U', static_cast<lapack_int>(n), buf.data(),
                       static_cast<lapack_int>(n), vals.data());
    if (info != 0) throw err::convergence_error(err::msg("eigh: zheevd info=", info));
    // Row-major 'V' leaves eigenvectors in COLUMNS; hand them out as rows.
    vecs_rows.assign(n * n, cplx(0.0, 0.0));
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i) vecs_rows[k * n + i] = buf[i * n + k];
}

DominantEig dominant_eigenpairs(const cplx *e, std::size_t n) {
    std::vector<cplx> buf(e, e + n * n);
    std::vector<cplx> w(n), vl(n * n), vr(n * n);
    const lapack_int info = LAPACKE_zgeev(
        LAPACK_ROW_MAJOR, 'V', 'V', static_cast<lapack_int>(n), buf.data(),
        static_cast<lapack_int>(n), w.data(), vl.data(), static_cast<lapack_int>(n), vr.data(),
        static_cast<lapack_int>(n));
    if (info != 0)
        throw err::convergence_error(err::msg("dominant_eigenpairs: zgeev info=", info));

    std::size_t top = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (std::abs(w[i]) > std::abs(w[top])) top = i;
    DominantEig out;
    out.rho = std::abs(w[top]);
    double second = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (i != top) second = std::max(second, std::abs(w[i]));
    out.gap = out.rho - second;
    out.degenerate = (n > 1) && (second > (1.0 - 1e-8) * out.rho) && out.rho > 0.0;

    // zgeev's left vectors u satisfy u† E = λ u†; the row eigenvector is u†.
    out.l.resize(n);
    out.r.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.l[i] = std::conj(vl[i * n + top]);
        out.r[i] = vr[i * n + top];
    }

    // Normalize l·r = 1, then rotate the pair so trace(r as √n×√n) is real
    // positive (removes the arbitrary phase when l, r are positive matrices
    // up to a phase — the MPUO case).
    cplx dot(0.0, 0.0);
    for (std::size_t i = 0; i < n; ++i) dot += out.l[i] * out.r[i];
    if (std::abs(dot) < 1e-300)
        throw err::convergence_error("dominant_eigenpairs: l·r vanishes (defective pair)");
    for (auto &z : out.r) z /= dot;

    const auto d = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
    if (d * d == n) {
        cplx tr(0.0, 0.0);
        for (std::size_t i = 0; i < d; ++i) tr += out.r[i * d + i];
        if (std::abs(tr) > 1e-12) {
            const cplx phase = tr / std::abs(tr);
            for (auto &z : out.r) z /= phase;
            for (auto &z : out.l) z *= phase;
        }
    }
    return out;
}

} // namespace mpukit
