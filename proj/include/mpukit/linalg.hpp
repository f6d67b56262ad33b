#pragma once
#include <complex>
#include <cstddef>
#include <vector>

#include "mpukit/dense_tensor.hpp"

namespace mpukit {

/*!
 * Thin numerical layer over LAPACK (via LAPACKE) and a row-major GEMM.
 * Everything here works on row-major complex<double> buffers, matching
 * DenseTensor's layout, so matricizations are plain reshapes.
 */

/*! C (m×n) = A (m×k) · B (k×n), row-major.  conj_a/conj_b apply entrywise
 *  conjugation to the respective factor (no transposition). */
void matmul(const cplx *a, const cplx *b, cplx *c, std::size_t m, std::size_t k, std::size_t n,
            bool conj_a = false, bool conj_b = false);

/*! Gram matrix G (n×n) = A† · A for row-major A (m×n). */
void gram(const cplx *a, cplx *g, std::size_t m, std::size_t n);

/*! Singular values of a row-major m×n matrix, descending. */
std::vector<double> singular_values(const cplx *a, std::size_t m, std::size_t n);

/*! Count of singular values σ with σ > rel_tol · σ_max; 0 for the zero matrix. */
std::size_t svd_rank(const DenseTensor &matrix, double rel_tol);
std::size_t svd_rank(const cplx *a, std::size_t m, std::size_t n, double rel_tol);

/*! Economy SVD A = U·diag(s)·Vh with r = min(m,n) columns/rows. */
struct SvdEcon {
    std::vector<cplx> u;  // m×r row-major
    std::vector<double> s;
    std::vector<cplx> vh; // r×n row-major
};
SvdEcon svd_econ(const cplx *a, std::size_t m, std::size_t n);

/*!
 * QR factorization of a square full-rank matrix with the phase convention
 * that makes it unique: m = Q·R with diag(R) strictly positive real.  The
 * raw factorization is post-rotated by Λ = diag(r_ii / |r_ii|):
 *   Q ← Q·Λ,  R ← Λ†·R.
 * Errors on rank-deficient input (a vanishing R diagonal entry).
 */
void qr_positive(const DenseTensor &m, DenseTensor &q_out, DenseTensor &r_out);

/*! Eigenvalues (ascending) and eigenvectors of a Hermitian n×n matrix;
 *  vectors are returned as rows of vecs (row k ↔ eigenvalue k). */
void eigh(const cplx *a, std::size_t n, std::vector<double> &vals, std::vector<cplx> &vecs_rows);

/*!
 * Dominant eigen-data of a general square matrix (dense full-spectrum solve;
 * power iteration is deliberately avoided — it stalls on nilpotent
 * off-diagonal blocks these transfer matrices contain).
 *
 *   rho  : spectral radius
 *   l, r : row/column eigenvectors of the dominant eigenvalue, normalized so
 *          l·r = 1; when they are positive matrices up to a phase (the MPUO
 *          case), the phase is removed by making trace(r) real positive.
 *   degenerate : dominant |eigenvalue| is not isolated (diagnostic only)
 *   gap  : rho − second-largest |eigenvalue|
 */
struct DominantEig {
    double rho = 0.0;
    std::vector<cplx> l, r;
    bool degenerate = false;
    double gap = 0.0;
};
DominantEig dominant_eigenpairs(const cplx *e, std::size_t n);

} // namespace mpukit
