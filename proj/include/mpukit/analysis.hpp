#pragma once
#include <utility>
#include <vector>

#include "mpukit/mpo.hpp"

namespace mpukit {

/*! One row of a unitarity sweep: ‖O†O − 1‖_max at a given chain size. */
struct UnitaryCheck {
    std::size_t n_sites = 0;
    double deviation = 0.0;
    bool unitary = false;
};

/*! Dense unitarity test at each requested size (sizes must respect the
 *  period and the dense cap). */
std::vector<UnitaryCheck> check_unitary_dense(const MpoTensor &m,
                                              const std::vector<std::size_t> &sizes, double tol);

/*!
 * Residuals of the fixed-point structure of a blocked tensor M̃ with
 * composite T̃ (see compose_t) and transfer fixed points l, r:
 *
 *   isometry     ⟨l| T̃^{ik} |r⟩            = δ_ik
 *   separation   T̃^{ik} · T̃^{jl}          = (T̃^{ik}|r⟩) · (⟨l|T̃^{jl})
 *   pull-left    ⟨l| T̃^{ik} T̃^{jl}        = δ_ik · ⟨l|T̃^{jl}
 *   pull-right   T̃^{ik} T̃^{jl} |r⟩        = T̃^{ik}|r⟩ · δ_jl
 *
 * Each residual is max|LHS−RHS| normalized by the larger of the two sides'
 * max entries (over all physical index pairs jointly).
 */
struct FixedPointReport {
    std::size_t block_length = 0;
    double separation_residual = 0.0;
    double isometry_residual = 0.0;
    double pull_left_residual = 0.0;
    double pull_right_residual = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    bool degenerate_transfer = false; // diagnostic from the eigensolve
};

/*!
 * Evaluate the fixed-point equations after blocking `block_length` chain
 * sites (must be a multiple of the unit-cell period, so the blocked object
 * is a single tensor).  The blocked tensor is first rescaled to the unitary
 * convention (raw transfer spectral radius d); equations are evaluated
 * streaming over physical index pairs, so memory stays at the size of T̃.
 */
FixedPointReport check_fixed_point(const MpoTensor &m, std::size_t block_length, double tol);

/*! Result of the minimal-block-length search. */
struct FixedPointSearch {
    bool found = false;
    std::size_t block_length = 0; // in searched-tensor units (see site_units)
    std::size_t site_units = 1;   // chain sites per searched-tensor site
    bool capped = false;          // stopped by the memory cap, not by max_block
    std::vector<FixedPointReport> reports;
};

/*!
 * Smallest block length at which the fixed-point equations hold.  The input
 * is first blocked to its period (one tensor) and reduced to injective form
 * — the fixed-point theorem is a statement about injective tensors, and
 * circuit stacks carry redundant virtual dimensions that would mask it —
 * then block lengths 1, 2, … up to max_block (and at most D² of the reduced
 * tensor) are tested in order.  `capped` distinguishes "cap hit before an
 * answer" from "searched everything, none passed".
 */
FixedPointSearch find_fixed_point(const MpoTensor &m, std::size_t max_block, double tol);

/*! Operator supported on `width` adjacent sites starting at 1-based site
 *  `start`: row-major d^width × d^width matrix. */
struct SiteRangeOp {
    std::size_t start = 1;
    std::size_t width = 1;
    std::vector<cplx> matrix;
};

struct LocalityReport {
    std::size_t operator_support_before = 0;
    std::size_t support_after = 0;
    long long growth = 0;
};

/*!
 * Heisenberg conjugation O†·(op ⊗ 1)·O on an n_sites periodic chain, plus
 * the smallest contiguous cyclic window outside which the result acts as
 * identity (all cyclic windows are scanned; conjugating by a translation
 * shifts support, so a fixed origin would misreport growth).  Window
 * membership is decided by a partial-trace test at tolerance `tol`.
 */
std::pair<DenseOperator, LocalityReport> conjugate_local(const MpoTensor &m,
                                                         const SiteRangeOp &op,
                                                         std::size_t n_sites, double tol = 1e-9);

} // namespace mpukit
