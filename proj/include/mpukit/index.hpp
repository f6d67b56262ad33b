#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "mpukit/mpo.hpp"
#include "mpukit/rational.hpp"

namespace mpukit {

/*!
 * Rank pair of one site tensor's two matricizations:
 *
 *   left grouping   rows (left-virtual, input)  × cols (output, right-virtual)
 *   right grouping  rows (left-virtual, output) × cols (input, right-virtual)
 *
 * For a unit cell this evaluates the first cell tensor; block first to
 * probe longer windows.  Returns (left_rank, right_rank, left/right).
 */
struct RankPair {
    std::size_t left_rank = 0;
    std::size_t right_rank = 0;
    Rational ratio;
};
RankPair rank_ratio(const MpoTensor &m, double rel_tol);

struct IndexRow {
    std::size_t block_length = 0;
    std::size_t left_rank = 0;
    std::size_t right_rank = 0;
    Rational ratio;
};

/*!
 * Rank-ratio scan report.  stabilized_value is set only when the LAST
 * `stability_window` rows have equal ratios and each consecutive rank pair
 * either grows exactly by the local dimension factor on both sides or is
 * exactly constant — the two signatures of a settled scan; anything else
 * (including a transient ratio coincidence) does not count.  gnvw is the
 * square root of the stabilized ratio.
 */
struct IndexReport {
    std::vector<IndexRow> rows;
    bool stabilized = false;
    Rational stabilized_value;
    bool has_gnvw = false;
    double gnvw = 0.0;
    /*! The rank-ratio theorems assume an injective tensor or a stack of
     *  injective tensors that assembles to a unitary; inputs outside that
     *  class still get a scan, but flagged. */
    bool outside_theorem_hypotheses = false;
    bool capped = false; // scan stopped early by the memory cap; rows are partial
    std::string note;
};

/*!
 * Scan windows of 1..max_block chain sites and report ranks, ratio,
 * stabilization and the derived index.  Window ranks are computed without
 * materializing the window tensor when it is large: the matricization is
 * multiplied by a seeded Gaussian sketch through a per-site streaming
 * contraction (memory ≈ bond · d^n · sketch_width), then SVD'd.  Small
 * windows take the exact dense path; the two paths agree on all shipped
 * fixtures.  Ranks at or above the sketch width (640) would be truncated
 * to it — far above every tabulated value.
 */
IndexReport index_scan(const MpoTensor &m, std::size_t max_block, double rel_tol,
                       std::size_t stability_window = 3);

/*!
 * Overlap-based index of a dense unitary o on a periodic chain — an oracle
 * computed directly from o, independent of any MPO structure.  With A_L
 * (A_R) the full matrix algebras on the l0 sites left (right) of the cut,
 * returns
 *
 *     η(O A_L O†, A_R) / η(A_L, O A_R O†)
 *
 * where η(A,B) = √(p_a p_b)/p_Λ · ‖ Tr_Λ(ê^a_ij ê^b_kl) ‖_F over matrix-unit
 * bases of the two algebras.  Evaluated with Λ the whole chain (exactly
 * equivalent to any window containing both supports: enlarging Λ scales the
 * trace and prefactor inversely) via two Gram matrices of permuted
 * reshapes of o.  Errors when [cut−l0, cut+l0] does not fit the chain or o
 * is not unitary (sampled check).
 */
double gnvw_overlap_index(const DenseOperator &o, std::size_t cut, std::size_t l0);

/*!
 * True iff the stabilized rank ratio of stack(m1, m2) equals the product of
 * the operands' stabilized ratios, as exact rationals.  Scans all three with
 * `max_block`; throws convergence_error when any scan fails to stabilize.
 */
bool verify_multiplicativity(const MpoTensor &m1, const MpoTensor &m2, double rel_tol,
                             std::size_t max_block = 7);

/*!
 * Consistency gap between the two routes to the composite's spectrum: the
 * singular values of the site matricization with the √r fixed point
 * attached to the right virtual leg, squared, against the eigenvalues of
 * the directly-wired composite matricization (both groupings).  For an
 * injective tensor both gaps vanish to round-off.  Compared in the squared
 * domain — taking square roots first inflates exact zeros to eigensolver
 * noise.  Normalized by the larger spectrum's max entry.
 */
struct SvSquareGap {
    double left = 0.0;
    double right = 0.0;
};
SvSquareGap sv_square_gap(const MpoTensor &m);

} // namespace mpukit
