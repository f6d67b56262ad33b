#include "mpukit/index.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "mpukit/analysis.hpp"
#include "mpukit/linalg.hpp"
#include "mpukit/rng.hpp"

namespace mpukit {

RankPair rank_ratio(const MpoTensor &m, double rel_tol) {
    const DenseTensor &t = m.cell_tensor(0);
    const std::size_t D0 = t.dim(0), di = t.dim(1), dj = t.dim(2), D1 = t.dim(3);
    RankPair out;
    // left grouping (a,i)×(j,b) is the tensor's own row-major layout
    out.left_rank = svd_rank(t.data(), D0 * di, dj * D1, rel_tol);
    const DenseTensor tp = t.permuted({0, 2, 1, 3});
    out.right_rank = svd_rank(tp.data(), D0 * dj, di * D1, rel_tol);
    if (out.right_rank == 0 || out.left_rank == 0)
        throw err::assertion_error("rank_ratio: zero tensor has no rank ratio");
    out.ratio = Rational(static_cast<long long>(out.left_rank),
                         static_cast<long long>(out.right_rank));
    return out;
}

// --------------------------------------------------------- window ranks ----

namespace {

/*! Dense windows up to this many entries get the exact SVD; larger ones are
 *  sketched.  2^20 complex entries = 16 MiB — big enough that the crossover
 *  rows of the shipped tables agree on both paths, small enough that a
 *  single-threaded SVD stays in the seconds. */
constexpr std::size_t kDenseEntryLimit = std::size_t(1) << 20;

/*! Sketch width: columns of the random projection.  Ranks at or above this
 *  would read as exactly 640 — far beyond every tabulated value. */
constexpr std::size_t kSketchWidth = 640;

std::pair<std::size_t, std::size_t> window_ranks_dense(const MpoTensor &m, std::size_t n,
                                                       double rel_tol) {
    const DenseTensor w = window_tensor(m, n);
    const std::size_t DL = w.dim(0), din = w.dim(1), dout = w.dim(2), DR = w.dim(3);
    const std::size_t lr = svd_rank(w.data(), DL * din, dout * DR, rel_tol);
    const DenseTensor wp = w.permuted({0, 2, 1, 3});
    const std::size_t rr = svd_rank(wp.data(), DL * dout, din * DR, rel_tol);
    return {lr, rr};
}

/*!
 * A·G for the window matricization A, without materializing A.
 *
 *   grouping 'left'  A[(a, I), (J, b)]  (rows: left bond and input string)
 *   grouping 'right' A[(a, J), (I, b)]
 *
 * G is a seeded complex Gaussian over the column group with `s` columns.
 * Sites are consumed right to left; the invariant after absorbing site x is
 *     H[(sum_1..sum_x), bond_x, (keep_{x+1}..keep_n, v)]
 * where "sum" legs belong to the column group and "keep" legs to the rows.
 * Each step is one GEMM between the site tensor and a permuted H.
 */
std::vector<cplx> streamed_sketch(const MpoTensor &m, std::size_t n, bool right_grouping,
                                  std::size_t s, std::uint64_t seed, std::size_t &rows_out) {
    std::vector<std::size_t> sumdims(n), keepdims(n);
    std::size_t sumprod = 1;
    for (std::size_t x = 1; x <= n; ++x) {
        const std::size_t di = m.site(x).dim(1), dj = m.site(x).dim(2);
        sumdims[x - 1] = right_grouping ? di : dj;
        keepdims[x - 1] = right_grouping ? dj : di;
        sumprod *= sumdims[x - 1];
    }
    const std::size_t DR = m.site(n).dim(3);

    SplitMix64 rng(seed);
    DenseTensor h({sumprod, DR, s}, rng.gauss_vector(sumprod * DR * s));
    std::size_t prefix = sumprod, tail = s;
    for (std::size_t x = n; x >= 1; --x) {
        DenseTensor t = m.site(x); // (bond, in, out, bond')
        if (right_grouping) t = t.permuted({0, 2, 1, 3});
        // t legs now (bond_prev, keep, sum_x, bond_x); H is (prefix', sum_x, bond_x, tail)
        const std::size_t cprev = t.dim(0), keep = t.dim(1), sum = t.dim(2), cx = t.dim(3);
        prefix /= sum;
        h.reshape_inplace({prefix, sum, cx, tail});
        DenseTensor hp = h.permuted({1, 2, 0, 3}); // (sum, bond_x, prefix, tail)
        DenseTensor prod({cprev, keep, prefix, tail});
        matmul(t.data(), hp.data(), prod.data(), cprev * keep, sum * cx, prefix * tail);
        h = prod.permuted({2, 0, 1, 3}); // (prefix, bond_prev, keep, tail)
        tail *= keep;
        h.reshape_inplace({prefix, cprev, tail});
        if (x == 1) break;
    }
    const std::size_t DL = m.site(1).dim(0);
    std::size_t K = 1;
    for (std::size_t k : keepdims) K *= k;
    rows_out = DL * K;
    std::vector<cplx> out(h.data(), h.data() + h.size());
    if (out.size() != rows_out * s)
        throw err::assertion_error("streamed_sketch: internal shape mismatch");
    return out;
}

std::pair<std::size_t, std::size_t> window_ranks(const MpoTensor &m, std::size_t n,
                                                 double rel_tol) {
    const std::size_t DL = m.site(1).dim(0), DR = m.site(n).dim(3);
    std::size_t din = 1, dout = 1, maxbond = DL;
    for (std::size_t x = 1; x <= n; ++x) {
        din *= m.site(x).dim(1);
        dout *= m.site(x).dim(2);
        maxbond = std::max(maxbond, m.site(x).dim(3));
    }
    // The dense path materializes the full window tensor, so it is bounded
    // both by the fixed entry limit and by the configured scan cap.
    const std::size_t dense_entry_cap =
        std::min(kDenseEntryLimit, default_caps().max_scan_bytes / sizeof(cplx));
    bool dense_fits = true;
    {
        // overflow-safe product test against the dense limit
        std::size_t e = DL;
        for (std::size_t f : {DR, din, dout}) {
            if (f != 0 && e > dense_entry_cap / f) {
                dense_fits = false;
                break;
            }
            e *= f;
        }
        dense_fits = dense_fits && e <= dense_entry_cap;
    }
    if (dense_fits) return window_ranks_dense(m, n, rel_tol);

    // The sketch keeps ~ maxbond·d^n·s entries live (plus one permuted copy).
    const std::size_t s = std::min(kSketchWidth, std::max(din, dout) * std::max(DL, DR));
    const std::size_t live = maxbond * std::max(din, dout) * s;
    if (live > default_caps().max_scan_bytes / (4 * sizeof(cplx)))
        throw err::cap_error(err::msg("window ranks: block length ", n, " needs ",
                                      (live * 4 * sizeof(cplx)) >> 20,
                                      " MiB of sketch workspace, over the scan cap"));

    std::pair<std::size_t, std::size_t> out;
    const double tol = std::max(rel_tol, 1e-9); // sketch noise floor
    for (int g = 0; g < 2; ++g) {
        const bool right_grouping = g == 1;
        const std::uint64_t seed = mix_seed(
            {0x5b1dfae2c63970d1ULL, n, static_cast<std::uint64_t>(g), DL, DR, din, dout});
        std::size_t rows = 0;
        const std::vector<cplx> ag = streamed_sketch(m, n, right_grouping, s, seed, rows);
        const std::size_t r = svd_rank(ag.data(), rows, s, tol);
        (right_grouping ? out.second : out.first) = r;
    }
    return out;
}

} // namespace

// ------------------------------------------------------------ index scan ----

namespace {

/*!
 * Hypothesis probe for the scan report: builder outputs carry the
 * stack-of-injectives guarantee; anything else is probed directly — the
 * period-blocked tensor's injectivity plus dense unitarity at two and three
 * periods (small sizes only; an even size matters, since odd-only unitaries
 * exist).  Returns a human-readable reason, empty when nothing fails.
 */
std::string hypothesis_violation(const MpoTensor &m) {
    if (m.stack_of_injectives) return {};
    try {
        const MpoTensor base = m.period() == 1 ? m : block(m, m.period());
        if (!is_injective(transfer(base), 1e-10))
            return "tensor is not injective (and not built as a stack of injective tensors)";
        std::size_t dp = 1;
        for (std::size_t x = 1; x <= m.period(); ++x) dp *= m.site(x).dim(1);
        std::vector<std::size_t> sizes;
        if (dp * dp <= 1024) sizes.push_back(2 * m.period());
        if (dp * dp * dp <= 1024) sizes.push_back(3 * m.period());
        for (const UnitaryCheck &c : check_unitary_dense(m, sizes, 1e-8))
            if (!c.unitary)
                return err::msg("assembly at ", c.n_sites, " sites is not unitary (deviation ",
                                c.deviation, ")");
    } catch (const err::error &) {
        return "hypothesis probe could not run (cap or degenerate transfer)";
    }
    return {};
}

} // namespace

IndexReport index_scan(const MpoTensor &m, std::size_t max_block, double rel_tol,
                       std::size_t stability_window) {
    if (stability_window < 2)
        throw err::assertion_error("index_scan: stability window must be at least 2");
    IndexReport rep;
    for (std::size_t n = 1; n <= max_block; ++n) {
        std::pair<std::size_t, std::size_t> rk;
        try {
            rk = window_ranks(m, n, rel_tol);
        } catch (const err::cap_error &e) {
            rep.capped = true;
            rep.note = e.what();
            break;
        }
        IndexRow row;
        row.block_length = n;
        row.left_rank = rk.first;
        row.right_rank = rk.second;
        row.ratio = Rational(static_cast<long long>(rk.first), static_cast<long long>(rk.second));
        rep.rows.push_back(row);
    }

    // Stabilized: the last `stability_window` rows share one ratio AND each
    // consecutive pair in that window either grows exactly by the added
    // site's physical dimension on both sides, or repeats exactly — the two
    // signatures of a settled scan.  A transient ratio coincidence with
    // irregular ranks does not count.
    if (rep.rows.size() >= stability_window) {
        const std::size_t first = rep.rows.size() - stability_window;
        bool ok = true;
        for (std::size_t k = first + 1; k < rep.rows.size() && ok; ++k) {
            const IndexRow &a = rep.rows[k - 1], &b = rep.rows[k];
            if (a.ratio != b.ratio) ok = false;
            const std::size_t d = m.site(b.block_length).dim(1);
            const bool grows = b.left_rank == a.left_rank * d && b.right_rank == a.right_rank * d;
            const bool constant = b.left_rank == a.left_rank && b.right_rank == a.right_rank;
            if (!(grows || constant)) ok = false;
        }
        if (ok) {
            rep.stabilized = true;
            rep.stabilized_value = rep.rows.back().ratio;
            rep.has_gnvw = true;
            rep.gnvw = std::sqrt(rep.stabilized_value.value());
        }
    }

    const std::string violation = hypothesis_violation(m);
    if (!violation.empty()) {
        rep.outside_theorem_hypotheses = true;
        rep.note = rep.note.empty() ? "outside the rank-ratio theorem hypotheses: " + violation
                                    : rep.note + "; " + violation;
    }
    return rep;
}

// ------------------------------------------------------------ eta oracle ----

namespace {

/*! Sampled unitarity probe: ‖O†(Ov) − v‖_∞ on a few seeded random vectors.
 *  O(dim²) per vector, against the O(dim³) of forming O†O. */
double sampled_unitary_deviation(const DenseOperator &o) {
    const std::size_t dim = o.dim;
    SplitMix64 rng(mix_seed({0x77e0a1b3c5d2f401ULL, dim}));
    double worst = 0.0;
    for (int trial = 0; trial < 3; ++trial) {
        std::vector<cplx> v = rng.gauss_vector(dim);
        double norm = 0.0;
        for (const cplx &z : v) norm += std::norm(z);
        norm = std::sqrt(norm);
        for (cplx &z : v) z /= norm;
        std::vector<cplx> w(dim);
        matmul(o.matrix.data(), v.data(), w.data(), dim, dim, 1);
        std::vector<cplx> u(dim, cplx(0.0));
        for (std::size_t j = 0; j < dim; ++j) {
            const cplx wj = w[j];
            const cplx *row = o.matrix.data() + j * dim;
            for (std::size_t i = 0; i < dim; ++i) u[i] += std::conj(row[i]) * wj;
        }
        for (std::size_t i = 0; i < dim; ++i) worst = std::max(worst, std::abs(u[i] - v[i]));
    }
    return worst;
}

/*! Frobenius norm of the Gram matrix of a rows×cols matrix (its rank-`cols`
 *  Gram fits easily even when the matrix itself is the whole operator). */
double gram_frobenius(const std::vector<cplx> &y, std::size_t rows, std::size_t cols) {
    std::vector<cplx> g(cols * cols);
    gram(y.data(), g.data(), rows, cols);
    double f = 0.0;
    for (const cplx &z : g) f += std::norm(z);
    return std::sqrt(f);
}

} // namespace

double gnvw_overlap_index(const DenseOperator &o, std::size_t cut, std::size_t l0) {
    const std::size_t N = o.n_sites, d = o.local_dim;
    if (l0 == 0) throw err::assertion_error("gnvw_overlap_index: l0 must be positive");
    if (cut < l0 || cut + l0 > N)
        throw err::assertion_error(
            err::msg("gnvw_overlap_index: window [", cut - l0 + 1, ", ", cut + l0,
                     "] does not fit an ", N, "-site chain"));
    const double udev = sampled_unitary_deviation(o);
    if (udev > 1e-8)
        throw err::assertion_error(
            err::msg("gnvw_overlap_index: operator is not unitary (sampled deviation ", udev,
                     ") — the overlap index is defined for unitaries"));

    std::size_t d1 = 1, dl = 1, d2 = 1;
    for (std::size_t k = 0; k < cut - l0; ++k) d1 *= d;
    for (std::size_t k = 0; k < l0; ++k) dl *= d;
    for (std::size_t k = 0; k < N - cut - l0; ++k) d2 *= d;

    // η(A, B) = √(p_a p_b)/p_Λ · ‖Tr_Λ(ê^a ê^b)‖_F with matrix-unit bases;
    // the trace window Λ is taken as the whole chain, which is exactly
    // equivalent to any window containing both supports (enlarging Λ scales
    // the traces and the 1/p_Λ prefactor inversely).  Summing |Tr|² over
    // both bases collapses to the Frobenius norm of a Gram matrix of a
    // permuted reshape of O: the conjugated algebra's two window legs are
    // moved to the columns, everything else to the rows.  The prefactors of
    // numerator and denominator are identical (both algebras have dimension
    // dl²) and cancel in the quotient.
    DenseTensor o8({d1, dl, dl, d2, d1, dl, dl, d2},
                   std::vector<cplx>(o.matrix.begin(), o.matrix.end()));
    const std::size_t rows = o.dim * o.dim / (dl * dl);
    const DenseTensor ynum = o8.permuted({0, 1, 3, 4, 6, 7, 2, 5}); // free: (row-R, col-L)
    const double num = gram_frobenius(
        std::vector<cplx>(ynum.data(), ynum.data() + ynum.size()), rows, dl * dl);
    const DenseTensor yden = o8.permuted({0, 2, 3, 4, 5, 7, 1, 6}); // free: (row-L, col-R)
    const double den = gram_frobenius(
        std::vector<cplx>(yden.data(), yden.data() + yden.size()), rows, dl * dl);
    if (den == 0.0) throw err::assertion_error("gnvw_overlap_index: zero denominator");
    return num / den;
}

bool verify_multiplicativity(const MpoTensor &m1, const MpoTensor &m2, double rel_tol,
                             std::size_t max_block) {
    const IndexReport r1 = index_scan(m1, max_block, rel_tol);
    const IndexReport r2 = index_scan(m2, max_block, rel_tol);
    const IndexReport rs = index_scan(stack(m1, m2), max_block, rel_tol);
    if (!r1.stabilized || !r2.stabilized || !rs.stabilized)
        throw err::convergence_error(
            err::msg("verify_multiplicativity: a scan did not stabilize within ", max_block,
                     " blocks (factors ", r1.stabilized, "/", r2.stabilized, ", stack ",
                     rs.stabilized, ")"));
    return rs.stabilized_value == r1.stabilized_value * r2.stabilized_value;
}

// -------------------------------------------------- singular-value squares ----

SvSquareGap sv_square_gap(const MpoTensor &mpo) {
    DenseTensor t = mpo.tensor(); // period-1 only
    const std::size_t D = t.dim(0), d = t.dim(1);
    if (t.dim(2) != d || t.dim(3) != D)
        throw err::assertion_error("sv_square_gap: needs d_in == d_out and equal bonds");
    TransferData td = transfer(mpo);
    if (std::abs(td.rho - 1.0) > 1e-9) {
        const cplx s(std::sqrt(1.0 / td.rho), 0.0);
        for (std::size_t i = 0; i < t.size(); ++i) t[i] *= s;
        td = transfer(MpoTensor(DenseTensor(t)));
    }

    // PSD square root of the right fixed point (Hermitized; tiny negative
    // eigenvalues from round-off are clipped).
    std::vector<cplx> rm(D * D), sq(D * D, cplx(0.0));
    for (std::size_t i = 0; i < D; ++i)
        for (std::size_t j = 0; j < D; ++j)
            rm[i * D + j] = 0.5 * (td.r[i * D + j] + std::conj(td.r[j * D + i]));
    {
        std::vector<double> w;
        std::vector<cplx> v;
        eigh(rm.data(), D, w, v); // eigenvectors as rows
        for (std::size_t k = 0; k < D; ++k) {
            const double s = std::sqrt(std::max(w[k], 0.0));
            for (std::size_t i = 0; i < D; ++i)
                for (std::size_t j = 0; j < D; ++j)
                    sq[i * D + j] += s * v[k * D + i] * std::conj(v[k * D + j]);
        }
        // the un-Hermitized fixed point feeds the composite side
        for (std::size_t i = 0; i < D * D; ++i) rm[i] = td.r[i];
    }

    // a[a,i,j,B] = Σ_b t[a,i,j,b]·sq[b,B];  x[a,i,j,q] = Σ_p t[a,i,j,p]·rm[p,q]
    DenseTensor a({D, d, d, D}), x({D, d, d, D});
    matmul(t.data(), sq.data(), a.data(), D * d * d, D, D);
    matmul(t.data(), rm.data(), x.data(), D * d * d, D, D);

    SvSquareGap out;
    for (int g = 0; g < 2; ++g) {
        const bool right = g == 1;
        // matricization of the √r-dressed tensor
        const DenseTensor am = right ? a.permuted({0, 2, 1, 3}) : a;
        // composite: contract x against conj(t) over the grouped-away
        // physical leg and the far bond
        //   left : b[(a,i),(c,k)] = Σ_{j,q} x[a,i,j,q]·conj(t[c,k,j,q])
        //   right: b[(a,j),(c,k)] = Σ_{i,q} x[a,i,j,q]·conj(t[c,i,k,q])
        const DenseTensor xm = right ? x.permuted({0, 2, 1, 3}) : x;
        const DenseTensor tm =
            (right ? t.permuted({1, 3, 0, 2}) : t.permuted({2, 3, 0, 1})).conjugated();
        DenseTensor b({D * d, d * D});
        matmul(xm.data(), tm.data(), b.data(), D * d, d * D, d * D);

        const std::vector<double> sa = singular_values(am.data(), D * d, d * D);
        const std::vector<double> sb = singular_values(b.data(), D * d, d * D);
        const double norm = std::max(sb.empty() ? 0.0 : sb[0], 1e-300);
        double gap = 0.0;
        for (std::size_t k = 0; k < std::min(sa.size(), sb.size()); ++k)
            gap = std::max(gap, std::abs(sa[k] * sa[k] - sb[k]) / norm);
        (right ? out.right : out.left) = gap;
    }
    return out;
}

} // namespace mpukit
