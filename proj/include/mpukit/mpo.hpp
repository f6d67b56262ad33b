#pragma once
#include <string>
#include <vector>

#include "mpukit/dense_tensor.hpp"

namespace mpukit {

/*!
 * Matrix product (unitary) operator with a periodic unit cell.
 *
 * Site-tensor leg convention, fixed globally:
 *
 *            i (input)
 *            |
 *      a ---[M]--- b            tensor[a, i, j, b] = M^{ji}_{ab}
 *            |
 *            j (output)
 *
 * legs = (left-virtual, input-physical, output-physical, right-virtual).
 *
 * The operator on an N-site periodic chain contracts one site tensor per
 * site.  Chain site x (1-based) uses cell tensor (x-1) mod period, and N
 * must be a multiple of the period.  A translation-invariant MPO is the
 * period-1 case; brick layers of 2- and 3-site gates need periods 2 and 3,
 * which is why the cell is a list.
 *
 * Virtual (bond) legs must chain consistently: cell[k]'s right bond equals
 * cell[k+1 mod p]'s left bond.
 */
class MpoTensor {
  public:
    MpoTensor() = default;
    explicit MpoTensor(DenseTensor site);
    explicit MpoTensor(std::vector<DenseTensor> cell);

    std::size_t period() const { return cell_.size(); }
    /*! Cell tensor by 0-based position. */
    const DenseTensor &cell_tensor(std::size_t k) const;
    /*! Tensor used on 1-based chain site x. */
    const DenseTensor &site(std::size_t x) const;
    /*! The single site tensor of a period-1 MPO (errors for period > 1). */
    const DenseTensor &tensor() const;

    /*! Largest virtual dimension over cell boundaries. */
    std::size_t bond_dim() const;
    std::size_t phys_in() const { return site(1).dim(1); }
    std::size_t phys_out() const { return site(1).dim(2); }

    /*! Set by builders whose output is an injective tensor or a stack of
     *  injective tensors (the hypothesis class of the index theorems); used
     *  only to annotate reports for inputs outside that class. */
    bool stack_of_injectives = false;

  private:
    std::vector<DenseTensor> cell_;
    void validate() const;
};

/*! Dense operator on an N-site chain: row index J = (j_1 … j_N) output
 *  string, column index I = (i_1 … i_N) input string, site 1 the most
 *  significant digit.  Row-major storage. */
struct DenseOperator {
    std::size_t n_sites = 0;
    std::size_t local_dim = 1;
    std::size_t dim = 1; // local_dim^n_sites
    std::vector<cplx> matrix;

    cplx &at(std::size_t row_out, std::size_t col_in) { return matrix[row_out * dim + col_in]; }
    const cplx &at(std::size_t row_out, std::size_t col_in) const {
        return matrix[row_out * dim + col_in];
    }
};

/*!
 * Transfer-matrix data of a period-1 MPO.
 *
 *   E_raw[(a,c),(b,d)] = Σ_{i,j} M^{ji}_{ab} · conj(M^{ji}_{cd})
 *
 * e_matrix stores E_raw / d_in: for a unitary MPO the raw spectral radius is
 * exactly d (trace of E_raw^N is Tr O†O = d^N), so the stored matrix has
 * spectral radius 1, which is the normalization all downstream formulas
 * assume.  l and r are the dominant row/column eigenvectors with l·r = 1 and
 * positive-trace phase; reshaped D×D they are PSD for MPUOs.
 */
struct TransferData {
    std::size_t bond_dim = 0;       // D
    std::vector<cplx> e_matrix;     // (D² × D²) row-major, normalized by 1/d_in
    double rho = 0.0;               // spectral radius of e_matrix
    std::vector<cplx> l, r;         // D²-vectors
    bool degenerate = false;        // dominant eigenvalue not isolated (diagnostic)
    double gap = 0.0;
};

/*! Memory caps.  max_dense_dim bounds both dense assembly (d^N) and blocked
 *  physical dimensions (d^n); max_scan_bytes bounds the streamed rank-scan
 *  workspace.  Overridable via MPU_MAX_DENSE_DIM / MPU_MAX_SCAN_BYTES or the
 *  CLI. */
struct CapConfig {
    std::size_t max_dense_dim = 4096;
    std::size_t max_scan_bytes = std::size_t(1) << 30;
};
const CapConfig &default_caps();
void set_default_caps(const CapConfig &caps);

/*!
 * Dense operator on n_sites chain sites with periodic boundary:
 *   entry (J, I) = Tr( M^{j_1 i_1} M^{j_2 i_2} … M^{j_N i_N} ).
 * Contracts the two chain halves separately and joins them with one matrix
 * product, so the peak intermediate is D·d^{N/2}·d^{N/2}·D rather than the
 * d^N × d^N × D² of naive sequential growth.
 */
DenseOperator assemble_dense(const MpoTensor &m, std::size_t n_sites);

/*! Adjoint MPO: physical legs swapped, entries conjugated
 *  ((M†)^{ji} = (M^{ij})^*); assembles to the conjugate transpose. */
MpoTensor dagger(const MpoTensor &m);

/*!
 * Composite tensor of M and M†, period-1 input:
 *
 *   t[(a,c), i, j, (b,d)] = Σ_k m[a,i,k,b] · conj(m[c,j,k,d])
 *
 * i.e. T^{ij} = Σ_k M^{ki} ⊗ (M^{kj})^* with the NON-daggered factor's
 * virtual index most significant.  (Writing the daggered factor first, as
 * the defining equation reads, labels virtual pairs (c,a); the convention
 * here is the one under which Σ_i T^{ii} equals the transfer matrix
 * entrywise, and is used consistently by the fixed-point checks.)
 */
DenseTensor compose_t(const MpoTensor &m);

/*! Transfer data (see TransferData) of a period-1 MPO. */
TransferData transfer(const MpoTensor &m);

/*! Block n adjacent sites into one: physical legs become d^n-dimensional
 *  (site 1 most significant), virtual legs untouched.  For period p the
 *  result has period lcm(n,p)/n.  Errors when d^n exceeds the cap. */
MpoTensor block(const MpoTensor &m, std::size_t n);

/*!
 * Stack two MPOs: stack(m1, m2) represents O2·O1 — m2 APPLIED AFTER m1.
 * Combined virtual index (a1, a2) with the first-listed operand's index
 * most significant; result period is lcm of the two periods.  Requires
 * d_out of m1 == d_in of m2.
 */
MpoTensor stack(const MpoTensor &m1, const MpoTensor &m2);

/*! Injectivity probe: l and r reshaped D×D must both have full svd_rank. */
bool is_injective(const TransferData &t, double rel_tol);

/*!
 * Remove redundant virtual dimensions of a period-1 MPO by projecting the
 * virtual legs onto the supports of the (Hermitized) l and r fixed points,
 * recomputing the transfer data, and repeating — at most bond_dim times.
 * The dense assembly is unchanged (no rescaling is needed: the discarded
 * directions carry no weight in the periodic trace).  Throws a diagnostic
 * convergence error if injectivity is not reached within the iteration cap.
 */
MpoTensor reduce_to_injective(const MpoTensor &m, double rel_tol);

/*! Window tensor of chain sites [start, start+n-1]:
 *  legs (left bond, input string, output string, right bond). */
DenseTensor window_tensor(const MpoTensor &m, std::size_t n, std::size_t start = 1);

/*!
 * Serialization.  Text format ("mpo-text 1" header, then "period p" and
 * "injective_stack 0|1" lines; per site a "shape Dl din dout Dr" line
 * followed by numel "re im" lines in %.17e, row-major).  Binary format
 * (magic "MPOB", u32 version, u64 period, u64 injective_stack flag, per
 * site 4×u64 dims then interleaved re/im doubles, little-endian,
 * row-major).  load_mpo sniffs the magic and dispatches.
 */
void save_mpo_text(const MpoTensor &m, const std::string &path);
MpoTensor load_mpo_text(const std::string &path);
void save_mpo_binary(const MpoTensor &m, const std::string &path);
MpoTensor load_mpo_binary(const std::string &path);
MpoTensor load_mpo(const std::string &path);

} // namespace mpukit
