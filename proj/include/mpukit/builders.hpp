#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "mpukit/mpo.hpp"

namespace mpukit {

/*!
 * One layer of a layered unitary circuit.  A layer is either a lattice
 * translation or a brick wall of identical k-site gates:
 *
 *   offset 0:  [1 2] [3 4] [5 6] …        (k = 2)
 *   offset 1:  2] [3 4] [5 6] … [1        (bricks shifted one site, periodic)
 *
 * Random layers carry a seed; fixed layers carry the gate matrix.
 */
struct CircuitLayer {
    enum class Kind { translation_right, translation_left, random_layer, fixed_layer };
    Kind kind = Kind::translation_right;
    std::size_t k = 1;          // gate locality (brick layers)
    std::size_t offset = 0;     // brick offset in [0, k)
    std::uint64_t seed = 0;     // random layers
    std::vector<cplx> gate;     // fixed layers: row-major d^k × d^k
};

struct CircuitSpec {
    std::size_t local_dim = 2;
    std::vector<CircuitLayer> layers;
};

/*!
 * Parse the circuit text format.  Line-based; '#' starts a comment.
 *
 *   local_dim 2
 *   translation right
 *   layer random k=2 offset=1 seed=11
 *   layer fixed k=2 offset=0
 *   <d^(2k) lines of "re im">        (row-major gate entries)
 *
 * local_dim must come first; keys of random/fixed layers may appear in any
 * order.  Throws parse_error with a line number on malformed input.
 */
CircuitSpec parse_circuit_text(const std::string &text);
CircuitSpec parse_circuit_file(const std::string &path);

/*! D=1 MPO assembling to u ⊗ u ⊗ … ⊗ u.  Errors on non-unitary u. */
MpoTensor product_unitary(const DenseTensor &u);

/*!
 * Nearest-neighbor controlled-phase chain (periodic product of CZ gates on
 * qubits (1,2),(2,3),…,(N,1)).  d = 2, D = 2, diagonal in the physical
 * indices: tensor[α, i, i, β] = δ_{β,i} · (−1)^{α·i}.
 */
MpoTensor controlled_phase();

/*! Right/left lattice translation of a d-dimensional chain:
 *  right moves site content x → x+1.  D = d. */
MpoTensor translation_right(std::size_t d);
MpoTensor translation_left(std::size_t d);

/*!
 * Brick wall of copies of one k-site gate (d^k × d^k, row-major), bricks
 * covering (1..k), (k+1..2k), … shifted by `offset`.  The gate is split into
 * k site tensors by iterated SVD with singular values folded symmetrically
 * (sqrt into each side), producing a period-k unit cell.
 */
MpoTensor brick_layer(const std::vector<cplx> &gate, std::size_t d, std::size_t k,
                      std::size_t offset);

/*! Layer of non-overlapping two-body gates u on pairs (1,2),(3,4),…
 *  (period-2 cell; assembly requires even N).  Errors on non-unitary u. */
MpoTensor two_body_layer(const DenseTensor &u);

/*!
 * Deterministic Haar-style random unitary: QR of a seeded complex Gaussian
 * d^k × d^k matrix with the positive-diagonal phase convention (see
 * qr_positive).  Same seed ⇒ same matrix, on any platform.
 */
DenseTensor random_local_unitary(std::size_t d, std::size_t k, std::uint64_t seed);

/*! Stack of per-layer MPOs in listed order (first layer applied first);
 *  assembles to the product of the layer operators. */
MpoTensor build_circuit(const CircuitSpec &spec);

/*!
 * d = 3 tensor with the following behavior (realized as an explicit entry
 * table): the assembled operator is unitary for odd N and non-unitary for
 * even N; at N = 2 the input states |12⟩ and |21⟩ map to the same output
 * ray; the rank ratio is 3 at every block length (a non-square-integer
 * value, which no MPO satisfying the unitarity definition at ALL sizes can
 * produce).  Entries: tensor[α, i, j, β] = δ_{β,i} · δ_{j, (−(α+i)) mod 3}.
 */
MpoTensor fractional_example();

} // namespace mpukit
