#pragma once
#include <complex>
#include <cstddef>
#include <utility>
#include <vector>

#include "mpukit/errors.hpp"

namespace mpukit {

using cplx = std::complex<double>;

/*!
 * Dense complex multi-dimensional array in row-major layout: the LAST leg
 * varies fastest.  Flat offset of index tuple (i_0, …, i_{r-1}) is
 *
 *   offset = ((i_0 · n_1 + i_1) · n_2 + i_2) · … + i_{r-1}
 *
 * All diagrammatic objects in the toolkit are carried by this type; the
 * site-tensor leg convention lives in mpo.hpp.
 */
class DenseTensor {
  public:
    DenseTensor() = default;
    /*! Zero-filled tensor with the given leg dimensions (all >= 1). */
    explicit DenseTensor(std::vector<std::size_t> shape);
    /*! Adopt an existing row-major buffer; length must equal product(shape). */
    DenseTensor(std::vector<std::size_t> shape, std::vector<cplx> data);

    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t leg) const;
    const std::vector<std::size_t> &shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }

    cplx *data() { return data_.data(); }
    const cplx *data() const { return data_.data(); }

    /*! Checked element access by full index tuple. */
    cplx &at(std::initializer_list<std::size_t> idx);
    const cplx &at(std::initializer_list<std::size_t> idx) const;
    /*! Flat row-major access (unchecked against shape, checked against size). */
    cplx &operator[](std::size_t flat) { return data_[flat]; }
    const cplx &operator[](std::size_t flat) const { return data_[flat]; }

    /*! Same data, new leg grouping; product of dims must be unchanged. */
    DenseTensor reshaped(std::vector<std::size_t> shape) const &;
    DenseTensor reshaped(std::vector<std::size_t> shape) &&;
    void reshape_inplace(std::vector<std::size_t> shape);

    /*!
     * Leg permutation: result leg k is this tensor's leg order[k], so
     * result.at({i_0,…}) == this->at({i_{inv(0)},…}).  Allocates a copy.
     */
    DenseTensor permuted(const std::vector<std::size_t> &order) const;

    DenseTensor conjugated() const;

    double max_abs() const;

    static DenseTensor identity(std::size_t n);

  private:
    std::vector<std::size_t> shape_;
    std::vector<cplx> data_;
};

/*!
 * General pairwise contraction.
 *
 *   ---a--- . ---b---        pairs = {(leg-of-a, leg-of-b), …}
 *
 * Result legs are the unpaired legs of a (in order) followed by the unpaired
 * legs of b (in order); entries are sums over the paired indices.  Errors on
 * dimension mismatch or a repeated leg.
 */
DenseTensor contract(const DenseTensor &a, const DenseTensor &b,
                     const std::vector<std::pair<std::size_t, std::size_t>> &pairs);

/*! Max-norm of the entrywise difference; shapes must match. */
double max_abs_diff(const DenseTensor &a, const DenseTensor &b);

} // namespace mpukit
