#include "mpukit/dense_tensor.hpp"

#include <algorithm>
#include <cmath>

#include "mpukit/linalg.hpp"

namespace mpukit {

namespace {

std::size_t shape_product(const std::vector<std::size_t> &shape) {
    std::size_t n = 1;
    for (auto d : shape) {
        if (d == 0) throw err::assertion_error("DenseTensor: zero leg dimension");
        n *= d;
    }
    return n;
}

std::size_t flat_offset(const std::vector<std::size_t> &shape,
                        std::initializer_list<std::size_t> idx) {
    if (idx.size() != shape.size())
        throw err::assertion_error(err::msg("DenseTensor: index tuple of length ", idx.size(),
                                            " against rank ", shape.size()));
    std::size_t off = 0;
    std::size_t leg = 0;
    for (auto i : idx) {
        if (i >= shape[leg])
            throw err::assertion_error(
                err::msg("DenseTensor: index ", i, " out of range on leg ", leg));
        off = off * shape[leg] + i;
        ++leg;
    }
    return off;
}

} // namespace

DenseTensor::DenseTensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
    data_.assign(shape_product(shape_), cplx(0.0, 0.0));
}

DenseTensor::DenseTensor(std::vector<std::size_t> shape, std::vector<cplx> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_product(shape_) != data_.size())
        throw err::assertion_error(
            err::msg("DenseTensor: data length ", data_.size(), " does not match shape product ",
                     shape_product(shape_)));
}

std::size_t DenseTensor::dim(std::size_t leg) const {
    if (leg >= shape_.size())
        throw err::assertion_error(
            err::msg("DenseTensor: leg ", leg, " out of range for rank ", shape_.size()));
    return shape_[leg];
}

cplx &DenseTensor::at(std::initializer_list<std::size_t> idx) {
    return data_[flat_offset(shape_, idx)];
}

const cplx &DenseTensor::at(std::initializer_list<std::size_t> idx) const {
    return data_[flat_offset(shape_, idx)];
}

void DenseTensor::reshape_inplace(std::vector<std::size_t> shape) {
    if (shape_product(shape) != data_.size())
        throw err::assertion_error(err::msg("DenseTensor: reshape to incompatible size ",
                                            shape_product(shape), " (have ", data_.size(), ")"));
    shape_ = std::move(shape);
}

DenseTensor DenseTensor::reshaped(std::vector<std::size_t> shape) const & {
    DenseTensor out(*this);
    out.reshape_inplace(std::move(shape));
    return out;
}

DenseTensor DenseTensor::reshaped(std::vector<std::size_t> shape) && {
    reshape_inplace(std::move(shape));
    return std::move(*this);
}

DenseTensor DenseTensor::permuted(const std::vector<std::size_t> &order) const {
    const std::size_t r = rank();
    if (order.size() != r)
        throw err::assertion_error(
            err::msg("DenseTensor: permutation of length ", order.size(), " against rank ", r));
    std::vector<bool> seen(r, false);
    std::vector<std::size_t> new_shape(r);
    for (std::size_t k = 0; k < r; ++k) {
        if (order[k] >= r || seen[order[k]])
            throw err::assertion_error("DenseTensor: invalid permutation");
        seen[order[k]] = true;
        new_shape[k] = shape_[order[k]];
    }

    // Row-major strides of the source, then walk the destination in flat
    // order carrying the source offset via per-leg counters.
    std::vector<std::size_t> src_stride(r, 1);
    for (std::size_t k = r; k-- > 1;) src_stride[k - 1] = src_stride[k] * shape_[k];
    std::vector<std::size_t> step(r); // stride of destination leg k in the source
    for (std::size_t k = 0; k < r; ++k) step[k] = src_stride[order[k]];

    DenseTensor out(new_shape);
    std::vector<std::size_t> counter(r, 0);
    std::size_t src_off = 0;
    const std::size_t total = data_.size();
    for (std::size_t dst = 0; dst < total; ++dst) {
        out.data_[dst] = data_[src_off];
        // increment the mixed-radix counter (last destination leg fastest)
        for (std::size_t k = r; k-- > 0;) {
            ++counter[k];
            src_off += step[k];
            if (counter[k] < new_shape[k]) break;
            src_off -= step[k] * new_shape[k];
            counter[k] = 0;
        }
    }
    return out;
}

DenseTensor DenseTensor::conjugated() const {
    DenseTensor out(*this);
    for (auto &z : out.data_) z = std::conj(z);
    return out;
}

double DenseTensor::max_abs() const {
    double m = 0.0;
    for (const auto &z : data_) m = std::max(m, std::abs(z));
    return m;
}

DenseTensor DenseTensor::identity(std::size_t n) {
    DenseTensor out({n, n});
    for (std::size_t i = 0; i < n; ++i) out.data_[i * n + i] = cplx(1.0, 0.0);
    return out;
}

DenseTensor contract(const DenseTensor &a, const DenseTensor &b,
                     const std::vector<std::pair<std::size_t, std::size_t>> &pairs) {
    std::vector<bool> paired_a(a.rank(), false), paired_b(b.rank(), false);
    std::size_t contracted_dim = 1;
    for (const auto &[la, lb] : pairs) {
        if (la >= a.rank() || lb >= b.rank())
            throw err::assertion_error("contract: leg index out of range");
        if (paired_a[la] || paired_b[lb])
            throw err::assertion_error("contract: repeated leg in pairing");
        if (a.dim(la) != b.dim(lb))
            throw err::assertion_error(err::msg("contract: dimension mismatch on pair (", la, ",",
                                                lb, "): ", a.dim(la), " vs ", b.dim(lb)));
        paired_a[la] = true;
        paired_b[lb] = true;
        contracted_dim *= a.dim(la);
    }

    // Permute a to (free…, paired…) and b to (paired…, free…), with paired
    // legs in pair-list order on both, then contract as one matrix product.
    std::vector<std::size_t> order_a, order_b;
    std::vector<std::size_t> out_shape;
    for (std::size_t k = 0; k < a.rank(); ++k)
        if (!paired_a[k]) {
            order_a.push_back(k);
            out_shape.push_back(a.dim(k));
        }
    for (const auto &[la, lb] : pairs) order_a.push_back(la);
    for (const auto &[la, lb] : pairs) order_b.push_back(lb);
    for (std::size_t k = 0; k < b.rank(); ++k)
        if (!paired_b[k]) {
            order_b.push_back(k);
            out_shape.push_back(b.dim(k));
        }

    const DenseTensor ap = a.permuted(order_a);
    const DenseTensor bp = b.permuted(order_b);
    const std::size_t rows = a.size() / contracted_dim;
    const std::size_t cols = b.size() / contracted_dim;

    DenseTensor out(out_shape.empty() ? std::vector<std::size_t>{1} : out_shape);
    matmul(ap.data(), bp.data(), out.data(), rows, contracted_dim, cols);
    return out;
}

double max_abs_diff(const DenseTensor &a, const DenseTensor &b) {
    if (a.shape() != b.shape()) throw err::assertion_error("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace mpukit
