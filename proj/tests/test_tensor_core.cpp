/*!
 * Tensor/linalg/rng/rational layer tests.  Random-stream and Haar-matrix
 * values are pinned against an independently computed reference so the
 * seeded circuit fixtures stay bit-reproducible.
 */
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>

#include "mpukit/dense_tensor.hpp"
#include "mpukit/linalg.hpp"
#include "mpukit/rational.hpp"
#include "mpukit/rng.hpp"

using namespace mpukit;

TEST_CASE("row-major layout and checked access") {
    DenseTensor t({2, 3, 4});
    CHECK(t.rank() == 3);
    CHECK(t.size() == 24);
    CHECK(t.dim(2) == 4);
    t.at({1, 2, 3}) = cplx(5.0, -1.0);
    CHECK(t[1 * 12 + 2 * 4 + 3] == cplx(5.0, -1.0));
    t.at({0, 1, 0}) = 2.0;
    CHECK(t[4] == cplx(2.0));
    CHECK_THROWS_AS(t.at({2, 0, 0}), err::assertion_error);
    CHECK_THROWS_AS(t.at({0, 0}), err::assertion_error);
    CHECK_THROWS_AS(DenseTensor({2, 2}, std::vector<cplx>(3)), err::assertion_error);
}

TEST_CASE("permuted moves entries to the right slots") {
    DenseTensor t({2, 3, 4});
    for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 3; ++b)
            for (std::size_t c = 0; c < 4; ++c)
                t.at({a, b, c}) = cplx(double(a * 100 + b * 10 + c), 0.0);

    const DenseTensor p = t.permuted({2, 0, 1}); // result legs (c, a, b)
    CHECK(p.shape() == std::vector<std::size_t>{4, 2, 3});
    for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 3; ++b)
            for (std::size_t c = 0; c < 4; ++c)
                CHECK(p.at({c, a, b}) == t.at({a, b, c}));

    CHECK_THROWS_AS(t.permuted({0, 0, 1}), err::assertion_error);
    CHECK_THROWS_AS(t.permuted({0, 1}), err::assertion_error);
}

TEST_CASE("reshape keeps data, validates sizes") {
    DenseTensor t({2, 6});
    t.at({1, 5}) = 7.0;
    const DenseTensor r = t.reshaped({3, 4});
    CHECK(r.at({2, 3}) == cplx(7.0)); // same flat offset 11
    CHECK_THROWS_AS(t.reshaped({5, 2}), err::assertion_error);
}

TEST_CASE("contract: matrix product and trace as special cases") {
    DenseTensor a({2, 3}), b({3, 2});
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            a.at({i, j}) = cplx(double(i + 1), double(j));
            b.at({j, i}) = cplx(double(j), -double(i));
        }
    const DenseTensor ab = contract(a, b, {{1, 0}});
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t k = 0; k < 2; ++k) {
            cplx want{};
            for (std::size_t j = 0; j < 3; ++j) want += a.at({i, j}) * b.at({j, k});
            CHECK(std::abs(ab.at({i, k}) - want) < 1e-14);
        }

    // full contraction leaves a single-entry tensor
    const DenseTensor tr = contract(a, a.conjugated(), {{0, 0}, {1, 1}});
    CHECK(tr.shape() == std::vector<std::size_t>{1});
    double norm2 = 0;
    for (std::size_t f = 0; f < a.size(); ++f) norm2 += std::norm(a[f]);
    CHECK(std::abs(tr[0] - cplx(norm2)) < 1e-12);

    CHECK_THROWS_AS(contract(a, b, {{0, 0}}), err::assertion_error); // 2 vs 3
}

TEST_CASE("matmul conj flags are elementwise, never transposing") {
    const std::vector<cplx> a{{1, 2}, {3, -1}};  // 1x2
    const std::vector<cplx> b{{0, 1}, {2, 0}};   // 2x1
    cplx c{};
    matmul(a.data(), b.data(), &c, 1, 2, 1);
    CHECK(std::abs(c - (a[0] * b[0] + a[1] * b[1])) < 1e-15);
    matmul(a.data(), b.data(), &c, 1, 2, 1, true, false);
    CHECK(std::abs(c - (std::conj(a[0]) * b[0] + std::conj(a[1]) * b[1])) < 1e-15);
    matmul(a.data(), b.data(), &c, 1, 2, 1, false, true);
    CHECK(std::abs(c - (a[0] * std::conj(b[0]) + a[1] * std::conj(b[1]))) < 1e-15);
}

TEST_CASE("gram equals conjugate-transpose product") {
    SplitMix64 rng(5);
    const auto a = rng.gauss_vector(4 * 3);
    std::vector<cplx> g(9);
    gram(a.data(), g.data(), 4, 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            cplx want{};
            for (std::size_t r = 0; r < 4; ++r) want += std::conj(a[r * 3 + i]) * a[r * 3 + j];
            CHECK(std::abs(g[i * 3 + j] - want) < 1e-13);
        }
}

TEST_CASE("svd: values, rank threshold, economy reconstruction") {
    // diag(3, 1e-6) embedded in a rotation-free 2x2
    const std::vector<cplx> a{{3, 0}, {0, 0}, {0, 0}, {1e-6, 0}};
    const auto s = singular_values(a.data(), 2, 2);
    REQUIRE(s.size() == 2);
    CHECK(s[0] == doctest::Approx(3.0));
    CHECK(s[1] == doctest::Approx(1e-6));
    CHECK(svd_rank(a.data(), 2, 2, 1e-10) == 2);
    CHECK(svd_rank(a.data(), 2, 2, 1e-5) == 1);
    CHECK(svd_rank(std::vector<cplx>(4).data(), 2, 2, 1e-10) == 0);

    SplitMix64 rng(77);
    const auto m = rng.gauss_vector(3 * 5);
    const SvdEcon e = svd_econ(m.data(), 3, 5);
    REQUIRE(e.s.size() == 3);
    std::vector<cplx> us(3 * 5), rec(3 * 5);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t k = 0; k < 3; ++k) us[i * 3 + k] = e.u[i * 3 + k] * e.s[k];
    matmul(us.data(), e.vh.data(), rec.data(), 3, 3, 5);
    for (std::size_t f = 0; f < rec.size(); ++f) CHECK(std::abs(rec[f] - m[f]) < 1e-12);
}

TEST_CASE("qr_positive: unitary Q, positive-diagonal R, exact product") {
    SplitMix64 rng(9);
    const DenseTensor m({4, 4}, rng.gauss_vector(16));
    DenseTensor q, r;
    qr_positive(m, q, r);
    std::vector<cplx> g(16), qr(16);
    gram(q.data(), g.data(), 4, 4);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            CHECK(std::abs(g[i * 4 + j] - (i == j ? cplx(1) : cplx(0))) < 1e-12);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(r.at({i, i}).imag() == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(r.at({i, i}).real() > 0.0);
        for (std::size_t j = 0; j < i; ++j) CHECK(std::abs(r.at({i, j})) < 1e-14);
    }
    matmul(q.data(), r.data(), qr.data(), 4, 4, 4);
    for (std::size_t f = 0; f < 16; ++f) CHECK(std::abs(qr[f] - m[f]) < 1e-12);
}

TEST_CASE("eigh returns ascending values and row eigenvectors") {
    // [[2, i], [-i, 2]] has eigenvalues 1 and 3
    const std::vector<cplx> a{{2, 0}, {0, 1}, {0, -1}, {2, 0}};
    std::vector<double> vals;
    std::vector<cplx> vecs;
    eigh(a.data(), 2, vals, vecs);
    REQUIRE(vals.size() == 2);
    CHECK(vals[0] == doctest::Approx(1.0));
    CHECK(vals[1] == doctest::Approx(3.0));
    for (std::size_t k = 0; k < 2; ++k) {
        for (std::size_t i = 0; i < 2; ++i) {
            cplx av{};
            for (std::size_t j = 0; j < 2; ++j) av += a[i * 2 + j] * vecs[k * 2 + j];
            CHECK(std::abs(av - vals[k] * vecs[k * 2 + i]) < 1e-12);
        }
    }
}

TEST_CASE("dominant_eigenpairs: known spectrum, l.r = 1") {
    // diag(0.5, 2, -1): dominant eigenvalue 2 at position 1
    std::vector<cplx> e(9, cplx(0));
    e[0] = 0.5;
    e[4] = 2.0;
    e[8] = -1.0;
    const DominantEig d = dominant_eigenpairs(e.data(), 3);
    CHECK(d.rho == doctest::Approx(2.0));
    CHECK(d.gap == doctest::Approx(1.0));
    CHECK_FALSE(d.degenerate);
    cplx lr{};
    for (std::size_t i = 0; i < 3; ++i) lr += d.l[i] * d.r[i];
    CHECK(std::abs(lr - cplx(1)) < 1e-12);
    // eigenvector of eigenvalue 2 is e_1
    CHECK(std::abs(d.r[1]) > 0.99 * std::abs(d.r[0]) + 0.99 * std::abs(d.r[2]));
}

TEST_CASE("splitmix64 stream is pinned") {
    SplitMix64 rng(42);
    CHECK(rng.next_u64() == 13679457532755275413ULL);
    CHECK(rng.next_u64() == 2949826092126892291ULL);
    CHECK(rng.next_u64() == 5139283748462763858ULL);

    SplitMix64 u(42);
    CHECK(u.uniform() == doctest::Approx(0.74156487877182342).epsilon(1e-16));
    CHECK(u.uniform() == doctest::Approx(0.15991039287692022).epsilon(1e-16));
    CHECK(u.uniform() == doctest::Approx(0.27860113025513877).epsilon(1e-16));

    SplitMix64 g(42);
    const cplx z = g.gauss_complex();
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(z.real() == doctest::Approx(0.41471975043153003 * inv_sqrt2).epsilon(1e-15));
    CHECK(z.imag() == doctest::Approx(0.65268122215194302 * inv_sqrt2).epsilon(1e-15));
}

TEST_CASE("mix_seed is deterministic and order-sensitive") {
    CHECK(mix_seed({1, 2, 3}) == mix_seed({1, 2, 3}));
    CHECK(mix_seed({1, 2, 3}) != mix_seed({3, 2, 1}));
    CHECK(mix_seed({1}) != mix_seed({1, 0}));
}

TEST_CASE("rational: canonical form, product, formatting") {
    CHECK(Rational(8, 4) == Rational(2, 1));
    CHECK(Rational(8, 4).str() == "2");
    CHECK(Rational(1, 4).str() == "1/4");
    CHECK(Rational(6, 4) * Rational(2, 3) == Rational(1, 1));
    CHECK(Rational(64, 16).value() == doctest::Approx(4.0));
    CHECK_THROWS_AS(Rational(1, 0), err::assertion_error);
    // products of table-scale ranks stay exact thanks to cross-reduction
    CHECK(Rational(1 << 20, 3) * Rational(9, 1 << 19) == Rational(6, 1));
}
