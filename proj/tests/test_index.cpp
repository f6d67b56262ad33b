/*!
 * Index tests: rank ratios against analytic values, scan stabilization
 * logic, the dense overlap oracle against pinned references, exact
 * multiplicativity, the singular-value squaring relation, and cap handling.
 */
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "mpukit/analysis.hpp"
#include "mpukit/builders.hpp"
#include "mpukit/index.hpp"

using namespace mpukit;

TEST_CASE("rank_ratio: analytic values") {
    const RankPair tr = rank_ratio(translation_right(2), 1e-10);
    CHECK(tr.left_rank == 4);
    CHECK(tr.right_rank == 1);
    CHECK(tr.ratio == Rational(4, 1));

    const RankPair tl = rank_ratio(translation_left(2), 1e-10);
    CHECK(tl.ratio == Rational(1, 4));

    CHECK(rank_ratio(controlled_phase(), 1e-10).ratio == Rational(1, 1));

    DenseTensor h({2, 2});
    const double s = 1.0 / std::sqrt(2.0);
    h.at({0, 0}) = s;
    h.at({0, 1}) = s;
    h.at({1, 0}) = s;
    h.at({1, 1}) = -s;
    CHECK(rank_ratio(product_unitary(h), 1e-10).ratio == Rational(1, 1));

    const RankPair fr = rank_ratio(fractional_example(), 1e-10);
    CHECK(fr.left_rank == 9);
    CHECK(fr.right_rank == 3);
    CHECK(fr.ratio == Rational(3, 1));
}

TEST_CASE("index_scan: translation stabilizes on constant rows") {
    const IndexReport rep = index_scan(translation_right(2), 5, 1e-10);
    REQUIRE(rep.rows.size() == 5);
    for (const IndexRow &r : rep.rows) CHECK(r.ratio == Rational(4, 1));
    CHECK(rep.rows[0].left_rank == 4);
    CHECK(rep.rows[4].left_rank == 64); // ranks grow by d per block here
    CHECK(rep.stabilized);
    CHECK(rep.stabilized_value == Rational(4, 1));
    CHECK(rep.has_gnvw);
    CHECK(rep.gnvw == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_FALSE(rep.outside_theorem_hypotheses);
    CHECK_FALSE(rep.capped);
}

TEST_CASE("index_scan: fractional is flagged but still measured") {
    const IndexReport rep = index_scan(fractional_example(), 4, 1e-10);
    REQUIRE(rep.rows.size() == 4);
    for (std::size_t n = 0; n < 4; ++n) {
        CHECK(rep.rows[n].ratio == Rational(3, 1));
        CHECK(rep.rows[n].left_rank == 9 * std::size_t(std::pow(3.0, double(n))));
    }
    CHECK(rep.stabilized);
    CHECK(rep.stabilized_value == Rational(3, 1));
    CHECK(rep.gnvw == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
    CHECK(rep.outside_theorem_hypotheses);
    CHECK(rep.note.find("unitary") != std::string::npos);
}

TEST_CASE("index_scan: a transient ratio coincidence does not stabilize") {
    // two rows is already a window; demand more rows than the scan has
    const IndexReport rep = index_scan(translation_right(2), 3, 1e-10, 4);
    CHECK_FALSE(rep.stabilized);
    CHECK_THROWS_AS(index_scan(translation_right(2), 3, 1e-10, 1), err::assertion_error);
}

TEST_CASE("overlap oracle: pinned small-chain values") {
    const DenseOperator o_tr = assemble_dense(translation_right(2), 6);
    CHECK(gnvw_overlap_index(o_tr, 3, 1) == doctest::Approx(2.0).epsilon(1e-12));
    const DenseOperator o_cp = assemble_dense(controlled_phase(), 6);
    CHECK(gnvw_overlap_index(o_cp, 3, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(gnvw_overlap_index(o_cp, 3, 2) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("overlap oracle: window and unitarity preconditions") {
    const DenseOperator o = assemble_dense(translation_right(2), 6);
    CHECK_THROWS_AS(gnvw_overlap_index(o, 3, 4), err::assertion_error); // window spills
    CHECK_THROWS_AS(gnvw_overlap_index(o, 1, 2), err::assertion_error);
    CHECK_THROWS_AS(gnvw_overlap_index(o, 3, 0), err::assertion_error);

    const DenseOperator bad = assemble_dense(fractional_example(), 4); // non-unitary size
    CHECK_THROWS_AS(gnvw_overlap_index(bad, 2, 1), err::assertion_error);

    // fractional at an odd size is unitary, and the oracle runs
    const DenseOperator ok = assemble_dense(fractional_example(), 5);
    CHECK_NOTHROW(gnvw_overlap_index(ok, 2, 1));
}

TEST_CASE("multiplicativity of stabilized ratios, exact") {
    CHECK(verify_multiplicativity(translation_right(2), translation_right(2), 1e-10, 6));
    CHECK(verify_multiplicativity(translation_right(2), translation_left(2), 1e-10, 6));
    CHECK(verify_multiplicativity(translation_right(2), controlled_phase(), 1e-10, 6));
    const MpoTensor layer = two_body_layer(random_local_unitary(2, 2, 99));
    CHECK(verify_multiplicativity(layer, translation_left(2), 1e-10, 6));
}

TEST_CASE("sv squaring relation holds for injective builders") {
    const SvSquareGap tr = sv_square_gap(translation_right(2));
    CHECK(tr.left < 1e-12);
    CHECK(tr.right < 1e-12);
    const SvSquareGap cp = sv_square_gap(controlled_phase());
    CHECK(cp.left < 1e-12);
    CHECK(cp.right < 1e-12);
}

TEST_CASE("scan cap produces a partial flagged report") {
    const CapConfig saved = default_caps();
    CapConfig tiny = saved;
    tiny.max_scan_bytes = 1 << 16; // 64 KiB: forces an early stop
    set_default_caps(tiny);
    const IndexReport rep = index_scan(translation_right(2), 7, 1e-10);
    set_default_caps(saved);
    CHECK(rep.capped);
    CHECK_FALSE(rep.rows.empty());
    CHECK(rep.rows.size() < 7);
    CHECK(rep.note.find("cap") != std::string::npos);
}

TEST_CASE("stacking translations multiplies measured ratios") {
    const IndexReport rep = index_scan(stack(translation_right(2), translation_right(2)), 5, 1e-10);
    CHECK(rep.stabilized);
    CHECK(rep.stabilized_value == Rational(16, 1));
    CHECK(rep.gnvw == doctest::Approx(4.0).epsilon(1e-12));
}
