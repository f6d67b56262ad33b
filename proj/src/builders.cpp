#include "mpukit/builders.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "mpukit/linalg.hpp"
#include "mpukit/rng.hpp"

namespace mpukit {

namespace {

/*! ‖U†U − 1‖_max for a row-major n×n matrix. */
double unitarity_deviation(const cplx *u, std::size_t n) {
    std::vector<cplx> g(n * n);
    gram(u, g.data(), n, n);
    double dev = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            dev = std::max(dev, std::abs(g[i * n + j] - (i == j ? cplx(1.0) : cplx(0.0))));
    return dev;
}

void require_unitary(const cplx *u, std::size_t n, const char *who) {
    const double dev = unitarity_deviation(u, n);
    if (dev > 1e-12)
        throw err::assertion_error(
            err::msg(who, ": input matrix is not unitary (deviation ", dev, ")"));
}

} // namespace

MpoTensor product_unitary(const DenseTensor &u) {
    if (u.rank() != 2 || u.dim(0) != u.dim(1))
        throw err::assertion_error("product_unitary: expected a square matrix");
    const std::size_t d = u.dim(0);
    require_unitary(u.data(), d, "product_unitary");
    DenseTensor t({1, d, d, 1});
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) t.at({0, i, j, 0}) = u.at({j, i}); // M^{ji} = u_{ji}
    MpoTensor out(std::move(t));
    out.stack_of_injectives = true;
    return out;
}

MpoTensor controlled_phase() {
    // Diagonal in the physical basis; the virtual leg carries the control
    // bit of the gate shared with the right neighbor:
    //   tensor[a, i, i, b] = delta_{b,i} * (-1)^{a*i}
    DenseTensor t({2, 2, 2, 2});
    for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t i = 0; i < 2; ++i)
            t.at({a, i, i, i}) = (a == 1 && i == 1) ? cplx(-1.0) : cplx(1.0);
    MpoTensor out(std::move(t));
    out.stack_of_injectives = true;
    return out;
}

MpoTensor translation_right(std::size_t d) {
    if (d == 0) throw err::assertion_error("translation_right: d must be positive");
    // M^{ji}_{ab} = delta_{j,a} * delta_{i,b}: the site emits its left-bond
    // symbol and forwards its input to the right neighbor.
    DenseTensor t({d, d, d, d});
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) t.at({a, b, a, b}) = cplx(1.0);
    MpoTensor out(std::move(t));
    out.stack_of_injectives = true;
    return out;
}

MpoTensor translation_left(std::size_t d) {
    if (d == 0) throw err::assertion_error("translation_left: d must be positive");
    // M^{ji}_{ab} = delta_{i,a} * delta_{j,b}
    DenseTensor t({d, d, d, d});
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) t.at({a, a, b, b}) = cplx(1.0);
    MpoTensor out(std::move(t));
    out.stack_of_injectives = true;
    return out;
}

namespace {

/*!
 * Split a d^k × d^k gate u into k site tensors t_x with legs
 * (s_{x-1}, i_x, j_x, s_x), s_0 = s_k = 1, whose chain contraction equals
 * u[(j_1…j_k), (i_1…i_k)].  Iterated economy SVD on the pair-grouped gate;
 * singular values are folded symmetrically (sqrt into each side) so no
 * single site hoards the gate's weight.
 */
std::vector<DenseTensor> split_gate_chain(const std::vector<cplx> &gate, std::size_t d,
                                          std::size_t k) {
    std::size_t dim = 1;
    for (std::size_t x = 0; x < k; ++x) dim *= d;
    if (gate.size() != dim * dim)
        throw err::assertion_error(err::msg("split_gate_chain: gate has ", gate.size(),
                                            " entries, expected ", dim * dim));

    // (j_1…j_k, i_1…i_k) -> pairs (j_1,i_1)(j_2,i_2)… each of size d².
    DenseTensor t({dim, dim}, gate);
    {
        std::vector<std::size_t> shape(2 * k, d);
        t.reshape_inplace(shape);
        std::vector<std::size_t> order;
        for (std::size_t x = 0; x < k; ++x) {
            order.push_back(x);
            order.push_back(k + x);
        }
        t = t.permuted(order);
        std::vector<std::size_t> pairs(k, d * d);
        t.reshape_inplace(pairs);
    }

    std::vector<DenseTensor> parts;
    std::size_t left = 1;
    std::size_t rest_cols = t.size() / (left * d * d);
    std::vector<cplx> rest(t.data(), t.data() + t.size());
    for (std::size_t x = 0; x + 1 < k; ++x) {
        const std::size_t rows = left * d * d;
        const SvdEcon svd = svd_econ(rest.data(), rows, rest_cols);
        std::size_t rank = 0;
        while (rank < svd.s.size() && svd.s[rank] > 1e-12 * svd.s[0]) ++rank;
        if (rank == 0) throw err::assertion_error("split_gate_chain: zero gate");
        // A = U·sqrt(s) as (left, j, i, rank) -> (left, i, j, rank)
        DenseTensor a({left, d, d, rank});
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < rank; ++c)
                a[r * rank + c] = svd.u[r * svd.s.size() + c] * std::sqrt(svd.s[c]);
        parts.push_back(a.permuted({0, 2, 1, 3}));
        // rest = sqrt(s)·Vh reshaped for the next step
        std::vector<cplx> next(rank * rest_cols);
        for (std::size_t r = 0; r < rank; ++r)
            for (std::size_t c = 0; c < rest_cols; ++c)
                next[r * rest_cols + c] = std::sqrt(svd.s[r]) * svd.vh[r * rest_cols + c];
        rest = std::move(next);
        left = rank;
        rest_cols /= d * d;
    }
    DenseTensor last({left, d, d, 1}, std::move(rest));
    parts.push_back(last.permuted({0, 2, 1, 3}));
    return parts;
}

} // namespace

MpoTensor brick_layer(const std::vector<cplx> &gate, std::size_t d, std::size_t k,
                      std::size_t offset) {
    if (k == 0) throw err::assertion_error("brick_layer: k must be positive");
    if (offset >= k) throw err::assertion_error("brick_layer: offset must be in [0, k)");
    std::size_t dim = 1;
    for (std::size_t x = 0; x < k; ++x) dim *= d;
    require_unitary(gate.data(), dim, "brick_layer");
    const std::vector<DenseTensor> parts = split_gate_chain(gate, d, k);
    // Chain site x = 1+offset starts a brick: cell position (x-1) holds
    // part (x-1-offset) mod k.
    std::vector<DenseTensor> cell(k);
    for (std::size_t pos = 0; pos < k; ++pos) cell[pos] = parts[(pos + k - offset) % k];
    MpoTensor out(std::move(cell));
    out.stack_of_injectives = true;
    return out;
}

MpoTensor two_body_layer(const DenseTensor &u) {
    if (u.rank() != 2 || u.dim(0) != u.dim(1))
        throw err::assertion_error("two_body_layer: expected a square matrix");
    const auto d = static_cast<std::size_t>(std::llround(std::sqrt(double(u.dim(0)))));
    if (d * d != u.dim(0))
        throw err::assertion_error("two_body_layer: matrix side is not a perfect square");
    return brick_layer(std::vector<cplx>(u.data(), u.data() + u.size()), d, 2, 0);
}

DenseTensor random_local_unitary(std::size_t d, std::size_t k, std::uint64_t seed) {
    std::size_t dim = 1;
    for (std::size_t x = 0; x < k; ++x) {
        dim *= d;
        if (dim > default_caps().max_dense_dim)
            throw err::cap_error(err::msg("random_local_unitary: d^k = ", dim, " exceeds cap"));
    }
    SplitMix64 rng(seed);
    DenseTensor g({dim, dim}, rng.gauss_vector(dim * dim));
    DenseTensor q, r;
    qr_positive(g, q, r);
    return q;
}

MpoTensor build_circuit(const CircuitSpec &spec) {
    if (spec.layers.empty()) throw err::parse_error("build_circuit: no layers");
    const std::size_t d = spec.local_dim;
    bool have = false;
    MpoTensor acc;
    for (std::size_t n = 0; n < spec.layers.size(); ++n) {
        const CircuitLayer &ly = spec.layers[n];
        MpoTensor layer;
        switch (ly.kind) {
            case CircuitLayer::Kind::translation_right: layer = translation_right(d); break;
            case CircuitLayer::Kind::translation_left: layer = translation_left(d); break;
            case CircuitLayer::Kind::random_layer: {
                const DenseTensor u = random_local_unitary(d, ly.k, ly.seed);
                layer = brick_layer(std::vector<cplx>(u.data(), u.data() + u.size()), d, ly.k,
                                    ly.offset);
                break;
            }
            case CircuitLayer::Kind::fixed_layer: layer = brick_layer(ly.gate, d, ly.k, ly.offset); break;
        }
        // Listed order = application order: later layers stack on top.
        acc = have ? stack(acc, layer) : std::move(layer);
        have = true;
    }
    acc.stack_of_injectives = true;
    return acc;
}

MpoTensor fractional_example() {
    // Explicit entry table (d = D = 3):
    //   tensor[a, i, j, b] = delta_{b,i} * delta_{j, (-(a+i)) mod 3}
    // The assembled operator is unitary at odd N, non-unitary at even N,
    // sends |12> and |21> to the same ray at N = 2, and scans to rank
    // ratio 3 at every block length.
    DenseTensor t({3, 3, 3, 3});
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t i = 0; i < 3; ++i) {
            const std::size_t j = (3 - (a + i) % 3) % 3;
            t.at({a, i, j, i}) = cplx(1.0);
        }
    MpoTensor out(std::move(t));
    out.stack_of_injectives = false; // non-injective and not a stack of injectives
    return out;
}

// ------------------------------------------------------------- parsing ----

namespace {

struct LineReader {
    std::istringstream in;
    std::size_t lineno = 0;
    explicit LineReader(const std::string &text) : in(text) {}
    /*! Next non-empty line with comments stripped; false at EOF. */
    bool next(std::string &out_line) {
        std::string raw;
        while (std::getline(in, raw)) {
            ++lineno;
            const auto hash = raw.find('#');
            if (hash != std::string::npos) raw.erase(hash);
            // trim
            const auto first = raw.find_first_not_of(" \t\r");
            if (first == std::string::npos) continue;
            const auto last = raw.find_last_not_of(" \t\r");
            out_line = raw.substr(first, last - first + 1);
            return true;
        }
        return false;
    }
    [[noreturn]] void fail(const std::string &what) const {
        throw err::parse_error(err::msg("circuit spec line ", lineno, ": ", what));
    }
};

std::uint64_t parse_kv(LineReader &rd, const std::string &tok, const std::string &key) {
    if (tok.rfind(key + "=", 0) != 0) rd.fail("expected " + key + "=<integer>, got '" + tok + "'");
    const std::string val = tok.substr(key.size() + 1);
    try {
        std::size_t used = 0;
        const std::uint64_t v = std::stoull(val, &used);
        if (used != val.size()) throw std::invalid_argument(val);
        return v;
    } catch (const std::exception &) {
        rd.fail("bad integer for " + key + ": '" + val + "'");
    }
}

} // namespace

CircuitSpec parse_circuit_text(const std::string &text) {
    LineReader rd(text);
    CircuitSpec spec;
    std::string line;
    bool have_dim = false;
    while (rd.next(line)) {
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "local_dim") {
            if (have_dim) rd.fail("duplicate local_dim");
            if (!(ls >> spec.local_dim) || spec.local_dim < 2) rd.fail("local_dim needs an integer >= 2");
            have_dim = true;
            continue;
        }
        if (!have_dim) rd.fail("local_dim must come before any layer");
        if (word == "translation") {
            std::string dir;
            ls >> dir;
            CircuitLayer ly;
            if (dir == "right") ly.kind = CircuitLayer::Kind::translation_right;
            else if (dir == "left") ly.kind = CircuitLayer::Kind::translation_left;
            else rd.fail("translation needs 'right' or 'left'");
            spec.layers.push_back(ly);
            continue;
        }
        if (word == "layer") {
            std::string sub;
            ls >> sub;
            CircuitLayer ly;
            std::string tok;
            if (sub == "random") {
                ly.kind = CircuitLayer::Kind::random_layer;
                bool have_k = false, have_off = false, have_seed = false;
                while (ls >> tok) {
                    if (tok.rfind("k=", 0) == 0) ly.k = parse_kv(rd, tok, "k"), have_k = true;
                    else if (tok.rfind("offset=", 0) == 0) ly.offset = parse_kv(rd, tok, "offset"), have_off = true;
                    else if (tok.rfind("seed=", 0) == 0) ly.seed = parse_kv(rd, tok, "seed"), have_seed = true;
                    else rd.fail("unknown key '" + tok + "'");
                }
                if (!have_k || !have_off || !have_seed) rd.fail("layer random needs k=, offset=, seed=");
            } else if (sub == "fixed") {
                ly.kind = CircuitLayer::Kind::fixed_layer;
                bool have_k = false, have_off = false;
                while (ls >> tok) {
                    if (tok.rfind("k=", 0) == 0) ly.k = parse_kv(rd, tok, "k"), have_k = true;
                    else if (tok.rfind("offset=", 0) == 0) ly.offset = parse_kv(rd, tok, "offset"), have_off = true;
                    else rd.fail("unknown key '" + tok + "'");
                }
                if (!have_k || !have_off) rd.fail("layer fixed needs k=, offset=");
            } else {
                rd.fail("layer kind must be 'random' or 'fixed'");
            }
            if (ly.k == 0) rd.fail("k must be >= 1");
            if (ly.offset >= ly.k) rd.fail("offset must be in [0, k)");
            if (ly.kind == CircuitLayer::Kind::fixed_layer) {
                std::size_t dim = 1;
                for (std::size_t x = 0; x < ly.k; ++x) dim *= spec.local_dim;
                ly.gate.resize(dim * dim);
                for (auto &z : ly.gate) {
                    std::string entry;
                    if (!rd.next(entry)) rd.fail("truncated fixed-layer entry list");
                    std::istringstream es(entry);
                    double re, im;
                    if (!(es >> re >> im)) rd.fail("gate entry needs 're im'");
                    z = cplx(re, im);
                }
            }
            spec.layers.push_back(std::move(ly));
            continue;
        }
        rd.fail("unknown directive '" + word + "'");
    }
    if (!have_dim) throw err::parse_error("circuit spec: empty file");
    return spec;
}

CircuitSpec parse_circuit_file(const std::string &path) {
    std::ifstream f(path);
    if (!f) throw err::parse_error("parse_circuit_file: cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_circuit_text(ss.str());
}

} // namespace mpukit
