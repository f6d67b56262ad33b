#include "mpukit/mpo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mpukit/linalg.hpp"

namespace mpukit {

// ------------------------------------------------------------ MpoTensor ----

MpoTensor::MpoTensor(DenseTensor site) : cell_{std::move(site)} { validate(); }

MpoTensor::MpoTensor(std::vector<DenseTensor> cell) : cell_(std::move(cell)) { validate(); }

void MpoTensor::validate() const {
    if (cell_.empty()) throw err::assertion_error("MpoTensor: empty unit cell");
    for (std::size_t k = 0; k < cell_.size(); ++k) {
        const auto &t = cell_[k];
        if (t.rank() != 4)
            throw err::assertion_error(
                err::msg("MpoTensor: cell tensor ", k, " has rank ", t.rank(), ", expected 4"));
        const auto &next = cell_[(k + 1) % cell_.size()];
        if (t.dim(3) != next.dim(0))
            throw err::assertion_error(err::msg("MpoTensor: bond mismatch at boundary ", k + 1,
                                                ": ", t.dim(3), " vs ", next.dim(0)));
    }
}

const DenseTensor &MpoTensor::cell_tensor(std::size_t k) const {
    if (k >= cell_.size()) throw err::assertion_error("MpoTensor: cell index out of range");
    return cell_[k];
}

const DenseTensor &MpoTensor::site(std::size_t x) const {
    if (x == 0) throw err::assertion_error("MpoTensor: chain sites are 1-based");
    return cell_[(x - 1) % cell_.size()];
}

const DenseTensor &MpoTensor::tensor() const {
    if (cell_.size() != 1)
        throw err::assertion_error(
            err::msg("MpoTensor: tensor() needs period 1, have period ", cell_.size()));
    return cell_[0];
}

std::size_t MpoTensor::bond_dim() const {
    std::size_t d = 0;
    for (const auto &t : cell_) d = std::max(d, t.dim(0));
    return d;
}

// ------------------------------------------------------------------ caps ----

namespace {
CapConfig read_env_caps() {
    CapConfig c;
    if (const char *s = std::getenv("MPU_MAX_DENSE_DIM")) c.max_dense_dim = std::strtoull(s, nullptr, 10);
    if (const char *s = std::getenv("MPU_MAX_SCAN_BYTES")) c.max_scan_bytes = std::strtoull(s, nullptr, 10);
    return c;
}
CapConfig &caps_storage() {
    static CapConfig c = read_env_caps();
    return c;
}
} // namespace

const CapConfig &default_caps() { return caps_storage(); }
void set_default_caps(const CapConfig &caps) { caps_storage() = caps; }

// ------------------------------------------------------------- assembly ----

namespace {

/*! Partial chain [lo, hi] contracted into legs (J, I, a, b):
 *
 *      a ---[site lo]--- … ---[site hi]--- b
 *                |     …     |
 *  grouped output string J (site lo most significant), input string I.
 */
DenseTensor grow_half(const MpoTensor &m, std::size_t lo, std::size_t hi) {
    // start: site tensor (a,i,j,b) -> (j,i,a,b)
    DenseTensor g = m.site(lo).permuted({2, 1, 0, 3});
    for (std::size_t x = lo + 1; x <= hi; ++x) {
        const DenseTensor &t = m.site(x);
        const std::size_t J = g.dim(0), I = g.dim(1), a = g.dim(2), c = g.dim(3);
        const std::size_t di = t.dim(1), dj = t.dim(2), b = t.dim(3);
        // P[(J,I,a),(i,j,b)] = Σ_c g[J,I,a,c]·t[c,i,j,b]
        DenseTensor p({J, I, a, di, dj, b});
        matmul(g.data(), t.data(), p.data(), J * I * a, c, di * dj * b);
        // -> (J, j, I, i, a, b), regroup strings
        g = p.permuted({0, 4, 1, 3, 2, 5});
        g.reshape_inplace({J * dj, I * di, a, b});
    }
    return g;
}

} // namespace

DenseOperator assemble_dense(const MpoTensor &m, std::size_t n_sites) {
    if (n_sites == 0) throw err::assertion_error("assemble_dense: n_sites must be positive");
    if (n_sites % m.period() != 0)
        throw err::assertion_error(err::msg("assemble_dense: ", n_sites,
                                            " sites not a multiple of the unit-cell period ",
                                            m.period()));
    // Uniform physical dimension check + cap
    const std::size_t d_in = m.phys_in(), d_out = m.phys_out();
    std::size_t dim_in = 1, dim_out = 1;
    for (std::size_t x = 1; x <= n_sites; ++x) {
        dim_in *= m.site(x).dim(1);
        dim_out *= m.site(x).dim(2);
    }
    const std::size_t cap = default_caps().max_dense_dim;
    if (dim_in > cap || dim_out > cap)
        throw err::cap_error(err::msg("assemble_dense: dense dimension ",
                                      std::max(dim_in, dim_out), " exceeds cap ", cap,
                                      " (raise MPU_MAX_DENSE_DIM to override)"));

    DenseOperator out;
    out.n_sites = n_sites;
    out.local_dim = d_in;
    out.dim = dim_out;

    if (n_sites == 1) {
        const DenseTensor &t = m.site(1);
        const std::size_t D = t.dim(0), di = t.dim(1), dj = t.dim(2);
        out.matrix.assign(dj * di, cplx(0.0, 0.0));
        for (std::size_t j = 0; j < dj; ++j)
            for (std::size_t i = 0; i < di; ++i) {
                cplx tr(0.0, 0.0);
                for (std::size_t a = 0; a < D; ++a) tr += t.at({a, i, j, a});
                out.matrix[j * di + i] = tr;
            }
        return out;
    }

    // Two halves joined by one matrix product over both boundary bonds:
    //   O[(J1,I1),(J2,I2)] = Σ_{a,c} L[J1,I1,a,c]·R[J2,I2,c,a]
    const std::size_t half = n_sites / 2;
    DenseTensor left = grow_half(m, 1, half);
    DenseTensor right = grow_half(m, half + 1, n_sites);
    const std::size_t J1 = left.dim(0), I1 = left.dim(1);
    const std::size_t J2 = right.dim(0), I2 = right.dim(1);
    const std::size_t a = left.dim(2), c = left.dim(3);

    DenseTensor rp = right.permuted({3, 2, 0, 1}); // (a, c, J2, I2)
    right = DenseTensor();                          // release the unpermuted copy
    DenseTensor prod({J1, I1, J2, I2});
    matmul(left.data(), rp.data(), prod.data(), J1 * I1, a * c, J2 * I2);
    left = DenseTensor();
    rp = DenseTensor();

    // (J1,I1,J2,I2) -> (J1,J2,I1,I2) = (J, I)
    DenseTensor o4 = prod.permuted({0, 2, 1, 3});
    out.matrix.assign(o4.data(), o4.data() + o4.size());
    if (out.dim * dim_in != out.matrix.size())
        throw err::assertion_error("assemble_dense: internal size mismatch");
    (void)d_out;
    return out;
}

// ------------------------------------------------------- algebra on MPOs ----

MpoTensor dagger(const MpoTensor &m) {
    std::vector<DenseTensor> cell;
    cell.reserve(m.period());
    for (std::size_t k = 0; k < m.period(); ++k)
        cell.push_back(m.cell_tensor(k).permuted({0, 2, 1, 3}).conjugated());
    MpoTensor out(std::move(cell));
    out.stack_of_injectives = m.stack_of_injectives;
    return out;
}

DenseTensor compose_t(const MpoTensor &m) {
    const DenseTensor &t = m.tensor(); // period-1 only
    const std::size_t D = t.dim(0), di = t.dim(1), dj = t.dim(2), Dr = t.dim(3);
    if (di != dj) throw err::assertion_error("compose_t: needs d_in == d_out");
    // t[(a,c), i, j, (b,d)] = Σ_k m[a,i,k,b]·conj(m[c,j,k,d])
    DenseTensor am = t.permuted({0, 1, 3, 2});                  // (a,i,b,k)
    DenseTensor bm = t.conjugated().permuted({2, 0, 1, 3});     // (k,c,j,d)
    DenseTensor p({D, di, Dr, D, dj, Dr});
    matmul(am.data(), bm.data(), p.data(), D * di * Dr, dj, D * dj * Dr);
    DenseTensor out = p.permuted({0, 3, 1, 4, 2, 5}); // (a,c,i,j,b,d)
    out.reshape_inplace({D * D, di, dj, Dr * Dr});
    return out;
}

TransferData transfer(const MpoTensor &m) {
    const DenseTensor &t = m.tensor();
    const std::size_t D = t.dim(0), di = t.dim(1), dj = t.dim(2), Dr = t.dim(3);
    if (D != Dr) throw err::assertion_error("transfer: left/right bonds differ");
    // E_raw[(a,c),(b,d)] = Σ_{i,j} t[a,i,j,b]·conj(t[c,i,j,d])
    DenseTensor am = t.permuted({0, 3, 1, 2}); // (a,b,(i,j))
    am.reshape_inplace({D * D, di * dj});
    DenseTensor e1({D * D, D * D});
    // E1[(a,b),(c,d)] = Σ_{ij} A[(a,b),ij]·conj(A[(c,d),ij]) = A·A†
    {
        std::vector<cplx> ah(di * dj * D * D);
        for (std::size_t r = 0; r < D * D; ++r)
            for (std::size_t k = 0; k < di * dj; ++k)
                ah[k * (D * D) + r] = std::conj(am[r * (di * dj) + k]);
        matmul(am.data(), ah.data(), e1.data(), D * D, di * dj, D * D);
    }
    e1.reshape_inplace({D, D, D, D});
    DenseTensor e = e1.permuted({0, 2, 1, 3}); // (a,c,b,d)
    e.reshape_inplace({D * D, D * D});

    // Normalize by the input dimension: a unitary MPO's raw transfer matrix
    // has spectral radius exactly d, and downstream formulas assume radius 1.
    const double inv_d = 1.0 / static_cast<double>(di);
    for (std::size_t i = 0; i < e.size(); ++i) e[i] *= inv_d;

    const DominantEig eig = dominant_eigenpairs(e.data(), D * D);
    TransferData out;
    out.bond_dim = D;
    out.e_matrix.assign(e.data(), e.data() + e.size());
    out.rho = eig.rho;
    out.l = eig.l;
    out.r = eig.r;
    out.degenerate = eig.degenerate;
    out.gap = eig.gap;
    return out;
}

DenseTensor window_tensor(const MpoTensor &m, std::size_t n, std::size_t start) {
    if (n == 0) throw err::assertion_error("window_tensor: empty window");
    DenseTensor g = m.site(start); // (a, I, J, c)
    for (std::size_t x = start + 1; x < start + n; ++x) {
        const DenseTensor &t = m.site(x);
        const std::size_t a = g.dim(0), I = g.dim(1), J = g.dim(2), c = g.dim(3);
        const std::size_t di = t.dim(1), dj = t.dim(2), b = t.dim(3);
        DenseTensor p({a, I, J, di, dj, b});
        matmul(g.data(), t.data(), p.data(), a * I * J, c, di * dj * b);
        g = p.permuted({0, 1, 3, 2, 4, 5}); // (a, I, i, J, j, b)
        g.reshape_inplace({a, I * di, J * dj, b});
    }
    return g;
}

MpoTensor block(const MpoTensor &m, std::size_t n) {
    if (n == 0) throw err::assertion_error("block: n must be positive");
    std::size_t dn_in = 1;
    for (std::size_t x = 1; x <= n; ++x) dn_in *= m.site(x).dim(1);
    const std::size_t cap = default_caps().max_dense_dim;
    if (dn_in > cap)
        throw err::cap_error(err::msg("block: blocked physical dimension ", dn_in,
                                      " exceeds cap ", cap));
    const std::size_t p2 = std::lcm(n, m.period()) / n;
    std::vector<DenseTensor> cell;
    cell.reserve(p2);
    for (std::size_t k = 0; k < p2; ++k) cell.push_back(window_tensor(m, n, 1 + k * n));
    MpoTensor out(std::move(cell));
    out.stack_of_injectives = m.stack_of_injectives;
    return out;
}

MpoTensor stack(const MpoTensor &m1, const MpoTensor &m2) {
    const std::size_t p = std::lcm(m1.period(), m2.period());
    std::vector<DenseTensor> cell;
    cell.reserve(p);
    for (std::size_t k = 0; k < p; ++k) {
        const DenseTensor &t1 = m1.cell_tensor(k % m1.period());
        const DenseTensor &t2 = m2.cell_tensor(k % m2.period());
        if (t1.dim(2) != t2.dim(1))
            throw err::assertion_error(err::msg("stack: physical mismatch at cell ", k, ": ",
                                                t1.dim(2), " vs ", t2.dim(1)));
        const std::size_t a = t1.dim(0), i = t1.dim(1), kk = t1.dim(2), b = t1.dim(3);
        const std::size_t A = t2.dim(0), j = t2.dim(2), B = t2.dim(3);
        // out[(a,A), i, j, (b,B)] = Σ_k t2[A,k,j,B]·t1[a,i,k,b]
        DenseTensor am = t1.permuted({0, 1, 3, 2});  // (a,i,b,k)
        DenseTensor bm = t2.permuted({1, 0, 2, 3});  // (k,A,j,B)
        DenseTensor pr({a, i, b, A, j, B});
        matmul(am.data(), bm.data(), pr.data(), a * i * b, kk, A * j * B);
        DenseTensor o = pr.permuted({0, 3, 1, 4, 2, 5}); // (a,A,i,j,b,B)
        o.reshape_inplace({a * A, i, j, b * B});
        cell.push_back(std::move(o));
    }
    MpoTensor out(std::move(cell));
    out.stack_of_injectives = m1.stack_of_injectives && m2.stack_of_injectives;
    return out;
}

bool is_injective(const TransferData &t, double rel_tol) {
    const std::size_t D = t.bond_dim;
    DenseTensor lm({D, D}, t.l);
    DenseTensor rm({D, D}, t.r);
    return svd_rank(lm, rel_tol) == D && svd_rank(rm, rel_tol) == D;
}

namespace {

/*! Isometry onto the numerically significant eigenspace of the Hermitized
 *  D×D matrix v: columns of the returned (D×k) matrix are kept eigenvectors
 *  (|λ| > rel_tol·max|λ|). */
DenseTensor support_isometry(const std::vector<cplx> &v, std::size_t D, double rel_tol) {
    std::vector<cplx> h(D * D);
    for (std::size_t i = 0; i < D; ++i)
        for (std::size_t j = 0; j < D; ++j)
            h[i * D + j] = 0.5 * (v[i * D + j] + std::conj(v[j * D + i]));
    std::vector<double> vals;
    std::vector<cplx> rows;
    eigh(h.data(), D, vals, rows);
    double vmax = 0.0;
    for (auto w : vals) vmax = std::max(vmax, std::abs(w));
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < D; ++k)
        if (std::abs(vals[k]) > rel_tol * vmax) keep.push_back(k);
    DenseTensor iso({D, keep.size()});
    for (std::size_t c = 0; c < keep.size(); ++c)
        for (std::size_t i = 0; i < D; ++i) iso.at({i, c}) = rows[keep[c] * D + i];
    return iso;
}

/*! m'[A,i,j,B] = Σ_{a,b} conj(V[a,A]) · m[a,i,j,b] · V[b,B]. */
DenseTensor project_bonds(const DenseTensor &t, const DenseTensor &iso) {
    const std::size_t D = t.dim(0), di = t.dim(1), dj = t.dim(2);
    const std::size_t k = iso.dim(1);
    // left: (A, (i,j,b)) = V† · m reshaped (a, i·j·b)
    DenseTensor left({k, di * dj * D});
    {
        DenseTensor vdag({k, D});
        for (std::size_t c = 0; c < k; ++c)
            for (std::size_t a = 0; a < D; ++a) vdag.at({c, a}) = std::conj(iso.at({a, c}));
        matmul(vdag.data(), t.data(), left.data(), k, D, di * dj * D);
    }
    left.reshape_inplace({k * di * dj, D});
    DenseTensor out({k * di * dj, k});
    matmul(left.data(), iso.data(), out.data(), k * di * dj, D, k);
    out.reshape_inplace({k, di, dj, k});
    return out;
}

} // namespace

MpoTensor reduce_to_injective(const MpoTensor &m, double rel_tol) {
    DenseTensor t = m.tensor(); // period-1 only
    const std::size_t iter_cap = std::max<std::size_t>(t.dim(0), 1);
    for (std::size_t it = 0; it <= iter_cap; ++it) {
        MpoTensor cur(t);
        const TransferData td = transfer(cur);
        if (is_injective(td, rel_tol)) {
            cur.stack_of_injectives = m.stack_of_injectives;
            return cur;
        }
        if (it == iter_cap) break;
        const std::size_t D = t.dim(0);
        const DenseTensor vr = support_isometry(td.r, D, rel_tol);
        t = project_bonds(t, vr);
        const TransferData td2 = transfer(MpoTensor(t));
        const DenseTensor vl = support_isometry(td2.l, t.dim(0), rel_tol);
        t = project_bonds(t, vl);
    }
    throw err::convergence_error(
        err::msg("reduce_to_injective: not injective after ", iter_cap,
                 " support projections (bond ", m.tensor().dim(0), ")"));
}

// -------------------------------------------------------- serialization ----

void save_mpo_text(const MpoTensor &m, const std::string &path) {
    std::ofstream f(path);
    if (!f) throw err::parse_error("save_mpo_text: cannot open " + path);
    f << "mpo-text 1\n";
    f << "period " << m.period() << "\n";
    f << "injective_stack " << (m.stack_of_injectives ? 1 : 0) << "\n";
    char buf[64];
    for (std::size_t k = 0; k < m.period(); ++k) {
        const DenseTensor &t = m.cell_tensor(k);
        f << "shape " << t.dim(0) << " " << t.dim(1) << " " << t.dim(2) << " " << t.dim(3)
          << "\n";
        for (std::size_t i = 0; i < t.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17e %.17e\n", t[i].real(), t[i].imag());
            f << buf;
        }
    }
    if (!f) throw err::parse_error("save_mpo_text: write failed for " + path);
}

MpoTensor load_mpo_text(const std::string &path) {
    std::ifstream f(path);
    if (!f) throw err::parse_error("load_mpo_text: cannot open " + path);
    std::string magic;
    int version = 0;
    f >> magic >> version;
    if (magic != "mpo-text" || version != 1)
        throw err::parse_error("load_mpo_text: bad header in " + path);
    std::string key;
    std::size_t period = 0;
    f >> key >> period;
    if (key != "period" || period == 0)
        throw err::parse_error("load_mpo_text: bad period line in " + path);
    int inj = 0;
    f >> key >> inj;
    if (!f || key != "injective_stack" || (inj != 0 && inj != 1))
        throw err::parse_error("load_mpo_text: bad injective_stack line in " + path);
    std::vector<DenseTensor> cell;
    for (std::size_t k = 0; k < period; ++k) {
        std::size_t d0, d1, d2, d3;
        f >> key >> d0 >> d1 >> d2 >> d3;
        if (!f || key != "shape") throw err::parse_error("load_mpo_text: bad shape line");
        DenseTensor t({d0, d1, d2, d3});
        for (std::size_t i = 0; i < t.size(); ++i) {
            double re, im;
            f >> re >> im;
            if (!f) throw err::parse_error("load_mpo_text: truncated entry list");
            t[i] = cplx(re, im);
        }
        cell.push_back(std::move(t));
    }
    MpoTensor out(std::move(cell));
    out.stack_of_injectives = inj == 1;
    return out;
}

namespace {
void put_u64(std::ofstream &f, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    f.write(reinterpret_cast<const char *>(b), 8);
}
std::uint64_t get_u64(std::ifstream &f) {
    unsigned char b[8];
    f.read(reinterpret_cast<char *>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}
} // namespace

void save_mpo_binary(const MpoTensor &m, const std::string &path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw err::parse_error("save_mpo_binary: cannot open " + path);
    f.write("MPOB", 4);
    const std::uint32_t version = 1;
    f.write(reinterpret_cast<const char *>(&version), 4);
    put_u64(f, m.period());
    put_u64(f, m.stack_of_injectives ? 1 : 0);
    for (std::size_t k = 0; k < m.period(); ++k) {
        const DenseTensor &t = m.cell_tensor(k);
        for (int leg = 0; leg < 4; ++leg) put_u64(f, t.dim(leg));
        // doubles are IEEE-754 little-endian on every supported target
        f.write(reinterpret_cast<const char *>(t.data()),
                static_cast<std::streamsize>(t.size() * sizeof(cplx)));
    }
    if (!f) throw err::parse_error("save_mpo_binary: write failed for " + path);
}

MpoTensor load_mpo_binary(const std::string &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw err::parse_error("load_mpo_binary: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    std::uint32_t version = 0;
    f.read(reinterpret_cast<char *>(&version), 4);
    if (!f || std::memcmp(magic, "MPOB", 4) != 0 || version != 1)
        throw err::parse_error("load_mpo_binary: bad header in " + path);
    const std::uint64_t period = get_u64(f);
    if (period == 0 || period > 1024) throw err::parse_error("load_mpo_binary: bad period");
    const std::uint64_t inj = get_u64(f);
    if (inj > 1) throw err::parse_error("load_mpo_binary: bad injective_stack flag");
    std::vector<DenseTensor> cell;
    for (std::uint64_t k = 0; k < period; ++k) {
        std::size_t dims[4];
        for (auto &d : dims) d = get_u64(f);
        DenseTensor t({dims[0], dims[1], dims[2], dims[3]});
        f.read(reinterpret_cast<char *>(t.data()),
               static_cast<std::streamsize>(t.size() * sizeof(cplx)));
        if (!f) throw err::parse_error("load_mpo_binary: truncated tensor data");
        cell.push_back(std::move(t));
    }
    MpoTensor out(std::move(cell));
    out.stack_of_injectives = inj == 1;
    return out;
}

MpoTensor load_mpo(const std::string &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw err::parse_error("load_mpo: cannot open " + path);
    char head[8] = {};
    f.read(head, 8);
    f.close();
    if (std::memcmp(head, "MPOB", 4) == 0) return load_mpo_binary(path);
    if (std::memcmp(head, "mpo-text", 8) == 0) return load_mpo_text(path);
    throw err::parse_error("load_mpo: unrecognized format in " + path);
}

} // namespace mpukit
