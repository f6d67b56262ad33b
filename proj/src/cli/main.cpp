/*!
 * mpu — command-line front end for the MPO toolkit.
 *
 * Commands: index, check-unitary, fixed-point, locality, tables, oracle.
 * Inputs are circuit spec files (see parse_circuit_text for the grammar) or
 * serialized tensors ("mpo-text" / "MPOB"); the format is sniffed.
 *
 * Exit codes: 0 success; 2 parse failure; 3 cap exceeded; 4 numerical
 * nonconvergence (scan did not stabilize / fixed point not found); 5 failed
 * precondition or internal assertion; 1 anything else.
 */
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "mpukit/analysis.hpp"
#include "mpukit/builders.hpp"
#include "mpukit/index.hpp"
#include "mpukit/linalg.hpp"
#include "mpukit/rng.hpp"

using nlohmann::json;
using namespace mpukit;

#ifndef MPUKIT_FIXTURE_DIR
#define MPUKIT_FIXTURE_DIR "fixtures"
#endif

namespace {

struct Options {
    std::string format = "human"; // human | json | csv
    std::string output;           // empty = stdout
    std::string fixtures;         // resolved fixture directory
    std::uint64_t seed_shift = 0; // added to every random layer seed
};

void emit(const Options &opt, const std::string &text) {
    if (opt.output.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(opt.output);
    if (!f) throw err::parse_error("cannot open output file " + opt.output);
    f << text;
}

/*! Load an input file: serialized tensors are sniffed by magic, anything
 *  else goes through the circuit-spec parser. */
MpoTensor load_input(const std::string &path, std::uint64_t seed_shift) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw err::parse_error("cannot open input file " + path);
    char head[8] = {};
    f.read(head, 8);
    f.close();
    if (std::memcmp(head, "MPOB", 4) == 0 || std::memcmp(head, "mpo-text", 8) == 0)
        return load_mpo(path);
    CircuitSpec spec = parse_circuit_file(path);
    for (CircuitLayer &ly : spec.layers)
        if (ly.kind == CircuitLayer::Kind::random_layer) ly.seed += seed_shift;
    return build_circuit(spec);
}

json report_to_json(const IndexReport &rep) {
    json rows = json::array();
    for (const IndexRow &r : rep.rows)
        rows.push_back({{"block_length", r.block_length},
                        {"left_rank", r.left_rank},
                        {"right_rank", r.right_rank},
                        {"rank_ratio", r.ratio.str()}});
    json j{{"rows", rows},
           {"stabilized", rep.stabilized},
           {"outside_theorem_hypotheses", rep.outside_theorem_hypotheses},
           {"capped", rep.capped}};
    if (rep.stabilized) j["stabilized_value"] = rep.stabilized_value.str();
    if (rep.has_gnvw) j["gnvw"] = rep.gnvw;
    if (!rep.note.empty()) j["note"] = rep.note;
    return j;
}

std::string report_to_csv(const IndexReport &rep) {
    std::ostringstream out;
    out << "block_length,left_rank,right_rank,rank_ratio\n";
    for (const IndexRow &r : rep.rows)
        out << r.block_length << "," << r.left_rank << "," << r.right_rank << ","
            << r.ratio.str() << "\n";
    return out.str();
}

std::string report_to_human(const IndexReport &rep) {
    std::ostringstream out;
    out << "block  left  right  ratio\n";
    for (const IndexRow &r : rep.rows) {
        char line[80];
        std::snprintf(line, sizeof line, "%5zu %5zu %6zu  %s\n", r.block_length, r.left_rank,
                      r.right_rank, r.ratio.str().c_str());
        out << line;
    }
    if (rep.stabilized)
        out << "stabilized: " << rep.stabilized_value.str() << "   index (sqrt): " << rep.gnvw
            << "\n";
    else
        out << "not stabilized within the scanned block lengths\n";
    if (rep.capped) out << "scan capped: " << rep.note << "\n";
    if (rep.outside_theorem_hypotheses) out << "warning: " << rep.note << "\n";
    return out.str();
}

json fp_to_json(const FixedPointReport &r) {
    return {{"block_length", r.block_length},
            {"separation_residual", r.separation_residual},
            {"isometry_residual", r.isometry_residual},
            {"pull_left_residual", r.pull_left_residual},
            {"pull_right_residual", r.pull_right_residual},
            {"tolerance", r.tolerance},
            {"passed", r.passed},
            {"degenerate_transfer", r.degenerate_transfer}};
}

std::string fp_to_human(const FixedPointReport &r) {
    char line[200];
    std::snprintf(line, sizeof line,
                  "block %zu: separation %.2e  isometry %.2e  pull-left %.2e  pull-right %.2e  "
                  "-> %s\n",
                  r.block_length, r.separation_residual, r.isometry_residual,
                  r.pull_left_residual, r.pull_right_residual, r.passed ? "passed" : "FAILED");
    return line;
}

/*! Parse "2,3,5" into sizes. */
std::vector<std::size_t> parse_sizes(const std::string &txt) {
    std::vector<std::size_t> out;
    std::istringstream ss(txt);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t used = 0;
            const unsigned long long v = std::stoull(tok, &used);
            if (used != tok.size() || v == 0) throw std::invalid_argument(tok);
            out.push_back(v);
        } catch (const std::exception &) {
            throw err::parse_error("bad size list entry '" + tok + "'");
        }
    }
    if (out.empty()) throw err::parse_error("empty size list");
    return out;
}

/*! Single-site-range test operators for the locality command. */
std::vector<cplx> named_op(const std::string &name, std::size_t dw, std::uint64_t seed) {
    std::vector<cplx> m(dw * dw, cplx(0.0));
    if (name == "identity") {
        for (std::size_t i = 0; i < dw; ++i) m[i * dw + i] = 1.0;
    } else if (name == "shift") {
        for (std::size_t i = 0; i < dw; ++i) m[((i + 1) % dw) * dw + i] = 1.0;
    } else if (name == "clock") {
        for (std::size_t i = 0; i < dw; ++i)
            m[i * dw + i] = std::exp(cplx(0.0, 2.0 * M_PI * double(i) / double(dw)));
    } else if (name == "swap01") {
        for (std::size_t i = 0; i < dw; ++i) m[i * dw + i] = 1.0;
        if (dw < 2) throw err::parse_error("swap01 needs a local dimension of at least 2");
        m[0 * dw + 0] = m[1 * dw + 1] = 0.0;
        m[0 * dw + 1] = m[1 * dw + 0] = 1.0;
    } else if (name == "random") {
        SplitMix64 rng(mix_seed({0xa3f29b11c377e185ULL, seed, dw}));
        DenseTensor g({dw, dw}, rng.gauss_vector(dw * dw));
        DenseTensor q, r;
        qr_positive(g, q, r);
        m.assign(q.data(), q.data() + q.size());
    } else {
        throw err::parse_error("unknown operator '" + name +
                               "' (identity|shift|clock|swap01|random)");
    }
    return m;
}

int cmd_index(const Options &opt, const std::string &input, std::size_t max_block,
              double rel_tol, std::size_t window) {
    const MpoTensor m = load_input(input, opt.seed_shift);
    const IndexReport rep = index_scan(m, max_block, rel_tol, window);
    if (opt.format == "json") emit(opt, report_to_json(rep).dump(2) + "\n");
    else if (opt.format == "csv") emit(opt, report_to_csv(rep));
    else emit(opt, report_to_human(rep));
    if (rep.capped) return 3;
    return rep.stabilized ? 0 : 4;
}

int cmd_check_unitary(const Options &opt, const std::string &input, std::string sizes_txt,
                      double tol) {
    const MpoTensor m = load_input(input, opt.seed_shift);
    std::vector<std::size_t> sizes;
    if (sizes_txt.empty()) {
        const std::size_t p = m.period();
        for (std::size_t k = 1; k <= 3; ++k) sizes.push_back(k * p);
    } else {
        sizes = parse_sizes(sizes_txt);
    }
    const std::vector<UnitaryCheck> checks = check_unitary_dense(m, sizes, tol);
    if (opt.format == "json") {
        json rows = json::array();
        for (const UnitaryCheck &c : checks)
            rows.push_back(
                {{"n_sites", c.n_sites}, {"deviation", c.deviation}, {"unitary", c.unitary}});
        emit(opt, rows.dump(2) + "\n");
    } else if (opt.format == "csv") {
        std::ostringstream out;
        out << "n_sites,deviation,unitary\n";
        for (const UnitaryCheck &c : checks)
            out << c.n_sites << "," << c.deviation << "," << (c.unitary ? 1 : 0) << "\n";
        emit(opt, out.str());
    } else {
        std::ostringstream out;
        for (const UnitaryCheck &c : checks) {
            char line[120];
            std::snprintf(line, sizeof line, "N=%zu: |O+O - 1|_max = %.3e  -> %s\n", c.n_sites,
                          c.deviation, c.unitary ? "unitary" : "NOT unitary");
            out << line;
        }
        emit(opt, out.str());
    }
    return 0;
}

int cmd_fixed_point(const Options &opt, const std::string &input, std::size_t block,
                    std::size_t max_block, double tol) {
    const MpoTensor m = load_input(input, opt.seed_shift);
    if (block > 0) {
        const FixedPointReport rep = check_fixed_point(m, block, tol);
        if (opt.format == "json") emit(opt, fp_to_json(rep).dump(2) + "\n");
        else emit(opt, fp_to_human(rep));
        return rep.passed ? 0 : 4;
    }
    const FixedPointSearch s = find_fixed_point(m, max_block, tol);
    if (opt.format == "json") {
        json reports = json::array();
        for (const FixedPointReport &r : s.reports) reports.push_back(fp_to_json(r));
        json j{{"found", s.found},
               {"site_units", s.site_units},
               {"capped", s.capped},
               {"reports", reports}};
        if (s.found) j["block_length"] = s.block_length;
        emit(opt, j.dump(2) + "\n");
    } else {
        std::ostringstream out;
        for (const FixedPointReport &r : s.reports) out << fp_to_human(r);
        if (s.found)
            out << "fixed point at block length " << s.block_length << " (x" << s.site_units
                << " chain sites per unit)\n";
        else
            out << (s.capped ? "search stopped by the memory cap before an answer\n"
                             : "no fixed point within the searched block lengths\n");
        emit(opt, out.str());
    }
    if (s.found) return 0;
    return s.capped ? 3 : 4;
}

int cmd_locality(const Options &opt, const std::string &input, std::size_t n_sites,
                 std::size_t site, std::size_t width, const std::string &opname,
                 std::uint64_t seed, double tol) {
    const MpoTensor m = load_input(input, opt.seed_shift);
    if (n_sites == 0) n_sites = std::max<std::size_t>(5, m.period());
    if (n_sites % m.period() != 0)
        n_sites += m.period() - n_sites % m.period(); // round up to a whole number of cells
    if (site == 0) site = n_sites / 2 + 1;
    std::size_t dw = 1;
    for (std::size_t s = 0; s < width; ++s) dw *= m.phys_in();
    SiteRangeOp op{site, width, named_op(opname, dw, seed)};
    const auto [conj, rep] = conjugate_local(m, op, n_sites, tol);
    (void)conj;
    if (opt.format == "json") {
        emit(opt, json{{"n_sites", n_sites},
                       {"operator", opname},
                       {"site", site},
                       {"width", width},
                       {"support_before", rep.operator_support_before},
                       {"support_after", rep.support_after},
                       {"growth", rep.growth}}
                          .dump(2) +
                      "\n");
    } else {
        std::ostringstream out;
        out << opname << " on site " << site << " (width " << width << ") of " << n_sites
            << " sites: support " << rep.operator_support_before << " -> " << rep.support_after
            << " (growth " << rep.growth << ")\n";
        emit(opt, out.str());
    }
    return 0;
}

int cmd_tables(const Options &opt, const std::string &out_dir, std::size_t max_block,
               double rel_tol) {
    const std::pair<const char *, const char *> jobs[3] = {
        {"fig3a.circuit", "table1.csv"},
        {"fig3b.circuit", "table2.csv"},
        {"fig3c.circuit", "table3.csv"},
    };
    std::ostringstream summary;
    for (const auto &[fixture, csv] : jobs) {
        const std::string in = opt.fixtures + "/" + fixture;
        const MpoTensor m = load_input(in, opt.seed_shift);
        const IndexReport rep = index_scan(m, max_block, rel_tol);
        if (!rep.stabilized)
            throw err::convergence_error(err::msg("tables: scan of ", fixture,
                                                  " did not stabilize within ", max_block,
                                                  " blocks"));
        const std::string out_path = out_dir + "/" + csv;
        std::ofstream f(out_path);
        if (!f) throw err::parse_error("tables: cannot open " + out_path);
        f << report_to_csv(rep);
        summary << csv << ": stabilized " << rep.stabilized_value.str() << " (index "
                << rep.gnvw << ") from " << fixture << "\n";
    }
    emit(opt, summary.str());
    return 0;
}

int cmd_oracle(const Options &opt, const std::string &input, std::size_t n_sites,
               std::size_t l0, std::size_t max_block, double rel_tol, double tol) {
    const MpoTensor m = load_input(input, opt.seed_shift);
    if (n_sites == 0) {
        n_sites = std::max<std::size_t>(6, m.period());
        if (n_sites % m.period() != 0) n_sites += m.period() - n_sites % m.period();
    }
    if (n_sites % m.period() != 0)
        throw err::assertion_error(
            err::msg("oracle: n_sites must be a multiple of the unit-cell period ", m.period()));
    const IndexReport rep = index_scan(m, max_block, rel_tol);
    if (!rep.stabilized)
        throw err::convergence_error(
            err::msg("oracle: rank-ratio scan did not stabilize within ", max_block, " blocks"));
    if (l0 == 0) {
        // Auto window: the fixed-point block length in chain sites, held back
        // from half the chain so both algebras fit with slack.
        const FixedPointSearch s = find_fixed_point(m, 4, tol);
        const std::size_t fp_sites = s.found ? s.block_length * s.site_units : m.period();
        l0 = std::min(fp_sites, n_sites / 2 >= 2 ? n_sites / 2 - 2 : 1);
        l0 = std::max<std::size_t>(l0, 1);
    }
    const DenseOperator o = assemble_dense(m, n_sites);
    const double eta = gnvw_overlap_index(o, n_sites / 2, l0);
    const double root = std::sqrt(rep.stabilized_value.value());
    const double disc = std::abs(eta - root);
    if (opt.format == "json") {
        emit(opt, json{{"stabilized_ratio", rep.stabilized_value.str()},
                       {"sqrt_ratio", root},
                       {"overlap_index", eta},
                       {"discrepancy", disc},
                       {"n_sites", n_sites},
                       {"cut", n_sites / 2},
                       {"l0", l0}}
                          .dump(2) +
                      "\n");
    } else {
        char line[240];
        std::snprintf(line, sizeof line,
                      "rank ratio %s, sqrt %.10f; overlap index %.10f at N=%zu, cut %zu, l0=%zu; "
                      "discrepancy %.3e\n",
                      rep.stabilized_value.str().c_str(), root, eta, n_sites, n_sites / 2, l0,
                      disc);
        emit(opt, line);
    }
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"MPO toolkit: unitarity, fixed-point, locality and index analysis"};
    app.require_subcommand(1);
    app.fallthrough(); // allow the global options below after the subcommand name

    Options opt;
    opt.fixtures = MPUKIT_FIXTURE_DIR;
    if (const char *env = std::getenv("MPUKIT_FIXTURE_DIR")) opt.fixtures = env;
    app.add_option("--format", opt.format, "Output format: human|json|csv")
        ->check(CLI::IsMember({"human", "json", "csv"}));
    app.add_option("-o,--output", opt.output, "Write the report to a file instead of stdout");
    app.add_option("--fixtures", opt.fixtures, "Directory with bundled circuit fixtures");
    app.add_option("--seed-shift", opt.seed_shift,
                   "Offset added to every random layer seed in circuit inputs");
    std::size_t cap_dense = 0, cap_scan = 0;
    app.add_option("--max-dense-dim", cap_dense, "Override the dense-dimension cap");
    app.add_option("--max-scan-bytes", cap_scan, "Override the scan workspace cap (bytes)");

    std::string input;
    std::size_t max_block = 7, window = 3, block = 0, n_sites = 0, site = 0, width = 1, l0 = 0;
    double rel_tol = 1e-10, tol = 1e-9, utol = 1e-10;
    std::string sizes_txt, opname = "shift", out_dir = ".";
    std::uint64_t op_seed = 1;

    CLI::App *c_index = app.add_subcommand("index", "Rank-ratio scan over block lengths");
    c_index->add_option("input", input, "Circuit spec or serialized tensor")->required();
    c_index->add_option("--max-block", max_block, "Largest block length to scan (default 7)");
    c_index->add_option("--rel-tol", rel_tol, "Relative SVD rank cutoff")
        ->check(CLI::Range(1e-300, 1.0));
    c_index->add_option("--window", window, "Consecutive equal rows needed to stabilize");

    CLI::App *c_unit = app.add_subcommand("check-unitary", "Dense unitarity test per size");
    c_unit->add_option("input", input, "Circuit spec or serialized tensor")->required();
    c_unit->add_option("--sizes", sizes_txt, "Comma-separated chain sizes (default p,2p,3p)");
    c_unit->add_option("--tol", utol, "Unitarity tolerance")->check(CLI::Range(1e-300, 1.0));

    CLI::App *c_fp = app.add_subcommand("fixed-point", "Fixed-point equations after blocking");
    c_fp->add_option("input", input, "Circuit spec or serialized tensor")->required();
    c_fp->add_option("--block", block, "Check one block length directly (0 = search)");
    c_fp->add_option("--max-block", max_block, "Search limit (default 4 for searches)");
    c_fp->add_option("--tol", tol, "Residual tolerance")->check(CLI::Range(1e-300, 1.0));

    CLI::App *c_loc = app.add_subcommand("locality", "Support growth under conjugation");
    c_loc->add_option("input", input, "Circuit spec or serialized tensor")->required();
    c_loc->add_option("--n-sites", n_sites, "Chain length (default 5, rounded to the period)");
    c_loc->add_option("--site", site, "1-based site of the operator (default center)");
    c_loc->add_option("--width", width, "Operator width in sites");
    c_loc->add_option("--op", opname, "Operator: identity|shift|clock|swap01|random");
    c_loc->add_option("--op-seed", op_seed, "Seed for --op random");
    c_loc->add_option("--tol", tol, "Identity-window tolerance")->check(CLI::Range(1e-300, 1.0));

    CLI::App *c_tab = app.add_subcommand("tables", "Regenerate the three bundled rank tables");
    c_tab->add_option("--out-dir", out_dir, "Directory for table1/2/3.csv (default .)");
    c_tab->add_option("--max-block", max_block, "Largest block length to scan (default 7)");
    c_tab->add_option("--rel-tol", rel_tol, "Relative SVD rank cutoff")
        ->check(CLI::Range(1e-300, 1.0));

    CLI::App *c_or = app.add_subcommand("oracle", "Rank-ratio index vs dense overlap index");
    c_or->add_option("input", input, "Circuit spec or serialized tensor")->required();
    c_or->add_option("--n-sites", n_sites, "Dense chain length (default 6, rounded to the period)");
    c_or->add_option("--l0", l0, "Algebra half-window in sites (0 = fixed-point block)");
    c_or->add_option("--max-block", max_block, "Rank scan limit (default 7)");
    c_or->add_option("--rel-tol", rel_tol, "Relative SVD rank cutoff")
        ->check(CLI::Range(1e-300, 1.0));
    c_or->add_option("--tol", tol, "Fixed-point residual tolerance for the auto window")
        ->check(CLI::Range(1e-300, 1.0));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2; // CLI11's own codes, folded onto "parse failure"
    }

    try {
        if (cap_dense > 0 || cap_scan > 0) {
            CapConfig caps = default_caps();
            if (cap_dense > 0) caps.max_dense_dim = cap_dense;
            if (cap_scan > 0) caps.max_scan_bytes = cap_scan;
            set_default_caps(caps);
        }
        if (app.got_subcommand(c_index)) return cmd_index(opt, input, max_block, rel_tol, window);
        if (app.got_subcommand(c_unit)) return cmd_check_unitary(opt, input, sizes_txt, utol);
        if (app.got_subcommand(c_fp)) {
            if (block == 0 && !c_fp->count("--max-block")) max_block = 4;
            return cmd_fixed_point(opt, input, block, max_block, tol);
        }
        if (app.got_subcommand(c_loc))
            return cmd_locality(opt, input, n_sites, site, width, opname, op_seed, tol);
        if (app.got_subcommand(c_tab)) return cmd_tables(opt, out_dir, max_block, rel_tol);
        if (app.got_subcommand(c_or))
            return cmd_oracle(opt, input, n_sites, l0, max_block, rel_tol, tol);
        return 2;
    } catch (const err::parse_error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const err::cap_error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const err::convergence_error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const err::assertion_error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
