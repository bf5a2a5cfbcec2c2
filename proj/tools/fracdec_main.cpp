// Command-line front end: instance generation, checking, the decomposition
// pipeline, verification, the LP oracle, threshold probing and benchmarks.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "fracdec/io.hpp"
#include "fracdec/oracle.hpp"
#include "fracdec/transport.hpp"

using namespace fracdec;

namespace {

constexpr const char* kExitCodes =
    "Exit codes:\n"
    "  0  success / positive verdict (decompose: all edge sums correct;\n"
    "     verify: fractional decomposition; oracle: feasible)\n"
    "  1  command ran, verdict negative\n"
    "  2  bad command line\n"
    "  3  input file parse error\n"
    "  4  oracle size limit exceeded (see --force)\n"
    "  5  operation precondition violated\n"
    "  6  graph is not divisible\n"
    "  7  graph has edges but no transversal cliques\n"
    "  8  pipeline structural failure (gadget family, eligible set,\n"
    "     intermediate set)\n"
    "  9  file system error\n";

int default_threads() {
    if (const char* env = std::getenv("FRACDEC_THREADS")) {
        int value = std::atoi(env);
        if (value >= 1) return value;
    }
    return 1;
}

std::string rational_str(const Rational& x) {
    return scalar_traits<Rational>::str(x);
}

void print_summary(std::ostream& out, const PartiteGraph& g, const GraphSummary& s) {
    out << "graph r " << g.part_count() << "\n";
    out << "graph n " << g.part_size() << "\n";
    out << "edges " << s.edge_total << "\n";
    out << "hat_delta " << s.hat_delta << "\n";
    out << "delta " << rational_str(s.delta) << "\n";
    out << "divisible " << (s.divisible ? 1 : 0) << "\n";
    for (int i = 0; i < g.part_count(); ++i)
        for (int j = i + 1; j < g.part_count(); ++j)
            out << "edges_between " << i << " " << j << " "
                << s.edges_between[static_cast<std::size_t>(i) * g.part_count() + j] << "\n";
}

struct DecomposeArgs {
    std::string input;
    std::string out_weighting;
    std::string out_certificate;
    std::string anchor_mode = "single";
    std::int64_t anchor = 0;
    int sample_count = 4;
    std::uint64_t sample_seed = 0;
    std::string backend = "exact";
    bool trace = false;
    bool exact_rich = false;
    int threads = default_threads();
};

AnchorMode parse_anchor_mode(const DecomposeArgs& args) {
    if (args.anchor_mode == "single") return AnchorMode::single(static_cast<CliqueId>(args.anchor));
    if (args.anchor_mode == "sample") return AnchorMode::sample(args.sample_count, args.sample_seed);
    if (args.anchor_mode == "all") return AnchorMode::all();
    throw DomainError("unknown anchor mode '" + args.anchor_mode + "'");
}

template <class S>
void write_certificate(std::ostream& out, const Certificate<S>& cert, bool divisible,
                       bool with_timings) {
    out << "fracdec certificate v1\n";
    out << "command decompose\n";
    out << "r " << cert.r << "\n";
    out << "n " << cert.n << "\n";
    out << "hat_delta " << cert.hat_delta << "\n";
    out << "divisible " << (divisible ? 1 : 0) << "\n";
    out << "edges " << cert.edges << "\n";
    out << "cliques " << cert.cliques << "\n";
    out << "backend " << cert.backend << "\n";
    out << "anchor_mode " << cert.anchor_mode << "\n";
    out << "anchors " << cert.anchors.size() << "\n";
    if (!cert.anchors.empty()) out << "anchor_first " << cert.anchors.front() << "\n";
    out << "max_edge_deviation " << scalar_traits<S>::str(cert.max_edge_deviation) << "\n";
    out << "edges_off " << cert.edges_off << "\n";
    out << "min_weight " << scalar_traits<S>::str(cert.min_weight) << "\n";
    out << "negative_weights " << cert.negative_weights << "\n";
    out << "bounds " << (cert.bounds_applicable ? (cert.bounds_pass ? "pass" : "fail") : "not-applicable")
        << "\n";
    out << "edge_sums " << (cert.edge_sums_ok ? "ok" : "off") << "\n";
    out << "verdict "
        << (cert.decomposition ? "fractional-decomposition"
                               : (cert.edge_sums_ok ? "edge-sums-only" : "failed"))
        << "\n";
    // Timing lines are advisory; certificate files stay byte-reproducible.
    if (with_timings)
        out << "# timing enumerate_s " << cert.seconds_enumerate << " transport_s "
            << cert.seconds_transport << " verify_s " << cert.seconds_verify << "\n";
}

template <class S>
int run_decompose_backend(const DecomposeArgs& args, const PartiteGraph& g) {
    auto t0 = std::chrono::steady_clock::now();
    CliqueIndex idx = CliqueIndex::build(g);
    double enum_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    TransportOptions opts;
    opts.threads = args.threads;
    opts.richness = args.exact_rich ? RichMode::exact : RichMode::certified;
    opts.verify = false; // the certificate verifies the final weighting
    if (args.trace)
        opts.trace = [](const std::string& line) { std::cerr << "trace: " << line << "\n"; };

    DecomposeResult<S> res = decompose<S>(g, idx, parse_anchor_mode(args), opts);
    res.certificate.seconds_enumerate = enum_s;

    write_certificate(std::cout, res.certificate, true, true);
    if (!args.out_certificate.empty()) {
        std::ofstream out(args.out_certificate);
        if (!out) throw IoError("cannot open '" + args.out_certificate + "'");
        write_certificate(out, res.certificate, true, false);
    }
    if (!args.out_weighting.empty()) {
        if constexpr (scalar_traits<S>::exact)
            write_weighting_file(args.out_weighting, res.weights);
        else
            throw DomainError("the float backend does not write weighting files");
    }
    return res.certificate.edge_sums_ok ? 0 : 1;
}

int run_probe(int r, int n, int k_min, int k_max, int trials, std::uint64_t seed) {
    std::cout << "probe r " << r << " n " << n << " trials " << trials << "\n";
    std::cout << "conjectured_threshold " << rational_str(Rational(r, r + 1)) << "\n";
    std::cout << "k hat_ratio feasible vacuous infeasible rate\n";
    for (int k = k_min; k <= k_max; ++k) {
        int feasible = 0, vacuous = 0, infeasible = 0;
        for (int t = 0; t < trials; ++t) {
            PartiteGraph g = generate_divisible(r, n, k, seed + 1000 * t + k);
            CliqueIndex idx = CliqueIndex::build(g);
            if (g.edge_count() == 0) {
                ++vacuous; // empty constraint system: feasible but flagged
                continue;
            }
            LpOutcome out = lp_feasible(g, idx);
            if (out.status == LpOutcome::Status::feasible)
                ++feasible;
            else
                ++infeasible;
        }
        double rate = trials == 0 ? 0.0 : static_cast<double>(feasible + vacuous) / trials;
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", rate);
        std::cout << k << " " << rational_str(Rational(n - k, n)) << " " << feasible << " "
                  << vacuous << " " << infeasible << " " << buf << "\n";
    }
    return 0;
}

int run_bench(int r, const std::vector<int>& n_list, int matchings, std::uint64_t seed,
              const std::string& csv_path, bool run_float, int threads) {
    std::ostringstream csv;
    csv << "op,r,n,matchings,backend,seconds\n";
    for (int n : n_list) {
        PartiteGraph g = generate_divisible(r, n, matchings, seed);

        auto t0 = std::chrono::steady_clock::now();
        CliqueIndex idx = CliqueIndex::build(g);
        double enum_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        csv << "enumerate," << r << "," << n << "," << matchings << ",-," << enum_s << "\n";

        double exact_total = 0, float_total = 0;
        auto run_backend = [&](auto tag, const char* name) {
            using S = decltype(tag);
            StageTimings timings;
            TransportOptions opts;
            opts.verify = false;
            opts.diagnostics = false;
            opts.threads = threads;
            opts.timings = &timings;
            try {
                auto s0 = std::chrono::steady_clock::now();
                DecomposeResult<S> res = decompose<S>(g, idx, AnchorMode::single(0), opts);
                double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - s0).count();
                (void)res;
                csv << "sweep_outer," << r << "," << n << "," << matchings << "," << name << ","
                    << timings.outer_sweep_s << "\n";
                csv << "sweep_inner," << r << "," << n << "," << matchings << "," << name << ","
                    << timings.inner_sweep_s << "\n";
                csv << "decompose," << r << "," << n << "," << matchings << "," << name << ","
                    << total << "\n";
                (std::string(name) == "exact" ? exact_total : float_total) = total;
            } catch (const Error& e) {
                csv << "decompose," << r << "," << n << "," << matchings << "," << name << ",error:"
                    << e.what() << "\n";
            }
        };
        run_backend(Rational(), "exact");
        if (run_float) run_backend(double(), "float");
        if (run_float && exact_total > 0 && float_total > 0)
            csv << "backend_ratio," << r << "," << n << "," << matchings << ",exact/float,"
                << exact_total / float_total << "\n";
    }
    std::cout << csv.str();
    if (!csv_path.empty()) {
        std::ofstream out(csv_path);
        if (!out) throw IoError("cannot open '" + csv_path + "'");
        out << csv.str();
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fracdec: exact fractional clique decompositions of balanced multipartite graphs"};
    app.footer(kExitCodes);
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate a divisible instance and write a graph file");
    int gen_r = 3, gen_n = 6, gen_k = 0;
    std::uint64_t gen_seed = 0;
    std::string gen_out;
    gen->add_option("--r", gen_r, "part count (>= 3)");
    gen->add_option("--n", gen_n, "part size");
    gen->add_option("--matchings", gen_k, "perfect matchings removed per class pair");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--out", gen_out, "output graph file")->required();

    // check
    auto* check = app.add_subcommand("check", "summary, clique-count table and bounds report");
    std::string check_in;
    check->add_option("--in", check_in, "graph file")->required();

    // decompose
    auto* dec = app.add_subcommand("decompose", "run the weight-correction pipeline");
    DecomposeArgs dargs;
    dec->add_option("--in", dargs.input, "graph file")->required();
    dec->add_option("--out-weighting", dargs.out_weighting, "write the weighting (exact backend)");
    dec->add_option("--out-certificate", dargs.out_certificate, "write the certificate");
    dec->add_option("--anchor-mode", dargs.anchor_mode, "single | sample | all")
        ->check(CLI::IsMember({"single", "sample", "all"}));
    dec->add_option("--anchor", dargs.anchor, "anchor clique id (single mode)");
    dec->add_option("--sample-count", dargs.sample_count, "anchor count (sample mode)");
    dec->add_option("--sample-seed", dargs.sample_seed, "anchor sampling seed");
    dec->add_option("--backend", dargs.backend, "exact | float")
        ->check(CLI::IsMember({"exact", "float"}));
    dec->add_flag("--trace", dargs.trace, "log pipeline stages to stderr");
    dec->add_flag("--exact-rich", dargs.exact_rich, "use exhaustive neighbour-rich checks");
    dec->add_option("--threads", dargs.threads, "worker cap (default: FRACDEC_THREADS or 1)");

    // verify
    auto* ver = app.add_subcommand("verify", "verify a weighting file against a graph");
    std::string ver_in, ver_weighting;
    ver->add_option("--in", ver_in, "graph file")->required();
    ver->add_option("--weighting", ver_weighting, "weighting file")->required();

    // oracle
    auto* ora = app.add_subcommand("oracle", "exact LP feasibility of the decomposition polytope");
    std::string ora_in, ora_witness;
    bool ora_force = false;
    ora->add_option("--in", ora_in, "graph file")->required();
    ora->add_option("--witness-out", ora_witness, "write the feasible witness weighting");
    ora->add_flag("--force", ora_force, "ignore the size guard");

    // probe
    auto* probe = app.add_subcommand("probe", "feasibility rate versus degree ratio (LP oracle)");
    int pr_r = 3, pr_n = 4, pr_kmin = 0, pr_kmax = 4, pr_trials = 5;
    std::uint64_t pr_seed = 0;
    probe->add_option("--r", pr_r, "part count");
    probe->add_option("--n", pr_n, "part size");
    probe->add_option("--k-min", pr_kmin, "smallest matchings-per-pair value");
    probe->add_option("--k-max", pr_kmax, "largest matchings-per-pair value");
    probe->add_option("--trials", pr_trials, "instances per k");
    probe->add_option("--seed", pr_seed, "base seed");

    // bench
    auto* bench = app.add_subcommand("bench", "timing grid; CSV to stdout and optionally a file");
    int be_r = 3, be_k = 1, be_threads = default_threads();
    std::vector<int> be_n{12, 24};
    std::uint64_t be_seed = 1;
    std::string be_csv;
    bool be_float = false;
    bench->add_option("--r", be_r, "part count");
    bench->add_option("--n-list", be_n, "part sizes to time")->delimiter(',');
    bench->add_option("--matchings", be_k, "matchings removed per pair");
    bench->add_option("--seed", be_seed, "instance seed");
    bench->add_option("--csv", be_csv, "also write the CSV here");
    bench->add_flag("--float", be_float, "time the float backend as well");
    bench->add_option("--threads", be_threads, "worker cap");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) {
            PartiteGraph g = generate_divisible(gen_r, gen_n, gen_k, gen_seed);
            write_graph_file(gen_out, g);
            GraphSummary s = summarize(g);
            print_summary(std::cout, g, s);
            return 0;
        }
        if (check->parsed()) {
            PartiteGraph g = read_graph_file(check_in);
            GraphSummary s = summarize(g);
            print_summary(std::cout, g, s);
            CliqueIndex idx = CliqueIndex::build(g);
            std::cout << "cliques " << idx.k_total() << "\n";
            const int r = g.part_count();
            for (unsigned mask = 1; mask < (1u << r); ++mask) {
                std::vector<int> classes;
                for (int c = 0; c < r; ++c)
                    if (mask >> c & 1) classes.push_back(c);
                std::cout << "k_I";
                for (int c : classes) std::cout << " " << c;
                std::cout << " = " << count_partial(g, classes) << "\n";
            }
            BoundsReport rep = bounds_report(g, idx);
            std::cout << "ratio_bound "
                      << (rep.ratio_applicable ? (rep.ratio_pass ? "pass" : "fail")
                                               : "not-applicable")
                      << "\n";
            for (const auto& w : rep.ratio_failures) {
                std::cout << "ratio_failure I";
                for (int c : w.classes) std::cout << " " << c;
                std::cout << " remove " << w.removed << " kI " << w.k_full << " kI' " << w.k_reduced
                          << "\n";
            }
            std::cout << "edge_bound "
                      << (rep.edge_applicable ? (rep.edge_pass ? "pass" : "fail")
                                              : "not-applicable")
                      << "\n";
            for (const auto& w : rep.edge_failures) {
                auto [a, b] = idx.edge(w.edge);
                std::cout << "edge_failure " << to_string(a) << " " << to_string(b) << " z "
                          << w.z_e << "\n";
            }
            return 0;
        }
        if (dec->parsed()) {
            PartiteGraph g = read_graph_file(dargs.input);
            if (dargs.backend == "float") return run_decompose_backend<double>(dargs, g);
            return run_decompose_backend<Rational>(dargs, g);
        }
        if (ver->parsed()) {
            PartiteGraph g = read_graph_file(ver_in);
            CliqueIndex idx = CliqueIndex::build(g);
            CliqueWeighting<Rational> w = read_weighting_file(ver_weighting, idx);
            VerificationRecord rec = verify(g, idx, w);
            std::cout << "max_effect " << rational_str(rec.max_effect) << "\n";
            std::cout << "min_effect " << rational_str(rec.min_effect) << "\n";
            std::cout << "edges_off " << rec.edges_off << "\n";
            std::cout << "min_weight " << rational_str(rec.min_weight) << "\n";
            std::cout << "negative_weights " << rec.negative_weights << "\n";
            std::cout << "verdict "
                      << (rec.decomposition ? "fractional-decomposition" : "not-a-decomposition")
                      << "\n";
            return rec.decomposition ? 0 : 1;
        }
        if (ora->parsed()) {
            PartiteGraph g = read_graph_file(ora_in);
            CliqueIndex idx = CliqueIndex::build(g);
            LpLimits limits;
            limits.force = ora_force;
            LpOutcome out = lp_feasible(g, idx, limits);
            bool feasible = out.status == LpOutcome::Status::feasible;
            std::cout << "status " << (feasible ? "feasible" : "infeasible") << "\n";
            std::cout << "pivots " << out.pivots << "\n";
            if (out.infeasibility_gap)
                std::cout << "phase1_optimum " << rational_str(*out.infeasibility_gap) << "\n";
            if (g.edge_count() == 0) std::cout << "note empty-edge-set-vacuously-feasible\n";
            if (feasible && !ora_witness.empty()) write_weighting_file(ora_witness, *out.witness);
            return feasible ? 0 : 1;
        }
        if (probe->parsed()) return run_probe(pr_r, pr_n, pr_kmin, pr_kmax, pr_trials, pr_seed);
        if (bench->parsed())
            return run_bench(be_r, be_n, be_k, be_seed, be_csv, be_float, be_threads);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 10;
    }
    return 2;
}
