#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include "fracdec/io.hpp"
#include "fracdec/weighting.hpp"
#include "support.hpp"

using namespace fracdec;
using namespace testsupport;

TEST_CASE("uniform_init entries") {
    for (int n : {2, 3, 5}) {
        PartiteGraph g = PartiteGraph::complete(3, n);
        CliqueIndex idx = CliqueIndex::build(g);
        CliqueWeighting<Rational> w = uniform_init<Rational>(g, idx);
        for (CliqueId c = 0; c < idx.k_total(); ++c) CHECK(w[c] == Rational(1, n));
    }
    {
        PartiteGraph g = PartiteGraph::complete(3, 2);
        CliqueIndex idx = CliqueIndex::build(g);
        CHECK(uniform_init<Rational>(g, idx)[0] == Rational(1, 2));
        CHECK_FALSE(is_zero_sum(uniform_init<Rational>(g, idx))); // sums to 4
    }
    {
        PartiteGraph cyc = tripartite_six_cycle();
        CliqueIndex idx = CliqueIndex::build(cyc);
        CHECK_THROWS_AS(uniform_init<Rational>(cyc, idx), NoCliquesError);
    }
}

TEST_CASE("edge effects: uniform on complete is 1, zero weighting is 0") {
    PartiteGraph g = PartiteGraph::complete(3, 4);
    CliqueIndex idx = CliqueIndex::build(g);
    CliqueWeighting<Rational> uni = uniform_init<Rational>(g, idx);
    CliqueWeighting<Rational> zero(idx);
    for (EdgeId e = 0; e < idx.edge_count(); ++e) {
        CHECK(edge_effect(uni, e) == 1);
        CHECK(edge_effect(zero, e) == 0);
    }
    CHECK_THROWS_AS(edge_effect(uni, VertexId{0, 0}, VertexId{0, 1}), DomainError);
}

TEST_CASE("edge effects cross-checked against the brute-force oracle") {
    PartiteGraph g = PartiteGraph::complete(3, 2);
    g.remove_edge({0, 0}, {1, 0});
    CliqueIndex idx = CliqueIndex::build(g);
    CliqueWeighting<Rational> uni = uniform_init<Rational>(g, idx);
    auto oracle = brute_force_edge_effects(idx, uni);
    for (EdgeId e = 0; e < idx.edge_count(); ++e) {
        auto [a, b] = idx.edge(e);
        CHECK(edge_effect(uni, e) == effect_or_zero(oracle, a, b));
    }

    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 10; ++trial) {
        CliqueWeighting<Rational> w = random_sparse_weighting(idx, rng, 4);
        auto expect = brute_force_edge_effects(idx, w);
        for (EdgeId e = 0; e < idx.edge_count(); ++e) {
            auto [a, b] = idx.edge(e);
            CHECK(edge_effect(w, e) == effect_or_zero(expect, a, b));
        }
    }
}

TEST_CASE("linearity of edge effects") {
    PartiteGraph g = generate_divisible(3, 5, 1, 4);
    CliqueIndex idx = CliqueIndex::build(g);
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        CliqueWeighting<Rational> w1 = random_sparse_weighting(idx, rng, 5);
        CliqueWeighting<Rational> w2 = random_sparse_weighting(idx, rng, 5);
        Rational a = random_rational(rng);
        CliqueWeighting<Rational> combo(idx);
        combo.add_scaled(w1, a);
        combo.add(w2);
        EdgeId e = static_cast<EdgeId>(rng() % static_cast<std::uint64_t>(idx.edge_count()));
        CHECK(edge_effect(combo, e) == a * edge_effect(w1, e) + edge_effect(w2, e));
    }
}

TEST_CASE("class sums of edge effects at a vertex equal its clique weight sum") {
    PartiteGraph g = generate_divisible(4, 4, 1, 12);
    CliqueIndex idx = CliqueIndex::build(g);
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        CliqueWeighting<Rational> w = random_sparse_weighting(idx, rng, 6);
        for (int f = 0; f < g.vertex_count(); ++f) {
            VertexId v = g.vertex(f);
            Rational through(0);
            for (CliqueId c : idx.cliques_with_vertex(v)) through += w[c];
            for (int cls = 0; cls < 4; ++cls) {
                if (cls == v.cls) continue;
                Rational sum(0);
                for (VertexId u : g.neighbours_in(v, cls)) sum += edge_effect(w, v, u);
                CHECK(sum == through);
            }
        }
    }
}

TEST_CASE("corrections on the complete graph vanish") {
    PartiteGraph g = PartiteGraph::complete(3, 4);
    CliqueIndex idx = CliqueIndex::build(g);
    CorrectionField<Rational> f = corrections<Rational>(g, idx);
    for (const Rational& x : f.per_edge) CHECK(x == 0);
    for (const Rational& x : f.per_vertex) CHECK(x == 0);
}

TEST_CASE("corrections satisfy both field invariants on generated instances") {
    PartiteGraph g = generate_divisible(3, 12, 1, 5);
    CliqueIndex idx = CliqueIndex::build(g);
    CorrectionField<Rational> f = corrections<Rational>(g, idx);
    check_field_invariants(g, idx, f, true);
    for (int cls = 0; cls < 3; ++cls) {
        Rational sum(0);
        for (int o = 0; o < 12; ++o) sum += f.per_vertex[g.flat({cls, o})];
        CHECK(sum == 0);
    }

    PartiteGraph bad = PartiteGraph::complete(3, 2);
    bad.remove_edge({0, 0}, {1, 0});
    CliqueIndex bad_idx = CliqueIndex::build(bad);
    CHECK_THROWS_AS(corrections<Rational>(bad, bad_idx), DivisibilityError);
}

TEST_CASE("corrections respect the edge-count deviation ceiling when applicable") {
    // delta = 1/24 meets the edge-bound hypothesis; the correction bound
    // |per_edge| <= 9 delta r * z-ratio follows from the count inequality.
    PartiteGraph g = generate_divisible(3, 24, 1, 3);
    CliqueIndex idx = CliqueIndex::build(g);
    BoundsReport rep = bounds_report(g, idx);
    REQUIRE(rep.edge_applicable);
    REQUIRE(rep.edge_pass);
    CorrectionField<Rational> f = corrections<Rational>(g, idx);
    GraphSummary s = summarize(g);
    // The count inequality scaled by e(G)/(C(r,2) k) centres the corrections
    // at e/(C n^2) - 1 = -delta with radius 9 delta r * e/(C n^2).
    Rational centre_plus_one = Rational(s.edge_total, 3LL * 24 * 24);
    Rational shift = centre_plus_one - 1;
    Rational radius = Rational(9 * 3) * s.delta * centre_plus_one;
    for (const Rational& x : f.per_edge) {
        Rational dev = x < shift ? shift - x : x - shift;
        CHECK(dev <= radius);
    }
}

TEST_CASE("is_zero_sum") {
    PartiteGraph g = PartiteGraph::complete(3, 2);
    CliqueIndex idx = CliqueIndex::build(g);
    CliqueWeighting<Rational> zero(idx);
    CHECK(is_zero_sum(zero));
    zero[0] = Rational(1, 3);
    CHECK_FALSE(is_zero_sum(zero));
    zero[1] = Rational(-1, 3);
    CHECK(is_zero_sum(zero));
}

TEST_CASE("weighting file round trip and rejects") {
    PartiteGraph g = generate_divisible(3, 4, 1, 21);
    CliqueIndex idx = CliqueIndex::build(g);
    std::mt19937_64 rng(2024);
    CliqueWeighting<Rational> w = random_sparse_weighting(idx, rng, 8);
    std::ostringstream out;
    write_weighting(out, w);
    std::istringstream in(out.str());
    CliqueWeighting<Rational> back = read_weighting(in, idx);
    for (CliqueId c = 0; c < idx.k_total(); ++c) CHECK(w[c] == back[c]);

    auto expect_reject = [&](const std::string& text) {
        std::istringstream bad(text);
        CHECK_THROWS_AS(read_weighting(bad, idx), ParseError);
    };
    expect_reject("0:0 1:0\n");                       // too few vertices
    {
        // Duplicate entry for a genuine clique of the host.
        std::ostringstream line;
        for (VertexId v : idx.clique(0)) line << v.cls << ":" << v.off << " ";
        expect_reject(line.str() + "1/2\n" + line.str() + "1/3\n");
    }
    expect_reject("0:0 1:0 2:0 1\n");                 // not num/den
    expect_reject("0:9 1:0 2:0 1/2\n");               // out of range
    expect_reject("0:0 1:0 2:0 1/2 junk\n");          // trailing
}

TEST_CASE("float backend mirrors the rational uniform weighting") {
    PartiteGraph g = generate_divisible(3, 6, 1, 8);
    CliqueIndex idx = CliqueIndex::build(g);
    CliqueWeighting<double> w = uniform_init<double>(g, idx);
    CliqueWeighting<Rational> x = uniform_init<Rational>(g, idx);
    for (CliqueId c = 0; c < idx.k_total(); ++c)
        CHECK(std::abs(w[c] - scalar_traits<Rational>::to_double(x[c])) < 1e-15);
    CorrectionField<double> f = corrections<double>(g, idx);
    check_field_invariants(g, idx, f, true);
}

TEST_CASE("weighting parser rejects a zero denominator") {
    PartiteGraph g = PartiteGraph::complete(3, 2);
    CliqueIndex idx = CliqueIndex::build(g);
    std::istringstream bad("0:0 1:0 2:0 1/0\n");
    CHECK_THROWS_AS(read_weighting(bad, idx), ParseError);
}
