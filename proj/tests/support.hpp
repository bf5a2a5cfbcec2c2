#pragma once

#include <map>
#include <random>
#include <utility>
#include <vector>

#include "fracdec/clique_index.hpp"
#include "fracdec/numeric.hpp"
#include "fracdec/partite_graph.hpp"
#include "fracdec/weighting.hpp"

namespace testsupport {

using namespace fracdec;

using EdgeKey = std::pair<VertexId, VertexId>; // lower class first

inline EdgeKey edge_key(VertexId a, VertexId b) {
    if (b < a) std::swap(a, b);
    return {a, b};
}

/// Independent oracle: edge effects computed straight from the clique
/// tuples, without touching the index's per-edge incidence lists.
template <class S>
std::map<EdgeKey, S> brute_force_edge_effects(const CliqueIndex& idx,
                                              const CliqueWeighting<S>& w) {
    std::map<EdgeKey, S> effects;
    for (CliqueId c = 0; c < idx.k_total(); ++c) {
        if (scalar_traits<S>::is_zero(w[c])) continue;
        auto tuple = idx.clique(c);
        for (std::size_t i = 0; i < tuple.size(); ++i)
            for (std::size_t j = i + 1; j < tuple.size(); ++j)
                effects[edge_key(tuple[i], tuple[j])] += w[c];
    }
    return effects;
}

template <class S>
S effect_or_zero(const std::map<EdgeKey, S>& effects, VertexId a, VertexId b) {
    auto it = effects.find(edge_key(a, b));
    return it == effects.end() ? S(0) : it->second;
}

/// 6-cycle laid out as a balanced tripartite graph on n = 2: divisible,
/// hat_delta = 1, and triangle-free.
inline PartiteGraph tripartite_six_cycle() {
    PartiteGraph g(3, 2);
    g.add_edge({0, 0}, {1, 0});
    g.add_edge({1, 0}, {2, 0});
    g.add_edge({0, 1}, {2, 0});
    g.add_edge({0, 1}, {1, 1});
    g.add_edge({1, 1}, {2, 1});
    g.add_edge({0, 0}, {2, 1});
    return g;
}

/// Small random rational in [-bound_num/bound_den, +bound_num/bound_den].
inline Rational random_rational(std::mt19937_64& rng, int bound_num = 2, int bound_den = 7) {
    int num = static_cast<int>(rng() % (2 * bound_num + 1)) - bound_num;
    int den = 1 + static_cast<int>(rng() % bound_den);
    return Rational(num, den);
}

/// Random sparse weighting with `count` nonzero small rational entries.
inline CliqueWeighting<Rational> random_sparse_weighting(const CliqueIndex& idx,
                                                         std::mt19937_64& rng, int count) {
    CliqueWeighting<Rational> w(idx);
    for (int i = 0; i < count && idx.k_total() > 0; ++i) {
        CliqueId c = static_cast<CliqueId>(rng() % static_cast<std::uint64_t>(idx.k_total()));
        w[c] += random_rational(rng);
    }
    return w;
}

/// Correction entries around v with every class sum equal to zero and each
/// entry within [-1, 1]: small random values recentred per class.
inline std::vector<std::pair<VertexId, Rational>> random_balanced_corrections(
    const PartiteGraph& g, VertexId v, std::mt19937_64& rng) {
    std::vector<std::pair<VertexId, Rational>> out;
    for (int c = 0; c < g.part_count(); ++c) {
        if (c == v.cls) continue;
        auto nbrs = g.neighbours_in(v, c);
        if (nbrs.empty()) continue;
        std::vector<Rational> vals(nbrs.size());
        Rational sum(0);
        for (auto& x : vals) {
            x = random_rational(rng, 1, 4) / 2; // in [-1/2, 1/2]
            sum += x;
        }
        Rational shift = sum / static_cast<std::int64_t>(vals.size());
        for (std::size_t i = 0; i < nbrs.size(); ++i) out.emplace_back(nbrs[i], vals[i] - shift);
    }
    return out;
}

} // namespace testsupport
