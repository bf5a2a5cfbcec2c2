#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fracdec/errors.hpp"
#include "fracdec/numeric.hpp"

namespace fracdec {

/// Identity of a vertex: class index in [0, r) and offset within the class
/// in [0, n). Ordered lexicographically by (class, offset).
struct VertexId {
    std::int32_t cls = 0;
    std::int32_t off = 0;

    friend auto operator<=>(const VertexId&, const VertexId&) = default;
};

std::string to_string(VertexId v);

/// Balanced r-partite graph with bit-packed adjacency rows. For each vertex
/// the neighbourhood is stored per foreign class as a block of words, so
/// membership tests are O(1) and candidate-set intersections are
/// word-parallel. Instances are treated as immutable once built; the
/// mutating calls exist for construction (parser, generator) only.
class PartiteGraph {
public:
    PartiteGraph(int r, int n);

    static PartiteGraph complete(int r, int n);

    int part_count() const { return r_; }
    int part_size() const { return n_; }
    int vertex_count() const { return r_ * n_; }
    int words_per_class() const { return wpc_; }

    int flat(VertexId v) const { return v.cls * n_ + v.off; }
    VertexId vertex(int flat) const { return {flat / n_, flat % n_}; }

    bool valid(VertexId v) const {
        return v.cls >= 0 && v.cls < r_ && v.off >= 0 && v.off < n_;
    }
    void require_valid(VertexId v) const;

    /// Adds the edge if absent; returns false if it was already present.
    /// Same-class or out-of-range endpoints are domain errors.
    bool add_edge(VertexId a, VertexId b);
    bool remove_edge(VertexId a, VertexId b);

    bool adjacent(VertexId a, VertexId b) const;

    /// Packed membership words of N(v) ∩ V_cls.
    std::span<const std::uint64_t> row(VertexId v, int cls) const {
        return {&bits_[(static_cast<std::size_t>(flat(v)) * r_ + cls) * wpc_],
                static_cast<std::size_t>(wpc_)};
    }

    /// |N(v) ∩ V_j|; j must be a foreign class.
    int degree_into(VertexId v, int j) const;

    std::vector<VertexId> neighbours_in(VertexId v, int cls) const;

    std::int64_t edge_count() const;

    /// Visits edges in canonical order: class pairs (i, j) with i < j
    /// ascending, then (offset_i, offset_j) lexicographic.
    template <class F>
    void for_each_edge(F&& f) const {
        for (int i = 0; i < r_; ++i)
            for (int j = i + 1; j < r_; ++j)
                for (int oi = 0; oi < n_; ++oi) {
                    VertexId u{i, oi};
                    for (int oj = 0; oj < n_; ++oj)
                        if (adjacent(u, VertexId{j, oj})) f(u, VertexId{j, oj});
                }
    }

private:
    int r_;
    int n_;
    int wpc_; // words per class block
    std::vector<std::uint64_t> bits_;

    void set_bit(VertexId a, VertexId b, bool value);
};

/// Degree/divisibility summary of a graph.
struct GraphSummary {
    int hat_delta = 0;            // min over vertices and foreign classes of d(v, V_j)
    Rational delta;               // 1 - hat_delta / n
    bool divisible = false;       // all foreign degrees equal per vertex
    std::int64_t edge_total = 0;
    std::vector<std::int64_t> edges_between; // r*r, [i*r+j] = edges between V_i and V_j
};

GraphSummary summarize(const PartiteGraph& g);

enum class RichMode { exact, certified };

/// Whether `set` (a subset of class `cls`) is neighbour-rich: every choice of
/// at most r foreign vertices has a common neighbourhood covering at least
/// half of `set`. Exact mode enumerates all such choices (exponential in r,
/// for small instances only). Certified mode is a sound, incomplete
/// overapproximation: it sums the r largest per-vertex miss counts.
bool is_neighbour_rich(const PartiteGraph& g, int cls, std::span<const VertexId> set,
                       RichMode mode);

/// Divisible test instance: complete r-partite graph minus, for every class
/// pair, the union of `matchings` pairwise-disjoint perfect matchings drawn
/// from a seeded permutation. Every foreign degree equals n - matchings.
PartiteGraph generate_divisible(int r, int n, int matchings, std::uint64_t seed);

/// Balanced induced subgraph together with the vertex maps in both
/// directions. Sub offsets follow the parent order within each class.
struct InducedSubgraph {
    PartiteGraph graph;
    std::vector<std::vector<VertexId>> to_parent; // [cls][sub off] -> parent vertex
    std::vector<std::int32_t> to_sub;             // parent flat -> sub flat, -1 outside
};

InducedSubgraph induce_balanced(const PartiteGraph& g,
                                const std::vector<std::vector<VertexId>>& chosen);

} // namespace fracdec
