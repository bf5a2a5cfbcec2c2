#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "fracdec/numeric.hpp"
#include "fracdec/partite_graph.hpp"

namespace fracdec {

using CliqueId = std::int32_t;
using EdgeId = std::int32_t;

/// Frozen enumeration of every transversal r-clique of a host graph,
/// together with per-edge and per-vertex incidence lists. Enumeration order
/// is deterministic: lexicographic in the offset tuples (one vertex per
/// class, classes ascending). Pipeline stages treat the index as an
/// immutable universe; weightings are vectors over it.
class CliqueIndex {
public:
    static CliqueIndex build(const PartiteGraph& g);

    const PartiteGraph& host() const { return *host_; }
    int r() const { return r_; }
    std::int64_t k_total() const { return static_cast<std::int64_t>(tuples_.size()) / r_; }

    /// The clique's vertices, one per class, classes ascending.
    std::span<const VertexId> clique(CliqueId id) const {
        return {&tuples_[static_cast<std::size_t>(id) * r_], static_cast<std::size_t>(r_)};
    }

    /// Id of the clique on the given transversal tuple (classes ascending),
    /// or -1 if the tuple is not a clique of the host.
    CliqueId clique_id(std::span<const VertexId> tuple) const;

    std::int64_t edge_count() const { return static_cast<std::int64_t>(edges_.size()); }
    std::pair<VertexId, VertexId> edge(EdgeId e) const { return edges_[e]; }
    /// -1 when (a, b) is not an edge of the host. Endpoint order is free.
    EdgeId edge_id(VertexId a, VertexId b) const;

    std::span<const CliqueId> cliques_with_edge(EdgeId e) const {
        return {per_edge_data_.data() + per_edge_off_[e],
                static_cast<std::size_t>(per_edge_off_[e + 1] - per_edge_off_[e])};
    }
    std::span<const CliqueId> cliques_with_vertex(VertexId v) const {
        int f = host_->flat(v);
        return {per_vertex_data_.data() + per_vertex_off_[f],
                static_cast<std::size_t>(per_vertex_off_[f + 1] - per_vertex_off_[f])};
    }

private:
    const PartiteGraph* host_ = nullptr;
    int r_ = 0;
    std::vector<VertexId> tuples_;     // r entries per clique
    std::vector<std::pair<VertexId, VertexId>> edges_; // canonical order
    std::unordered_map<std::uint64_t, EdgeId> edge_lookup_;
    std::vector<std::int64_t> per_edge_off_;
    std::vector<CliqueId> per_edge_data_;
    std::vector<std::int64_t> per_vertex_off_;
    std::vector<CliqueId> per_vertex_data_;
    // Clique id lookup: dense radix table when n^r is small enough,
    // otherwise a hash map on the packed offset tuple.
    std::vector<CliqueId> radix_;
    std::unordered_map<std::uint64_t, CliqueId> hash_lookup_;
    bool use_radix_ = false;

    std::uint64_t pack(std::span<const VertexId> tuple) const;
};

/// k_I: the number of |I|-cliques with one vertex in V_i for each i in I.
/// Classes may be passed in any order; I must be nonempty.
std::int64_t count_partial(const PartiteGraph& g, std::span<const int> classes);

/// Diagnostic evaluation of the clique-count inequalities. Each inequality
/// is gated on its own hypothesis about delta = 1 - hat_delta/n:
///   - ratio bound   k_I/n <= k_{I\{i}} <= (1+2*delta*r) k_I/n   (delta <= 1/2r),
///     checked for every I with |I| >= r-2 and every i in I;
///   - edge bound    |z_e - k/n^2| <= 9*delta*r*k/n^2            (delta <= 1/8r),
///     checked for every edge.
struct BoundsReport {
    Rational delta;
    bool ratio_applicable = false;
    bool ratio_pass = false;
    struct RatioWitness {
        std::vector<int> classes; // the set I
        int removed;              // i
        std::int64_t k_full;      // k_I
        std::int64_t k_reduced;   // k_{I\{i}}
    };
    std::vector<RatioWitness> ratio_failures;

    bool edge_applicable = false;
    bool edge_pass = false;
    struct EdgeWitness {
        EdgeId edge;
        std::int64_t z_e;
    };
    std::vector<EdgeWitness> edge_failures;
};

BoundsReport bounds_report(const PartiteGraph& g, const CliqueIndex& idx);

} // namespace fracdec
