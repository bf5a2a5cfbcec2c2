#pragma once

#include <span>
#include <vector>

#include "fracdec/clique_index.hpp"
#include "fracdec/numeric.hpp"

namespace fracdec {

/// Dense vector of clique weights over a frozen CliqueIndex. Signed
/// intermediates (gadget outputs, transport deltas) use the same type; the
/// [0,1] codomain is a property of final verified decompositions only.
/// Entrywise addition is associative and commutative in the exact backend,
/// so per-anchor deltas can be computed independently and merged.
template <class S>
class CliqueWeighting {
public:
    explicit CliqueWeighting(const CliqueIndex& host)
        : host_(&host), values_(static_cast<std::size_t>(host.k_total()), S(0)) {}

    const CliqueIndex& host() const { return *host_; }
    std::int64_t size() const { return static_cast<std::int64_t>(values_.size()); }

    S& operator[](CliqueId id) { return values_[static_cast<std::size_t>(id)]; }
    const S& operator[](CliqueId id) const { return values_[static_cast<std::size_t>(id)]; }

    std::span<S> values() { return values_; }
    std::span<const S> values() const { return values_; }

    void add_scaled(const CliqueWeighting& other, const S& factor) {
        if (other.host_ != host_) throw DomainError("weighting merge across different indices");
        for (std::size_t i = 0; i < values_.size(); ++i)
            if (!scalar_traits<S>::is_zero(other.values_[i]))
                values_[i] += factor * other.values_[i];
    }
    void add(const CliqueWeighting& other) { add_scaled(other, S(1)); }

    void scale(const S& factor) {
        for (auto& v : values_) v *= factor;
    }

private:
    const CliqueIndex* host_;
    std::vector<S> values_;
};

/// Sum of weights of the cliques containing the edge.
template <class S>
S edge_effect(const CliqueWeighting<S>& w, EdgeId e) {
    S total(0);
    for (CliqueId c : w.host().cliques_with_edge(e)) total += w[c];
    return total;
}

template <class S>
S edge_effect(const CliqueWeighting<S>& w, VertexId a, VertexId b) {
    EdgeId e = w.host().edge_id(a, b);
    if (e < 0)
        throw DomainError("edge_effect: " + to_string(a) + " " + to_string(b) +
                          " is not an edge of the host graph");
    return edge_effect(w, e);
}

/// Edge effects for every edge, indexed by edge id. One pass over the
/// incidence lists.
template <class S>
std::vector<S> all_edge_effects(const CliqueWeighting<S>& w) {
    const CliqueIndex& idx = w.host();
    std::vector<S> out(static_cast<std::size_t>(idx.edge_count()), S(0));
    for (EdgeId e = 0; e < idx.edge_count(); ++e) {
        S total(0);
        for (CliqueId c : idx.cliques_with_edge(e)) total += w[c];
        out[static_cast<std::size_t>(e)] = std::move(total);
    }
    return out;
}

template <class S>
bool is_zero_sum(const CliqueWeighting<S>& w) {
    S total(0);
    for (const S& v : w.values()) total += v;
    return scalar_traits<S>::is_zero(total);
}

/// Initial weighting: every clique gets e(G) / (C(r,2) * k_total), so the
/// edge effects average exactly 1.
template <class S>
CliqueWeighting<S> uniform_init(const PartiteGraph& g, const CliqueIndex& idx) {
    const std::int64_t e = g.edge_count();
    const std::int64_t k = idx.k_total();
    if (k == 0 && e > 0)
        throw NoCliquesError("graph has " + std::to_string(e) +
                             " edges but no transversal cliques; no decomposition exists");
    CliqueWeighting<S> w(idx);
    if (k == 0) return w;
    const int r = g.part_count();
    S entry = scalar_traits<S>::ratio(2 * e, static_cast<std::int64_t>(r) * (r - 1) * k);
    for (S& v : w.values()) v = entry;
    return w;
}

/// Per-edge and per-vertex correction targets. Invariants (exact backend):
/// for every v and foreign class i the per-edge entries at v sum to
/// per_vertex[v], and when the host is divisible each class's per-vertex
/// entries sum to zero.
template <class S>
struct CorrectionField {
    std::vector<S> per_edge;   // by edge id
    std::vector<S> per_vertex; // by flat vertex id
};

/// The corrections the pipeline must realize on top of uniform_init:
/// per_edge[e] = z_e * e(G)/(C(r,2) k) - 1, per_vertex accordingly.
template <class S>
CorrectionField<S> corrections(const PartiteGraph& g, const CliqueIndex& idx) {
    GraphSummary s = summarize(g);
    if (!s.divisible) throw DivisibilityError("corrections require a divisible host graph");
    const std::int64_t k = idx.k_total();
    const std::int64_t e = g.edge_count();
    if (k == 0 && e > 0) throw NoCliquesError("no transversal cliques");
    const int r = g.part_count();

    CorrectionField<S> f;
    f.per_edge.assign(static_cast<std::size_t>(idx.edge_count()), S(0));
    f.per_vertex.assign(static_cast<std::size_t>(g.vertex_count()), S(0));
    if (k == 0) return f;

    const S unit = scalar_traits<S>::ratio(2 * e, static_cast<std::int64_t>(r) * (r - 1) * k);
    for (EdgeId eid = 0; eid < idx.edge_count(); ++eid) {
        S z(static_cast<std::int64_t>(idx.cliques_with_edge(eid).size()));
        f.per_edge[static_cast<std::size_t>(eid)] = z * unit - S(1);
    }
    for (int flat = 0; flat < g.vertex_count(); ++flat) {
        VertexId v = g.vertex(flat);
        int foreign = v.cls == 0 ? 1 : 0;
        S through(static_cast<std::int64_t>(idx.cliques_with_vertex(v).size()));
        f.per_vertex[static_cast<std::size_t>(flat)] =
            through * unit - S(g.degree_into(v, foreign));
    }
    return f;
}

/// Checks the CorrectionField invariants against its host; throws
/// DomainError on the first violation. `require_zero_sums` additionally
/// demands per-class per-vertex sums of zero (the anchor stage needs it).
template <class S>
void check_field_invariants(const PartiteGraph& g, const CliqueIndex& idx,
                            const CorrectionField<S>& f, bool require_zero_sums) {
    if (f.per_edge.size() != static_cast<std::size_t>(idx.edge_count()) ||
        f.per_vertex.size() != static_cast<std::size_t>(g.vertex_count()))
        throw DomainError("correction field does not match its host");
    for (int flat = 0; flat < g.vertex_count(); ++flat) {
        VertexId v = g.vertex(flat);
        for (int c = 0; c < g.part_count(); ++c) {
            if (c == v.cls) continue;
            S sum(0);
            for (VertexId u : g.neighbours_in(v, c)) sum += f.per_edge[idx.edge_id(v, u)];
            if (!scalar_traits<S>::equal(sum, f.per_vertex[static_cast<std::size_t>(flat)]))
                throw DomainError("correction field: class sum at " + to_string(v) +
                                  " into class " + std::to_string(c) +
                                  " disagrees with per-vertex value");
        }
    }
    if (require_zero_sums) {
        for (int c = 0; c < g.part_count(); ++c) {
            S sum(0);
            for (int o = 0; o < g.part_size(); ++o)
                sum += f.per_vertex[static_cast<std::size_t>(g.flat({c, o}))];
            if (!scalar_traits<S>::is_zero(sum))
                throw DomainError("correction field: class " + std::to_string(c) +
                                  " has nonzero per-vertex sum");
        }
    }
}

} // namespace fracdec
