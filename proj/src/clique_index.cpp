#include "fracdec/clique_index.hpp"

#include <algorithm>
#include <bit>

namespace fracdec {

namespace {

// Depth-first transversal enumeration over the given classes (ascending
// order assumed), intersecting bit rows class by class. Visits offset
// tuples in lexicographic order.
template <class F>
void enumerate_transversal(const PartiteGraph& g, std::span<const int> classes,
                           std::vector<std::uint64_t>& scratch, F&& visit) {
    const int wpc = g.words_per_class();
    const int depth_max = static_cast<int>(classes.size());
    std::vector<VertexId> chosen(depth_max);
    // scratch holds one candidate mask per depth, each wpc words.
    auto mask_at = [&](int depth) { return scratch.data() + static_cast<std::size_t>(depth) * wpc; };

    auto rec = [&](auto&& self, int depth) -> void {
        if (depth == depth_max) {
            visit(std::span<const VertexId>(chosen.data(), chosen.size()));
            return;
        }
        const int cls = classes[depth];
        std::uint64_t* mask = mask_at(depth);
        if (depth == 0) {
            int full = g.part_size();
            for (int w = 0; w < wpc; ++w) {
                int bits = std::min(64, full - w * 64);
                mask[w] = bits <= 0 ? 0 : (bits == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << bits) - 1));
            }
        } else {
            auto first = g.row(chosen[0], cls);
            for (int w = 0; w < wpc; ++w) mask[w] = first[w];
            for (int d = 1; d < depth; ++d) {
                auto rr = g.row(chosen[d], cls);
                for (int w = 0; w < wpc; ++w) mask[w] &= rr[w];
            }
        }
        for (int w = 0; w < wpc; ++w) {
            std::uint64_t bits = mask[w];
            while (bits) {
                int b = std::countr_zero(bits);
                bits &= bits - 1;
                chosen[depth] = {cls, w * 64 + b};
                self(self, depth + 1);
            }
        }
    };
    rec(rec, 0);
}

} // namespace

std::uint64_t CliqueIndex::pack(std::span<const VertexId> tuple) const {
    std::uint64_t key = 0;
    for (auto v : tuple) key = key * static_cast<std::uint64_t>(host_->part_size()) + v.off;
    return key;
}

CliqueIndex CliqueIndex::build(const PartiteGraph& g) {
    CliqueIndex idx;
    idx.host_ = &g;
    idx.r_ = g.part_count();
    const int r = idx.r_;
    const int n = g.part_size();

    std::vector<int> classes(r);
    for (int i = 0; i < r; ++i) classes[i] = i;
    std::vector<std::uint64_t> scratch(static_cast<std::size_t>(r) * g.words_per_class());
    enumerate_transversal(g, classes, scratch, [&](std::span<const VertexId> tuple) {
        idx.tuples_.insert(idx.tuples_.end(), tuple.begin(), tuple.end());
    });
    const std::int64_t k = idx.k_total();

    // Clique id lookup table.
    std::uint64_t span = 1;
    bool small = true;
    for (int i = 0; i < r; ++i) {
        span *= static_cast<std::uint64_t>(n);
        if (span > (std::uint64_t{1} << 24)) {
            small = false;
            break;
        }
    }
    idx.use_radix_ = small;
    if (small) idx.radix_.assign(span, -1);
    for (CliqueId c = 0; c < k; ++c) {
        std::uint64_t key = idx.pack(idx.clique(c));
        if (small)
            idx.radix_[key] = c;
        else
            idx.hash_lookup_.emplace(key, c);
    }

    // Canonical edge enumeration and lookup.
    const std::uint64_t vcount = static_cast<std::uint64_t>(g.vertex_count());
    g.for_each_edge([&](VertexId a, VertexId b) {
        EdgeId e = static_cast<EdgeId>(idx.edges_.size());
        idx.edges_.emplace_back(a, b);
        idx.edge_lookup_.emplace(static_cast<std::uint64_t>(g.flat(a)) * vcount + g.flat(b), e);
    });

    // Incidence lists (CSR): count, prefix, fill.
    std::vector<std::int64_t> vcnt(g.vertex_count(), 0);
    std::vector<std::int64_t> ecnt(idx.edges_.size(), 0);
    for (CliqueId c = 0; c < k; ++c) {
        auto t = idx.clique(c);
        for (int i = 0; i < r; ++i) {
            ++vcnt[g.flat(t[i])];
            for (int j = i + 1; j < r; ++j) ++ecnt[idx.edge_id(t[i], t[j])];
        }
    }
    idx.per_vertex_off_.assign(g.vertex_count() + 1, 0);
    for (int f = 0; f < g.vertex_count(); ++f) idx.per_vertex_off_[f + 1] = idx.per_vertex_off_[f] + vcnt[f];
    idx.per_vertex_data_.resize(idx.per_vertex_off_.back());
    idx.per_edge_off_.assign(idx.edges_.size() + 1, 0);
    for (std::size_t e = 0; e < idx.edges_.size(); ++e) idx.per_edge_off_[e + 1] = idx.per_edge_off_[e] + ecnt[e];
    idx.per_edge_data_.resize(idx.per_edge_off_.back());
    std::vector<std::int64_t> vfill = idx.per_vertex_off_;
    std::vector<std::int64_t> efill = idx.per_edge_off_;
    for (CliqueId c = 0; c < k; ++c) {
        auto t = idx.clique(c);
        for (int i = 0; i < r; ++i) {
            idx.per_vertex_data_[vfill[g.flat(t[i])]++] = c;
            for (int j = i + 1; j < r; ++j) idx.per_edge_data_[efill[idx.edge_id(t[i], t[j])]++] = c;
        }
    }
    return idx;
}

CliqueId CliqueIndex::clique_id(std::span<const VertexId> tuple) const {
    if (static_cast<int>(tuple.size()) != r_) return -1;
    for (int i = 0; i < r_; ++i)
        if (tuple[i].cls != i || tuple[i].off < 0 || tuple[i].off >= host_->part_size()) return -1;
    std::uint64_t key = pack(tuple);
    if (use_radix_) return radix_[key];
    auto it = hash_lookup_.find(key);
    return it == hash_lookup_.end() ? -1 : it->second;
}

EdgeId CliqueIndex::edge_id(VertexId a, VertexId b) const {
    if (a.cls > b.cls) std::swap(a, b);
    auto it = edge_lookup_.find(static_cast<std::uint64_t>(host_->flat(a)) *
                                    static_cast<std::uint64_t>(host_->vertex_count()) +
                                host_->flat(b));
    return it == edge_lookup_.end() ? -1 : it->second;
}

std::int64_t count_partial(const PartiteGraph& g, std::span<const int> classes) {
    if (classes.empty()) throw DomainError("count_partial: class set must be nonempty");
    std::vector<int> sorted(classes.begin(), classes.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw DomainError("count_partial: duplicate class index");
    if (sorted.front() < 0 || sorted.back() >= g.part_count())
        throw DomainError("count_partial: class index out of range");
    std::int64_t count = 0;
    std::vector<std::uint64_t> scratch(sorted.size() * g.words_per_class());
    enumerate_transversal(g, sorted, scratch, [&](std::span<const VertexId>) { ++count; });
    return count;
}

BoundsReport bounds_report(const PartiteGraph& g, const CliqueIndex& idx) {
    const int r = g.part_count();
    const int n = g.part_size();
    GraphSummary s = summarize(g);
    BoundsReport rep;
    rep.delta = s.delta;

    rep.ratio_applicable = rep.delta <= Rational(1, 2 * r);
    if (rep.ratio_applicable) {
        rep.ratio_pass = true;
        // All I with |I| >= r-2; k_I cached per subset mask.
        std::vector<std::int64_t> k_of(std::size_t{1} << r, -1);
        auto k_for = [&](unsigned mask) {
            if (mask == 0) return std::int64_t{1};
            if (k_of[mask] >= 0) return k_of[mask];
            std::vector<int> cls;
            for (int i = 0; i < r; ++i)
                if (mask >> i & 1) cls.push_back(i);
            return k_of[mask] = count_partial(g, cls);
        };
        const Rational upper_factor = Rational(1) + Rational(2 * r) * rep.delta;
        for (unsigned mask = 1; mask < (std::uint32_t{1} << r); ++mask) {
            if (std::popcount(mask) < r - 2) continue;
            std::int64_t k_full = k_for(mask);
            for (int i = 0; i < r; ++i) {
                if (!(mask >> i & 1)) continue;
                std::int64_t k_red = k_for(mask & ~(1u << i));
                bool ok = Rational(k_full, n) <= Rational(k_red) &&
                          Rational(k_red) <= upper_factor * Rational(k_full, n);
                if (!ok) {
                    rep.ratio_pass = false;
                    BoundsReport::RatioWitness w;
                    for (int c = 0; c < r; ++c)
                        if (mask >> c & 1) w.classes.push_back(c);
                    w.removed = i;
                    w.k_full = k_full;
                    w.k_reduced = k_red;
                    rep.ratio_failures.push_back(std::move(w));
                }
            }
        }
    }

    rep.edge_applicable = rep.delta <= Rational(1, 8 * r);
    if (rep.edge_applicable) {
        rep.edge_pass = true;
        const Rational k_over_n2 = Rational(idx.k_total(), std::int64_t{n} * n);
        const Rational ceiling = Rational(9 * r) * rep.delta * k_over_n2;
        for (EdgeId e = 0; e < idx.edge_count(); ++e) {
            Rational z(static_cast<std::int64_t>(idx.cliques_with_edge(e).size()));
            Rational dev = z - k_over_n2;
            if (dev < 0) dev = -dev;
            if (dev > ceiling) {
                rep.edge_pass = false;
                rep.edge_failures.push_back({e, static_cast<std::int64_t>(idx.cliques_with_edge(e).size())});
            }
        }
    }
    return rep;
}

} // namespace fracdec
