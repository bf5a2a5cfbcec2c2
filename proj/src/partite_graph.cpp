#include "fracdec/partite_graph.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <random>

namespace fracdec {

std::string to_string(VertexId v) {
    return std::to_string(v.cls) + ":" + std::to_string(v.off);
}

PartiteGraph::PartiteGraph(int r, int n) : r_(r), n_(n) {
    if (r < 3) throw DomainError("part count must be at least 3, got " + std::to_string(r));
    if (n < 1) throw DomainError("part size must be at least 1, got " + std::to_string(n));
    wpc_ = (n + 63) / 64;
    bits_.assign(static_cast<std::size_t>(r_) * n_ * r_ * wpc_, 0);
}

PartiteGraph PartiteGraph::complete(int r, int n) {
    PartiteGraph g(r, n);
    for (int i = 0; i < r; ++i)
        for (int j = i + 1; j < r; ++j)
            for (int oi = 0; oi < n; ++oi)
                for (int oj = 0; oj < n; ++oj) g.add_edge({i, oi}, {j, oj});
    return g;
}

void PartiteGraph::require_valid(VertexId v) const {
    if (!valid(v)) throw DomainError("vertex " + to_string(v) + " out of range");
}

void PartiteGraph::set_bit(VertexId a, VertexId b, bool value) {
    auto idx = [&](VertexId x, VertexId y) {
        return (static_cast<std::size_t>(flat(x)) * r_ + y.cls) * wpc_ + y.off / 64;
    };
    std::uint64_t mask_b = std::uint64_t{1} << (b.off % 64);
    std::uint64_t mask_a = std::uint64_t{1} << (a.off % 64);
    if (value) {
        bits_[idx(a, b)] |= mask_b;
        bits_[idx(b, a)] |= mask_a;
    } else {
        bits_[idx(a, b)] &= ~mask_b;
        bits_[idx(b, a)] &= ~mask_a;
    }
}

bool PartiteGraph::add_edge(VertexId a, VertexId b) {
    require_valid(a);
    require_valid(b);
    if (a.cls == b.cls)
        throw DomainError("edge " + to_string(a) + " " + to_string(b) +
                          " joins two vertices of the same class");
    if (adjacent(a, b)) return false;
    set_bit(a, b, true);
    return true;
}

bool PartiteGraph::remove_edge(VertexId a, VertexId b) {
    require_valid(a);
    require_valid(b);
    if (a.cls == b.cls) throw DomainError("intra-class pair has no edge to remove");
    if (!adjacent(a, b)) return false;
    set_bit(a, b, false);
    return true;
}

bool PartiteGraph::adjacent(VertexId a, VertexId b) const {
    if (a.cls == b.cls) return false;
    return (row(a, b.cls)[b.off / 64] >> (b.off % 64)) & 1;
}

int PartiteGraph::degree_into(VertexId v, int j) const {
    require_valid(v);
    if (j < 0 || j >= r_) throw DomainError("class index " + std::to_string(j) + " out of range");
    if (j == v.cls)
        throw DomainError("degree_into: class " + std::to_string(j) + " is the class of " +
                          to_string(v));
    int count = 0;
    for (std::uint64_t w : row(v, j)) count += std::popcount(w);
    return count;
}

std::vector<VertexId> PartiteGraph::neighbours_in(VertexId v, int cls) const {
    std::vector<VertexId> out;
    auto words = row(v, cls);
    for (int w = 0; w < wpc_; ++w) {
        std::uint64_t bits = words[w];
        while (bits) {
            int b = std::countr_zero(bits);
            out.push_back({cls, w * 64 + b});
            bits &= bits - 1;
        }
    }
    return out;
}

std::int64_t PartiteGraph::edge_count() const {
    std::int64_t twice = 0;
    for (int f = 0; f < vertex_count(); ++f) {
        VertexId v = vertex(f);
        for (int c = 0; c < r_; ++c) {
            if (c == v.cls) continue;
            for (std::uint64_t w : row(v, c)) twice += std::popcount(w);
        }
    }
    return twice / 2;
}

GraphSummary summarize(const PartiteGraph& g) {
    const int r = g.part_count();
    const int n = g.part_size();
    GraphSummary s;
    s.hat_delta = n;
    s.divisible = true;
    s.edges_between.assign(static_cast<std::size_t>(r) * r, 0);
    for (int f = 0; f < g.vertex_count(); ++f) {
        VertexId v = g.vertex(f);
        int first = -1;
        for (int c = 0; c < r; ++c) {
            if (c == v.cls) continue;
            int d = g.degree_into(v, c);
            s.hat_delta = std::min(s.hat_delta, d);
            s.edges_between[static_cast<std::size_t>(v.cls) * r + c] += d;
            if (first < 0)
                first = d;
            else if (d != first)
                s.divisible = false;
        }
    }
    s.delta = Rational(1) - Rational(s.hat_delta, n);
    for (int i = 0; i < r; ++i)
        for (int j = i + 1; j < r; ++j) s.edge_total += s.edges_between[static_cast<std::size_t>(i) * r + j];
    return s;
}

namespace {

// Exhaustive neighbour-rich check: depth-first over foreign vertex subsets W
// of size <= r, intersecting the packed membership of `set` with each row.
// Subsets of smaller size are checked at the interior nodes of the search.
bool exact_rich(const PartiteGraph& g, int cls, int set_size, const std::vector<int>& foreign,
                std::size_t start, const std::vector<std::uint64_t>& inter, int depth) {
    const int wpc = g.words_per_class();
    for (std::size_t i = start; i < foreign.size(); ++i) {
        VertexId u = g.vertex(foreign[i]);
        auto nbr = g.row(u, cls);
        std::vector<std::uint64_t> next(wpc);
        int cover = 0;
        for (int w = 0; w < wpc; ++w) {
            next[w] = inter[w] & nbr[w];
            cover += std::popcount(next[w]);
        }
        if (2 * cover < set_size) return false;
        if (depth + 1 < g.part_count())
            if (!exact_rich(g, cls, set_size, foreign, i + 1, next, depth + 1)) return false;
    }
    return true;
}

} // namespace

bool is_neighbour_rich(const PartiteGraph& g, int cls, std::span<const VertexId> set,
                       RichMode mode) {
    if (cls < 0 || cls >= g.part_count()) throw DomainError("class index out of range");
    if (set.empty()) throw DomainError("neighbour-rich check needs a nonempty set");
    const int wpc = g.words_per_class();
    std::vector<std::uint64_t> set_mask(wpc, 0);
    for (VertexId v : set) {
        g.require_valid(v);
        if (v.cls != cls)
            throw DomainError("set vertex " + to_string(v) + " lies outside class " +
                              std::to_string(cls));
        set_mask[v.off / 64] |= std::uint64_t{1} << (v.off % 64);
    }
    int set_size = 0;
    for (auto w : set_mask) set_size += std::popcount(w);
    if (set_size != static_cast<int>(set.size()))
        throw DomainError("neighbour-rich set contains duplicates");

    if (mode == RichMode::certified) {
        // Sound bound: any W of size <= r misses at most the sum of the r
        // largest per-vertex miss counts, so coverage >= |set| - that sum.
        std::vector<int> misses;
        misses.reserve(static_cast<std::size_t>(g.part_count() - 1) * g.part_size());
        for (int c = 0; c < g.part_count(); ++c) {
            if (c == cls) continue;
            for (int o = 0; o < g.part_size(); ++o) {
                auto rr = g.row({c, o}, cls);
                int hit = 0;
                for (int w = 0; w < wpc; ++w) hit += std::popcount(rr[w] & set_mask[w]);
                misses.push_back(set_size - hit);
            }
        }
        int take = std::min<int>(g.part_count(), static_cast<int>(misses.size()));
        std::partial_sort(misses.begin(), misses.begin() + take, misses.end(),
                          std::greater<int>());
        long long worst = std::accumulate(misses.begin(), misses.begin() + take, 0LL);
        return 2 * worst <= set_size;
    }

    std::vector<int> foreign;
    for (int c = 0; c < g.part_count(); ++c) {
        if (c == cls) continue;
        for (int o = 0; o < g.part_size(); ++o) foreign.push_back(g.flat({c, o}));
    }
    return exact_rich(g, cls, set_size, foreign, 0, set_mask, 0);
}

namespace {

// Portable Fisher-Yates; std::shuffle's draw sequence is implementation
// defined, and generated instances must be reproducible across platforms.
std::vector<int> seeded_permutation(int n, std::uint64_t seed) {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(seed);
    for (int i = n - 1; i > 0; --i) {
        int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
        std::swap(perm[i], perm[j]);
    }
    return perm;
}

} // namespace

InducedSubgraph induce_balanced(const PartiteGraph& g,
                                const std::vector<std::vector<VertexId>>& chosen) {
    const int r = g.part_count();
    if (static_cast<int>(chosen.size()) != r)
        throw DomainError("induce_balanced: one vertex list per class required");
    const std::size_t s = chosen.front().size();
    if (s == 0) throw DomainError("induce_balanced: empty class");
    for (int c = 0; c < r; ++c) {
        if (chosen[c].size() != s)
            throw DomainError("induce_balanced: class lists must have equal sizes");
        for (std::size_t i = 0; i < chosen[c].size(); ++i) {
            g.require_valid(chosen[c][i]);
            if (chosen[c][i].cls != c)
                throw DomainError("induce_balanced: vertex " + to_string(chosen[c][i]) +
                                  " listed under class " + std::to_string(c));
            if (i > 0 && !(chosen[c][i - 1] < chosen[c][i]))
                throw DomainError("induce_balanced: class lists must be strictly ascending");
        }
    }
    InducedSubgraph out{PartiteGraph(r, static_cast<int>(s)), chosen,
                        std::vector<std::int32_t>(g.vertex_count(), -1)};
    for (int c = 0; c < r; ++c)
        for (std::size_t i = 0; i < s; ++i)
            out.to_sub[g.flat(chosen[c][i])] = out.graph.flat({c, static_cast<int>(i)});
    for (int i = 0; i < r; ++i)
        for (int j = i + 1; j < r; ++j)
            for (std::size_t oi = 0; oi < s; ++oi)
                for (std::size_t oj = 0; oj < s; ++oj)
                    if (g.adjacent(chosen[i][oi], chosen[j][oj]))
                        out.graph.add_edge({i, static_cast<int>(oi)}, {j, static_cast<int>(oj)});
    return out;
}

PartiteGraph generate_divisible(int r, int n, int matchings, std::uint64_t seed) {
    if (matchings < 0 || matchings > n)
        throw DomainError("matchings per pair must lie in [0, n], got " +
                          std::to_string(matchings));
    PartiteGraph g = PartiteGraph::complete(r, n);
    for (int i = 0; i < r; ++i)
        for (int j = i + 1; j < r; ++j) {
            std::uint64_t pair_seed =
                seed ^ (0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(i) * r + j + 1));
            std::vector<int> perm = seeded_permutation(n, pair_seed);
            // Matching m joins offset t to perm[(t + m) mod n]; distinct m are
            // disjoint, so each vertex of the pair loses exactly `matchings`.
            for (int m = 0; m < matchings; ++m)
                for (int t = 0; t < n; ++t) g.remove_edge({i, t}, {j, perm[(t + m) % n]});
        }
    return g;
}

} // namespace fracdec
