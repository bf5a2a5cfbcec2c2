#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <vector>

#include "fracdec/partite_graph.hpp"

namespace fracdec::detail {

/// Enumerates transversal cliques over `classes` (ascending) where the
/// vertex for classes[d] must lie in cand[d] (a packed mask over that class)
/// and be adjacent to every previously chosen vertex. Visits offset tuples
/// in lexicographic order.
template <class F>
void for_each_restricted_clique(const PartiteGraph& g, std::span<const int> classes,
                                std::span<const std::vector<std::uint64_t>> cand, F&& visit) {
    const int wpc = g.words_per_class();
    const int depth_max = static_cast<int>(classes.size());
    if (depth_max == 0) return;
    std::vector<VertexId> chosen(depth_max);
    std::vector<std::uint64_t> scratch(static_cast<std::size_t>(depth_max) * wpc);

    auto rec = [&](auto&& self, int depth) -> void {
        std::uint64_t* mask = scratch.data() + static_cast<std::size_t>(depth) * wpc;
        const int cls = classes[depth];
        for (int w = 0; w < wpc; ++w) mask[w] = cand[depth][w];
        for (int d = 0; d < depth; ++d) {
            auto rr = g.row(chosen[d], cls);
            for (int w = 0; w < wpc; ++w) mask[w] &= rr[w];
        }
        for (int w = 0; w < wpc; ++w) {
            std::uint64_t bits = mask[w];
            while (bits) {
                int b = std::countr_zero(bits);
                bits &= bits - 1;
                chosen[depth] = {cls, w * 64 + b};
                if (depth + 1 == depth_max)
                    visit(std::span<const VertexId>(chosen.data(), chosen.size()));
                else
                    self(self, depth + 1);
            }
        }
    };
    rec(rec, 0);
}

/// Count-only variant; the last level is a popcount instead of a bit walk.
inline std::int64_t count_restricted_cliques(const PartiteGraph& g, std::span<const int> classes,
                                             std::span<const std::vector<std::uint64_t>> cand) {
    const int wpc = g.words_per_class();
    const int depth_max = static_cast<int>(classes.size());
    if (depth_max == 0) return 0;
    std::vector<VertexId> chosen(depth_max);
    std::vector<std::uint64_t> scratch(static_cast<std::size_t>(depth_max) * wpc);
    std::int64_t count = 0;

    auto rec = [&](auto&& self, int depth) -> void {
        std::uint64_t* mask = scratch.data() + static_cast<std::size_t>(depth) * wpc;
        const int cls = classes[depth];
        for (int w = 0; w < wpc; ++w) mask[w] = cand[depth][w];
        for (int d = 0; d < depth; ++d) {
            auto rr = g.row(chosen[d], cls);
            for (int w = 0; w < wpc; ++w) mask[w] &= rr[w];
        }
        if (depth + 1 == depth_max) {
            for (int w = 0; w < wpc; ++w) count += std::popcount(mask[w]);
            return;
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
    return count;
}

/// Packed mask of N(a) ∩ N(b) within `cls`.
inline std::vector<std::uint64_t> common_row(const PartiteGraph& g, VertexId a, VertexId b,
                                             int cls) {
    const int wpc = g.words_per_class();
    std::vector<std::uint64_t> out(wpc);
    auto ra = g.row(a, cls);
    auto rb = g.row(b, cls);
    for (int w = 0; w < wpc; ++w) out[w] = ra[w] & rb[w];
    return out;
}

} // namespace fracdec::detail
