#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fracdec/detail/transversal.hpp"
#include "fracdec/weighting.hpp"

namespace fracdec {

/// Star gadget: moves one unit of edge weight from the star {v'u_i} onto the
/// star {vu_i}, for a pair v, v' in class `cls` and one common neighbour u_i
/// per foreign class.
struct StarGadgetSpec {
    int cls = 0;
    VertexId v;
    VertexId v_prime;
    std::vector<VertexId> targets; // one per class != cls, ascending class order

    std::string describe() const;
};

/// Swap gadget: moves one unit of edge weight across a 4-cycle, adding on
/// vu1 and v'u2 and removing on vu2 and v'u1.
struct SwapGadgetSpec {
    VertexId v;
    VertexId v_prime; // same class as v
    VertexId u1;
    VertexId u2; // same foreign class as u1; all four cross edges present

    std::string describe() const;
};

inline std::string StarGadgetSpec::describe() const {
    std::string s = "star v=" + to_string(v) + " v'=" + to_string(v_prime) + " targets";
    for (const VertexId& u : targets) s += " " + to_string(u);
    return s;
}

inline std::string SwapGadgetSpec::describe() const {
    return "swap v=" + to_string(v) + " v'=" + to_string(v_prime) + " u1=" + to_string(u1) +
           " u2=" + to_string(u2);
}

namespace detail {

/// Shared candidate/count state for one star gadget instance. The helper
/// family consists of transversal cliques on the foreign classes whose
/// vertices are adjacent to v, v' and to every target of the *other*
/// classes; the vertex standing in class i must differ from the target u_i.
struct StarFamily {
    std::vector<int> foreign;                       // classes != cls, ascending
    std::vector<std::vector<std::uint64_t>> cand;   // per foreign class
    std::int64_t size = 0;                          // |H|
};

inline StarFamily star_family(const PartiteGraph& g, const StarGadgetSpec& spec) {
    const int r = g.part_count();
    StarFamily fam;
    for (int c = 0; c < r; ++c)
        if (c != spec.cls) fam.foreign.push_back(c);
    fam.cand.resize(fam.foreign.size());
    for (std::size_t d = 0; d < fam.foreign.size(); ++d) {
        int cls = fam.foreign[d];
        auto mask = common_row(g, spec.v, spec.v_prime, cls);
        for (std::size_t t = 0; t < fam.foreign.size(); ++t) {
            if (t == d) continue;
            auto rr = g.row(spec.targets[t], cls);
            for (std::size_t w = 0; w < mask.size(); ++w) mask[w] &= rr[w];
        }
        // a_i = u_i is excluded: with coincidence allowed the per-edge
        // uniqueness that drives the +-1 effect pattern can fail.
        mask[spec.targets[d].off / 64] &= ~(std::uint64_t{1} << (spec.targets[d].off % 64));
        fam.cand[d] = std::move(mask);
    }
    fam.size = count_restricted_cliques(g, fam.foreign, fam.cand);
    return fam;
}

inline void validate_star_spec(const PartiteGraph& g, const StarGadgetSpec& spec) {
    const int r = g.part_count();
    if (spec.cls < 0 || spec.cls >= r) throw DomainError("star gadget: class out of range");
    g.require_valid(spec.v);
    g.require_valid(spec.v_prime);
    if (spec.v.cls != spec.cls || spec.v_prime.cls != spec.cls)
        throw DomainError("star gadget: v and v' must lie in the declared class");
    if (spec.v == spec.v_prime) throw DomainError("star gadget: v and v' must be distinct");
    if (static_cast<int>(spec.targets.size()) != r - 1)
        throw DomainError("star gadget: expected one target per foreign class");
    int expect = 0;
    for (const VertexId& u : spec.targets) {
        if (expect == spec.cls) ++expect;
        g.require_valid(u);
        if (u.cls != expect)
            throw DomainError("star gadget: targets must be in ascending class order");
        if (!g.adjacent(spec.v, u) || !g.adjacent(spec.v_prime, u))
            throw DomainError("star gadget: target " + to_string(u) +
                              " is not a common neighbour of v and v'");
        ++expect;
    }
}

/// Adds scale * psi to acc, where psi is the star gadget's zero-sum clique
/// function: psi(K) = alpha_K * phi(K) / |H|, phi taking +-1 on cliques with
/// exactly one target and v resp. v', -+(r-2) on target-free cliques through
/// v resp. v'. alpha_K is the number of helper cliques completing K; for
/// target-free support it is 1, for single-target support it is the number
/// of valid vertices in the target's class, counted by bitset intersection.
/// Returns the helper family size.
template <class S>
std::int64_t accumulate_star_gadget(const PartiteGraph& g, const CliqueIndex& idx,
                                    const StarGadgetSpec& spec, const S& scale,
                                    std::span<S> acc) {
    validate_star_spec(g, spec);
    const int r = g.part_count();
    const int wpc = g.words_per_class();
    StarFamily fam = star_family(g, spec);
    if (fam.size == 0)
        throw GadgetInfeasibleError("star gadget has an empty helper family: " + spec.describe());

    const S unit = scale / S(fam.size);
    const S step_v = S(-(r - 2)) * unit;
    const S step_vp = S(r - 2) * unit;

    std::vector<VertexId> tuple(r);
    auto clique_entry = [&](VertexId pivot, std::span<const VertexId> rest) {
        tuple[pivot.cls] = pivot;
        for (VertexId w : rest) tuple[w.cls] = w;
        CliqueId id = idx.clique_id(tuple);
        if (id < 0) throw DomainError("gadget support tuple is missing from the host index");
        return id;
    };

    // Target-free support: K = {v} u A or {v'} u A for A in the family, with
    // alpha_K = 1 since the helper must be exactly K minus its pivot.
    for_each_restricted_clique(g, fam.foreign, fam.cand, [&](std::span<const VertexId> A) {
        CliqueId kv = clique_entry(spec.v, A);
        acc[static_cast<std::size_t>(kv)] += step_v;
        CliqueId kvp = clique_entry(spec.v_prime, A);
        acc[static_cast<std::size_t>(kvp)] += step_vp;
    });

    // Single-target support: K = {v, u_t} u B with B transversal over the
    // remaining classes inside the candidate sets.
    std::vector<int> rest_classes(fam.foreign.size() - 1);
    std::vector<std::vector<std::uint64_t>> rest_cand(fam.foreign.size() - 1);
    for (std::size_t t = 0; t < fam.foreign.size(); ++t) {
        const VertexId u_t = spec.targets[t];
        for (std::size_t d = 0, k = 0; d < fam.foreign.size(); ++d) {
            if (d == t) continue;
            rest_classes[k] = fam.foreign[d];
            rest_cand[k] = fam.cand[d];
            ++k;
        }
        const std::vector<std::uint64_t>& completion_base = fam.cand[t];
        std::vector<std::uint64_t> completion(wpc);
        for_each_restricted_clique(
            g, rest_classes, rest_cand, [&](std::span<const VertexId> B) {
                for (int w = 0; w < wpc; ++w) completion[w] = completion_base[w];
                for (VertexId b : B) {
                    auto rr = g.row(b, u_t.cls);
                    for (int w = 0; w < wpc; ++w) completion[w] &= rr[w];
                }
                std::int64_t alpha = 0;
                for (int w = 0; w < wpc; ++w) alpha += std::popcount(completion[w]);
                if (alpha == 0) return;
                S amount = S(alpha) * unit;
                tuple[u_t.cls] = u_t;
                CliqueId kv = clique_entry(spec.v, B);
                acc[static_cast<std::size_t>(kv)] += amount;
                tuple[u_t.cls] = u_t;
                CliqueId kvp = clique_entry(spec.v_prime, B);
                acc[static_cast<std::size_t>(kvp)] -= amount;
            });
    }
    return fam.size;
}

inline void validate_swap_spec(const PartiteGraph& g, const SwapGadgetSpec& spec) {
    g.require_valid(spec.v);
    g.require_valid(spec.v_prime);
    g.require_valid(spec.u1);
    g.require_valid(spec.u2);
    if (spec.v.cls != spec.v_prime.cls || spec.v == spec.v_prime)
        throw DomainError("swap gadget: v and v' must be distinct vertices of one class");
    if (spec.u1.cls != spec.u2.cls || spec.u1 == spec.u2)
        throw DomainError("swap gadget: u1 and u2 must be distinct vertices of one class");
    if (spec.u1.cls == spec.v.cls)
        throw DomainError("swap gadget: the u-class must differ from the v-class");
    if (!g.adjacent(spec.v, spec.u1) || !g.adjacent(spec.v, spec.u2) ||
        !g.adjacent(spec.v_prime, spec.u1) || !g.adjacent(spec.v_prime, spec.u2))
        throw DomainError("swap gadget: all four cross edges must be present");
}

/// Adds scale * psi for the swap gadget: psi(K) = phi(K)/|H| on the cliques
/// {x, y} u A with x in {v,v'}, y in {u1,u2} and A a helper clique in the
/// common neighbourhood of all four corners; phi is +1 when K contains vu1
/// or v'u2, -1 when it contains vu2 or v'u1. Returns the family size.
template <class S>
std::int64_t accumulate_swap_gadget(const PartiteGraph& g, const CliqueIndex& idx,
                                    const SwapGadgetSpec& spec, const S& scale,
                                    std::span<S> acc) {
    validate_swap_spec(g, spec);
    const int r = g.part_count();
    std::vector<int> helper_classes;
    for (int c = 0; c < r; ++c)
        if (c != spec.v.cls && c != spec.u1.cls) helper_classes.push_back(c);
    std::vector<std::vector<std::uint64_t>> cand(helper_classes.size());
    for (std::size_t d = 0; d < helper_classes.size(); ++d) {
        auto mask = common_row(g, spec.v, spec.v_prime, helper_classes[d]);
        auto r1 = g.row(spec.u1, helper_classes[d]);
        auto r2 = g.row(spec.u2, helper_classes[d]);
        for (std::size_t w = 0; w < mask.size(); ++w) mask[w] &= r1[w] & r2[w];
        cand[d] = std::move(mask);
    }
    std::int64_t family = count_restricted_cliques(g, helper_classes, cand);
    if (family == 0)
        throw GadgetInfeasibleError("swap gadget has an empty helper family: " + spec.describe());

    const S unit = scale / S(family);
    std::vector<VertexId> tuple(r);
    auto add = [&](VertexId x, VertexId y, std::span<const VertexId> A, bool plus) {
        tuple[x.cls] = x;
        tuple[y.cls] = y;
        for (VertexId w : A) tuple[w.cls] = w;
        CliqueId id = idx.clique_id(tuple);
        if (id < 0) throw DomainError("gadget support tuple is missing from the host index");
        if (plus)
            acc[static_cast<std::size_t>(id)] += unit;
        else
            acc[static_cast<std::size_t>(id)] -= unit;
    };
    for_each_restricted_clique(g, helper_classes, cand, [&](std::span<const VertexId> A) {
        add(spec.v, spec.u1, A, true);
        add(spec.v_prime, spec.u2, A, true);
        add(spec.v, spec.u2, A, false);
        add(spec.v_prime, spec.u1, A, false);
    });
    return family;
}

} // namespace detail

/// The star gadget's zero-sum weighting: edge effects +1 on each vu_i, -1 on
/// each v'u_i, 0 elsewhere.
template <class S>
CliqueWeighting<S> star_gadget(const PartiteGraph& g, const CliqueIndex& idx,
                               const StarGadgetSpec& spec) {
    CliqueWeighting<S> w(idx);
    detail::accumulate_star_gadget(g, idx, spec, S(1), w.values());
    return w;
}

/// The swap gadget's zero-sum weighting: edge effects +1 on vu1 and v'u2,
/// -1 on vu2 and v'u1, 0 elsewhere.
template <class S>
CliqueWeighting<S> swap_gadget(const PartiteGraph& g, const CliqueIndex& idx,
                               const SwapGadgetSpec& spec) {
    CliqueWeighting<S> w(idx);
    detail::accumulate_swap_gadget(g, idx, spec, S(1), w.values());
    return w;
}

template <class S>
struct StarMove {
    std::vector<VertexId> set; // transversal subset A of N(v), ascending class order
    S amount;                  // sign matches every z_vu, u in A
};

template <class S>
struct SwapMove {
    VertexId u1; // z_vu1 > 0
    VertexId u2; // z_vu2 < 0, same class
    S amount;    // > 0
};

template <class S>
struct CorrectionPlan {
    std::vector<StarMove<S>> star_moves;
    std::vector<SwapMove<S>> swap_moves;
    int iterations = 0;
};

/// Decomposes a correction vector around v (equal class sums required) into
/// star moves and swap moves realizing it exactly:
///   z_vu = sum of a over star moves with u in A
///        + sum of b * (1[u=u1] - 1[u=u2]) over swap moves.
/// Greedy form of the inductive argument: repeatedly take the nonzero entry
/// of minimum absolute value (ties: smallest vertex), pair it against an
/// opposite-sign entry of its class when one exists, otherwise push a star
/// move through one same-sign entry of every class. Each step zeroes at
/// least one entry and never flips a sign, so at most one iteration per
/// nonzero input entry.
template <class S>
CorrectionPlan<S> split_corrections(const PartiteGraph& g, VertexId v,
                                    std::span<const std::pair<VertexId, S>> z) {
    using T = scalar_traits<S>;
    g.require_valid(v);
    const int r = g.part_count();

    // Working copy grouped per class, sorted by vertex for determinism.
    std::vector<std::vector<std::pair<VertexId, S>>> by_class(r);
    for (const auto& [u, value] : z) {
        g.require_valid(u);
        if (u.cls == v.cls) throw DomainError("split_corrections: entry in v's own class");
        if (!g.adjacent(v, u))
            throw DomainError("split_corrections: " + to_string(u) + " is not a neighbour of v");
        by_class[u.cls].emplace_back(u, value);
    }
    for (auto& cls : by_class) {
        std::sort(cls.begin(), cls.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::size_t i = 1; i < cls.size(); ++i)
            if (cls[i].first == cls[i - 1].first)
                throw DomainError("split_corrections: duplicate entry for " +
                                  to_string(cls[i].first));
    }
    std::optional<S> common;
    for (int c = 0; c < r; ++c) {
        if (c == v.cls) continue;
        S sum(0);
        for (const auto& [u, value] : by_class[c]) sum += value;
        if (!common)
            common = sum;
        else if (!T::equal(*common, sum))
            throw DomainError("split_corrections: class sums differ");
    }

    CorrectionPlan<S> plan;
    for (;;) {
        // Global minimum-|z| nonzero entry; ties by vertex.
        int best_cls = -1;
        std::size_t best_i = 0;
        for (int c = 0; c < r; ++c) {
            for (std::size_t i = 0; i < by_class[c].size(); ++i) {
                const auto& [u, value] = by_class[c][i];
                if (T::is_zero(value)) continue;
                if (best_cls < 0 ||
                    T::abs(value) < T::abs(by_class[best_cls][best_i].second) ||
                    (T::abs(value) == T::abs(by_class[best_cls][best_i].second) &&
                     u < by_class[best_cls][best_i].first)) {
                    best_cls = c;
                    best_i = i;
                }
            }
        }
        if (best_cls < 0) break;
        ++plan.iterations;

        auto& pivot = by_class[best_cls][best_i];
        const int sign = T::sign(pivot.second);

        // Opposite-sign partner in the same class, smallest vertex first.
        std::size_t partner = by_class[best_cls].size();
        for (std::size_t i = 0; i < by_class[best_cls].size(); ++i)
            if (T::sign(by_class[best_cls][i].second) == -sign) {
                partner = i;
                break;
            }

        if (partner < by_class[best_cls].size()) {
            auto& other = by_class[best_cls][partner];
            S b = T::abs(pivot.second);
            if (sign > 0)
                plan.swap_moves.push_back({pivot.first, other.first, b});
            else
                plan.swap_moves.push_back({other.first, pivot.first, b});
            other.second += pivot.second;
            pivot.second = S(0);
            if (T::sign(other.second) == sign || T::is_zero(other.second)) other.second = S(0);
        } else {
            // Star move: one same-sign representative per class, the pivot
            // for its own class.
            StarMove<S> move;
            move.amount = pivot.second;
            for (int c = 0; c < r; ++c) {
                if (c == v.cls) continue;
                if (c == best_cls) {
                    move.set.push_back(pivot.first);
                    continue;
                }
                VertexId pick{-1, -1};
                for (const auto& [u, value] : by_class[c])
                    if (T::sign(value) == sign) {
                        pick = u;
                        break;
                    }
                if (pick.cls < 0)
                    throw DomainError(
                        "split_corrections: no same-sign entry in class " + std::to_string(c) +
                        " (class sums were not equal)");
                move.set.push_back(pick);
            }
            for (int c = 0; c < r; ++c) {
                if (c == v.cls) continue;
                VertexId chosen = move.set[static_cast<std::size_t>(c > v.cls ? c - 1 : c)];
                for (auto& [u, value] : by_class[c])
                    if (u == chosen) {
                        value -= move.amount;
                        if (T::is_zero(value) || T::sign(value) == -sign) value = S(0);
                    }
            }
            plan.star_moves.push_back(std::move(move));
        }
    }
    return plan;
}

} // namespace fracdec
