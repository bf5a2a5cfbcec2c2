#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "fracdec/gadgets.hpp"
#include "fracdec/weighting.hpp"

namespace fracdec {

/// Recorded magnitude ceilings. `applicable` is false when the instance
/// violates the degree hypothesis the ceilings depend on; the tiers are then
/// left empty rather than failed.
struct MagnitudeDiagnostics {
    bool applicable = false;
    std::string hypothesis;
    struct Tier {
        std::string label;
        double max_ratio = 0.0; // max |value| / ceiling over the tier, as double
        std::int64_t checked = 0;
        bool pass = true;
    };
    std::vector<Tier> tiers;
    bool pass() const {
        for (const auto& t : tiers)
            if (!t.pass) return false;
        return true;
    }
};

template <class S>
struct TransportReport {
    /// Corrections not yet realized, confined to the stage's declared
    /// target set (edges inside the sweep set; empty for the anchor stage).
    std::vector<std::pair<EdgeId, S>> residual_edges;
    std::optional<MagnitudeDiagnostics> bounds;
};

template <class S>
struct StageResult {
    CliqueWeighting<S> delta;
    TransportReport<S> report;
};

/// Cumulative wall-clock seconds per pipeline stage, filled when a caller
/// hands the options a sink.
struct StageTimings {
    double outer_sweep_s = 0;
    double inner_sweep_s = 0;
};

struct TransportOptions {
    RichMode richness = RichMode::certified;
    /// Check the exact effect identities of each stage after building it.
    bool verify = true;
    /// Record magnitude ceilings (pass/fail) when the degree hypotheses hold.
    bool diagnostics = true;
    int threads = 1;
    /// Optional per-stage trace sink.
    std::function<void(const std::string&)> trace;
    StageTimings* timings = nullptr;
};

/// How decompose chooses anchors.
struct AnchorMode {
    enum class Kind { single, sample, all };
    Kind kind = Kind::single;
    CliqueId anchor = 0;     // single
    int count = 1;           // sample
    std::uint64_t seed = 0;  // sample

    static AnchorMode single(CliqueId id) { return {Kind::single, id, 1, 0}; }
    static AnchorMode sample(int count, std::uint64_t seed) { return {Kind::sample, 0, count, seed}; }
    static AnchorMode all() { return {Kind::all, 0, 1, 0}; }
};

namespace detail {

inline void trace_line(const TransportOptions& opts, const std::string& line) {
    if (opts.trace) opts.trace(line);
}

/// One move-plan application: split v's corrections into gadget moves and
/// average each move over its eligible partner vertices inside the target
/// set. Adds scale * psi to acc. The outer loop runs over partners so that
/// consecutive writes stay inside one partner's slab of the clique table.
template <class S>
void accumulate_move(const PartiteGraph& g, const CliqueIndex& idx, VertexId v,
                     std::span<const std::pair<VertexId, S>> z,
                     std::span<const VertexId> target_list,
                     const std::vector<std::uint64_t>& target_mask, const S& scale,
                     std::span<S> acc, const TransportOptions& opts) {
    using T = scalar_traits<S>;
    const int wpc = g.words_per_class();
    for (const auto& [u, value] : z)
        if (!T::within_unit(value))
            throw DomainError("move: correction at " + to_string(u) + " exceeds 1 in magnitude");

    CorrectionPlan<S> plan = split_corrections(g, v, z);
    if (opts.trace)
        trace_line(opts, "  move at " + to_string(v) + ": " +
                                std::to_string(plan.star_moves.size()) + " star + " +
                                std::to_string(plan.swap_moves.size()) + " swap moves");

    struct PreparedStar {
        const StarMove<S>* move;
        std::vector<std::uint64_t> elig;
        S coeff;
    };
    struct PreparedSwap {
        const SwapMove<S>* move;
        std::vector<std::uint64_t> elig;
        S coeff;
    };
    std::vector<PreparedStar> stars;
    std::vector<PreparedSwap> swaps;
    stars.reserve(plan.star_moves.size());
    swaps.reserve(plan.swap_moves.size());

    auto popcount_all = [&](const std::vector<std::uint64_t>& m) {
        std::int64_t c = 0;
        for (auto w : m) c += std::popcount(w);
        return c;
    };

    for (const StarMove<S>& mv : plan.star_moves) {
        std::vector<std::uint64_t> elig = target_mask;
        for (VertexId u : mv.set) {
            auto rr = g.row(u, v.cls);
            for (int w = 0; w < wpc; ++w) elig[w] &= rr[w];
        }
        std::int64_t count = popcount_all(elig);
        if (count == 0) {
            std::string set;
            for (VertexId u : mv.set) set += " " + to_string(u);
            throw EmptyIntersectionError("star move at " + to_string(v) + " through" + set +
                                         " has no eligible partner in the target set");
        }
        stars.push_back({&mv, std::move(elig), scale * mv.amount / S(count)});
    }
    for (const SwapMove<S>& mv : plan.swap_moves) {
        std::vector<std::uint64_t> elig = target_mask;
        auto r1 = g.row(mv.u1, v.cls);
        auto r2 = g.row(mv.u2, v.cls);
        for (int w = 0; w < wpc; ++w) elig[w] &= r1[w] & r2[w];
        std::int64_t count = popcount_all(elig);
        if (count == 0)
            throw EmptyIntersectionError("swap move at " + to_string(v) + " between " +
                                         to_string(mv.u1) + " and " + to_string(mv.u2) +
                                         " has no eligible partner in the target set");
        swaps.push_back({&mv, std::move(elig), scale * mv.amount / S(count)});
    }

    StarGadgetSpec star_spec;
    star_spec.cls = v.cls;
    star_spec.v = v;
    SwapGadgetSpec swap_spec;
    swap_spec.v = v;
    for (VertexId partner : target_list) {
        const std::uint64_t bit_word = static_cast<std::uint64_t>(partner.off) / 64;
        const std::uint64_t bit_mask = std::uint64_t{1} << (partner.off % 64);
        for (const PreparedStar& ps : stars) {
            if (!(ps.elig[bit_word] & bit_mask)) continue;
            star_spec.v_prime = partner;
            star_spec.targets = ps.move->set;
            std::int64_t family =
                accumulate_star_gadget(g, idx, star_spec, ps.coeff, acc);
            if (opts.trace)
                trace_line(opts, "    star gadget v'=" + to_string(partner) +
                                        " helpers=" + std::to_string(family));
        }
        for (const PreparedSwap& ps : swaps) {
            if (!(ps.elig[bit_word] & bit_mask)) continue;
            swap_spec.v_prime = partner;
            swap_spec.u1 = ps.move->u1;
            swap_spec.u2 = ps.move->u2;
            std::int64_t family =
                accumulate_swap_gadget(g, idx, swap_spec, ps.coeff, acc);
            if (opts.trace)
                trace_line(opts, "    swap gadget v'=" + to_string(partner) +
                                        " helpers=" + std::to_string(family));
        }
    }
}

/// Collects the correction entries at v from a per-edge vector, skipping
/// exact zeros.
template <class S>
std::vector<std::pair<VertexId, S>> corrections_at(const PartiteGraph& g, const CliqueIndex& idx,
                                                   std::span<const S> per_edge, VertexId v) {
    std::vector<std::pair<VertexId, S>> out;
    for (int c = 0; c < g.part_count(); ++c) {
        if (c == v.cls) continue;
        for (VertexId u : g.neighbours_in(v, c)) {
            const S& value = per_edge[static_cast<std::size_t>(idx.edge_id(v, u))];
            if (!scalar_traits<S>::is_zero(value)) out.emplace_back(u, value);
        }
    }
    return out;
}

template <class S>
std::vector<std::uint64_t> mask_of(const PartiteGraph& g, std::span<const VertexId> set) {
    std::vector<std::uint64_t> mask(g.words_per_class(), 0);
    for (VertexId v : set) mask[v.off / 64] |= std::uint64_t{1} << (v.off % 64);
    return mask;
}

inline bool degree_hypothesis(const GraphSummary& s, int n, long num, long den) {
    // hat_delta >= (1 - num/den) * n  <=>  den * hat_delta >= (den - num) * n
    return static_cast<long long>(den) * s.hat_delta >= static_cast<long long>(den - num) * n;
}

} // namespace detail

/// Realizes the corrections z on the edges at v while confining every side
/// effect to edges between the target set and N(v):
///   A1  effect on vu equals z_vu for every neighbour u;
///   A2  effect is 0 on edges missing both the set and v, or missing N(v);
///   A3  effect on edges from the set into N(v) is at most 2|z_vw|/|set|.
/// The target set must lie in v's class, exclude v, and be neighbour-rich.
template <class S>
StageResult<S> move_vertex_into_set(const PartiteGraph& g, const CliqueIndex& idx, VertexId v,
                                    std::span<const std::pair<VertexId, S>> z,
                                    std::span<const VertexId> target_set,
                                    const TransportOptions& opts = {}) {
    using T = scalar_traits<S>;
    g.require_valid(v);
    for (VertexId u : target_set)
        if (u == v) throw DomainError("move: v must not belong to the target set");
    if (!is_neighbour_rich(g, v.cls, target_set, opts.richness))
        throw DomainError("move: target set failed the neighbour-rich check");

    StageResult<S> result{CliqueWeighting<S>(idx), {}};
    std::vector<VertexId> sorted(target_set.begin(), target_set.end());
    std::sort(sorted.begin(), sorted.end());
    auto mask = detail::mask_of<S>(g, sorted);
    detail::accumulate_move(g, idx, v, z, sorted, mask, S(1), result.delta.values(), opts);

    if (opts.verify) {
        std::vector<S> effects = all_edge_effects(result.delta);
        std::vector<S> expected_at_v(static_cast<std::size_t>(g.vertex_count()), S(0));
        for (const auto& [u, value] : z) expected_at_v[static_cast<std::size_t>(g.flat(u))] = value;
        const S bound_scale = scalar_traits<S>::ratio(2, static_cast<std::int64_t>(sorted.size()));
        for (EdgeId e = 0; e < idx.edge_count(); ++e) {
            auto [a, b] = idx.edge(e);
            bool a_in = a.cls == v.cls && (mask[a.off / 64] >> (a.off % 64) & 1);
            bool b_in = b.cls == v.cls && (mask[b.off / 64] >> (b.off % 64) & 1);
            const S& eff = effects[static_cast<std::size_t>(e)];
            if (a == v || b == v) {
                VertexId u = a == v ? b : a;
                if (!T::equal(eff, expected_at_v[static_cast<std::size_t>(g.flat(u))]))
                    throw DomainError("move: effect at edge v-" + to_string(u) +
                                      " does not match its correction");
            } else if (a_in || b_in) {
                VertexId w = a_in ? b : a;
                if (!g.adjacent(v, w)) {
                    if (!T::is_zero(eff))
                        throw DomainError("move: nonzero effect outside N(v)");
                } else {
                    S ceiling =
                        bound_scale * T::abs(expected_at_v[static_cast<std::size_t>(g.flat(w))]);
                    if (T::abs(eff) > ceiling && !T::equal(T::abs(eff), ceiling))
                        throw DomainError("move: set-side effect exceeds 2|z|/|set| at edge " +
                                          to_string(a) + " " + to_string(b));
                }
            } else {
                if (!T::is_zero(eff))
                    throw DomainError("move: nonzero effect on an untouched edge " + to_string(a) +
                                      " " + to_string(b));
            }
        }
        for (EdgeId e = 0; e < idx.edge_count(); ++e) {
            auto [a, b] = idx.edge(e);
            bool a_in = a.cls == v.cls && (mask[a.off / 64] >> (a.off % 64) & 1);
            bool b_in = b.cls == v.cls && (mask[b.off / 64] >> (b.off % 64) & 1);
            if ((a_in || b_in) && !T::is_zero(effects[static_cast<std::size_t>(e)]))
                result.report.residual_edges.emplace_back(e, effects[static_cast<std::size_t>(e)]);
        }
    }

    if (opts.diagnostics) {
        const int r = g.part_count();
        const int n = g.part_size();
        GraphSummary s = summarize(g);
        MagnitudeDiagnostics diag;
        diag.hypothesis = "hat_delta >= (1 - 1/8r^2) n and n >= 8r^2";
        diag.applicable = n >= 8 * r * r && detail::degree_hypothesis(s, n, 1, 8L * r * r);
        if (diag.applicable) {
            // |psi(K)| <= 2nC/k through v, <= 4nC/(|set| k) through the set,
            // 0 elsewhere, with C = n * sum_{u in K} |z_vu| + 2 * sum |z_vu|.
            std::vector<S> abs_z(static_cast<std::size_t>(g.vertex_count()), S(0));
            S total_abs(0);
            for (const auto& [u, value] : z) {
                abs_z[static_cast<std::size_t>(g.flat(u))] = T::abs(value);
                total_abs += T::abs(value);
            }
            MagnitudeDiagnostics::Tier through_v{"clique through v: 2nC/k", 0.0, 0, true};
            MagnitudeDiagnostics::Tier through_set{"clique through set: 4nC/(|set| k)", 0.0, 0, true};
            MagnitudeDiagnostics::Tier elsewhere{"clique elsewhere: 0", 0.0, 0, true};
            const S k(idx.k_total());
            for (CliqueId c = 0; c < idx.k_total(); ++c) {
                const S& value = result.delta[c];
                auto tuple = idx.clique(c);
                VertexId own = tuple[static_cast<std::size_t>(v.cls)];
                bool through = own == v;
                bool in_set = !through && (mask[own.off / 64] >> (own.off % 64) & 1);
                if (!through && !in_set) {
                    ++elsewhere.checked;
                    if (!T::is_zero(value)) {
                        elsewhere.pass = false;
                        elsewhere.max_ratio = 1e9;
                    }
                    continue;
                }
                S c_const(0);
                for (VertexId u : tuple)
                    if (u.cls != v.cls) c_const += abs_z[static_cast<std::size_t>(g.flat(u))];
                c_const = S(n) * c_const + S(2) * total_abs;
                S ceiling = through ? S(2 * n) * c_const / k
                                    : S(4 * n) * c_const / (S(static_cast<std::int64_t>(sorted.size())) * k);
                auto& tier = through ? through_v : through_set;
                ++tier.checked;
                if (T::is_zero(ceiling)) {
                    if (!T::is_zero(value)) tier.pass = false;
                    continue;
                }
                double ratio = T::to_double(T::abs(value)) / T::to_double(ceiling);
                tier.max_ratio = std::max(tier.max_ratio, ratio);
                if (T::abs(value) > ceiling) tier.pass = false;
            }
            diag.tiers = {through_v, through_set, elsewhere};
        }
        result.report.bounds = std::move(diag);
    }
    return result;
}

/// Two-round sweep: realizes field.per_edge exactly on every edge with an
/// endpoint outside V, leaving bounded residues on edges inside V. V must
/// meet every class in exactly |V|/r vertices, each slice neighbour-rich.
template <class S>
StageResult<S> sweep_into_set(const PartiteGraph& g, const CliqueIndex& idx,
                              const CorrectionField<S>& field, std::span<const VertexId> V,
                              const TransportOptions& opts = {}) {
    using T = scalar_traits<S>;
    const int r = g.part_count();
    const int n = g.part_size();
    check_field_invariants(g, idx, field, false);
    for (const S& value : field.per_edge)
        if (!T::within_unit(value))
            throw DomainError("sweep: per-edge corrections must lie in [-1, 1]");

    std::vector<std::vector<VertexId>> slices(r);
    for (VertexId v : V) {
        g.require_valid(v);
        slices[v.cls].push_back(v);
    }
    const std::size_t per_class = V.size() / static_cast<std::size_t>(r);
    for (int c = 0; c < r; ++c) {
        if (slices[c].size() != per_class)
            throw DomainError("sweep: class " + std::to_string(c) + " holds " +
                              std::to_string(slices[c].size()) + " set vertices, expected |V|/r");
        std::sort(slices[c].begin(), slices[c].end());
        if (!is_neighbour_rich(g, c, slices[c], opts.richness))
            throw DomainError("sweep: V cap V_" + std::to_string(c) +
                              " failed the neighbour-rich check");
    }
    std::vector<std::vector<std::uint64_t>> masks(r);
    for (int c = 0; c < r; ++c) masks[c] = detail::mask_of<S>(g, slices[c]);
    auto in_set = [&](VertexId v) {
        return (masks[v.cls][v.off / 64] >> (v.off % 64)) & 1;
    };
    std::vector<VertexId> outside;
    for (int f = 0; f < g.vertex_count(); ++f)
        if (!in_set(g.vertex(f))) outside.push_back(g.vertex(f));

    StageResult<S> result{CliqueWeighting<S>(idx), {}};
    TransportOptions inner = opts;
    inner.verify = false;
    inner.diagnostics = false;

    // Round one: every outside vertex moves its corrections into its class
    // slice at weight 1/2; edges between two outside vertices are handled
    // once from each endpoint.
    const S half = scalar_traits<S>::ratio(1, 2);
    detail::trace_line(opts, "sweep round 1: " + std::to_string(outside.size()) +
                                    " outside vertices, half-weight moves");
    auto run_round = [&](const std::function<void(VertexId, std::span<S>)>& body) {
        int threads = std::max(1, opts.threads);
        if (threads == 1 || outside.size() < 2) {
            for (VertexId w : outside) body(w, result.delta.values());
            return;
        }
        std::vector<CliqueWeighting<S>> partial(threads, CliqueWeighting<S>(idx));
        std::vector<std::exception_ptr> errors(threads);
        std::vector<std::thread> pool;
        std::size_t stride = (outside.size() + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                try {
                    std::size_t lo = t * stride;
                    std::size_t hi = std::min(outside.size(), lo + stride);
                    for (std::size_t i = lo; i < hi; ++i) body(outside[i], partial[t].values());
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& err : errors)
            if (err) std::rethrow_exception(err);
        for (auto& p : partial) result.delta.add(p);
    };

    auto stage_tag = [](const std::string& what, VertexId w, int round) {
        return what + " [sweep round " + std::to_string(round) + " at vertex " + to_string(w) + "]";
    };
    run_round([&](VertexId w, std::span<S> acc) {
        auto z = detail::corrections_at(g, idx, std::span<const S>(field.per_edge), w);
        if (z.empty()) return;
        try {
            detail::accumulate_move(g, idx, w, std::span<const std::pair<VertexId, S>>(z),
                                    slices[w.cls], masks[w.cls], half, acc, inner);
        } catch (const GadgetInfeasibleError& e) {
            throw GadgetInfeasibleError(stage_tag(e.what(), w, 1));
        } catch (const EmptyIntersectionError& e) {
            throw EmptyIntersectionError(stage_tag(e.what(), w, 1));
        }
    });

    // Residues after round one, then round two realizes them outright. The
    // inputs are normalized by |V|/3nr to meet the unit precondition and the
    // outputs rescaled back.
    std::vector<S> effects = all_edge_effects(result.delta);
    std::vector<S> z_prime(effects.size());
    for (std::size_t e = 0; e < effects.size(); ++e)
        z_prime[e] = field.per_edge[e] - effects[e];

    const S normalize = scalar_traits<S>::ratio(static_cast<std::int64_t>(V.size()),
                                                3 * static_cast<std::int64_t>(n) * r);
    const S restore = scalar_traits<S>::ratio(3 * static_cast<std::int64_t>(n) * r,
                                              static_cast<std::int64_t>(V.size()));
    detail::trace_line(opts, "sweep round 2: rescale factor |V|/3nr = " +
                                    T::str(normalize));
    run_round([&](VertexId w, std::span<S> acc) {
        auto z = detail::corrections_at(g, idx, std::span<const S>(z_prime), w);
        if (z.empty()) return;
        for (auto& entry : z) entry.second *= normalize;
        try {
            detail::accumulate_move(g, idx, w, std::span<const std::pair<VertexId, S>>(z),
                                    slices[w.cls], masks[w.cls], restore, acc, inner);
        } catch (const GadgetInfeasibleError& e) {
            throw GadgetInfeasibleError(stage_tag(e.what(), w, 2));
        } catch (const EmptyIntersectionError& e) {
            throw EmptyIntersectionError(stage_tag(e.what(), w, 2));
        }
    });

    // Final residues: z'' is supported inside V.
    effects = all_edge_effects(result.delta);
    for (EdgeId e = 0; e < idx.edge_count(); ++e) {
        auto [a, b] = idx.edge(e);
        S residue = field.per_edge[static_cast<std::size_t>(e)] - effects[static_cast<std::size_t>(e)];
        if (in_set(a) && in_set(b)) {
            result.report.residual_edges.emplace_back(e, residue);
        } else if (opts.verify && !T::is_zero(residue)) {
            throw DomainError("sweep: edge " + to_string(a) + " " + to_string(b) +
                              " with an endpoint outside V was not realized exactly");
        }
    }

    if (opts.diagnostics) {
        GraphSummary s = summarize(g);
        MagnitudeDiagnostics diag;
        diag.hypothesis = "hat_delta >= (1 - 1/8r^2) n and n >= 8r^2";
        diag.applicable = n >= 8 * r * r && detail::degree_hypothesis(s, n, 1, 8L * r * r);
        if (diag.applicable) {
            const std::int64_t vsize = static_cast<std::int64_t>(V.size());
            const S k(idx.k_total());
            // Residue ceiling 12 n^2 r^2 / |V|^2 on inside edges.
            MagnitudeDiagnostics::Tier residues{"inside-edge residue: 12n^2r^2/|V|^2", 0.0, 0, true};
            const S res_ceiling =
                scalar_traits<S>::ratio(12 * static_cast<std::int64_t>(n) * n * r * r, vsize * vsize);
            for (const auto& [e, value] : result.report.residual_edges) {
                ++residues.checked;
                double ratio = T::to_double(T::abs(value)) / T::to_double(res_ceiling);
                residues.max_ratio = std::max(residues.max_ratio, ratio);
                if (T::abs(value) > res_ceiling) residues.pass = false;
            }
            diag.tiers.push_back(residues);
            // Clique ceilings, by the set's size regime.
            if (2 * vsize >= static_cast<std::int64_t>(n) * r) {
                MagnitudeDiagnostics::Tier tier{"clique weight: 135n^2r^2/k", 0.0, 0, true};
                const S ceiling = S(135 * static_cast<std::int64_t>(n) * n * r * r) / k;
                for (CliqueId c = 0; c < idx.k_total(); ++c) {
                    ++tier.checked;
                    const S& value = result.delta[c];
                    double ratio = T::to_double(T::abs(value)) / T::to_double(ceiling);
                    tier.max_ratio = std::max(tier.max_ratio, ratio);
                    if (T::abs(value) > ceiling) tier.pass = false;
                }
                diag.tiers.push_back(tier);
            }
            if (vsize <= n) {
                MagnitudeDiagnostics::Tier t0{"clique weight, V(K) cap V empty: 15n^2r^2/k", 0.0, 0, true};
                MagnitudeDiagnostics::Tier t1{"clique weight, |V(K) cap V| = 1: 51n^3r^2/(k|V|)", 0.0, 0, true};
                MagnitudeDiagnostics::Tier t2{"clique weight, |V(K) cap V| >= 2: 45n^4r^2 t^2/(k|V|^2)", 0.0, 0, true};
                for (CliqueId c = 0; c < idx.k_total(); ++c) {
                    int inter = 0;
                    for (VertexId u : idx.clique(c))
                        if (in_set(u)) ++inter;
                    const S& value = result.delta[c];
                    S ceiling;
                    MagnitudeDiagnostics::Tier* tier;
                    if (inter == 0) {
                        ceiling = S(15 * static_cast<std::int64_t>(n) * n * r * r) / k;
                        tier = &t0;
                    } else if (inter == 1) {
                        ceiling = S(51 * static_cast<std::int64_t>(n) * n * n * r * r) / (k * S(vsize));
                        tier = &t1;
                    } else {
                        ceiling = S(45 * static_cast<std::int64_t>(n) * n * n * n * r * r * inter * inter) /
                                  (k * S(vsize * vsize));
                        tier = &t2;
                    }
                    ++tier->checked;
                    double ratio = T::to_double(T::abs(value)) / T::to_double(ceiling);
                    tier->max_ratio = std::max(tier->max_ratio, ratio);
                    if (T::abs(value) > ceiling) tier->pass = false;
                }
                diag.tiers.push_back(t0);
                diag.tiers.push_back(t1);
                diag.tiers.push_back(t2);
            }
        }
        result.report.bounds = std::move(diag);
    }
    return result;
}

/// Realizes the whole correction field exactly on *every* edge by sweeping
/// first into a large intermediate set around the anchor clique, then inside
/// the induced subgraph onto the anchor itself, where the residues cancel
/// because the per-class correction sums are zero.
template <class S>
StageResult<S> concentrate_on_clique(const PartiteGraph& g, const CliqueIndex& idx,
                                     const CorrectionField<S>& field, CliqueId anchor,
                                     const TransportOptions& opts = {}) {
    using T = scalar_traits<S>;
    const int r = g.part_count();
    const int n = g.part_size();
    if (anchor < 0 || anchor >= idx.k_total()) throw DomainError("anchor clique id out of range");
    check_field_invariants(g, idx, field, true);

    auto anchor_tuple = idx.clique(anchor);

    // Intermediate set: per class, vertices adjacent to every anchor vertex
    // of the other classes. Requested size floor(n(1 - 1/8r)) per class,
    // capped by the available pool.
    const int s_requested = n - (n + 8 * r - 1) / (8 * r);
    std::vector<std::vector<VertexId>> pool(r);
    for (int c = 0; c < r; ++c) {
        std::vector<std::uint64_t> mask(g.words_per_class(), ~std::uint64_t{0});
        for (int d = 0; d < r; ++d) {
            if (d == c) continue;
            auto rr = g.row(anchor_tuple[static_cast<std::size_t>(d)], c);
            for (int w = 0; w < g.words_per_class(); ++w) mask[w] &= rr[w];
        }
        for (int o = 0; o < n; ++o)
            if ((mask[o / 64] >> (o % 64)) & 1) pool[c].push_back({c, o});
    }
    int s = s_requested;
    for (int c = 0; c < r; ++c) s = std::min<int>(s, static_cast<int>(pool[c].size()));
    if (s < 2)
        throw IntermediateSetError("intermediate set around anchor " + std::to_string(anchor) +
                                   " would have fewer than 2 vertices per class");
    std::vector<std::vector<VertexId>> chosen(r);
    for (int c = 0; c < r; ++c) {
        VertexId av = anchor_tuple[static_cast<std::size_t>(c)];
        chosen[c].push_back(av);
        for (VertexId w : pool[c]) {
            if (static_cast<int>(chosen[c].size()) == s) break;
            if (w != av) chosen[c].push_back(w);
        }
        std::sort(chosen[c].begin(), chosen[c].end());
        if (!is_neighbour_rich(g, c, chosen[c], opts.richness))
            throw IntermediateSetError("intermediate set around anchor " + std::to_string(anchor) +
                                       " is not neighbour-rich in class " + std::to_string(c));
    }
    detail::trace_line(opts, "anchor stage: intermediate set " + std::to_string(s) +
                                    " per class (requested " + std::to_string(s_requested) + ")");

    std::vector<VertexId> V;
    for (int c = 0; c < r; ++c) V.insert(V.end(), chosen[c].begin(), chosen[c].end());

    auto outer_t0 = std::chrono::steady_clock::now();
    StageResult<S> outer = sweep_into_set(g, idx, field, V, opts);
    if (opts.timings)
        opts.timings->outer_sweep_s +=
            std::chrono::duration<double>(std::chrono::steady_clock::now() - outer_t0).count();

    // Residues live inside V; normalize by 1/25 and realize them in the
    // induced subgraph with the anchor vertices as the target set.
    std::vector<S> z_prime(static_cast<std::size_t>(idx.edge_count()), S(0));
    for (const auto& [e, value] : outer.report.residual_edges)
        z_prime[static_cast<std::size_t>(e)] = value;

    InducedSubgraph sub = induce_balanced(g, chosen);
    CliqueIndex sub_idx = CliqueIndex::build(sub.graph);
    if (sub_idx.k_total() == 0)
        throw IntermediateSetError("induced intermediate graph has no transversal cliques");

    const S shrink = scalar_traits<S>::ratio(1, 25);
    CorrectionField<S> sub_field;
    sub_field.per_edge.assign(static_cast<std::size_t>(sub_idx.edge_count()), S(0));
    sub_field.per_vertex.assign(static_cast<std::size_t>(sub.graph.vertex_count()), S(0));
    for (EdgeId e = 0; e < sub_idx.edge_count(); ++e) {
        auto [a, b] = sub_idx.edge(e);
        EdgeId parent = idx.edge_id(sub.to_parent[a.cls][a.off], sub.to_parent[b.cls][b.off]);
        sub_field.per_edge[static_cast<std::size_t>(e)] =
            z_prime[static_cast<std::size_t>(parent)] * shrink;
    }
    for (int f = 0; f < sub.graph.vertex_count(); ++f) {
        VertexId v = sub.graph.vertex(f);
        int foreign = v.cls == 0 ? 1 : 0;
        S sum(0);
        for (VertexId u : sub.graph.neighbours_in(v, foreign))
            sum += sub_field.per_edge[static_cast<std::size_t>(sub_idx.edge_id(v, u))];
        sub_field.per_vertex[static_cast<std::size_t>(f)] = sum;
    }
    detail::trace_line(opts, "anchor stage: inner sweep over induced graph, residue scale 1/25");

    std::vector<VertexId> sub_anchor;
    for (int c = 0; c < r; ++c) {
        std::int32_t f = sub.to_sub[g.flat(anchor_tuple[static_cast<std::size_t>(c)])];
        sub_anchor.push_back(sub.graph.vertex(f));
    }
    auto inner_t0 = std::chrono::steady_clock::now();
    StageResult<S> inner = sweep_into_set(sub.graph, sub_idx, sub_field, sub_anchor, opts);
    if (opts.timings)
        opts.timings->inner_sweep_s +=
            std::chrono::duration<double>(std::chrono::steady_clock::now() - inner_t0).count();

    // Map the inner delta back and undo the 1/25 normalization.
    StageResult<S> result{std::move(outer.delta), {}};
    const S grow(25);
    std::vector<VertexId> tuple(r);
    for (CliqueId c = 0; c < sub_idx.k_total(); ++c) {
        const S& value = inner.delta[c];
        if (T::is_zero(value)) continue;
        auto sub_tuple = sub_idx.clique(c);
        for (int d = 0; d < r; ++d)
            tuple[static_cast<std::size_t>(d)] =
                sub.to_parent[static_cast<std::size_t>(d)][sub_tuple[static_cast<std::size_t>(d)].off];
        CliqueId parent = idx.clique_id(tuple);
        if (parent < 0)
            throw DomainError("induced clique is missing from the parent index");
        result.delta[parent] += grow * value;
    }

    if (opts.verify) {
        std::vector<S> effects = all_edge_effects(result.delta);
        for (EdgeId e = 0; e < idx.edge_count(); ++e)
            if (!T::equal(effects[static_cast<std::size_t>(e)],
                          field.per_edge[static_cast<std::size_t>(e)])) {
                auto [a, b] = idx.edge(e);
                throw DomainError("anchor stage: edge " + to_string(a) + " " + to_string(b) +
                                  " effect does not match its correction");
            }
    }

    if (opts.diagnostics) {
        GraphSummary s_g = summarize(g);
        MagnitudeDiagnostics diag;
        diag.hypothesis = "hat_delta >= (1 - 1/16r^2) n and n >= 16r^2";
        diag.applicable = n >= 16 * r * r && detail::degree_hypothesis(s_g, n, 1, 16L * r * r);
        if (diag.applicable) {
            const S k(idx.k_total());
            MagnitudeDiagnostics::Tier t0{"clique weight, disjoint from anchor: 1000n^2r^2/k", 0.0, 0, true};
            MagnitudeDiagnostics::Tier t1{"clique weight, one shared vertex: 10^4 n^3 r/k", 0.0, 0, true};
            MagnitudeDiagnostics::Tier t2{"clique weight, t >= 2 shared: 10^4 n^4 t^2/(4k)", 0.0, 0, true};
            std::vector<bool> in_anchor(static_cast<std::size_t>(g.vertex_count()), false);
            for (VertexId u : anchor_tuple) in_anchor[static_cast<std::size_t>(g.flat(u))] = true;
            for (CliqueId c = 0; c < idx.k_total(); ++c) {
                int inter = 0;
                for (VertexId u : idx.clique(c))
                    if (in_anchor[static_cast<std::size_t>(g.flat(u))]) ++inter;
                const S& value = result.delta[c];
                S ceiling;
                MagnitudeDiagnostics::Tier* tier;
                const std::int64_t nn = n;
                if (inter == 0) {
                    ceiling = S(1000 * nn * nn * r * r) / k;
                    tier = &t0;
                } else if (inter == 1) {
                    ceiling = S(10000 * nn * nn * nn * r) / k;
                    tier = &t1;
                } else {
                    ceiling = S(10000 * nn * nn * nn * nn * inter * inter) / (S(4) * k);
                    tier = &t2;
                }
                ++tier->checked;
                double ratio = T::to_double(T::abs(value)) / T::to_double(ceiling);
                tier->max_ratio = std::max(tier->max_ratio, ratio);
                if (T::abs(value) > ceiling) tier->pass = false;
            }
            diag.tiers = {t0, t1, t2};
        }
        result.report.bounds = std::move(diag);
    }
    return result;
}


/// Outcome of a full decompose run plus the numbers a reviewer needs to
/// re-check it. Timings are carried here but the CLI reports them outside
/// the reproducible certificate body.
template <class S>
struct Certificate {
    int r = 0;
    int n = 0;
    int hat_delta = 0;
    std::int64_t edges = 0;
    std::int64_t cliques = 0;
    std::string backend;
    std::string anchor_mode;
    std::vector<CliqueId> anchors;
    S max_edge_deviation{0};
    std::int64_t edges_off = 0;
    S min_weight{0};
    std::int64_t negative_weights = 0;
    bool edge_sums_ok = false;  // every effect equals 1 (exact) / within 1e-6 (float)
    bool decomposition = false; // edge_sums_ok and min_weight >= 0
    bool bounds_applicable = false;
    bool bounds_pass = true;
    double seconds_enumerate = 0;
    double seconds_transport = 0;
    double seconds_verify = 0;
};

template <class S>
struct DecomposeResult {
    CliqueWeighting<S> weights;
    Certificate<S> certificate;
};

inline std::vector<CliqueId> pick_anchors(const AnchorMode& mode, std::int64_t k_total) {
    switch (mode.kind) {
    case AnchorMode::Kind::single:
        if (mode.anchor < 0 || mode.anchor >= k_total)
            throw DomainError("anchor id " + std::to_string(mode.anchor) + " out of range");
        return {mode.anchor};
    case AnchorMode::Kind::sample: {
        if (mode.count < 1) throw DomainError("anchor sample count must be positive");
        if (mode.count > k_total)
            throw DomainError("anchor sample count exceeds the clique count");
        std::vector<CliqueId> ids(static_cast<std::size_t>(k_total));
        for (std::int64_t i = 0; i < k_total; ++i) ids[static_cast<std::size_t>(i)] = static_cast<CliqueId>(i);
        std::mt19937_64 rng(mode.seed);
        std::vector<CliqueId> out;
        for (int i = 0; i < mode.count; ++i) {
            std::size_t j = i + static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(k_total - i));
            std::swap(ids[i], ids[j]);
            out.push_back(ids[i]);
        }
        std::sort(out.begin(), out.end());
        return out;
    }
    case AnchorMode::Kind::all: {
        std::vector<CliqueId> ids(static_cast<std::size_t>(k_total));
        for (std::int64_t i = 0; i < k_total; ++i) ids[static_cast<std::size_t>(i)] = static_cast<CliqueId>(i);
        return ids;
    }
    }
    throw DomainError("unknown anchor mode");
}

/// Full construction: uniform initial weighting, then the anchor stage run
/// per anchor and averaged. In the exact backend every edge effect equals 1
/// whenever the stage preconditions hold, for any anchor set, so the default
/// is a single anchor; averaging over more anchors only moderates the
/// individual clique adjustments.
template <class S>
DecomposeResult<S> decompose(const PartiteGraph& g, const CliqueIndex& idx,
                             const AnchorMode& mode, const TransportOptions& opts = {}) {
    using T = scalar_traits<S>;
    using clock = std::chrono::steady_clock;
    GraphSummary summary = summarize(g);
    if (!summary.divisible) throw DivisibilityError("decompose requires a divisible graph");

    DecomposeResult<S> result{uniform_init<S>(g, idx), {}};
    Certificate<S>& cert = result.certificate;
    cert.r = g.part_count();
    cert.n = g.part_size();
    cert.hat_delta = summary.hat_delta;
    cert.edges = summary.edge_total;
    cert.cliques = idx.k_total();
    cert.backend = T::exact ? "exact" : "float";
    switch (mode.kind) {
    case AnchorMode::Kind::single: cert.anchor_mode = "single"; break;
    case AnchorMode::Kind::sample: cert.anchor_mode = "sample"; break;
    case AnchorMode::Kind::all: cert.anchor_mode = "all"; break;
    }

    auto t0 = clock::now();
    if (idx.k_total() > 0) {
        CorrectionField<S> field = corrections<S>(g, idx);
        bool any = false;
        for (const S& value : field.per_edge)
            if (!T::is_zero(value)) {
                any = true;
                break;
            }
        if (any) {
            cert.anchors = pick_anchors(mode, idx.k_total());
            const std::size_t m = cert.anchors.size();
            CliqueWeighting<S> sum(idx);
            int outer_threads = (opts.threads > 1 && m > 1) ? opts.threads : 1;
            if (outer_threads == 1) {
                for (CliqueId a : cert.anchors) {
                    detail::trace_line(opts, "anchor " + std::to_string(a));
                    StageResult<S> stage = concentrate_on_clique(g, idx, field, a, opts);
                    sum.add(stage.delta);
                    if (stage.report.bounds && stage.report.bounds->applicable) {
                        cert.bounds_applicable = true;
                        if (!stage.report.bounds->pass()) cert.bounds_pass = false;
                    }
                }
            } else {
                TransportOptions inner = opts;
                inner.threads = 1;
                std::vector<CliqueWeighting<S>> partial(outer_threads, CliqueWeighting<S>(idx));
                std::vector<std::exception_ptr> errors(outer_threads);
                std::vector<char> applicable(outer_threads, 0), failed(outer_threads, 0);
                std::vector<std::thread> pool;
                std::size_t stride = (m + outer_threads - 1) / outer_threads;
                for (int t = 0; t < outer_threads; ++t) {
                    pool.emplace_back([&, t] {
                        try {
                            std::size_t lo = t * stride;
                            std::size_t hi = std::min(m, lo + stride);
                            for (std::size_t i = lo; i < hi; ++i) {
                                StageResult<S> stage =
                                    concentrate_on_clique(g, idx, field, cert.anchors[i], inner);
                                partial[t].add(stage.delta);
                                if (stage.report.bounds && stage.report.bounds->applicable) {
                                    applicable[t] = 1;
                                    if (!stage.report.bounds->pass()) failed[t] = 1;
                                }
                            }
                        } catch (...) {
                            errors[t] = std::current_exception();
                        }
                    });
                }
                for (auto& th : pool) th.join();
                for (auto& err : errors)
                    if (err) std::rethrow_exception(err);
                for (int t = 0; t < outer_threads; ++t) {
                    sum.add(partial[t]);
                    if (applicable[t]) cert.bounds_applicable = true;
                    if (failed[t]) cert.bounds_pass = false;
                }
            }
            result.weights.add_scaled(sum, scalar_traits<S>::ratio(-1, static_cast<std::int64_t>(m)));
        }
    }
    auto t1 = clock::now();

    // Verification pass over the final weighting.
    std::vector<S> effects = all_edge_effects(result.weights);
    for (const S& eff : effects) {
        S dev = T::abs(eff - S(1));
        if (dev > cert.max_edge_deviation) cert.max_edge_deviation = dev;
        if (!T::equal(eff, S(1))) ++cert.edges_off;
    }
    bool first = true;
    for (const S& w : result.weights.values()) {
        if (first || w < cert.min_weight) cert.min_weight = w;
        first = false;
        if (T::sign(w) < 0) ++cert.negative_weights;
    }
    if constexpr (T::exact)
        cert.edge_sums_ok = cert.max_edge_deviation == S(0);
    else
        cert.edge_sums_ok = cert.max_edge_deviation <= S(1e-6);
    cert.decomposition = cert.edge_sums_ok && T::sign(cert.min_weight) >= 0;
    auto t2 = clock::now();

    cert.seconds_transport = std::chrono::duration<double>(t1 - t0).count();
    cert.seconds_verify = std::chrono::duration<double>(t2 - t1).count();
    return result;
}

} // namespace fracdec
