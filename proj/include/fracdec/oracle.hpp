#pragma once

#include <optional>

#include "fracdec/weighting.hpp"

namespace fracdec {

/// Size guard for the exact LP; the tableau is dense and every pivot costs
/// O(edges * (cliques + edges)) rational operations.
struct LpLimits {
    std::int64_t max_cliques = 2000;
    std::int64_t max_edges = 500;
    bool force = false;
};

struct LpOutcome {
    enum class Status { feasible, infeasible };
    Status status = Status::infeasible;
    /// Exact witness satisfying every edge constraint; present iff feasible.
    std::optional<CliqueWeighting<Rational>> witness;
    /// Phase-I optimum (> 0) certifying infeasibility.
    std::optional<Rational> infeasibility_gap;
    std::int64_t pivots = 0;
};

/// Exact feasibility of { sum_{K containing e} x_K = 1 for every edge,
/// x >= 0 }: Phase-I simplex over rationals with Bland's anti-cycling rule.
/// Self-contained ground truth for the constructive pipeline.
LpOutcome lp_feasible(const PartiteGraph& g, const CliqueIndex& idx, const LpLimits& limits = {});

struct VerificationRecord {
    Rational max_effect;
    Rational min_effect;
    std::int64_t edges_off = 0; // edges whose effect differs from 1
    Rational min_weight;
    std::int64_t negative_weights = 0;
    bool decomposition = false; // all effects 1 and all weights >= 0
};

/// Exact verification report for a weighting against its host index.
VerificationRecord verify(const PartiteGraph& g, const CliqueIndex& idx,
                          const CliqueWeighting<Rational>& w);

} // namespace fracdec
