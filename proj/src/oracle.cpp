#include "fracdec/oracle.hpp"

#include <vector>

namespace fracdec {

VerificationRecord verify(const PartiteGraph& g, const CliqueIndex& idx,
                          const CliqueWeighting<Rational>& w) {
    if (&w.host() != &idx) throw DomainError("verify: weighting is indexed over a different host");
    (void)g;
    VerificationRecord rec;
    bool first_edge = true;
    for (EdgeId e = 0; e < idx.edge_count(); ++e) {
        Rational eff(0);
        for (CliqueId c : idx.cliques_with_edge(e)) eff += w[c];
        if (first_edge) {
            rec.max_effect = eff;
            rec.min_effect = eff;
            first_edge = false;
        } else {
            if (eff > rec.max_effect) rec.max_effect = eff;
            if (eff < rec.min_effect) rec.min_effect = eff;
        }
        if (eff != 1) ++rec.edges_off;
    }
    bool first_weight = true;
    for (const Rational& value : w.values()) {
        if (first_weight || value < rec.min_weight) rec.min_weight = value;
        first_weight = false;
        if (value < 0) ++rec.negative_weights;
    }
    rec.decomposition = rec.edges_off == 0 && rec.negative_weights == 0;
    return rec;
}

LpOutcome lp_feasible(const PartiteGraph& g, const CliqueIndex& idx, const LpLimits& limits) {
    const std::int64_t k = idx.k_total();
    const std::int64_t m = idx.edge_count();
    LpOutcome out;

    if (m == 0) {
        // No constraints: the empty weighting is a (vacuous) witness.
        out.status = LpOutcome::Status::feasible;
        out.witness.emplace(idx);
        return out;
    }
    if (k == 0) {
        out.status = LpOutcome::Status::infeasible;
        out.infeasibility_gap = Rational(m); // every artificial stays at 1
        return out;
    }
    if (!limits.force && (k > limits.max_cliques || m > limits.max_edges))
        throw SizeLimitError("LP size " + std::to_string(k) + " cliques x " + std::to_string(m) +
                             " edges exceeds the oracle guard (use force to override)");

    // Phase-I tableau: columns 0..k-1 the clique variables, k..k+m-1 the
    // artificials, last column the rhs. Objective: minimize the artificial
    // sum; obj holds the reduced costs c_j - z_j.
    const std::int64_t ncols = k + m;
    std::vector<std::vector<Rational>> tab(static_cast<std::size_t>(m),
                                           std::vector<Rational>(static_cast<std::size_t>(ncols + 1)));
    for (std::int64_t row = 0; row < m; ++row) {
        for (CliqueId c : idx.cliques_with_edge(static_cast<EdgeId>(row)))
            tab[static_cast<std::size_t>(row)][static_cast<std::size_t>(c)] = 1;
        tab[static_cast<std::size_t>(row)][static_cast<std::size_t>(k + row)] = 1;
        tab[static_cast<std::size_t>(row)][static_cast<std::size_t>(ncols)] = 1;
    }
    std::vector<std::int64_t> basis(static_cast<std::size_t>(m));
    for (std::int64_t row = 0; row < m; ++row) basis[static_cast<std::size_t>(row)] = k + row;

    std::vector<Rational> obj(static_cast<std::size_t>(ncols + 1));
    for (std::int64_t j = 0; j < ncols; ++j) {
        Rational z(0);
        for (std::int64_t row = 0; row < m; ++row) z += tab[static_cast<std::size_t>(row)][static_cast<std::size_t>(j)];
        obj[static_cast<std::size_t>(j)] = (j >= k ? Rational(1) : Rational(0)) - z;
    }
    Rational objective(m); // current artificial sum

    for (;;) {
        // Bland: entering = smallest column with negative reduced cost.
        std::int64_t enter = -1;
        for (std::int64_t j = 0; j < ncols; ++j)
            if (obj[static_cast<std::size_t>(j)] < 0) {
                enter = j;
                break;
            }
        if (enter < 0) break;

        // Ratio test; ties resolved toward the smallest basic index.
        std::int64_t leave = -1;
        Rational best;
        for (std::int64_t row = 0; row < m; ++row) {
            const Rational& a = tab[static_cast<std::size_t>(row)][static_cast<std::size_t>(enter)];
            if (a <= 0) continue;
            Rational ratio = tab[static_cast<std::size_t>(row)][static_cast<std::size_t>(ncols)] / a;
            if (leave < 0 || ratio < best ||
                (ratio == best && basis[static_cast<std::size_t>(row)] < basis[static_cast<std::size_t>(leave)])) {
                leave = row;
                best = ratio;
            }
        }
        if (leave < 0)
            throw Error("phase-I objective unbounded below; the tableau is corrupt", 5);

        // Pivot.
        ++out.pivots;
        auto& prow = tab[static_cast<std::size_t>(leave)];
        const Rational pivot = prow[static_cast<std::size_t>(enter)];
        for (auto& value : prow) value /= pivot;
        for (std::int64_t row = 0; row < m; ++row) {
            if (row == leave) continue;
            auto& target = tab[static_cast<std::size_t>(row)];
            const Rational factor = target[static_cast<std::size_t>(enter)];
            if (factor.is_zero()) continue;
            for (std::int64_t j = 0; j <= ncols; ++j)
                target[static_cast<std::size_t>(j)] -= factor * prow[static_cast<std::size_t>(j)];
        }
        const Rational ofactor = obj[static_cast<std::size_t>(enter)];
        if (!ofactor.is_zero())
            for (std::int64_t j = 0; j <= ncols; ++j)
                obj[static_cast<std::size_t>(j)] -= ofactor * prow[static_cast<std::size_t>(j)];
        basis[static_cast<std::size_t>(leave)] = enter;
        // Objective value = sum of the basic artificials' rhs entries.
        objective = 0;
        for (std::int64_t row = 0; row < m; ++row)
            if (basis[static_cast<std::size_t>(row)] >= k)
                objective += tab[static_cast<std::size_t>(row)][static_cast<std::size_t>(ncols)];
    }

    if (!objective.is_zero()) {
        out.status = LpOutcome::Status::infeasible;
        out.infeasibility_gap = objective;
        return out;
    }

    out.status = LpOutcome::Status::feasible;
    out.witness.emplace(idx);
    CliqueWeighting<Rational>& x = *out.witness;
    for (std::int64_t row = 0; row < m; ++row)
        if (basis[static_cast<std::size_t>(row)] < k)
            x[static_cast<CliqueId>(basis[static_cast<std::size_t>(row)])] =
                tab[static_cast<std::size_t>(row)][static_cast<std::size_t>(ncols)];
    VerificationRecord rec = verify(g, idx, x);
    if (rec.edges_off != 0 || rec.negative_weights != 0)
        throw Error("phase-I witness failed re-verification; simplex is inconsistent", 5);
    return out;
}

} // namespace fracdec
