#include "pmp/demand.hpp"

#include <algorithm>
#include <cmath>

namespace pmp {

Units faced_price(PricingRule rule, Units t, int level, int R, Units bbar) {
    switch (rule) {
        case PricingRule::PrioritySpecific: {
            Units p = t - (Units)(level - 1) * bbar;
            return p > 0 ? p : 0;
        }
        case PricingRule::Uniform:
            return t;
        case PricingRule::Kludgy:
            // t * (1 - (level-1)/R) rounded to the grid
            return (2 * t * (Units)(R - level + 1) + R) / (2 * (Units)R);
    }
    return 0;
}

int cutoff_level(Units t, Units bbar, int R) {
    int r = 1 + (int)(t / bbar);
    return r > R ? R : r;
}

ExpandedPrices expand_prices(const PriceParameter& p, int R) {
    ExpandedPrices out;
    out.price.resize(p.t.size());
    out.cutoff.resize(p.t.size());
    for (size_t c = 0; c < p.t.size(); ++c) {
        out.cutoff[c] = cutoff_level(p.t[c], p.bbar, R);
        out.price[c].resize(R);
        for (int r = 1; r <= R; ++r)
            out.price[c][r - 1] = faced_price(PricingRule::PrioritySpecific, p.t[c], r, R, p.bbar);
    }
    return out;
}

namespace {

struct FrontierEntry {
    Units cost;
    double util;
    std::vector<int> bundle;  // id_ranks, sorted ascending
};

// keep, per cardinality, only entries no other entry weakly beats
void prune(std::vector<FrontierEntry>& v) {
    std::sort(v.begin(), v.end(), [](const FrontierEntry& a, const FrontierEntry& b) {
        if (a.cost != b.cost) return a.cost < b.cost;
        if (a.util != b.util) return a.util > b.util;
        return a.bundle < b.bundle;
    });
    std::vector<FrontierEntry> kept;
    double best_util = -1.0;
    for (auto& e : v) {
        if (kept.empty() || e.util > best_util) {
            best_util = e.util;
            kept.push_back(std::move(e));
        }
    }
    v = std::move(kept);
}

}  // namespace

std::vector<int> student_demand(const std::vector<std::pair<int, double>>& row,
                                const std::vector<Units>& faced, Units budget, int k,
                                const std::vector<int>& id_rank) {
    // affordable positive-utility candidates only
    struct Cand {
        int course;
        double util;
        Units price;
        int rank;
    };
    std::vector<Cand> free_c, priced;
    for (size_t i = 0; i < row.size(); ++i) {
        if (row[i].second <= 0.0) continue;
        if (faced[i] > budget) continue;
        Cand cand{row[i].first, row[i].second, faced[i], id_rank[row[i].first]};
        (faced[i] == 0 ? free_c : priced).push_back(cand);
    }

    // free courses: best-utility prefix per slot count, lexicographic on ties
    std::sort(free_c.begin(), free_c.end(), [](const Cand& a, const Cand& b) {
        if (a.util != b.util) return a.util > b.util;
        return a.rank < b.rank;
    });
    std::vector<double> free_util(free_c.size() + 1, 0.0);
    for (size_t i = 0; i < free_c.size(); ++i) free_util[i + 1] = free_util[i] + free_c[i].util;

    std::sort(priced.begin(), priced.end(),
              [](const Cand& a, const Cand& b) { return a.rank < b.rank; });

    // per-cardinality Pareto frontiers over priced subsets
    std::vector<std::vector<FrontierEntry>> frontier(k + 1);
    frontier[0].push_back({0, 0.0, {}});
    for (const Cand& cand : priced) {
        for (int m = k - 1; m >= 0; --m) {
            if (frontier[m].empty()) continue;
            std::vector<FrontierEntry> added;
            for (const FrontierEntry& e : frontier[m]) {
                if (e.cost + cand.price > budget) continue;
                FrontierEntry ne;
                ne.cost = e.cost + cand.price;
                ne.util = e.util + cand.util;
                ne.bundle = e.bundle;
                ne.bundle.insert(std::upper_bound(ne.bundle.begin(), ne.bundle.end(), cand.rank),
                                 cand.rank);
                added.push_back(std::move(ne));
            }
            if (added.empty()) continue;
            auto& dst = frontier[m + 1];
            dst.insert(dst.end(), std::make_move_iterator(added.begin()),
                       std::make_move_iterator(added.end()));
            prune(dst);
        }
    }

    // complete each frontier entry with the best free prefix and pick the winner
    double best_util = 0.0;
    Units best_cost = 0;
    std::vector<int> best_bundle;  // id_ranks, sorted
    bool have = false;
    for (int m = 0; m <= k; ++m) {
        for (const FrontierEntry& e : frontier[m]) {
            int nfree = std::min((int)free_c.size(), k - m);
            double total = e.util + free_util[nfree];
            std::vector<int> bundle = e.bundle;
            for (int i = 0; i < nfree; ++i)
                bundle.insert(std::upper_bound(bundle.begin(), bundle.end(), free_c[i].rank),
                              free_c[i].rank);
            if (!have || total > best_util ||
                (total == best_util &&
                 (e.cost < best_cost || (e.cost == best_cost && bundle < best_bundle)))) {
                have = true;
                best_util = total;
                best_cost = e.cost;
                best_bundle = std::move(bundle);
            }
        }
    }

    // map id_ranks back to course indices
    std::vector<int> out;
    out.reserve(best_bundle.size());
    for (int rank : best_bundle) {
        for (const Cand& cand : free_c)
            if (cand.rank == rank) { out.push_back(cand.course); break; }
        for (const Cand& cand : priced)
            if (cand.rank == rank) { out.push_back(cand.course); break; }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> demand_for_student(const Instance& inst, int s, PricingRule rule,
                                    const PriceParameter& p, Units budget) {
    const auto& row = inst.utilities[s];
    std::vector<Units> faced(row.size());
    for (size_t i = 0; i < row.size(); ++i)
        faced[i] = faced_price(rule, p.t[row[i].first], inst.level(s, row[i].first), inst.R, p.bbar);
    return student_demand(row, faced, budget, inst.k, inst.course_id_rank);
}

void compute_excess(const Instance& inst, const PriceParameter& p, const Allocation& alloc,
                    std::vector<int>& z, double& znorm) {
    const int M = inst.m();
    z.assign(M, 0);
    std::vector<int> enrolled = alloc.enrollment_int(M);
    double sq = 0.0;
    for (int c = 0; c < M; ++c) {
        int e = enrolled[c] - inst.courses[c].capacity;
        // level-1 price is positive exactly when t_c > 0 under every rule
        if (p.t[c] <= 0 && e < 0) e = 0;
        z[c] = e;
        sq += (double)e * e;
    }
    znorm = std::sqrt(sq);
}

BatchDemand batch_demand(const Instance& inst, PricingRule rule, const PriceParameter& p,
                         const std::vector<Units>& budgets, bool parallel) {
    const int N = inst.n();
    BatchDemand out;
    out.alloc = Allocation(N);
    out.solves = N;
    if (parallel) {
#pragma omp parallel for schedule(dynamic, 16)
        for (int s = 0; s < N; ++s)
            out.alloc.set_schedule(s, demand_for_student(inst, s, rule, p, budgets[s]));
    } else {
        for (int s = 0; s < N; ++s)
            out.alloc.set_schedule(s, demand_for_student(inst, s, rule, p, budgets[s]));
    }
    compute_excess(inst, p, out.alloc, out.z, out.znorm);
    return out;
}

std::vector<std::vector<int>> ideal_bundles(const Instance& inst) {
    PriceParameter zero;
    zero.t.assign(inst.m(), 0);
    std::vector<std::vector<int>> out(inst.n());
#pragma omp parallel for schedule(dynamic, 16)
    for (int s = 0; s < inst.n(); ++s)
        out[s] = demand_for_student(inst, s, PricingRule::PrioritySpecific, zero, 0);
    return out;
}

BatchDemand incremental_batch_demand(const Instance& inst, PricingRule rule,
                                     const PriceParameter& prev_p, const Allocation& prev,
                                     const PriceParameter& new_p,
                                     const std::vector<Units>& budgets,
                                     const std::vector<std::vector<int>>& ideal) {
    const int N = inst.n();
    BatchDemand out;
    out.alloc = prev;
    std::vector<char> redo(N, 0);

#pragma omp parallel for schedule(dynamic, 64)
    for (int s = 0; s < N; ++s) {
        // (a) previous schedule no longer affordable
        Units cost = 0;
        for (const auto& [c, share] : prev.rows[s])
            cost += faced_price(rule, new_p.t[c], inst.level(s, c), inst.R, new_p.bbar);
        if (cost > budgets[s]) {
            redo[s] = 1;
            continue;
        }
        // (b) off the ideal bundle and a wanted course's faced price dropped into budget
        std::vector<int> held = prev.schedule(s);
        if (held == ideal[s]) continue;
        for (const auto& [c, u] : inst.utilities[s]) {
            if (u <= 0.0) continue;
            Units before = faced_price(rule, prev_p.t[c], inst.level(s, c), inst.R, prev_p.bbar);
            Units after = faced_price(rule, new_p.t[c], inst.level(s, c), inst.R, new_p.bbar);
            if (after < before && after <= budgets[s]) {
                redo[s] = 1;
                break;
            }
        }
    }

    int solves = 0;
#pragma omp parallel for schedule(dynamic, 16) reduction(+ : solves)
    for (int s = 0; s < N; ++s) {
        if (!redo[s]) continue;
        out.alloc.set_schedule(s, demand_for_student(inst, s, rule, new_p, budgets[s]));
        ++solves;
    }
    out.solves = solves;
    compute_excess(inst, new_p, out.alloc, out.z, out.znorm);
    return out;
}

}  // namespace pmp
