#include "pmp/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pmp/rng.hpp"

namespace pmp {

std::vector<Units> assign_budgets(const std::vector<int>& student_rank, double beta) {
    const int N = (int)student_rank.size();
    std::vector<Units> budgets(N, 0);
    for (int i = 0; i < N; ++i) {
        double b = N == 1 ? 1.0 + beta : 1.0 + beta * (double)(N - 1 - i) / (double)(N - 1);
        budgets[student_rank[i]] = to_units(b);
    }
    return budgets;
}

std::vector<int> seniority_rank(const Instance& inst, uint64_t tiebreak_seed) {
    const int N = inst.n();
    SplitMix64 g(tiebreak_seed);
    std::vector<uint64_t> noise(N);
    for (auto& v : noise) v = g.next();
    std::vector<int> order(N);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (inst.students[a].year != inst.students[b].year)
            return inst.students[a].year > inst.students[b].year;
        return noise[a] < noise[b];
    });
    return order;
}

PriceParameter initial_price(const Instance& inst, const std::vector<Units>& budgets,
                             const EngineConfig& cfg) {
    PriceParameter p;
    p.bbar = cfg.bbar;
    p.t.assign(inst.m(), 0);
    auto ideal = ideal_bundles(inst);
    std::vector<int> demand(inst.m(), 0);
    for (const auto& bundle : ideal)
        for (int c : bundle) ++demand[c];
    long long max_over = 0;
    for (int c = 0; c < inst.m(); ++c)
        max_over = std::max<long long>(max_over, demand[c] - inst.courses[c].capacity);
    if (max_over == 0 || budgets.empty()) return p;

    std::vector<Units> sorted_budgets = budgets;
    std::sort(sorted_budgets.begin(), sorted_budgets.end());
    Units median = sorted_budgets[sorted_budgets.size() / 2];
    for (int c = 0; c < inst.m(); ++c) {
        long long over = demand[c] - inst.courses[c].capacity;
        if (over > 0) p.t[c] = (Units)((double)median * (double)over / (double)max_over);
    }
    return p;
}

namespace {

struct ErrKey {
    double znorm;
    int big_violators;  // courses over-enrolled by more than k-1

    bool operator<(const ErrKey& o) const {
        if (znorm != o.znorm) return znorm < o.znorm;
        return big_violators < o.big_violators;
    }
};

ErrKey err_key(const Instance& inst, const BatchDemand& bd) {
    int big = 0;
    std::vector<int> enrolled = bd.alloc.enrollment_int(inst.m());
    for (int c = 0; c < inst.m(); ++c)
        if (enrolled[c] - inst.courses[c].capacity > inst.k - 1) ++big;
    return {bd.znorm, big};
}

double theory_bound(const Instance& inst) { return std::sqrt(0.5 * inst.k * inst.m()); }

}  // namespace

PhaseOneResult phase_one(PhaseState& state, const Instance& inst,
                         const std::vector<Units>& budgets,
                         const std::vector<std::vector<int>>& ideal, const EngineConfig& cfg,
                         int nround) {
    const double bound = theory_bound(inst);
    const Units tmax = state.p.max_t(inst.R);
    const int patience_limit = cfg.patience * nround;
    const long long iter_limit = (long long)cfg.max_iters * nround;

    PhaseState best = state;
    ErrKey best_key = err_key(inst, best.bd);
    double step = cfg.gamma_step;
    int no_improve = 0;
    PhaseOneResult res;

    while (res.iterations < iter_limit && best.bd.znorm > 0.0) {
        ++res.iterations;
        PriceParameter np = state.p;
        for (int c = 0; c < inst.m(); ++c) {
            int z = state.bd.z[c];
            if (z == 0) continue;
            long long delta = (long long)std::llround(
                step * (double)z / std::max(1, inst.courses[c].capacity) * (double)cfg.bbar);
            if (delta == 0) delta = z > 0 ? 1 : -1;
            delta = std::clamp<long long>(delta, -(long long)cfg.bbar / 2, (long long)cfg.bbar / 2);
            np.t[c] = std::clamp<Units>(np.t[c] + delta, 0, tmax);
        }
        BatchDemand nbd = incremental_batch_demand(inst, cfg.rule, state.p, state.bd.alloc, np,
                                                   budgets, ideal);
        state.p = std::move(np);
        state.bd = std::move(nbd);
        ErrKey key = err_key(inst, state.bd);
        if (key < best_key) {
            double rel = best.bd.znorm > 0.0 ? (best.bd.znorm - state.bd.znorm) / best.bd.znorm
                                             : 1.0;
            best = state;
            best_key = key;
            no_improve = 0;
            if (best.bd.znorm <= bound && rel < cfg.improve_eps) break;
        } else {
            // demand is piecewise constant in t, so progress may need several
            // un-rewarded moves; pull back to the best vector and shrink the
            // step only after a window of them
            ++no_improve;
            if (no_improve % 10 == 0) {
                state = best;
                step *= 0.7;
            }
            if (no_improve >= patience_limit) break;
        }
    }
    state = best;
    res.boundcheck = state.bd.znorm <= bound;
    return res;
}

namespace {

// smallest grid increase of t_c that pushes course c out of student s's demand
Units min_exclusion_delta(const Instance& inst, int s, int c, const PhaseState& state,
                          const std::vector<Units>& budgets, const EngineConfig& cfg) {
    const int lvl = inst.level(s, c);
    const Units tmax = state.p.max_t(inst.R);
    Units lo = 1, hi = tmax - state.p.t[c];  // exclusion is guaranteed at t = R*bbar
    if (hi < 1) return 0;

    const auto& row = inst.utilities[s];
    std::vector<Units> faced(row.size());
    size_t c_pos = 0;
    for (size_t i = 0; i < row.size(); ++i) {
        faced[i] = faced_price(cfg.rule, state.p.t[row[i].first], inst.level(s, row[i].first),
                               inst.R, cfg.bbar);
        if (row[i].first == c) c_pos = i;
    }
    auto excluded = [&](Units delta) {
        faced[c_pos] = faced_price(cfg.rule, state.p.t[c] + delta, lvl, inst.R, cfg.bbar);
        auto d = student_demand(row, faced, budgets[s], inst.k, inst.course_id_rank);
        return !std::binary_search(d.begin(), d.end(), c);
    };

    // tighten hi to the first unaffordable price, then binary search
    while (lo < hi) {
        Units mid = lo + (hi - lo) / 2;
        if (excluded(mid)) hi = mid;
        else lo = mid + 1;
    }
    return lo;
}

bool oversub_targets_met(const Instance& inst, const std::vector<int>& enrolled,
                         const EngineConfig& cfg) {
    const int M = inst.m();
    std::vector<int> at_least(6, 0);
    for (int c = 0; c < M; ++c) {
        int over = enrolled[c] - inst.courses[c].capacity;
        if (over > inst.k - 1) return false;  // good-by-good cap
        for (int j = 1; j <= 5; ++j)
            if (over >= j) ++at_least[j];
    }
    for (int j = 1; j <= 5 && j <= (int)cfg.target_error_distribution.size(); ++j)
        if ((double)at_least[j] > cfg.target_error_distribution[j - 1] * M) return false;
    return true;
}

}  // namespace

PhaseTwoResult phase_two(PhaseState& state, const Instance& inst,
                         const std::vector<Units>& budgets,
                         const std::vector<std::vector<int>>& ideal, const EngineConfig& cfg) {
    PhaseTwoResult res;
    for (int pass = 0; pass < cfg.phase2_max_passes; ++pass) {
        std::vector<int> enrolled = state.bd.alloc.enrollment_int(inst.m());
        if (oversub_targets_met(inst, enrolled, cfg)) {
            res.oversubcheck = true;
            break;
        }
        // over-demanded courses, worst first
        std::vector<std::pair<int, int>> over;  // (-excess, course)
        for (int c = 0; c < inst.m(); ++c) {
            int e = enrolled[c] - inst.courses[c].capacity;
            if (e > 0) over.emplace_back(-e, c);
        }
        if (over.empty()) {
            res.oversubcheck = oversub_targets_met(inst, enrolled, cfg);
            break;
        }
        std::sort(over.begin(), over.end());

        PriceParameter np = state.p;
        for (auto [neg_e, c] : over) {
            int excess = -neg_e;
            std::vector<Units> deltas;
            for (int s : inst.students_by_course[c]) {
                if (!state.bd.alloc.holds(s, c)) continue;
                Units d = min_exclusion_delta(inst, s, c, state, budgets, cfg);
                if (d > 0) deltas.push_back(d);
            }
            if ((int)deltas.size() < excess) continue;
            std::nth_element(deltas.begin(), deltas.begin() + (excess - 1), deltas.end());
            np.t[c] = std::min(np.t[c] + deltas[excess - 1], state.p.max_t(inst.R));
        }
        if (np.t == state.p.t) break;  // no progress possible
        BatchDemand nbd = incremental_batch_demand(inst, cfg.rule, state.p, state.bd.alloc, np,
                                                   budgets, ideal);
        state.p = std::move(np);
        state.bd = std::move(nbd);
    }
    res.boundcheck = state.bd.znorm <= theory_bound(inst);
    return res;
}

namespace {

// Raise t so every enrolled course has a holder at its cutoff level, where the
// raise provably leaves demand and the error contribution unchanged.
void cutoff_adjustment(const Instance& inst, PhaseState& state) {
    for (int c = 0; c < inst.m(); ++c) {
        for (;;) {
            int cut = cutoff_level(state.p.t[c], state.p.bbar, inst.R);
            if (cut >= inst.R) break;
            bool enrolled_any = false, at_cutoff = false;
            int min_holder_level = inst.R + 1;
            for (int s : inst.students_by_course[c]) {
                if (!state.bd.alloc.holds(s, c)) continue;
                enrolled_any = true;
                int lvl = inst.level(s, c);
                min_holder_level = std::min(min_holder_level, lvl);
                if (lvl == cut) at_cutoff = true;
            }
            if (!enrolled_any || at_cutoff) break;
            // guard: only raise when the excess-demand contribution cannot flip
            int enroll = 0;
            for (int s : inst.students_by_course[c])
                if (state.bd.alloc.holds(s, c)) ++enroll;
            if (state.p.t[c] == 0 && enroll < inst.courses[c].capacity) break;
            Units p_cut = state.p.t[c] - (Units)(cut - 1) * state.p.bbar;
            if (p_cut < 0) p_cut = 0;
            state.p.t[c] += state.p.bbar - p_cut;  // cutoff moves up one level
        }
    }
}

}  // namespace

EquilibriumResult solve(const Instance& inst, const EngineConfig& cfg,
                        std::optional<std::vector<int>> student_rank) {
    std::vector<int> rank = student_rank
                                ? *student_rank
                                : seniority_rank(inst, derive_seed(cfg.seed, seed_tag::tiebreak));
    std::vector<Units> budgets = assign_budgets(rank, cfg.beta);
    auto ideal = ideal_bundles(inst);
    PriceParameter t0 = initial_price(inst, budgets, cfg);
    const double bound = theory_bound(inst);
    SplitMix64 noise(derive_seed(cfg.seed, seed_tag::engine_noise));

    EquilibriumResult best;
    bool have_best = false;
    PhaseTrace trace;

    auto finish = [&](const PhaseState& st, bool certified, bool boundck, bool oversubck) {
        EquilibriumResult r;
        r.alloc = st.bd.alloc;
        r.prices = st.p;
        r.budgets = budgets;
        r.z = st.bd.z;
        r.error = st.bd.znorm;
        r.theory_bound = bound;
        r.certified = certified;
        r.boundcheck = boundck;
        r.oversubcheck = oversubck;
        r.trace = trace;
        r.cutoffs.resize(inst.m());
        for (int c = 0; c < inst.m(); ++c)
            r.cutoffs[c] = cutoff_level(st.p.t[c], st.p.bbar, inst.R);
        return r;
    };

    for (int outer = 0; outer <= cfg.outer_restarts; ++outer) {
        trace.restarts = outer;
        PhaseState state;
        state.p = t0;
        if (outer > 0)
            for (auto& t : state.p.t)
                t = std::clamp<Units>(t + (Units)noise.below(cfg.bbar / 4 + 1), 0,
                                      state.p.max_t(inst.R));
        state.bd = batch_demand(inst, cfg.rule, state.p, budgets, cfg.parallel);

        for (int round = 1; round <= cfg.max_rounds; ++round) {
            ++trace.rounds;
            PhaseOneResult p1 = phase_one(state, inst, budgets, ideal, cfg, round);
            trace.iterations += p1.iterations;
            PhaseTwoResult p2 = phase_two(state, inst, budgets, ideal, cfg);

            if (!have_best || state.bd.znorm < best.error) {
                best = finish(state, false, p2.boundcheck, p2.oversubcheck);
                have_best = true;
            }

            if (p2.boundcheck && p2.oversubcheck) {
                cutoff_adjustment(inst, state);
                // final verification: every schedule re-solved from scratch
                BatchDemand fresh = batch_demand(inst, cfg.rule, state.p, budgets, cfg.parallel);
                if (fresh.alloc.rows != state.bd.alloc.rows) {
                    // pure re-solve discrepancy: adopt the fresh solution
                    state.bd = std::move(fresh);
                }
                std::vector<int> enrolled = state.bd.alloc.enrollment_int(inst.m());
                if (state.bd.znorm <= bound && oversub_targets_met(inst, enrolled, cfg))
                    return finish(state, true, true, true);
                break;  // structural failure: restart with noise
            }
        }
    }
    best.certified = false;
    return best;
}

VerifyReport verify_equilibrium(const Instance& inst,
                                const std::vector<std::vector<Units>>& prices,
                                const std::vector<Units>& budgets, const Allocation& alloc,
                                double alpha, double beta, Units bbar) {
    VerifyReport rep;
    const int N = inst.n(), M = inst.m();
    const int R = inst.R;

    rep.demand_optimal = true;
    for (int s = 0; s < N; ++s) {
        const auto& row = inst.utilities[s];
        std::vector<Units> faced(row.size());
        for (size_t i = 0; i < row.size(); ++i)
            faced[i] = prices[row[i].first][inst.level(s, row[i].first) - 1];
        auto d = student_demand(row, faced, budgets[s], inst.k, inst.course_id_rank);
        std::vector<int> held = alloc.schedule(s);
        // accept any bundle matching the optimum's utility and cost (the
        // deterministic tie-break is an implementation device, not part of
        // the definition)
        if (d != held) {
            double du = schedule_utility(inst, s, d), hu = schedule_utility(inst, s, held);
            Units dc = 0, hc = 0;
            for (int c : d)
                dc += prices[c][inst.level(s, c) - 1];
            for (int c : held)
                hc += prices[c][inst.level(s, c) - 1];
            if (hu < du || hc > budgets[s]) {
                rep.demand_optimal = false;
                break;
            }
        }
    }

    rep.condition_star = true;
    rep.cutoff_demander = true;
    std::vector<int> enrolled = alloc.enrollment_int(M);
    std::vector<bool> level1_positive(M, false);
    for (int c = 0; c < M; ++c) {
        int cut = 1;
        while (cut <= R && prices[c][cut - 1] >= bbar) ++cut;
        if (cut <= R && !(prices[c][cut - 1] >= 0 && prices[c][cut - 1] < bbar))
            rep.condition_star = false;
        for (int r = cut + 1; r <= R; ++r)
            if (prices[c][r - 1] != 0) rep.condition_star = false;
        level1_positive[c] = prices[c][0] > 0;
        if (enrolled[c] > 0) {
            if (cut > R) {
                rep.cutoff_demander = false;
                continue;
            }
            bool found = false;
            for (int s = 0; s < N; ++s)
                if (alloc.holds(s, c) && inst.level(s, c) == cut) found = true;
            if (!found) rep.cutoff_demander = false;
        }
    }

    rep.budgets_in_range = true;
    for (Units b : budgets)
        if (b < to_units(1.0) || b > to_units(1.0 + beta)) rep.budgets_in_range = false;

    double sq = 0.0;
    for (int c = 0; c < M; ++c) {
        int e = enrolled[c] - inst.courses[c].capacity;
        if (!level1_positive[c] && e < 0) e = 0;
        sq += (double)e * e;
    }
    rep.error = std::sqrt(sq);
    rep.bound_ok = rep.error <= alpha;
    return rep;
}

}  // namespace pmp
