#include "pmp/metrics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>

namespace pmp {

namespace {

constexpr double kEps = 1e-9;

// min priority level among current holders, INT_MAX when the course is empty
std::vector<int> min_holder_level(const Instance& inst, const Allocation& alloc) {
    std::vector<int> lo(inst.m(), std::numeric_limits<int>::max());
    for (int s = 0; s < inst.n(); ++s)
        for (const auto& [c, share] : alloc.rows[s])
            if (share > kEps) lo[c] = std::min(lo[c], (int)inst.level(s, c));
    return lo;
}

// top-k positive-utility pick from candidate courses, by utility then id rank
std::vector<int> best_schedule(const Instance& inst, int s, std::vector<int> cands) {
    std::sort(cands.begin(), cands.end());
    cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
    std::vector<std::pair<double, int>> pos;
    for (int c : cands) {
        auto u = inst.utility(s, c);
        if (u && *u > 0.0) pos.emplace_back(*u, c);
    }
    std::sort(pos.begin(), pos.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return inst.course_id_rank[a.second] < inst.course_id_rank[b.second];
    });
    std::vector<int> out;
    for (int i = 0; i < (int)pos.size() && i < inst.k; ++i) out.push_back(pos[i].second);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

std::vector<Block> check_stability(const Instance& inst, const Allocation& alloc) {
    std::vector<Block> blocks;
    std::vector<int> qprime = alloc.enrollment_int(inst.m());
    std::vector<int> lo = min_holder_level(inst, alloc);

    for (int s = 0; s < inst.n(); ++s) {
        std::vector<int> xs = alloc.schedule(s);
        double current = schedule_utility(inst, s, xs);

        // reachable seats: own schedule plus seats held by a strictly
        // lower-priority student (no free seats exist under q' = enrollment)
        std::vector<int> cands = xs;
        for (const auto& [c, u] : inst.utilities[s])
            if (qprime[c] > 0 && lo[c] < (int)inst.level(s, c)) cands.push_back(c);
        std::vector<int> best = best_schedule(inst, s, cands);
        if (schedule_utility(inst, s, best) > current + kEps && best != xs)
            blocks.push_back({s, best});
    }
    return blocks;
}

EfficiencyVerdict check_priority_efficiency(const Instance& inst, const Allocation& alloc,
                                            long long max_candidates) {
    EfficiencyVerdict v;
    const int N = inst.n(), M = inst.m();
    std::vector<int> enrolled = alloc.enrollment_int(M);

    // per student: every schedule at least as good as the held one
    std::vector<double> current(N);
    std::vector<std::vector<std::vector<int>>> options(N);
    double candidates = 1.0;
    for (int s = 0; s < N; ++s) {
        current[s] = schedule_utility(inst, s, alloc.schedule(s));
        const auto& row = inst.utilities[s];
        const int L = (int)row.size();
        if (L > 20) {
            v.skipped = true;
            return v;
        }
        for (uint32_t mask = 0; mask < (1u << L); ++mask) {
            if (std::popcount(mask) > inst.k) continue;
            std::vector<int> sched;
            double u = 0.0;
            for (int i = 0; i < L; ++i)
                if (mask & (1u << i)) {
                    sched.push_back(row[i].first);
                    u += row[i].second;
                }
            if (u >= current[s] - kEps) options[s].push_back(std::move(sched));
        }
        candidates *= (double)options[s].size();
        if (candidates > (double)max_candidates) {
            v.skipped = true;
            return v;
        }
    }

    // priority FOSD: y_c weakly dominates x_c at every level threshold
    std::vector<std::vector<int>> xs_level_counts(M, std::vector<int>(inst.R + 1, 0));
    for (int s = 0; s < N; ++s)
        for (int c : alloc.schedule(s)) ++xs_level_counts[c][inst.level(s, c)];

    std::vector<std::vector<int>> pick(N);
    std::vector<int> count(M, 0);
    std::vector<std::vector<int>> y_level_counts(M, std::vector<int>(inst.R + 1, 0));

    std::function<bool(int, bool)> rec = [&](int s, bool strict) -> bool {
        if (s == N) {
            if (!strict) return false;
            for (int c = 0; c < M; ++c) {
                if (count[c] != enrolled[c]) return false;
                int cum_y = 0, cum_x = 0;
                for (int r = inst.R; r >= 1; --r) {
                    cum_y += y_level_counts[c][r];
                    cum_x += xs_level_counts[c][r];
                    if (cum_y < cum_x) return false;
                }
            }
            v.dominator = pick;
            return true;
        }
        for (const auto& sched : options[s]) {
            bool ok = true;
            for (int c : sched)
                if (count[c] + 1 > enrolled[c]) {
                    ok = false;
                    break;
                }
            if (!ok) continue;
            for (int c : sched) {
                ++count[c];
                ++y_level_counts[c][inst.level(s, c)];
            }
            pick[s] = sched;
            double u = schedule_utility(inst, s, sched);
            if (rec(s + 1, strict || u > current[s] + kEps)) return true;
            for (int c : sched) {
                --count[c];
                --y_level_counts[c][inst.level(s, c)];
            }
        }
        return false;
    };

    v.efficient = !rec(0, false);
    return v;
}

EnvyProfile envy_profile(const Instance& inst, const Allocation& alloc) {
    const int N = inst.n(), M = inst.m();
    EnvyProfile prof;
    prof.depth.assign(N, 0);
    prof.histogram.assign(inst.k + 1, 0);

    std::vector<std::vector<int>> sched(N);
    std::vector<double> own(N);
    for (int s = 0; s < N; ++s) {
        sched[s] = alloc.schedule(s);
        own[s] = schedule_utility(inst, s, sched[s]);
    }

    for (int s = 0; s < N; ++s) {
        int worst = 0;
        for (int t = 0; t < N; ++t) {
            if (t == s) continue;
            // only pairs where s's priority is componentwise weakly higher
            bool comparable = true;
            for (int c = 0; c < M && comparable; ++c)
                if (inst.level(s, c) < inst.level(t, c)) comparable = false;
            if (!comparable) continue;

            std::vector<double> vals;
            double total = 0.0;
            for (int c : sched[t]) {
                double u = inst.utility(s, c).value_or(0.0);
                vals.push_back(u);
                total += u;
            }
            std::sort(vals.rbegin(), vals.rend());
            // drop the highest-valued courses first: fewest removals to kill envy
            int d = 0;
            double remaining = total;
            while (remaining > own[s] + kEps && d < (int)vals.size()) {
                remaining -= vals[d];
                ++d;
            }
            worst = std::max(worst, d);
        }
        prof.depth[s] = worst;
        ++prof.histogram[std::min(worst, inst.k)];
    }
    return prof;
}

double priority_violations(const Instance& inst, const Allocation& alloc) {
    const int N = inst.n();
    std::vector<int> lo = min_holder_level(inst, alloc);
    int flagged = 0;

    if (!alloc.fractional) {
        std::vector<int> enrolled = alloc.enrollment_int(inst.m());
        for (int s = 0; s < N; ++s) {
            std::vector<int> xs = alloc.schedule(s);
            double current = schedule_utility(inst, s, xs);
            bool hit = false;
            for (const auto& [c, u] : inst.utilities[s]) {
                if (hit) break;
                if (u <= 0.0 || alloc.holds(s, c)) continue;
                if (enrolled[c] == 0 || lo[c] >= (int)inst.level(s, c)) continue;
                std::vector<int> cands = xs;
                cands.push_back(c);
                if (schedule_utility(inst, s, best_schedule(inst, s, cands)) > current + kEps)
                    hit = true;
            }
            if (hit) ++flagged;
        }
    } else {
        for (int s = 0; s < N; ++s) {
            double total = 0.0;
            double min_held = std::numeric_limits<double>::infinity();
            for (const auto& [c, share] : alloc.rows[s])
                if (share > kEps) {
                    total += share;
                    min_held = std::min(min_held, inst.utility(s, c).value_or(0.0));
                }
            bool spare = total < inst.k - kEps;
            bool hit = false;
            for (const auto& [c, u] : inst.utilities[s]) {
                if (hit) break;
                if (u <= 0.0) continue;
                double mine = 0.0;
                for (const auto& [hc, share] : alloc.rows[s])
                    if (hc == c) mine = share;
                if (mine >= 1.0 - kEps) continue;
                if (lo[c] >= (int)inst.level(s, c)) continue;
                // a strictly-lower-priority student holds a share s wants
                if (spare || u > min_held + kEps) hit = true;
            }
            if (hit) ++flagged;
        }
    }
    return N == 0 ? 0.0 : (double)flagged / N;
}

CompareReport compare(const Instance& inst, const Allocation& a, const Allocation& b) {
    CompareReport rep;
    const int N = inst.n();
    std::array<int, 4> pop{}, na{}, nb{};
    std::array<std::vector<double>, 4> ua_year, ub_year;
    int total_a = 0, total_b = 0;
    double gain_sum = 0.0;
    int gain_count = 0;

    for (int s = 0; s < N; ++s) {
        int y = std::clamp(inst.students[s].year, 1, 4) - 1;
        double ua = schedule_utility(inst, s, a.rows[s]);
        double ub = schedule_utility(inst, s, b.rows[s]);
        ++pop[y];
        ua_year[y].push_back(ua);
        ub_year[y].push_back(ub);
        if (ua > ub + kEps) {
            ++na[y];
            ++total_a;
        } else if (ub > ua + kEps) {
            ++nb[y];
            ++total_b;
        }
        if (std::abs(ua - ub) > kEps) {
            ++rep.changed;
            if (std::abs(ub) > kEps) {
                gain_sum += (ua - ub) / std::abs(ub);
                ++gain_count;
            }
        }
    }

    auto stddev = [](const std::vector<double>& v) {
        if (v.empty()) return 0.0;
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= v.size();
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        return std::sqrt(var / v.size());
    };

    for (int y = 0; y < 4; ++y) {
        if (pop[y] > 0) {
            rep.prefer_a[y] = (double)na[y] / pop[y];
            rep.prefer_b[y] = (double)nb[y] / pop[y];
            rep.indifferent[y] = 1.0 - rep.prefer_a[y] - rep.prefer_b[y];
        }
        rep.std_a[y] = stddev(ua_year[y]);
        rep.std_b[y] = stddev(ub_year[y]);
        if (rep.std_b[y] > kEps)
            rep.std_change_pct[y] = 100.0 * (rep.std_a[y] - rep.std_b[y]) / rep.std_b[y];
    }
    if (N > 0) {
        rep.overall_prefer_a = (double)total_a / N;
        rep.overall_prefer_b = (double)total_b / N;
    }
    if (gain_count > 0) rep.mean_relative_gain = gain_sum / gain_count;
    return rep;
}

PriceStats price_statistics(const Instance& inst, const EquilibriumResult& eq,
                            PricingRule rule) {
    PriceStats st;
    const int R = inst.R, M = inst.m();
    st.cutoff_hist.assign(R, 0);
    st.mean_cutoff_price.assign(R, 0.0);
    std::vector<int> per_level(R, 0);
    for (int c = 0; c < M; ++c) {
        int cut = cutoff_level(eq.prices.t[c], eq.prices.bbar, R);
        ++st.cutoff_hist[cut - 1];
        st.mean_cutoff_price[cut - 1] +=
            from_units(faced_price(rule, eq.prices.t[c], cut, R, eq.prices.bbar));
        ++per_level[cut - 1];
    }
    for (int r = 0; r < R; ++r)
        if (per_level[r] > 0) st.mean_cutoff_price[r] /= per_level[r];

    st.paid_by_year.assign(inst.k + 1, {});
    for (int s = 0; s < inst.n(); ++s) {
        int paid = 0;
        for (int c : eq.alloc.schedule(s))
            if (faced_price(rule, eq.prices.t[c], inst.level(s, c), R, eq.prices.bbar) > 0)
                ++paid;
        int y = std::clamp(inst.students[s].year, 1, 4) - 1;
        ++st.paid_by_year[std::min(paid, inst.k)][y];
    }
    return st;
}

}  // namespace pmp
