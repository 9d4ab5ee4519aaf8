#include "pmp/mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pmp/rng.hpp"

namespace pmp {

TieBreak TieBreak::single_from_rank(const std::vector<int>& rank_order) {
    TieBreak tb;
    tb.kind = Single;
    tb.pos.assign(rank_order.size(), 0);
    for (int i = 0; i < (int)rank_order.size(); ++i) tb.pos[rank_order[i]] = i;
    return tb;
}

TieBreak TieBreak::multiple(int n, int m, uint64_t seed) {
    TieBreak tb;
    tb.kind = Multiple;
    tb.keys.resize(m);
    for (int c = 0; c < m; ++c) {
        SplitMix64 g(derive_seed(seed, seed_tag::course_tb, c));
        tb.keys[c].resize(n);
        for (int s = 0; s < n; ++s) tb.keys[c][s] = g.next();
    }
    return tb;
}

bool TieBreak::before(int course, int a, int b, int level_a, int level_b) const {
    if (level_a != level_b) return level_a > level_b;
    if (kind == Single) return pos[a] < pos[b];
    return keys[course][a] < keys[course][b];
}

SeatLedger::SeatLedger(const Instance& inst, const std::vector<ReserveSpec>& reserves) {
    const int M = inst.m();
    pool_specs.resize(M);
    pool_left.resize(M);
    regular_left.resize(M);
    std::vector<int> reserved(M, 0);
    for (int i = 0; i < (int)reserves.size(); ++i) {
        if (reserves[i].seats <= 0) continue;
        pool_specs[reserves[i].course].push_back(i);
        reserved[reserves[i].course] += reserves[i].seats;
    }
    for (int c = 0; c < M; ++c) {
        std::stable_sort(pool_specs[c].begin(), pool_specs[c].end(), [&](int a, int b) {
            return reserves[a].year_order_key() > reserves[b].year_order_key();
        });
        for (int i : pool_specs[c]) pool_left[c].push_back(reserves[i].seats);
        regular_left[c] = std::max(0, inst.courses[c].capacity - reserved[c]);
    }
}

bool SeatLedger::available(const Instance& inst, const std::vector<ReserveSpec>& reserves,
                           int s, int c) const {
    for (size_t i = 0; i < pool_specs[c].size(); ++i)
        if (pool_left[c][i] > 0 && reserves[pool_specs[c][i]].covers(inst.students[s]))
            return true;
    return regular_left[c] > 0;
}

void SeatLedger::take(const Instance& inst, const std::vector<ReserveSpec>& reserves, int s,
                      int c) {
    for (size_t i = 0; i < pool_specs[c].size(); ++i)
        if (pool_left[c][i] > 0 && reserves[pool_specs[c][i]].covers(inst.students[s])) {
            --pool_left[c][i];
            return;
        }
    --regular_left[c];
}

Allocation rsd(const Instance& inst, const std::vector<ReserveSpec>& reserves,
               const std::vector<int>& student_rank) {
    Allocation alloc(inst.n());
    SeatLedger ledger(inst, reserves);
    for (int s : student_rank) {
        // positive-utility courses, best first
        std::vector<std::pair<int, double>> wish;
        for (const auto& [c, u] : inst.utilities[s])
            if (u > 0.0) wish.emplace_back(c, u);
        std::sort(wish.begin(), wish.end(), [&](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return inst.course_id_rank[a.first] < inst.course_id_rank[b.first];
        });
        std::vector<int> mine;
        for (const auto& [c, u] : wish) {
            if ((int)mine.size() >= inst.k) break;
            if (!ledger.available(inst, reserves, s, c)) continue;
            ledger.take(inst, reserves, s, c);
            mine.push_back(c);
        }
        alloc.set_schedule(s, mine);
    }
    return alloc;
}

namespace {

// course c's tentative choice from `cands` (sorted by the course's order):
// reserved pools (year desc) filled by eligible candidates first, then open
// capacity for everyone remaining
std::vector<int> course_choice(const Instance& inst, const std::vector<ReserveSpec>* reserves,
                               int c, const std::vector<int>& cands) {
    const int q = inst.courses[c].capacity;
    if ((int)cands.size() <= q) return cands;
    std::vector<char> taken(cands.size(), 0);
    std::vector<int> chosen;
    if (reserves) {
        std::vector<int> pools;
        for (int i = 0; i < (int)reserves->size(); ++i)
            if ((*reserves)[i].course == c && (*reserves)[i].seats > 0) pools.push_back(i);
        std::stable_sort(pools.begin(), pools.end(), [&](int a, int b) {
            return (*reserves)[a].year_order_key() > (*reserves)[b].year_order_key();
        });
        for (int pi : pools) {
            int left = (*reserves)[pi].seats;
            for (size_t i = 0; i < cands.size() && left > 0 && (int)chosen.size() < q; ++i) {
                if (taken[i]) continue;
                if ((*reserves)[pi].covers(inst.students[cands[i]])) {
                    taken[i] = 1;
                    chosen.push_back(cands[i]);
                    --left;
                }
            }
        }
    }
    for (size_t i = 0; i < cands.size() && (int)chosen.size() < q; ++i)
        if (!taken[i]) chosen.push_back(cands[i]);
    return chosen;
}

}  // namespace

Allocation da(const Instance& inst, const TieBreak& tiebreak,
              const std::vector<ReserveSpec>* reserves) {
    const int N = inst.n(), M = inst.m();
    // per-student wish lists, best first
    std::vector<std::vector<int>> wish(N);
    std::vector<size_t> next(N, 0);
    for (int s = 0; s < N; ++s) {
        std::vector<std::pair<double, int>> w;
        for (const auto& [c, u] : inst.utilities[s])
            if (u > 0.0) w.emplace_back(u, c);
        std::sort(w.begin(), w.end(), [&](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return inst.course_id_rank[a.second] < inst.course_id_rank[b.second];
        });
        for (const auto& [u, c] : w) wish[s].push_back(c);
    }

    std::vector<std::vector<char>> pending(N);  // rejected-or-held marker per wish position
    std::vector<std::vector<int>> held_by_course(M);
    std::vector<int> held_count(N, 0);
    std::vector<std::vector<char>> holds(N);
    for (int s = 0; s < N; ++s) holds[s].assign(wish[s].size(), 0);
    std::vector<std::vector<char>> rejected(N);
    for (int s = 0; s < N; ++s) rejected[s].assign(wish[s].size(), 0);

    for (;;) {
        // batched proposals: fill every open slot with the best untried courses
        std::vector<std::vector<int>> proposals(M);
        bool any = false;
        for (int s = 0; s < N; ++s) {
            int open = inst.k - held_count[s];
            for (size_t i = 0; i < wish[s].size() && open > 0; ++i) {
                if (holds[s][i] || rejected[s][i]) continue;
                proposals[wish[s][i]].push_back(s);
                --open;
                any = true;
            }
        }
        if (!any) break;

        for (int c = 0; c < M; ++c) {
            if (proposals[c].empty()) continue;
            std::vector<int> cands = held_by_course[c];
            cands.insert(cands.end(), proposals[c].begin(), proposals[c].end());
            std::sort(cands.begin(), cands.end(), [&](int a, int b) {
                return tiebreak.before(c, a, b, inst.level(a, c), inst.level(b, c));
            });
            std::vector<int> chosen = course_choice(inst, reserves, c, cands);
            std::vector<char> is_chosen(inst.n(), 0);
            for (int s : chosen) is_chosen[s] = 1;

            auto wish_pos = [&](int s) {
                for (size_t i = 0; i < wish[s].size(); ++i)
                    if (wish[s][i] == c) return i;
                return wish[s].size();
            };
            for (int s : held_by_course[c])
                if (!is_chosen[s]) {
                    size_t i = wish_pos(s);
                    holds[s][i] = 0;
                    rejected[s][i] = 1;
                    --held_count[s];
                }
            for (int s : proposals[c]) {
                size_t i = wish_pos(s);
                if (is_chosen[s] && !holds[s][i]) {
                    holds[s][i] = 1;
                    ++held_count[s];
                } else if (!is_chosen[s]) {
                    rejected[s][i] = 1;
                }
            }
            held_by_course[c] = std::move(chosen);
        }
    }

    Allocation alloc(N);
    for (int s = 0; s < N; ++s) {
        std::vector<int> mine;
        for (size_t i = 0; i < wish[s].size(); ++i)
            if (holds[s][i]) mine.push_back(wish[s][i]);
        alloc.set_schedule(s, mine);
    }
    return alloc;
}

std::vector<ReserveSpec> optimal_reserves(const Instance& inst,
                                          const std::function<Instance(uint64_t)>& env_factory,
                                          int n_envs, uint64_t seed) {
    std::vector<double> eligible_sum(inst.reserves.size(), 0.0);
    for (int e = 0; e < n_envs; ++e) {
        Instance env = env_factory(e);
        auto rank = seniority_rank(env, derive_seed(seed, seed_tag::tiebreak, e));
        TieBreak tb = TieBreak::single_from_rank(rank);
        Allocation alloc = da(env, tb);
        for (size_t i = 0; i < inst.reserves.size(); ++i) {
            const ReserveSpec& r = inst.reserves[i];
            for (int s = 0; s < env.n(); ++s)
                if (alloc.holds(s, r.course) && r.covers(env.students[s])) eligible_sum[i] += 1.0;
        }
    }

    std::vector<ReserveSpec> out = inst.reserves;
    std::vector<int> total(inst.m(), 0);
    for (size_t i = 0; i < out.size(); ++i) {
        double mean = eligible_sum[i] / std::max(1, n_envs);
        int seats = (int)std::llround(mean);  // half away from zero
        seats = std::min(seats, inst.courses[out[i].course].capacity);
        out[i].seats = seats;
        total[out[i].course] += seats;
    }
    // keep per-course sums within capacity, trimming junior-most specs first
    for (int c = 0; c < inst.m(); ++c) {
        while (total[c] > inst.courses[c].capacity) {
            int pick = -1;
            for (int i = 0; i < (int)out.size(); ++i)
                if (out[i].course == c && out[i].seats > 0 &&
                    (pick < 0 || out[i].year_order_key() < out[pick].year_order_key()))
                    pick = i;
            if (pick < 0) break;
            --out[pick].seats;
            --total[c];
        }
    }
    return out;
}

EquilibriumResult aceei(const Instance& inst, EngineConfig cfg, bool kludgy) {
    cfg.rule = kludgy ? PricingRule::Kludgy : PricingRule::Uniform;
    return solve(inst, cfg);
}

namespace {

constexpr double kEps = 1e-12;

struct EatingCourse {
    std::vector<int> pools;       // reserve indices, year desc
    std::vector<double> pool_mass;
    double open_mass = 0.0;
};

}  // namespace

Allocation ps_seniority_reserves(const Instance& inst) {
    const int N = inst.n(), M = inst.m();
    std::vector<EatingCourse> courses(M);
    for (int c = 0; c < M; ++c) {
        double reserved = 0.0;
        for (int i : inst.reserves_by_course[c])
            if (inst.reserves[i].seats > 0) {
                courses[c].pools.push_back(i);
                reserved += inst.reserves[i].seats;
            }
        std::stable_sort(courses[c].pools.begin(), courses[c].pools.end(), [&](int a, int b) {
            return inst.reserves[a].year_order_key() > inst.reserves[b].year_order_key();
        });
        for (int i : courses[c].pools) courses[c].pool_mass.push_back(inst.reserves[i].seats);
        courses[c].open_mass = std::max(0.0, (double)inst.courses[c].capacity - reserved);
    }

    std::vector<std::vector<double>> share(N, std::vector<double>(M, 0.0));
    std::vector<double> eaten_total(N, 0.0);

    // wish lists best-first
    std::vector<std::vector<int>> wish(N);
    for (int s = 0; s < N; ++s) {
        std::vector<std::pair<double, int>> w;
        for (const auto& [c, u] : inst.utilities[s])
            if (u > 0.0) w.emplace_back(u, c);
        std::sort(w.begin(), w.end(), [&](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return inst.course_id_rank[a.second] < inst.course_id_rank[b.second];
        });
        for (const auto& [u, c] : w) wish[s].push_back(c);
    }

    for (int year = 4; year >= 1; --year) {
        std::vector<int> cohort;
        for (int s = 0; s < N; ++s)
            if (inst.students[s].year == year) cohort.push_back(s);
        if (cohort.empty()) continue;

        double elapsed = 0.0;
        const double period = (double)inst.k;
        while (period - elapsed > kEps) {
            // current target per student: best course with room, and its source
            // (pool index within the course, or -1 for open mass)
            std::vector<int> target(N, -1), source(N, -2);
            std::vector<std::vector<int>> eaters_pool(M);   // flattened below
            for (int s : cohort) {
                if (eaten_total[s] >= inst.k - kEps) continue;
                for (int c : wish[s]) {
                    if (share[s][c] >= 1.0 - kEps) continue;
                    EatingCourse& ec = courses[c];
                    int src = -2;
                    for (size_t pi = 0; pi < ec.pools.size(); ++pi)
                        if (ec.pool_mass[pi] > kEps &&
                            inst.reserves[ec.pools[pi]].covers(inst.students[s])) {
                            src = (int)pi;
                            break;
                        }
                    if (src == -2 && ec.open_mass > kEps) src = -1;
                    if (src == -2) continue;
                    target[s] = c;
                    source[s] = src;
                    break;
                }
            }

            // eating rates per (course, source)
            std::vector<std::vector<int>> group_count(M);
            for (int c = 0; c < M; ++c) group_count[c].assign(courses[c].pools.size() + 1, 0);
            bool anyone = false;
            for (int s : cohort)
                if (target[s] >= 0) {
                    anyone = true;
                    int idx = source[s] == -1 ? (int)courses[target[s]].pools.size() : source[s];
                    ++group_count[target[s]][idx];
                }
            if (!anyone) break;  // cohort idles for the rest of the period

            // next event time
            double dt = period - elapsed;
            for (int s : cohort) {
                if (target[s] < 0) continue;
                dt = std::min(dt, 1.0 - share[s][target[s]]);
                dt = std::min(dt, (double)inst.k - eaten_total[s]);
            }
            for (int c = 0; c < M; ++c) {
                for (size_t pi = 0; pi < courses[c].pools.size(); ++pi)
                    if (group_count[c][pi] > 0)
                        dt = std::min(dt, courses[c].pool_mass[pi] / group_count[c][pi]);
                int open_eaters = group_count[c][courses[c].pools.size()];
                if (open_eaters > 0) dt = std::min(dt, courses[c].open_mass / open_eaters);
            }
            dt = std::max(dt, 0.0);

            for (int s : cohort) {
                if (target[s] < 0) continue;
                share[s][target[s]] += dt;
                eaten_total[s] += dt;
            }
            for (int c = 0; c < M; ++c) {
                for (size_t pi = 0; pi < courses[c].pools.size(); ++pi)
                    courses[c].pool_mass[pi] -= dt * group_count[c][pi];
                courses[c].open_mass -= dt * group_count[c][courses[c].pools.size()];
            }
            elapsed += dt;
            if (dt <= kEps) {
                // numerical safety: clean near-empty quantities and continue
                for (int c = 0; c < M; ++c) {
                    for (auto& m : courses[c].pool_mass)
                        if (m < kEps) m = 0.0;
                    if (courses[c].open_mass < kEps) courses[c].open_mass = 0.0;
                }
            }
        }
    }

    Allocation alloc(N);
    alloc.fractional = true;
    for (int s = 0; s < N; ++s)
        for (int c = 0; c < M; ++c)
            if (share[s][c] > kEps) alloc.rows[s].emplace_back(c, std::min(share[s][c], 1.0));
    return alloc;
}

}  // namespace pmp
