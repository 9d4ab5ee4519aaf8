#include "pmp/reserves.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace pmp {

int ReserveSystem::total_students() const {
    int t = 0;
    for (int v : x) t += v;
    return t;
}

bool is_feasible(const ReserveSystem& sys) {
    const int I = sys.criteria();
    const int cells = 1 << I;
    for (int P = 0; P < cells; ++P) {
        long long lhs = 0;
        // iterate subsets T of P (including empty)
        int T = P;
        for (;;) {
            lhs += sys.x[T];
            if (T == 0) break;
            T = (T - 1) & P;
        }
        long long rhs = sys.q;
        for (int j = 0; j < I; ++j)
            if (!(P >> j & 1)) rhs -= sys.r[j];
        if (lhs > rhs) return false;
    }
    return true;
}

namespace {

struct Matcher {
    // left: students, right: seats; adjacency by seat-class eligibility
    std::vector<std::vector<int>> adj;
    std::vector<int> match_right;
    std::vector<char> used;

    bool try_kuhn(int v) {
        for (int to : adj[v]) {
            if (used[to]) continue;
            used[to] = 1;
            if (match_right[to] < 0 || try_kuhn(match_right[to])) {
                match_right[to] = v;
                return true;
            }
        }
        return false;
    }
};

}  // namespace

bool feasibility_oracle(const ReserveSystem& sys) {
    const int I = sys.criteria();
    const int total = sys.total_students();
    if (total > 200) throw std::runtime_error("feasibility_oracle: size guard exceeded");
    if (total > sys.q) return false;

    int reserved = std::accumulate(sys.r.begin(), sys.r.end(), 0);
    if (reserved > sys.q) return false;
    int open = sys.q - reserved;

    // seat list: (criterion index, -1 for open), one node per seat
    std::vector<int> seat_class;
    for (int j = 0; j < I; ++j)
        for (int s = 0; s < sys.r[j]; ++s) seat_class.push_back(j);
    for (int s = 0; s < open && s < total; ++s) seat_class.push_back(-1);

    Matcher m;
    m.match_right.assign(seat_class.size(), -1);
    for (int T = 0; T < (1 << I); ++T) {
        for (int rep = 0; rep < sys.x[T]; ++rep) {
            std::vector<int> edges;
            for (int seat = 0; seat < (int)seat_class.size(); ++seat) {
                int cls = seat_class[seat];
                if (cls < 0 || (T >> cls & 1)) edges.push_back(seat);
            }
            m.adj.push_back(std::move(edges));
        }
    }
    int matched = 0;
    for (int v = 0; v < (int)m.adj.size(); ++v) {
        m.used.assign(seat_class.size(), 0);
        if (m.try_kuhn(v)) ++matched;
    }
    return matched == (int)m.adj.size();
}

ReserveSystem course_system(const Instance& inst, const std::vector<int>& enrolled,
                            int course, const std::vector<ReserveSpec>& reserves) {
    const auto& spec_ids = inst.reserves_by_course[course];
    const int I = (int)spec_ids.size();
    ReserveSystem sys;
    sys.q = std::max(inst.courses[course].capacity, (int)enrolled.size());
    sys.r.resize(I);
    for (int i = 0; i < I; ++i) sys.r[i] = reserves[spec_ids[i]].seats;
    sys.x.assign(1 << I, 0);
    for (int s : enrolled) {
        int mask = 0;
        for (int i = 0; i < I; ++i) {
            const ReserveSpec& spec = reserves[spec_ids[i]];
            // criterion membership is the department/year predicate,
            // independent of the current seat count
            const Student& st = inst.students[s];
            bool dept_ok = spec.all_departments ||
                           std::binary_search(spec.departments.begin(), spec.departments.end(),
                                              st.department);
            if (dept_ok && spec.covers_year(st.year)) mask |= 1 << i;
        }
        ++sys.x[mask];
    }
    return sys;
}

AdjustResult adjust_reserves(const Instance& inst, const Allocation& alloc) {
    const int M = inst.m();
    AdjustResult out;
    out.reserves = inst.reserves;
    out.adjusted_capacity.resize(M);

    std::vector<std::vector<int>> enrolled(M);
    for (int s = 0; s < (int)alloc.rows.size(); ++s)
        for (const auto& [c, share] : alloc.rows[s])
            if (share > 0.0) enrolled[c].push_back(s);

    for (int c = 0; c < M; ++c) {
        out.adjusted_capacity[c] = std::max(inst.courses[c].capacity, (int)enrolled[c].size());
        const auto& spec_ids = inst.reserves_by_course[c];
        if (spec_ids.empty()) continue;

        // cyclic decrement order: year of study descending, insertion order on ties
        std::vector<int> order((size_t)spec_ids.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return out.reserves[spec_ids[a]].year_order_key() >
                   out.reserves[spec_ids[b]].year_order_key();
        });

        ReserveSystem sys = course_system(inst, enrolled[c], c, out.reserves);
        std::vector<int> original(sys.r);
        while (!is_feasible(sys)) {
            bool any = false;
            for (int i : order) {
                if (sys.r[i] == 0) continue;  // zero-seat specs are skipped
                --sys.r[i];
                any = true;
                if (is_feasible(sys)) break;
            }
            if (!any) break;  // all reserves gone; q >= enrollment makes this feasible
        }
        for (int i = 0; i < (int)spec_ids.size(); ++i) {
            if (sys.r[i] != original[i]) {
                out.log.push_back({c, spec_ids[i], original[i], sys.r[i]});
                out.reserves[spec_ids[i]].seats = sys.r[i];
            }
        }
    }
    return out;
}

}  // namespace pmp
