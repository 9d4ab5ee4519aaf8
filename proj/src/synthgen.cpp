#include "pmp/synthgen.hpp"

#include <algorithm>
#include <cmath>

#include "pmp/rng.hpp"

namespace pmp {

UtilityModelParams default_params() {
    UtilityModelParams p;
    p.theta = {{{0.12, 0.20, -0.04, -0.27},
                {0.13, 0.19, 0.01, -0.31},
                {0.28, 0.21, 0.01, -0.44},
                {0.09, 0.19, -0.03, -0.32},
                {0.20, 0.15, -0.13, -0.29},
                {0.17, 0.08, -0.09, -0.28},
                {0.19, 0.11, 0.01, -0.37}}};
    p.gamma = {{{0.00, -0.65, -0.58, -0.28, -0.55, -0.70, -0.52},
                {-0.11, 0.00, -0.54, -0.24, -0.09, -0.46, -0.48},
                {0.37, -0.22, 0.00, -0.01, 0.01, -0.28, -0.26},
                {0.14, -0.12, -0.39, 0.00, -0.16, -0.32, -0.27},
                {0.02, -0.55, -0.34, -0.17, 0.00, -0.33, -0.40},
                {-0.07, -0.65, -0.57, -0.21, -0.17, 0.00, -0.55},
                {-0.19, -0.56, -0.58, 0.04, -0.20, -0.49, 0.00}}};
    p.z_quantiles = {{0.00, -2.32}, {0.10, -1.89}, {0.25, -1.70}, {0.50, -1.47},
                     {0.75, -1.12}, {0.90, -0.67}, {1.00, 2.28}};
    p.sigma = 1.0;
    p.choice_set_size = 80;
    p.pair_share = {{{71, 0.47, 1.9, 17, 1.7, 5, 2.7},
                     {1.9, 44, 0.61, 18, 19, 12, 4.1},
                     {10, 1.3, 4.5, 37, 29, 15, 2.4},
                     {2.5, 0.98, 0.83, 64, 12, 13, 6.8},
                     {1.2, 2.6, 0.14, 24, 54, 16, 2.1},
                     {1.5, 1.8, 0.84, 23, 18, 52, 2.3},
                     {1.3, 0.39, 0.26, 31, 7.7, 6.1, 53}}};
    // published quantiles at 10/25/50/75/90; endpoints extrapolated
    p.capacity_quantiles = {{0.00, 2}, {0.10, 8}, {0.25, 15}, {0.50, 25},
                            {0.75, 50}, {0.90, 98}, {1.00, 300}};
    return p;
}

double quantile_interp(const std::vector<std::pair<double, double>>& a, double u) {
    if (u <= a.front().first) return a.front().second;
    if (u >= a.back().first) return a.back().second;
    for (size_t i = 1; i < a.size(); ++i) {
        if (u <= a[i].first) {
            double w = (u - a[i - 1].first) / (a[i].first - a[i - 1].first);
            return a[i - 1].second + w * (a[i].second - a[i - 1].second);
        }
    }
    return a.back().second;
}

int CensusSpec::total_students() const {
    int t = 0;
    for (const auto& col : students)
        for (int v : col) t += v;
    return t;
}

int CensusSpec::total_courses() const {
    int t = 0;
    for (int v : courses) t += v;
    return t;
}

CensusSpec CensusSpec::scaled(double ratio) {
    static const int kStudents[kColleges] = {853, 1642, 259, 1274, 745, 741, 509};
    static const int kCourses[kColleges] = {180, 84, 12, 269, 88, 84, 39};
    CensusSpec c;
    for (int a = 0; a < kColleges; ++a) {
        int total = (int)std::llround(kStudents[a] * ratio);
        int base = total / 4, rem = total % 4;
        for (int y = 0; y < 4; ++y) c.students[a][y] = base + (y < rem ? 1 : 0);
        c.courses[a] = std::max(1, (int)std::llround(kCourses[a] * ratio));
    }
    return c;
}

Instance generate_instance(const GenConfig& config, uint64_t seed,
                           std::optional<uint64_t> utility_seed) {
    const UtilityModelParams& P = config.params;
    Instance inst;
    inst.mode = config.mode;
    inst.R = config.mode == PriorityMode::Flat ? 1 : 8;

    // students, departments round-robin within each college
    for (int a = 0; a < kColleges; ++a) {
        int dept_counter = 0;
        for (int y = 0; y < 4; ++y)
            for (int i = 0; i < config.census.students[a][y]; ++i) {
                Student s;
                s.id = "s" + std::to_string(inst.students.size());
                s.college = (char)('A' + a);
                s.year = y + 1;
                s.department = std::string(1, s.college) + "-d" +
                               std::to_string(dept_counter++ % P.departments_per_college);
                inst.students.push_back(std::move(s));
            }
    }
    const int N = inst.n();

    SplitMix64 cap_rng(derive_seed(seed, seed_tag::capacities));
    SplitMix64 z_rng(derive_seed(seed, seed_tag::vertical));
    std::vector<double> z;
    std::array<int, kColleges> courses_in_college{};
    for (int a = 0; a < kColleges; ++a) {
        courses_in_college[a] = config.census.courses[a];
        for (int i = 0; i < config.census.courses[a]; ++i) {
            Course c;
            c.id = "c" + std::to_string(inst.courses.size());
            c.college = (char)('A' + a);
            c.capacity = std::max(1, (int)std::llround(quantile_interp(P.capacity_quantiles,
                                                                      cap_rng.uniform())));
            inst.courses.push_back(std::move(c));
            z.push_back(quantile_interp(P.z_quantiles, z_rng.uniform()));
        }
    }
    const int M = inst.m();
    inst.k = std::min(config.k, M / 2);

    // reserves
    SplitMix64 res_rng(derive_seed(seed, 0x10));
    for (int c = 0; c < M; ++c) {
        if (res_rng.uniform() >= config.reserves.course_fraction) continue;
        ReserveSpec r;
        r.course = c;
        r.departments = {std::string(1, inst.courses[c].college) + "-d" +
                         std::to_string(res_rng.below(P.departments_per_college))};
        double yu = res_rng.uniform();
        if (yu < 0.4) r.years = {4};
        else if (yu < 0.8) r.years = {3, 4};
        else r.all_years = true;
        int q = inst.courses[c].capacity;
        r.seats = std::min(q, std::max(1, (int)std::llround(config.reserves.seat_fraction * q)));
        inst.reserves.push_back(std::move(r));
    }

    // choice sets: weighted draw without replacement
    // (Efraimidis-Spirakis keys log(u)/w, take the largest)
    SplitMix64 cs_rng(derive_seed(seed, seed_tag::choice_sets));
    const int csize = std::min(P.choice_set_size, M);
    std::vector<std::vector<int>> choice(N);
    std::vector<char> in_choice((size_t)N * M, 0);
    for (int s = 0; s < N; ++s) {
        int a = inst.students[s].college - 'A';
        std::vector<std::pair<double, int>> keys;
        keys.reserve(M);
        for (int c = 0; c < M; ++c) {
            int ac = inst.courses[c].college - 'A';
            double w = P.pair_share[a][ac] / std::max(1, courses_in_college[ac]);
            if (w <= 0) w = 1e-9;
            double u = cs_rng.uniform();
            while (u <= 0) u = cs_rng.uniform();
            keys.emplace_back(std::log(u) / w, c);
        }
        std::partial_sort(keys.begin(), keys.begin() + csize, keys.end(),
                          [](const auto& x, const auto& y) { return x.first > y.first; });
        for (int i = 0; i < csize; ++i) {
            choice[s].push_back(keys[i].second);
            in_choice[(size_t)s * M + keys[i].second] = 1;
        }
    }

    // guarantee: each reserve with r seats sits in >= min(2r, eligible) eligible choice sets
    for (const ReserveSpec& r : inst.reserves) {
        std::vector<int> eligible;
        for (int s = 0; s < N; ++s)
            if (r.covers(inst.students[s])) eligible.push_back(s);
        int have = 0;
        for (int s : eligible) have += in_choice[(size_t)s * M + r.course];
        int want = std::min(2 * r.seats, (int)eligible.size());
        if (have >= want) continue;
        // add to randomly-ordered eligible students lacking the course
        for (int i = (int)eligible.size() - 1; i > 0; --i)
            std::swap(eligible[i], eligible[cs_rng.below(i + 1)]);
        for (int s : eligible) {
            if (have >= want) break;
            if (!in_choice[(size_t)s * M + r.course]) {
                in_choice[(size_t)s * M + r.course] = 1;
                choice[s].push_back(r.course);
                ++have;
            }
        }
    }

    // utilities
    SplitMix64 eps_rng(derive_seed(utility_seed.value_or(seed), seed_tag::utilities));
    inst.utilities.assign(N, {});
    for (int s = 0; s < N; ++s) {
        std::sort(choice[s].begin(), choice[s].end());
        int a = inst.students[s].college - 'A';
        int y = inst.students[s].year - 1;
        for (int c : choice[s]) {
            int ac = inst.courses[c].college - 'A';
            double u = P.theta[a][y] + P.gamma[a][ac] + z[c] + P.sigma * eps_rng.normal();
            inst.utilities[s].emplace_back(c, u);
        }
    }

    inst.finalize();
    return inst;
}

std::function<Instance(uint64_t)> environment_factory(const GenConfig& config, uint64_t seed) {
    return [config, seed](uint64_t env) {
        return generate_instance(config, seed, derive_seed(seed, seed_tag::environments, env));
    };
}

}  // namespace pmp
