#include "pmp/instance.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace pmp {

using nlohmann::json;

std::string to_string(PriorityMode mode) {
    switch (mode) {
        case PriorityMode::Hybrid: return "hybrid";
        case PriorityMode::DepartmentFirst: return "department-first";
        case PriorityMode::Flat: return "flat";
    }
    return "flat";
}

PriorityMode priority_mode_from_string(const std::string& s) {
    if (s == "hybrid") return PriorityMode::Hybrid;
    if (s == "department-first") return PriorityMode::DepartmentFirst;
    if (s == "flat") return PriorityMode::Flat;
    throw ValidationError("unknown priority_mode: " + s);
}

bool ReserveSpec::covers_year(int year) const {
    if (all_years) return true;
    return std::binary_search(years.begin(), years.end(), year);
}

bool ReserveSpec::covers(const Student& s) const {
    if (seats <= 0) return false;
    if (!covers_year(s.year)) return false;
    if (all_departments) return true;
    return std::binary_search(departments.begin(), departments.end(), s.department);
}

int ReserveSpec::year_order_key() const {
    if (all_years) return 0;  // "All years" specs are decremented last
    return years.empty() ? 0 : years.back();
}

std::optional<double> Instance::utility(int s, int c) const {
    const auto& row = utilities[s];
    auto it = std::lower_bound(row.begin(), row.end(), c,
                               [](const std::pair<int, double>& e, int key) { return e.first < key; });
    if (it != row.end() && it->first == c) return it->second;
    return std::nullopt;
}

std::vector<uint8_t> build_priorities(const Instance& inst, PriorityMode mode) {
    const int N = inst.n(), M = inst.m();
    std::vector<uint8_t> out((size_t)N * M, 1);
    if (mode == PriorityMode::Flat) return out;

    // reserve specs per course (instance's derived index may not exist yet)
    std::vector<std::vector<const ReserveSpec*>> by_course(M);
    for (const auto& r : inst.reserves) by_course[r.course].push_back(&r);

    for (int s = 0; s < N; ++s) {
        const Student& st = inst.students[s];
        for (int c = 0; c < M; ++c) {
            bool eligible = false;
            for (const ReserveSpec* r : by_course[c])
                if (r->covers(st)) { eligible = true; break; }
            int lvl;
            if (mode == PriorityMode::Hybrid)
                lvl = 2 * st.year - 1 + (eligible ? 1 : 0);
            else  // department-first: eligible years occupy the top levels
                lvl = eligible ? st.year + 4 : st.year;
            out[(size_t)s * M + c] = (uint8_t)lvl;
        }
    }
    return out;
}

void Instance::finalize() {
    const int N = n(), M = m();
    if (k < 1) throw ValidationError("k must be >= 1");
    if (2 * k > M) throw ValidationError("k must satisfy k <= M/2");
    if (R < 1) throw ValidationError("R must be >= 1");
    if (mode != PriorityMode::Flat && R != 8)
        throw ValidationError("hybrid/department-first priority structures require R=8");

    std::unordered_map<std::string, int> sidx, cidx;
    for (int i = 0; i < N; ++i) {
        const Student& s = students[i];
        if (!sidx.emplace(s.id, i).second) throw ValidationError("duplicate student id: " + s.id);
        if (s.college < 'A' || s.college > 'G')
            throw ValidationError("student " + s.id + ": college out of range");
        if (s.year < 1 || s.year > 4) throw ValidationError("student " + s.id + ": year out of range");
    }
    for (int j = 0; j < M; ++j) {
        const Course& c = courses[j];
        if (!cidx.emplace(c.id, j).second) throw ValidationError("duplicate course id: " + c.id);
        if (c.college < 'A' || c.college > 'G')
            throw ValidationError("course " + c.id + ": college out of range");
        if (c.capacity < 0) throw ValidationError("course " + c.id + ": negative capacity");
    }

    reserves_by_course.assign(M, {});
    std::vector<int> reserved_total(M, 0);
    std::vector<std::set<int>> years_seen(M);
    std::vector<int> all_years_specs(M, 0);
    for (int i = 0; i < (int)reserves.size(); ++i) {
        ReserveSpec& r = reserves[i];
        if (r.course < 0 || r.course >= M) throw ValidationError("reserve spec: bad course index");
        if (r.seats < 0) throw ValidationError("reserve spec: negative seats");
        std::sort(r.departments.begin(), r.departments.end());
        std::sort(r.years.begin(), r.years.end());
        for (int y : r.years)
            if (y < 1 || y > 4)
                throw ValidationError("reserve spec on " + courses[r.course].id + ": year out of range");
        if (r.all_years) {
            if (++all_years_specs[r.course] > 1)
                throw ValidationError("course " + courses[r.course].id + ": multiple all-years reserve specs");
        } else {
            for (int y : r.years)
                if (!years_seen[r.course].insert(y).second)
                    throw ValidationError("course " + courses[r.course].id +
                                          ": year " + std::to_string(y) + " appears in multiple reserve specs");
        }
        reserved_total[r.course] += r.seats;
        reserves_by_course[r.course].push_back(i);
    }
    for (int j = 0; j < M; ++j)
        if (reserved_total[j] > courses[j].capacity)
            throw ValidationError("course " + courses[j].id + ": reserved seats exceed capacity");

    if ((int)utilities.size() != N) throw ValidationError("utility rows do not match student count");
    students_by_course.assign(M, {});
    for (int s = 0; s < N; ++s) {
        auto& row = utilities[s];
        std::sort(row.begin(), row.end());
        for (size_t i = 0; i < row.size(); ++i) {
            if (row[i].first < 0 || row[i].first >= M)
                throw ValidationError("utility entry: bad course index for student " + students[s].id);
            if (i > 0 && row[i].first == row[i - 1].first)
                throw ValidationError("duplicate utility entry for student " + students[s].id);
            students_by_course[row[i].first].push_back(s);
        }
    }

    priority = build_priorities(*this, mode);

    // lexicographic course-id ranks, used by deterministic demand tie-breaking
    std::vector<int> order(M);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return courses[a].id < courses[b].id; });
    course_id_rank.assign(M, 0);
    for (int i = 0; i < M; ++i) course_id_rank[order[i]] = i;
}

namespace {

json reserve_to_json(const Instance& inst, const ReserveSpec& r) {
    json j;
    j["course"] = inst.courses[r.course].id;
    if (r.all_departments) j["departments"] = "All";
    else j["departments"] = r.departments;
    if (r.all_years) j["years"] = "All";
    else j["years"] = r.years;
    j["seats"] = r.seats;
    return j;
}

}  // namespace

Instance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open instance file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("parse error in " + path + ": " + e.what());
    }

    Instance inst;
    try {
        inst.k = j.at("k").get<int>();
        inst.R = j.at("R").get<int>();
        inst.mode = priority_mode_from_string(j.at("priority_mode").get<std::string>());
        for (const auto& js : j.at("students")) {
            Student s;
            s.id = js.at("id").get<std::string>();
            std::string college = js.at("college").get<std::string>();
            if (college.size() != 1) throw ValidationError("student " + s.id + ": bad college");
            s.college = college[0];
            s.year = js.at("year").get<int>();
            s.department = js.at("department").get<std::string>();
            inst.students.push_back(std::move(s));
        }
        for (const auto& jc : j.at("courses")) {
            Course c;
            c.id = jc.at("id").get<std::string>();
            std::string college = jc.at("college").get<std::string>();
            if (college.size() != 1) throw ValidationError("course " + c.id + ": bad college");
            c.college = college[0];
            c.capacity = jc.at("capacity").get<int>();
            inst.courses.push_back(std::move(c));
        }
        std::unordered_map<std::string, int> sidx, cidx;
        for (int i = 0; i < inst.n(); ++i) sidx[inst.students[i].id] = i;
        for (int i = 0; i < inst.m(); ++i) cidx[inst.courses[i].id] = i;

        for (const auto& jr : j.at("reserves")) {
            ReserveSpec r;
            auto cit = cidx.find(jr.at("course").get<std::string>());
            if (cit == cidx.end())
                throw ValidationError("reserve spec references unknown course");
            r.course = cit->second;
            const auto& jd = jr.at("departments");
            if (jd.is_string() && jd.get<std::string>() == "All") r.all_departments = true;
            else r.departments = jd.get<std::vector<std::string>>();
            const auto& jy = jr.at("years");
            if (jy.is_string() && jy.get<std::string>() == "All") r.all_years = true;
            else r.years = jy.get<std::vector<int>>();
            r.seats = jr.at("seats").get<int>();
            inst.reserves.push_back(std::move(r));
        }

        inst.utilities.assign(inst.n(), {});
        for (const auto& ju : j.at("utilities")) {
            auto sit = sidx.find(ju.at(0).get<std::string>());
            auto cit = cidx.find(ju.at(1).get<std::string>());
            if (sit == sidx.end() || cit == cidx.end())
                throw ValidationError("utility entry references unknown student or course");
            inst.utilities[sit->second].emplace_back(cit->second, ju.at(2).get<double>());
        }
    } catch (const json::exception& e) {
        throw std::runtime_error("schema error in " + path + ": " + e.what());
    }

    inst.finalize();
    return inst;
}

void save_instance(const Instance& inst, const std::string& path) {
    json j;
    j["k"] = inst.k;
    j["R"] = inst.R;
    j["priority_mode"] = to_string(inst.mode);
    j["students"] = json::array();
    for (const auto& s : inst.students)
        j["students"].push_back({{"id", s.id},
                                 {"college", std::string(1, s.college)},
                                 {"year", s.year},
                                 {"department", s.department}});
    j["courses"] = json::array();
    for (const auto& c : inst.courses)
        j["courses"].push_back({{"id", c.id},
                                {"college", std::string(1, c.college)},
                                {"capacity", c.capacity}});
    j["reserves"] = json::array();
    for (const auto& r : inst.reserves) j["reserves"].push_back(reserve_to_json(inst, r));
    j["utilities"] = json::array();
    for (int s = 0; s < inst.n(); ++s)
        for (const auto& [c, u] : inst.utilities[s])
            j["utilities"].push_back({inst.students[s].id, inst.courses[c].id, u});

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(1) << "\n";
}

void Allocation::set_schedule(int s, std::vector<int> cs) {
    std::sort(cs.begin(), cs.end());
    rows[s].clear();
    for (int c : cs) rows[s].emplace_back(c, 1.0);
}

std::vector<int> Allocation::schedule(int s) const {
    std::vector<int> out;
    out.reserve(rows[s].size());
    for (const auto& [c, share] : rows[s]) out.push_back(c);
    return out;
}

bool Allocation::holds(int s, int c) const {
    for (const auto& [cc, share] : rows[s])
        if (cc == c) return share > 0.0;
    return false;
}

std::vector<double> Allocation::enrollment(int m) const {
    std::vector<double> e(m, 0.0);
    for (const auto& row : rows)
        for (const auto& [c, share] : row) e[c] += share;
    return e;
}

std::vector<int> Allocation::enrollment_int(int m) const {
    std::vector<int> e(m, 0);
    for (const auto& row : rows)
        for (const auto& [c, share] : row)
            if (share > 0.0) e[c] += 1;
    return e;
}

void save_allocation(const Allocation& alloc, const Instance& inst, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "student_id,course_id,share\n";
    char buf[64];
    for (int s = 0; s < (int)alloc.rows.size(); ++s)
        for (const auto& [c, share] : alloc.rows[s]) {
            std::snprintf(buf, sizeof buf, "%.17g", share);
            out << inst.students[s].id << ',' << inst.courses[c].id << ',' << buf << '\n';
        }
}

Allocation load_allocation(const Instance& inst, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open allocation file: " + path);
    std::unordered_map<std::string, int> sidx, cidx;
    for (int i = 0; i < inst.n(); ++i) sidx[inst.students[i].id] = i;
    for (int i = 0; i < inst.m(); ++i) cidx[inst.courses[i].id] = i;

    Allocation alloc(inst.n());
    std::string line;
    if (!std::getline(in, line) || line.rfind("student_id,course_id,share", 0) != 0)
        throw std::runtime_error("allocation file missing header: " + path);
    bool fractional = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string sid, cid, share_str;
        if (!std::getline(ss, sid, ',') || !std::getline(ss, cid, ',') || !std::getline(ss, share_str))
            throw std::runtime_error("bad allocation row: " + line);
        auto sit = sidx.find(sid);
        auto cit = cidx.find(cid);
        if (sit == sidx.end() || cit == cidx.end())
            throw std::runtime_error("allocation row references unknown id: " + line);
        double share = std::stod(share_str);
        if (share != 1.0) fractional = true;
        alloc.rows[sit->second].emplace_back(cit->second, share);
    }
    alloc.fractional = fractional;
    for (auto& row : alloc.rows) std::sort(row.begin(), row.end());
    return alloc;
}

double schedule_utility(const Instance& inst, int s, const std::vector<std::pair<int, double>>& row) {
    double total = 0.0;
    for (const auto& [c, share] : row) {
        auto u = inst.utility(s, c);
        total += share * (u ? *u : 0.0);
    }
    return total;
}

double schedule_utility(const Instance& inst, int s, const std::vector<int>& courses) {
    double total = 0.0;
    for (int c : courses) {
        auto u = inst.utility(s, c);
        total += u ? *u : 0.0;
    }
    return total;
}

}  // namespace pmp
