#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pmp {

enum class PriorityMode { Hybrid, DepartmentFirst, Flat };

std::string to_string(PriorityMode mode);
PriorityMode priority_mode_from_string(const std::string& s);

struct Student {
    std::string id;
    char college = 'A';   // A..G
    int year = 1;         // 1..4
    std::string department;
};

struct Course {
    std::string id;
    char college = 'A';
    int capacity = 0;
};

// Seats set aside for students matching department/year criteria.
struct ReserveSpec {
    int course = -1;  // course index
    bool all_departments = false;
    std::vector<std::string> departments;  // sorted, used when !all_departments
    bool all_years = false;
    std::vector<int> years;  // sorted, used when !all_years
    int seats = 0;

    bool covers(const Student& s) const;
    bool covers_year(int year) const;
    // decrement ordering key: specific years keyed by max year, "All" last
    int year_order_key() const;
};

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Instance {
    std::vector<Student> students;
    std::vector<Course> courses;
    std::vector<ReserveSpec> reserves;
    int k = 1;
    int R = 1;
    PriorityMode mode = PriorityMode::Flat;

    // sparse utility rows, sorted by course index; absence = not in choice set
    std::vector<std::vector<std::pair<int, double>>> utilities;

    // derived, filled by finalize()
    std::vector<uint8_t> priority;                  // N*M levels in 1..R
    std::vector<std::vector<int>> reserves_by_course;
    std::vector<int> course_id_rank;                // lexicographic rank of course id
    std::vector<std::vector<int>> students_by_course;  // students with c in choice set

    int n() const { return (int)students.size(); }
    int m() const { return (int)courses.size(); }

    uint8_t level(int s, int c) const { return priority[(size_t)s * courses.size() + c]; }

    std::optional<double> utility(int s, int c) const;

    // validates invariants and builds the derived structures (throws ValidationError)
    void finalize();
};

// priority matrix from reserve eligibility; total over all (student, course) pairs
std::vector<uint8_t> build_priorities(const Instance& inst, PriorityMode mode);

Instance load_instance(const std::string& path);
void save_instance(const Instance& inst, const std::string& path);

// Deterministic allocations carry share 1.0 per held course; Probabilistic
// Serial produces fractional shares.
struct Allocation {
    bool fractional = false;
    std::vector<std::vector<std::pair<int, double>>> rows;  // (course, share) sorted by course

    explicit Allocation(int n = 0) : rows(n) {}

    void set_schedule(int s, std::vector<int> courses);
    std::vector<int> schedule(int s) const;  // deterministic rows
    bool holds(int s, int c) const;
    std::vector<double> enrollment(int m) const;
    std::vector<int> enrollment_int(int m) const;
};

void save_allocation(const Allocation& alloc, const Instance& inst, const std::string& path);
Allocation load_allocation(const Instance& inst, const std::string& path);

// total utility of student s under (possibly fractional) row
double schedule_utility(const Instance& inst, int s, const std::vector<std::pair<int, double>>& row);
double schedule_utility(const Instance& inst, int s, const std::vector<int>& courses);

}  // namespace pmp
