#include "pmp/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <stdexcept>

#include "pmp/metrics.hpp"
#include "pmp/rng.hpp"

namespace pmp {

namespace {

struct Fnv {
    uint64_t h = 0xcbf29ce484222325ULL;

    void bytes(const void* p, size_t n) {
        const unsigned char* b = (const unsigned char*)p;
        for (size_t i = 0; i < n; ++i) h = (h ^ b[i]) * 0x100000001b3ULL;
    }
    void u64(uint64_t v) { bytes(&v, sizeof v); }
    void i32(int v) { bytes(&v, sizeof v); }
    void f64(double v) { bytes(&v, sizeof v); }
    void str(const std::string& s) { bytes(s.data(), s.size()); }
};

double clock_seconds() {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
}

Instance seed_instance(const ExperimentPlan& plan, uint64_t seed, const Instance* file_instance) {
    if (file_instance) return *file_instance;
    if (plan.instance_path) return load_instance(*plan.instance_path);
    uint64_t useed = derive_seed(plan.structure_seed, seed_tag::utilities, seed);
    return generate_instance(plan.gen, plan.structure_seed, useed);
}

void annotate(const Instance& inst, MechanismRun& run, const Allocation& first) {
    double total = 0.0;
    for (int s = 0; s < inst.n(); ++s) total += schedule_utility(inst, s, run.alloc.rows[s]);
    run.mean_utility = inst.n() ? total / inst.n() : 0.0;
    run.violation_share = priority_violations(inst, run.alloc);
    if (!run.alloc.fractional) {
        auto prof = envy_profile(inst, run.alloc);
        run.envy_ge2 = 0;
        for (int d = 2; d <= inst.k; ++d) run.envy_ge2 += prof.histogram[d];
        run.stability_blocks = (int)check_stability(inst, run.alloc).size();
    }
    if (&run.alloc != &first) run.vs_first = compare(inst, first, run.alloc);
}

}  // namespace

std::string to_string(Mechanism m) {
    switch (m) {
        case Mechanism::Pmp: return "pmp";
        case Mechanism::Rsd: return "rsd";
        case Mechanism::RsdOptimal: return "rsd-optimal";
        case Mechanism::DaStb: return "da-stb";
        case Mechanism::DaMtb: return "da-mtb";
        case Mechanism::Aceei: return "aceei";
        case Mechanism::AceeiKludgy: return "aceei-kludgy";
        case Mechanism::Ps: return "ps";
    }
    return "?";
}

Mechanism mechanism_from_string(const std::string& s) {
    for (Mechanism m : {Mechanism::Pmp, Mechanism::Rsd, Mechanism::RsdOptimal, Mechanism::DaStb,
                        Mechanism::DaMtb, Mechanism::Aceei, Mechanism::AceeiKludgy, Mechanism::Ps})
        if (to_string(m) == s) return m;
    throw ValidationError("unknown mechanism: " + s);
}

void ExperimentPlan::validate() const {
    if (mechanisms.empty()) throw ValidationError("plan has no mechanisms");
    if (seeds.empty()) throw ValidationError("plan has no seeds");
    std::set<uint64_t> uniq(seeds.begin(), seeds.end());
    if (uniq.size() != seeds.size()) throw ValidationError("plan seeds must be distinct");
    if (optimal_reserve_envs < 1) throw ValidationError("optimal_reserve_envs must be >= 1");
}

uint64_t ExperimentPlan::hash() const {
    Fnv f;
    if (instance_path) f.str(*instance_path);
    f.u64(structure_seed);
    f.i32(gen.k);
    f.i32((int)gen.mode);
    f.i32(gen.params.choice_set_size);
    f.f64(gen.params.sigma);
    f.i32(gen.census.total_students());
    f.i32(gen.census.total_courses());
    f.f64(gen.reserves.course_fraction);
    f.f64(gen.reserves.seat_fraction);
    for (Mechanism m : mechanisms) f.i32((int)m);
    for (uint64_t s : seeds) f.u64(s);
    f.f64(engine.beta);
    f.i32((int)engine.rule);
    f.i32(engine.outer_restarts);
    f.i32(optimal_reserve_envs);
    return f.h;
}

bool ExperimentResult::all_ok() const {
    for (const auto& sr : seeds) {
        if (sr.failed) return false;
        for (const auto& run : sr.runs)
            if (!run.certified) return false;
    }
    return true;
}

uint64_t allocation_hash(const Allocation& alloc) {
    Fnv f;
    f.i32(alloc.fractional ? 1 : 0);
    for (const auto& row : alloc.rows) {
        f.i32((int)row.size());
        for (const auto& [c, share] : row) {
            f.i32(c);
            f.f64(share);
        }
    }
    return f.h;
}

uint64_t instance_hash(const Instance& inst) {
    Fnv f;
    f.i32(inst.n());
    f.i32(inst.m());
    f.i32(inst.k);
    f.i32(inst.R);
    for (const auto& c : inst.courses) f.i32(c.capacity);
    for (const auto& row : inst.utilities) {
        f.i32((int)row.size());
        for (const auto& [c, u] : row) {
            f.i32(c);
            f.f64(u);
        }
    }
    f.bytes(inst.priority.data(), inst.priority.size());
    return f.h;
}

SeedResult run_seed(const ExperimentPlan& plan, uint64_t seed, const Instance* file_instance) {
    SeedResult sr;
    sr.seed = seed;
    try {
        Instance inst = seed_instance(plan, seed, file_instance);
        std::vector<int> rank = seniority_rank(inst, derive_seed(seed, seed_tag::tiebreak));

        Fnv draw;
        draw.u64(instance_hash(inst));
        for (int s : rank) draw.i32(s);
        sr.draw_hash = draw.h;

        EngineConfig cfg = plan.engine;
        cfg.seed = derive_seed(seed, seed_tag::engine_noise);

        for (Mechanism m : plan.mechanisms) {
            MechanismRun run;
            run.mech = m;
            double t0 = clock_seconds();
            switch (m) {
                case Mechanism::Pmp: {
                    EquilibriumResult eq = solve(inst, cfg, rank);
                    run.alloc = eq.alloc;
                    run.certified = eq.certified;
                    run.eq = std::move(eq);
                    break;
                }
                case Mechanism::Rsd:
                    run.alloc = rsd(inst, inst.reserves, rank);
                    break;
                case Mechanism::RsdOptimal: {
                    std::function<Instance(uint64_t)> factory;
                    if (plan.instance_path) factory = [&inst](uint64_t) { return inst; };
                    else factory = environment_factory(plan.gen, plan.structure_seed);
                    auto reserves =
                        optimal_reserves(inst, factory, plan.optimal_reserve_envs, seed);
                    run.alloc = rsd(inst, reserves, rank);
                    break;
                }
                case Mechanism::DaStb:
                    run.alloc = da(inst, TieBreak::single_from_rank(rank));
                    break;
                case Mechanism::DaMtb:
                    run.alloc = da(inst, TieBreak::multiple(inst.n(), inst.m(),
                                                            derive_seed(seed, seed_tag::course_tb)));
                    break;
                case Mechanism::Aceei:
                case Mechanism::AceeiKludgy: {
                    EngineConfig c2 = cfg;
                    c2.rule = m == Mechanism::Aceei ? PricingRule::Uniform : PricingRule::Kludgy;
                    EquilibriumResult eq = solve(inst, c2, rank);
                    run.alloc = eq.alloc;
                    run.certified = eq.certified;
                    run.eq = std::move(eq);
                    break;
                }
                case Mechanism::Ps:
                    run.alloc = ps_seniority_reserves(inst);
                    break;
            }
            run.seconds = clock_seconds() - t0;
            annotate(inst, run, sr.runs.empty() ? run.alloc : sr.runs.front().alloc);
            sr.runs.push_back(std::move(run));
        }
    } catch (const std::exception& e) {
        sr.failed = true;
        sr.error = e.what();
        sr.runs.clear();
    }
    return sr;
}

namespace {

void write_outputs(const ExperimentPlan& plan, const ExperimentResult& res,
                   const Instance* file_instance) {
    namespace fs = std::filesystem;
    fs::create_directories(plan.out_dir);
    char tag[16];
    std::snprintf(tag, sizeof tag, "%08llx", (unsigned long long)(res.plan_hash & 0xffffffffULL));

    for (const auto& sr : res.seeds) {
        if (sr.failed) continue;
        Instance inst = seed_instance(plan, sr.seed, file_instance);
        for (const auto& run : sr.runs) {
            std::string path = plan.out_dir + "/s" + std::to_string(sr.seed) + "_" +
                               to_string(run.mech) + "_" + tag + ".csv";
            save_allocation(run.alloc, inst, path);
        }
    }

    FILE* f = std::fopen((plan.out_dir + "/metrics_" + std::string(tag) + ".csv").c_str(), "w");
    if (!f) throw std::runtime_error("cannot write metrics CSV");
    // no wall-clock columns: reruns of an identical plan must be byte-identical
    std::fprintf(f,
                 "seed,mechanism,certified,mean_utility,violation_share,"
                 "envy_ge2,stability_blocks,failed,error\n");
    for (const auto& sr : res.seeds) {
        if (sr.failed) {
            std::fprintf(f, "%llu,,,,,,,1,%s\n", (unsigned long long)sr.seed, sr.error.c_str());
            continue;
        }
        for (const auto& run : sr.runs)
            std::fprintf(f, "%llu,%s,%d,%.17g,%.17g,%d,%d,0,\n",
                         (unsigned long long)sr.seed, to_string(run.mech).c_str(),
                         run.certified ? 1 : 0, run.mean_utility,
                         run.violation_share, run.envy_ge2, run.stability_blocks);
    }
    std::fclose(f);

    // aggregate: per mechanism, mean (std) across seeds
    f = std::fopen((plan.out_dir + "/aggregate_" + std::string(tag) + ".csv").c_str(), "w");
    if (!f) throw std::runtime_error("cannot write aggregate CSV");
    std::fprintf(f,
                 "mechanism,seeds,certified,mean_utility_mean,mean_utility_std,"
                 "violation_share_mean,violation_share_std\n");
    for (Mechanism m : plan.mechanisms) {
        std::vector<double> util, viol;
        int certified = 0;
        for (const auto& sr : res.seeds) {
            if (sr.failed) continue;
            for (const auto& run : sr.runs)
                if (run.mech == m) {
                    util.push_back(run.mean_utility);
                    viol.push_back(run.violation_share);
                    if (run.certified) ++certified;
                }
        }
        auto stats = [](const std::vector<double>& v) {
            double mean = 0.0, sd = 0.0;
            if (!v.empty()) {
                for (double x : v) mean += x;
                mean /= v.size();
                for (double x : v) sd += (x - mean) * (x - mean);
                sd = std::sqrt(sd / v.size());
            }
            return std::pair<double, double>{mean, sd};
        };
        auto [um, us] = stats(util);
        auto [vm, vs] = stats(viol);
        std::fprintf(f, "%s,%d,%d,%.6f,%.6f,%.6f,%.6f\n", to_string(m).c_str(), (int)util.size(),
                     certified, um, us, vm, vs);
    }
    std::fclose(f);

    // head-to-head shares against the first mechanism, by year
    if (plan.mechanisms.size() > 1) {
        f = std::fopen((plan.out_dir + "/compare_" + std::string(tag) + ".csv").c_str(), "w");
        if (!f) throw std::runtime_error("cannot write compare CSV");
        std::fprintf(f, "mechanism_a,mechanism_b,year,prefer_a_mean,prefer_a_std,"
                        "prefer_b_mean,prefer_b_std,indifferent_mean\n");
        for (size_t i = 1; i < plan.mechanisms.size(); ++i) {
            for (int y = 0; y < 4; ++y) {
                std::vector<double> pa, pb, ind;
                for (const auto& sr : res.seeds) {
                    if (sr.failed) continue;
                    for (const auto& run : sr.runs)
                        if (run.mech == plan.mechanisms[i] && run.vs_first) {
                            pa.push_back(run.vs_first->prefer_a[y]);
                            pb.push_back(run.vs_first->prefer_b[y]);
                            ind.push_back(run.vs_first->indifferent[y]);
                        }
                }
                auto mean = [](const std::vector<double>& v) {
                    double s = 0.0;
                    for (double x : v) s += x;
                    return v.empty() ? 0.0 : s / v.size();
                };
                auto sd = [&](const std::vector<double>& v) {
                    double m = mean(v), s = 0.0;
                    for (double x : v) s += (x - m) * (x - m);
                    return v.empty() ? 0.0 : std::sqrt(s / v.size());
                };
                std::fprintf(f, "%s,%s,%d,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                             to_string(plan.mechanisms[0]).c_str(),
                             to_string(plan.mechanisms[i]).c_str(), y + 1, mean(pa), sd(pa),
                             mean(pb), sd(pb), mean(ind));
            }
        }
        std::fclose(f);
    }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentPlan& plan) {
    plan.validate();
    ExperimentResult res;
    res.plan_hash = plan.hash();
    res.seeds.resize(plan.seeds.size());

    std::optional<Instance> file_inst;
    if (plan.instance_path) file_inst = load_instance(*plan.instance_path);
    const Instance* fptr = file_inst ? &*file_inst : nullptr;

    if (plan.jobs > 1) {
        ExperimentPlan serial = plan;
        serial.engine.parallel = false;  // seeds are the parallel unit
#pragma omp parallel for schedule(dynamic) num_threads(plan.jobs)
        for (int i = 0; i < (int)plan.seeds.size(); ++i)
            res.seeds[i] = run_seed(serial, plan.seeds[i], fptr);
    } else {
        for (size_t i = 0; i < plan.seeds.size(); ++i)
            res.seeds[i] = run_seed(plan, plan.seeds[i], fptr);
    }

    if (!plan.out_dir.empty()) write_outputs(plan, res, fptr);
    return res;
}

std::vector<SweepRow> sweep(ExperimentPlan plan, const std::string& axis,
                            const std::vector<double>& values) {
    if (axis != "choice_set_size" && axis != "sigma")
        throw ValidationError("unknown sweep axis: " + axis);
    if (plan.mechanisms.size() < 2)
        throw ValidationError("sweep needs two mechanisms to compare");

    std::string base_dir = plan.out_dir;
    std::vector<SweepRow> rows;
    for (double v : values) {
        if (axis == "choice_set_size") plan.gen.params.choice_set_size = (int)v;
        else plan.gen.params.sigma = v;
        if (!base_dir.empty()) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%s/%s_%g", base_dir.c_str(), axis.c_str(), v);
            plan.out_dir = buf;
        }
        ExperimentResult res = run_experiment(plan);

        SweepRow row;
        row.value = v;
        int count = 0;
        for (const auto& sr : res.seeds) {
            if (sr.failed) continue;
            for (const auto& run : sr.runs)
                if (run.mech == plan.mechanisms[1] && run.vs_first) {
                    row.prefer_a += run.vs_first->overall_prefer_a;
                    row.prefer_b += run.vs_first->overall_prefer_b;
                    row.indifferent +=
                        1.0 - run.vs_first->overall_prefer_a - run.vs_first->overall_prefer_b;
                    ++count;
                }
        }
        if (count > 0) {
            row.prefer_a /= count;
            row.prefer_b /= count;
            row.indifferent /= count;
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace pmp
