#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pmp/experiment.hpp"
#include "pmp/metrics.hpp"
#include "pmp/reserves.hpp"
#include "pmp/rng.hpp"

using namespace pmp;
using nlohmann::json;

namespace {

struct GlobalOpts {
    std::string config;
    uint64_t seed = 1;
    int jobs = 1;
    std::string out_dir;
};

PricingRule rule_from_string(const std::string& s) {
    if (s == "priority") return PricingRule::PrioritySpecific;
    if (s == "uniform") return PricingRule::Uniform;
    if (s == "kludgy") return PricingRule::Kludgy;
    throw ValidationError("unknown pricing rule: " + s);
}

void apply_config(ExperimentPlan& plan, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read config: " + path);
    json j = json::parse(in);

    if (j.contains("instance")) plan.instance_path = j["instance"].get<std::string>();
    if (j.contains("structure_seed")) plan.structure_seed = j["structure_seed"].get<uint64_t>();
    if (j.contains("scale")) plan.gen.census = CensusSpec::scaled(j["scale"].get<double>());
    if (j.contains("k")) plan.gen.k = j["k"].get<int>();
    if (j.contains("mode")) plan.gen.mode = priority_mode_from_string(j["mode"].get<std::string>());
    if (j.contains("choice_set_size"))
        plan.gen.params.choice_set_size = j["choice_set_size"].get<int>();
    if (j.contains("sigma")) plan.gen.params.sigma = j["sigma"].get<double>();
    if (j.contains("mechanisms")) {
        plan.mechanisms.clear();
        for (const auto& m : j["mechanisms"])
            plan.mechanisms.push_back(mechanism_from_string(m.get<std::string>()));
    }
    if (j.contains("seeds")) {
        plan.seeds.clear();
        for (const auto& s : j["seeds"]) plan.seeds.push_back(s.get<uint64_t>());
    }
    if (j.contains("n_seeds")) {
        plan.seeds.clear();
        uint64_t start = j.value("seed_start", 1);
        for (uint64_t i = 0; i < j["n_seeds"].get<uint64_t>(); ++i)
            plan.seeds.push_back(start + i);
    }
    if (j.contains("out_dir")) plan.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("jobs")) plan.jobs = j["jobs"].get<int>();
    if (j.contains("optimal_reserve_envs"))
        plan.optimal_reserve_envs = j["optimal_reserve_envs"].get<int>();
    if (j.contains("engine")) {
        const auto& e = j["engine"];
        if (e.contains("beta")) plan.engine.beta = e["beta"].get<double>();
        if (e.contains("rule")) plan.engine.rule = rule_from_string(e["rule"].get<std::string>());
        if (e.contains("outer_restarts")) plan.engine.outer_restarts = e["outer_restarts"].get<int>();
        if (e.contains("max_rounds")) plan.engine.max_rounds = e["max_rounds"].get<int>();
        if (e.contains("patience")) plan.engine.patience = e["patience"].get<int>();
        if (e.contains("parallel")) plan.engine.parallel = e["parallel"].get<bool>();
    }
}

std::vector<Units> read_t_file(const Instance& inst, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read price file: " + path);
    std::map<std::string, int> index;
    for (int c = 0; c < inst.m(); ++c) index[inst.courses[c].id] = c;
    std::vector<Units> t(inst.m(), 0);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line == "course_id,t") continue;
        auto comma = line.find(',');
        if (comma == std::string::npos) throw ValidationError("bad price line: " + line);
        std::string id = line.substr(0, comma);
        auto it = index.find(id);
        if (it == index.end()) throw ValidationError("unknown course in price file: " + id);
        t[it->second] = to_units(std::stod(line.substr(comma + 1)));
    }
    return t;
}

FILE* open_report(const std::string& out_dir, const std::string& family) {
    if (out_dir.empty()) return stdout;
    std::filesystem::create_directories(out_dir);
    FILE* f = std::fopen((out_dir + "/report_" + family + ".csv").c_str(), "w");
    if (!f) throw std::runtime_error("cannot write report_" + family + ".csv");
    return f;
}

void close_report(FILE* f) {
    if (f != stdout) std::fclose(f);
}

std::vector<Mechanism> expand_mechanisms(const std::vector<std::string>& names) {
    std::vector<Mechanism> out;
    for (const auto& name : names) {
        if (name == "all") {
            for (Mechanism m : {Mechanism::Pmp, Mechanism::Rsd, Mechanism::RsdOptimal,
                                Mechanism::DaStb, Mechanism::DaMtb, Mechanism::Aceei,
                                Mechanism::AceeiKludgy, Mechanism::Ps})
                out.push_back(m);
        } else {
            out.push_back(mechanism_from_string(name));
        }
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pmpmarket: priority pseudo-market course allocation toolkit"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config, "JSON experiment config");
    app.add_option("--seed", g.seed, "root seed");
    app.add_option("--jobs", g.jobs, "parallel seed workers");
    app.add_option("--out-dir", g.out_dir, "output directory");

    // gen
    auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic instance");
    double gen_scale = 0.1;
    int gen_k = 5, gen_choice = 80;
    double gen_sigma = 1.0;
    std::string gen_mode = "hybrid", gen_out;
    gen_cmd->add_option("--scale", gen_scale, "census scale ratio");
    gen_cmd->add_option("--k", gen_k, "schedule size");
    gen_cmd->add_option("--mode", gen_mode, "priority mode: hybrid|department-first|flat");
    gen_cmd->add_option("--choice-set-size", gen_choice, "courses per student");
    gen_cmd->add_option("--sigma", gen_sigma, "utility noise std dev");
    gen_cmd->add_option("--out", gen_out, "instance JSON path")->required();

    // run
    auto* run_cmd = app.add_subcommand("run", "run mechanisms across seeds");
    std::vector<std::string> run_mechs;
    int run_nseeds = 1;
    uint64_t run_seed_start = 1;
    std::string run_instance;
    double run_scale = 0.1;
    run_cmd->add_option("mechanisms", run_mechs, "mechanism names or 'all'")->required();
    run_cmd->add_option("--seeds", run_nseeds, "number of seeds");
    run_cmd->add_option("--seed-start", run_seed_start, "first seed");
    run_cmd->add_option("--instance", run_instance, "instance file instead of generator");
    run_cmd->add_option("--scale", run_scale, "generator census scale");
    int run_choice = 80;
    double run_sigma = 1.0;
    int run_envs = 20, run_restarts = 3;
    run_cmd->add_option("--choice-set-size", run_choice, "courses per student");
    run_cmd->add_option("--sigma", run_sigma, "utility noise std dev");
    run_cmd->add_option("--envs", run_envs, "environments for optimal reserves");
    run_cmd->add_option("--restarts", run_restarts, "engine outer restarts");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "sweep a generator axis");
    std::string sweep_axis = "sigma";
    std::vector<double> sweep_values;
    std::vector<std::string> sweep_mechs = {"pmp", "rsd-optimal"};
    int sweep_nseeds = 1;
    double sweep_scale = 0.1;
    sweep_cmd->add_option("--axis", sweep_axis, "choice_set_size or sigma");
    sweep_cmd->add_option("--values", sweep_values, "axis values")->required();
    sweep_cmd->add_option("--mechanisms", sweep_mechs, "two mechanisms to compare");
    sweep_cmd->add_option("--seeds", sweep_nseeds, "seeds per value");
    sweep_cmd->add_option("--scale", sweep_scale, "generator census scale");

    // metrics
    auto* met_cmd = app.add_subcommand("metrics", "evaluate an allocation");
    std::string met_instance, met_alloc, met_alloc_b, met_report = "all", met_t;
    met_cmd->add_option("--instance", met_instance, "instance JSON")->required();
    met_cmd->add_option("--alloc", met_alloc, "allocation CSV")->required();
    met_cmd->add_option("--alloc-b", met_alloc_b, "second allocation for compare");
    met_cmd->add_option("--t", met_t, "course price CSV (course_id,t) for the prices report");
    met_cmd->add_option("--report", met_report,
                        "stability|efficiency|envy|violations|prices|compare|all");

    // reserves
    auto* res_cmd = app.add_subcommand("reserves", "reserve feasibility tooling");
    res_cmd->require_subcommand(1);
    auto* res_check = res_cmd->add_subcommand("check", "Hall feasibility per course");
    auto* res_adjust = res_cmd->add_subcommand("adjust", "shrink reserves until feasible");
    auto* res_optimal = res_cmd->add_subcommand("optimal", "estimate reserves from DA runs");
    std::string res_instance, res_alloc;
    double res_scale = 0.1;
    int res_envs = 20;
    for (auto* c : {res_check, res_adjust})
        c->add_option("--alloc", res_alloc, "allocation CSV")->required();
    for (auto* c : {res_check, res_adjust, res_optimal})
        c->add_option("--instance", res_instance, "instance JSON");
    res_optimal->add_option("--scale", res_scale, "generator scale when no instance given");
    res_optimal->add_option("--envs", res_envs, "utility environments");

    // demand eval
    auto* dem_cmd = app.add_subcommand("demand", "demand-side tooling");
    dem_cmd->require_subcommand(1);
    auto* dem_eval = dem_cmd->add_subcommand("eval", "batch demand at given prices");
    std::string dem_instance, dem_t, dem_rule = "priority";
    dem_eval->add_option("--instance", dem_instance, "instance JSON")->required();
    dem_eval->add_option("--t", dem_t, "course price CSV (course_id,t)");
    dem_eval->add_option("--rule", dem_rule, "priority|uniform|kludgy");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen_cmd) {
            GenConfig cfg;
            cfg.census = CensusSpec::scaled(gen_scale);
            cfg.k = gen_k;
            cfg.mode = priority_mode_from_string(gen_mode);
            cfg.params.choice_set_size = gen_choice;
            cfg.params.sigma = gen_sigma;
            Instance inst = generate_instance(cfg, g.seed);
            save_instance(inst, gen_out);
            std::printf("wrote %s: %d students, %d courses, k=%d, R=%d\n", gen_out.c_str(),
                        inst.n(), inst.m(), inst.k, inst.R);
            return 0;
        }

        if (*run_cmd) {
            ExperimentPlan plan;
            if (!g.config.empty()) apply_config(plan, g.config);
            plan.mechanisms = expand_mechanisms(run_mechs);
            if (plan.seeds.empty() || run_cmd->count("--seeds") || run_cmd->count("--seed-start")) {
                plan.seeds.clear();
                for (int i = 0; i < run_nseeds; ++i) plan.seeds.push_back(run_seed_start + i);
            }
            if (!run_instance.empty()) plan.instance_path = run_instance;
            if (run_cmd->count("--scale")) plan.gen.census = CensusSpec::scaled(run_scale);
            if (run_cmd->count("--choice-set-size")) plan.gen.params.choice_set_size = run_choice;
            if (run_cmd->count("--sigma")) plan.gen.params.sigma = run_sigma;
            plan.optimal_reserve_envs = run_envs;
            plan.engine.outer_restarts = run_restarts;
            plan.structure_seed = g.seed;
            if (!g.out_dir.empty()) plan.out_dir = g.out_dir;
            plan.jobs = g.jobs;

            ExperimentResult res = run_experiment(plan);
            for (const auto& sr : res.seeds) {
                if (sr.failed) {
                    std::printf("seed %llu FAILED: %s\n", (unsigned long long)sr.seed,
                                sr.error.c_str());
                    continue;
                }
                for (const auto& run : sr.runs)
                    std::printf("seed %llu %-13s %s %.2fs  mean-utility %.4f  violations %.3f\n",
                                (unsigned long long)sr.seed, to_string(run.mech).c_str(),
                                run.certified ? "ok        " : "UNCERTIFIED", run.seconds,
                                run.mean_utility, run.violation_share);
            }
            return res.all_ok() ? 0 : 1;
        }

        if (*sweep_cmd) {
            ExperimentPlan plan;
            if (!g.config.empty()) apply_config(plan, g.config);
            plan.mechanisms = expand_mechanisms(sweep_mechs);
            plan.seeds.clear();
            for (int i = 0; i < sweep_nseeds; ++i) plan.seeds.push_back(1 + i);
            if (sweep_cmd->count("--scale")) plan.gen.census = CensusSpec::scaled(sweep_scale);
            plan.structure_seed = g.seed;
            if (!g.out_dir.empty()) plan.out_dir = g.out_dir;
            plan.jobs = g.jobs;

            auto rows = sweep(plan, sweep_axis, sweep_values);
            std::printf("%s,prefer_%s,indifferent,prefer_%s\n", sweep_axis.c_str(),
                        to_string(plan.mechanisms[0]).c_str(),
                        to_string(plan.mechanisms[1]).c_str());
            for (const auto& r : rows)
                std::printf("%g,%.6f,%.6f,%.6f\n", r.value, r.prefer_a, r.indifferent, r.prefer_b);
            return 0;
        }

        if (*met_cmd) {
            Instance inst = load_instance(met_instance);
            Allocation alloc = load_allocation(inst, met_alloc);
            bool all = met_report == "all";

            if (all || met_report == "stability") {
                FILE* f = open_report(g.out_dir, "stability");
                auto blocks = check_stability(inst, alloc);
                std::fprintf(f, "student_id,preferred_courses\n");
                for (const auto& b : blocks) {
                    std::string courses;
                    for (int c : b.courses)
                        courses += (courses.empty() ? "" : ";") + inst.courses[c].id;
                    std::fprintf(f, "%s,%s\n", inst.students[b.student].id.c_str(),
                                 courses.c_str());
                }
                std::fprintf(f, "# blocks,%d\n", (int)blocks.size());
                close_report(f);
            }
            if (all || met_report == "efficiency") {
                FILE* f = open_report(g.out_dir, "efficiency");
                auto v = check_priority_efficiency(inst, alloc);
                std::fprintf(f, "skipped,efficient\n%d,%d\n", v.skipped ? 1 : 0,
                             v.efficient ? 1 : 0);
                close_report(f);
            }
            if (all || met_report == "envy") {
                FILE* f = open_report(g.out_dir, "envy");
                auto prof = envy_profile(inst, alloc);
                std::fprintf(f, "depth,students\n");
                for (int d = 0; d <= inst.k; ++d)
                    std::fprintf(f, "%d,%d\n", d, prof.histogram[d]);
                close_report(f);
            }
            if (all || met_report == "violations") {
                FILE* f = open_report(g.out_dir, "violations");
                std::fprintf(f, "violation_share\n%.6f\n", priority_violations(inst, alloc));
                close_report(f);
            }
            if ((all && !met_alloc_b.empty()) || met_report == "compare") {
                if (met_alloc_b.empty()) throw ValidationError("compare needs --alloc-b");
                Allocation b = load_allocation(inst, met_alloc_b);
                auto rep = compare(inst, alloc, b);
                FILE* f = open_report(g.out_dir, "compare");
                std::fprintf(f, "year,prefer_a,prefer_b,indifferent\n");
                for (int y = 0; y < 4; ++y)
                    std::fprintf(f, "%d,%.6f,%.6f,%.6f\n", y + 1, rep.prefer_a[y],
                                 rep.prefer_b[y], rep.indifferent[y]);
                std::fprintf(f, "# mean_relative_gain,%.6f\n", rep.mean_relative_gain);
                close_report(f);
            }
            if ((all && !met_t.empty()) || met_report == "prices") {
                if (met_t.empty()) throw ValidationError("prices needs --t");
                EquilibriumResult eq;
                eq.alloc = alloc;
                eq.prices.t = read_t_file(inst, met_t);
                auto st = price_statistics(inst, eq);
                FILE* f = open_report(g.out_dir, "prices");
                std::fprintf(f, "cutoff_level,courses,mean_cutoff_price\n");
                for (int r = 0; r < inst.R; ++r)
                    std::fprintf(f, "%d,%d,%.6f\n", r + 1, st.cutoff_hist[r],
                                 st.mean_cutoff_price[r]);
                close_report(f);
            }
            return 0;
        }

        if (*res_check || *res_adjust) {
            Instance inst = load_instance(res_instance);
            Allocation alloc = load_allocation(inst, res_alloc);
            if (*res_check) {
                std::vector<std::vector<int>> enrolled(inst.m());
                for (int s = 0; s < inst.n(); ++s)
                    for (int c : alloc.schedule(s)) enrolled[c].push_back(s);
                int bad = 0;
                std::printf("course_id,feasible\n");
                for (int c = 0; c < inst.m(); ++c) {
                    if (inst.reserves_by_course[c].empty()) continue;
                    ReserveSystem sys = course_system(inst, enrolled[c], c, inst.reserves);
                    bool ok = is_feasible(sys);
                    if (!ok) ++bad;
                    std::printf("%s,%d\n", inst.courses[c].id.c_str(), ok ? 1 : 0);
                }
                return bad == 0 ? 0 : 1;
            }
            AdjustResult adj = adjust_reserves(inst, alloc);
            std::printf("course_id,spec,old_seats,new_seats\n");
            for (const auto& ch : adj.log)
                std::printf("%s,%d,%d,%d\n", inst.courses[ch.course].id.c_str(), ch.spec_index,
                            ch.old_seats, ch.new_seats);
            return 0;
        }

        if (*res_optimal) {
            GenConfig cfg;
            cfg.census = CensusSpec::scaled(res_scale);
            Instance inst;
            std::function<Instance(uint64_t)> factory;
            if (!res_instance.empty()) {
                inst = load_instance(res_instance);
                factory = [&inst](uint64_t) { return inst; };
            } else {
                inst = generate_instance(cfg, g.seed);
                factory = environment_factory(cfg, g.seed);
            }
            auto reserves = optimal_reserves(inst, factory, res_envs, g.seed);
            std::printf("course_id,departments,years,seats\n");
            for (const auto& r : reserves) {
                std::string depts = r.all_departments ? "All" : "";
                for (const auto& d : r.departments)
                    depts += (depts.empty() ? "" : ";") + d;
                std::string years = r.all_years ? "All" : "";
                for (int y : r.years) years += (years.empty() ? "" : ";") + std::to_string(y);
                std::printf("%s,%s,%s,%d\n", inst.courses[r.course].id.c_str(), depts.c_str(),
                            years.c_str(), r.seats);
            }
            return 0;
        }

        if (*dem_eval) {
            Instance inst = load_instance(dem_instance);
            PriceParameter p;
            p.t = dem_t.empty() ? std::vector<Units>(inst.m(), 0) : read_t_file(inst, dem_t);
            auto rank = seniority_rank(inst, derive_seed(g.seed, seed_tag::tiebreak));
            auto budgets = assign_budgets(rank, 0.25);
            BatchDemand bd = batch_demand(inst, rule_from_string(dem_rule), p, budgets);
            std::printf("course_id,t,cutoff,enrollment,excess\n");
            auto enrolled = bd.alloc.enrollment_int(inst.m());
            for (int c = 0; c < inst.m(); ++c)
                std::printf("%s,%.6f,%d,%d,%d\n", inst.courses[c].id.c_str(),
                            from_units(p.t[c]), cutoff_level(p.t[c], p.bbar, inst.R), enrolled[c],
                            bd.z[c]);
            std::printf("# znorm,%.6f\n", bd.znorm);
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
