#include "hytask/cli.hpp"

#include "hytask/adaptation.hpp"
#include "hytask/baseline.hpp"
#include "hytask/bench.hpp"
#include "hytask/error.hpp"
#include "hytask/pddl.hpp"
#include "hytask/util.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <ostream>

namespace hytask {

using nlohmann::json;

namespace {

struct Options {
    std::string spec, plan, out = ".", scenario, retries, strategy = "astar";
    std::uint64_t seed = 42;
    int pop = 30, evals = 150, jobs = 1, reps = 5, k = 20;
    double tol = 1e-10, timeout = 60.0;
    std::size_t budget = 2'000'000;
    bool pddl = false, exhaustive = false, front = false;
    std::vector<int> tasks{10, 11, 12, 13}, agents{2, 4, 6};
};

using Clock = std::chrono::steady_clock;

class Run {
public:
    Run(std::string sub, const Options &o) : o_(o) {
        manifest_["subcommand"] = std::move(sub);
        manifest_["version"] = kVersion;
        if (!o.spec.empty())
            manifest_["spec"] = o.spec;
        manifest_["outputs"] = json::array();
        manifest_["timings_s"] = json::object();
    }

    template <class F> auto stage(const std::string &name, F &&f) {
        auto t0 = Clock::now();
        if constexpr (std::is_void_v<decltype(f())>) {
            f();
            record(name, t0);
        } else {
            auto r = f();
            record(name, t0);
            return r;
        }
    }

    void write(const std::string &name, const std::string &text) {
        std::filesystem::create_directories(o_.out);
        write_text_file((std::filesystem::path(o_.out) / name).string(), text);
        manifest_["outputs"].push_back(name);
    }

    json &manifest() { return manifest_; }

    void finish() { write("manifest.json", manifest_.dump(2) + "\n"); }

private:
    void record(const std::string &name, Clock::time_point t0) {
        manifest_["timings_s"][name] = std::chrono::duration<double>(Clock::now() - t0).count();
    }
    const Options &o_;
    json manifest_;
};

PlannerConfig planner_config(const Options &o) {
    PlannerConfig cfg;
    if (o.strategy == "astar") {
        cfg.strategy = SearchStrategy::AStar;
        cfg.heuristic = Heuristic::MaxDistance;
    } else {
        cfg.strategy = SearchStrategy::Gbfs;
        cfg.heuristic = Heuristic::AverageDistance;
    }
    cfg.timeout = std::chrono::milliseconds(static_cast<long long>(o.timeout * 1000.0));
    return cfg;
}

GaConfig ga_config(const Options &o) {
    GaConfig g;
    g.population = o.pop;
    g.evaluations = o.evals;
    g.seed = o.seed;
    g.jobs = o.jobs;
    return g;
}

SolverOptions solver_options(const Options &o) {
    SolverOptions s;
    s.tolerance = o.tol;
    return s;
}

ProblemSpec load_spec(const Options &o) {
    if (o.spec.empty())
        throw SpecError("--spec", "a mission file is required");
    return load_problem_spec(o.spec);
}

Plan obtain_plan(Run &run, const ProblemSpec &spec, const Options &o) {
    if (!o.plan.empty())
        return run.stage("S2", [&] { return load_plan(spec, o.plan); });
    return run.stage("S1", [&] { return plan_mission(spec, planner_config(o)); });
}

std::map<std::string, int> parse_retries(const std::string &arg) {
    std::string text = arg;
    if (!arg.empty() && arg.front() != '{')
        text = read_text_file(arg);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error &e) {
        throw SpecError("--retries", std::string("malformed JSON: ") + e.what());
    }
    if (j.contains("retries"))
        j = j["retries"];
    std::map<std::string, int> d;
    if (!j.is_object())
        throw SpecError("--retries", "expected an object of task budgets");
    for (const auto &[k, v] : j.items()) {
        if (!v.is_number_integer())
            throw SpecError("--retries." + k, "expected an integer");
        d[k] = v.get<int>();
    }
    return d;
}

// Budgets for every slot; tasks missing from the dictionary get a single attempt.
RetryAssignment complete_assignment(const ParametricPlanModel &model, const std::map<std::string, int> &given) {
    std::map<std::string, int> d = given;
    for (const auto &[task, v] : given) {
        bool known = std::any_of(model.slots.begin(), model.slots.end(),
                                 [&](const RetrySlot &s) { return s.task == task; });
        if (!known)
            throw SpecError("--retries." + task, "no retry slot for this task in the plan");
    }
    for (const auto &s : model.slots)
        d.try_emplace(s.task, s.lower);
    return from_retry_dict(model, d);
}

json objectives_json(const Objectives &o) {
    return {{"expected_cost", o.expected_cost},
            {"success_probability", o.success_probability},
            {"feasible", o.feasible}};
}

int cmd_validate(const Options &o, std::ostream &out) {
    ProblemSpec spec = parse_problem_spec_unchecked(read_text_file(o.spec));
    auto vs = validate(spec);
    json arr = json::array();
    bool ok = true;
    for (const auto &v : vs) {
        bool error = v.severity == Violation::Severity::Error;
        ok = ok && !error;
        arr.push_back({{"severity", error ? "error" : "warning"}, {"field", v.field_path}, {"message", v.message}});
    }
    out << json{{"valid", ok}, {"violations", arr}}.dump(2) << "\n";
    if (!ok)
        throw SpecError(vs.front().field_path, vs.front().message);
    return 0;
}

int cmd_plan(const Options &o, std::ostream &out) {
    Run run("plan", o);
    ProblemSpec spec = run.stage("S0", [&] { return load_spec(o); });
    SearchStats stats;
    Plan plan = run.stage("S1", [&] { return plan_mission(spec, planner_config(o), &stats); });
    auto violations = run.stage("S2", [&] { return validate_plan(spec, plan); });
    if (!violations.empty())
        throw ContractViolation("planner produced an invalid plan: " + violations.front().message);
    run.write("plan.json", plan_to_json(plan));
    if (o.pddl) {
        run.write("domain.pddl", export_pddl_domain(spec));
        run.write("problem.pddl", export_pddl_problem(spec));
    }
    PlanMetrics m = plan_metrics(plan);
    run.manifest()["config"] = {{"strategy", o.strategy}, {"timeout_s", o.timeout}};
    run.finish();
    out << json{{"travel_cost", m.travel_cost},
                {"makespan", m.makespan},
                {"actions", plan.total_order.size()},
                {"expanded", stats.expanded}}
               .dump(2)
        << "\n";
    return 0;
}

int cmd_synthesize(const Options &o, std::ostream &out) {
    Run run("synthesize", o);
    ProblemSpec spec = run.stage("S0", [&] { return load_spec(o); });
    Plan plan = obtain_plan(run, spec, o);
    ParametricPlanModel model = run.stage("S3", [&] { return build_parametric_model(spec, plan); });
    ParetoArchive archive = run.stage("S4", [&] {
        if (o.exhaustive)
            return exhaustive_synthesize(model, 1u << 20, solver_options(o));
        return synthesize(model, ga_config(o), solver_options(o)).archive;
    });
    archive.plan_hash = plan_hash(plan);
    archive.seed = o.seed;
    archive.config = ga_config(o);
    archive.config.jobs = 1; // parallelism does not affect the result
    run.write("archive.json", archive_to_json(archive));
    run.write("front.csv", front_csv(archive));
    run.manifest()["seed"] = o.seed;
    run.manifest()["config"] = {{"population", o.pop}, {"evaluations", o.evals}, {"jobs", o.jobs},
                                {"tolerance", o.tol}, {"exhaustive", o.exhaustive}};
    run.finish();
    json summary{{"entries", archive.entries.size()}, {"front_points", archive.front().size()}};
    if (!archive.diagnostic.empty())
        summary["diagnostic"] = archive.diagnostic;
    out << summary.dump(2) << "\n";
    return 0;
}

int cmd_verify(const Options &o, std::ostream &out) {
    Run run("verify", o);
    ProblemSpec spec = load_spec(o);
    Plan plan = obtain_plan(run, spec, o);
    ParametricPlanModel model = build_parametric_model(spec, plan);
    RetryAssignment x = complete_assignment(model, parse_retries(o.retries));
    json j = objectives_json(evaluate(model, x, solver_options(o)));
    j["retries"] = to_retry_dict(model, x);
    out << j.dump(2) << "\n";
    return 0;
}

int cmd_simulate(const Options &o, std::ostream &out) {
    Run run("simulate", o);
    ProblemSpec spec = run.stage("S0", [&] { return load_spec(o); });
    Scenario sc = load_scenario(o.scenario);
    Plan plan = obtain_plan(run, spec, o);
    AdaptationConfig cfg;
    cfg.ga = sc.synthesis ? *sc.synthesis : ga_config(o);
    cfg.ga.jobs = o.jobs;
    cfg.planner = planner_config(o);
    cfg.solver = solver_options(o);
    ParametricPlanModel model = run.stage("S3", [&] { return build_parametric_model(spec, plan); });
    ParetoArchive archive = run.stage("S4", [&] { return synthesize(model, cfg.ga, cfg.solver).archive; });
    archive.plan_hash = plan_hash(plan);
    ExecutionContext ctx = deploy(spec, plan, archive, model, sc, cfg);
    Trace tr = simulate(std::move(ctx), sc, o.seed);
    run.write("trace.jsonl", tr.to_jsonl());
    run.manifest()["seed"] = o.seed;
    run.finish();
    json levels = json::array();
    for (const auto &a : tr.adaptations)
        levels.push_back(to_string(a.level));
    out << json{{"completed", tr.completed},
                {"cost", tr.cost},
                {"time", tr.time},
                {"levels", levels},
                {"stage_reruns", tr.stage_reruns}}
               .dump(2)
        << "\n";
    return 0;
}

int cmd_baseline(const Options &o, std::ostream &out) {
    Run run("baseline", o);
    ProblemSpec spec = load_spec(o);
    json j;
    try {
        Mdp mdp = run.stage("build", [&] { return build_full_mdp(spec, o.budget); });
        BaselineResult r = run.stage("query", [&] { return baseline_queries(mdp, o.k); });
        j = {{"states", mdp.num_states()},
             {"choices", mdp.num_choices()},
             {"transitions", mdp.num_transitions()},
             {"p_max", r.p_max},
             {"r_min_bounded", r.r_min_bounded},
             {"k", r.k}};
        if (o.front) {
            json f = json::array();
            for (const auto &p : deterministic_pareto_front(mdp))
                f.push_back({p.expected_cost, p.success_probability});
            j["front"] = f;
        }
    } catch (const StateBudgetExceeded &e) {
        // Running out of states is a result in its own right.
        j = {{"state_budget_exceeded", true}, {"states_reached", e.reached()}, {"budget", o.budget}};
    }
    out << j.dump(2) << "\n";
    return 0;
}

int cmd_export_pddl(const Options &o, std::ostream &) {
    Run run("export-pddl", o);
    ProblemSpec spec = load_spec(o);
    run.write("domain.pddl", export_pddl_domain(spec));
    run.write("problem.pddl", export_pddl_problem(spec));
    run.finish();
    return 0;
}

int cmd_export_prism(const Options &o, std::ostream &) {
    Run run("export-prism", o);
    ProblemSpec spec = load_spec(o);
    Plan plan = obtain_plan(run, spec, o);
    ParametricPlanModel model = build_parametric_model(spec, plan);
    std::optional<RetryAssignment> x;
    if (!o.retries.empty())
        x = complete_assignment(model, parse_retries(o.retries));
    run.write("model.prism", export_model_source(model, x));
    run.write("properties.props", export_properties(model));
    run.finish();
    return 0;
}

int cmd_bench(const Options &o, std::ostream &out) {
    Run run("bench", o);
    BenchConfig cfg;
    cfg.tasks = o.tasks;
    cfg.agents = o.agents;
    cfg.repetitions = o.reps;
    cfg.seed = o.seed;
    cfg.planner = planner_config(o);
    cfg.ga = ga_config(o);
    auto cells = run_bench(cfg);
    std::string doc = bench_to_json(cells);
    run.write("bench.json", doc);
    run.write("bench.csv", bench_to_csv(cells));
    run.finish();
    out << doc;
    return 0;
}

void error_json(std::ostream &err, const std::string &kind, const std::string &message, const std::string &field = {}) {
    json j{{"error", kind}, {"message", message}};
    if (!field.empty())
        j["field"] = field;
    err << j.dump() << "\n";
}

} // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    Options o;
    CLI::App app{"Hybrid task planning for human-robot teams under uncertainty", "hytask"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    auto add_spec = [&](CLI::App *s) { s->add_option("--spec", o.spec, "mission JSON file")->required(); };
    auto add_out = [&](CLI::App *s) { s->add_option("--out", o.out, "output directory"); };
    auto add_plan = [&](CLI::App *s) {
        s->add_option("--plan", o.plan, "plan JSON file (default: plan with the planner)");
        s->add_option("--strategy", o.strategy, "astar or gbfs")->check(CLI::IsMember({"astar", "gbfs"}));
        s->add_option("--timeout", o.timeout, "planner timeout in seconds")->check(CLI::PositiveNumber);
    };
    auto add_ga = [&](CLI::App *s) {
        s->add_option("--seed", o.seed, "random seed");
        s->add_option("--pop", o.pop, "population size")->check(CLI::Range(2, 1 << 20));
        s->add_option("--evals", o.evals, "evaluation budget")->check(CLI::PositiveNumber);
        s->add_option("--jobs", o.jobs, "parallel evaluations")->check(CLI::Range(1, 256));
    };
    auto add_tol = [&](CLI::App *s) { s->add_option("--tol", o.tol, "solver tolerance")->check(CLI::PositiveNumber); };

    auto *validate_cmd = app.add_subcommand("validate", "check a mission file");
    add_spec(validate_cmd);

    auto *plan_cmd = app.add_subcommand("plan", "compute a plan");
    add_spec(plan_cmd);
    add_out(plan_cmd);
    plan_cmd->add_option("--strategy", o.strategy, "astar or gbfs")->check(CLI::IsMember({"astar", "gbfs"}));
    plan_cmd->add_option("--timeout", o.timeout, "timeout in seconds")->check(CLI::PositiveNumber);
    plan_cmd->add_flag("--pddl", o.pddl, "also write the PDDL domain and problem");

    auto *synth_cmd = app.add_subcommand("synthesize", "search attempt budgets for a plan");
    add_spec(synth_cmd);
    add_out(synth_cmd);
    add_plan(synth_cmd);
    add_ga(synth_cmd);
    add_tol(synth_cmd);
    auto *exh = synth_cmd->add_flag("--exhaustive", o.exhaustive, "enumerate every assignment");
    exh->excludes(synth_cmd->get_option("--evals"));
    exh->excludes(synth_cmd->get_option("--pop"));

    auto *verify_cmd = app.add_subcommand("verify", "evaluate one budget dictionary");
    add_spec(verify_cmd);
    add_plan(verify_cmd);
    add_tol(verify_cmd);
    verify_cmd->add_option("--retries", o.retries, "JSON object or file of task budgets")->required();

    auto *sim_cmd = app.add_subcommand("simulate", "execute a plan with injected changes");
    add_spec(sim_cmd);
    add_out(sim_cmd);
    add_plan(sim_cmd);
    add_ga(sim_cmd);
    add_tol(sim_cmd);
    sim_cmd->add_option("--scenario", o.scenario, "scenario JSON file")->required();

    auto *base_cmd = app.add_subcommand("baseline", "build and query the monolithic MDP");
    add_spec(base_cmd);
    base_cmd->add_option("--budget", o.budget, "state budget")->check(CLI::PositiveNumber);
    base_cmd->add_option("--k", o.k, "step bound of the reward query")->check(CLI::NonNegativeNumber);
    base_cmd->add_flag("--front", o.front, "also compute the deterministic-policy front");

    auto *pddl_cmd = app.add_subcommand("export-pddl", "write the PDDL domain and problem");
    add_spec(pddl_cmd);
    add_out(pddl_cmd);

    auto *prism_cmd = app.add_subcommand("export-prism", "write the guarded-command model of a plan");
    add_spec(prism_cmd);
    add_out(prism_cmd);
    add_plan(prism_cmd);
    prism_cmd->add_option("--retries", o.retries, "fix the budgets instead of leaving them open");

    auto *bench_cmd = app.add_subcommand("bench", "scaling sweep over task and agent counts");
    add_out(bench_cmd);
    add_ga(bench_cmd);
    bench_cmd->add_option("--tasks", o.tasks, "task counts")->delimiter(',');
    bench_cmd->add_option("--agents", o.agents, "agent counts")->delimiter(',');
    bench_cmd->add_option("--reps", o.reps, "instances per cell")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--strategy", o.strategy, "astar or gbfs")->check(CLI::IsMember({"astar", "gbfs"}));
    bench_cmd->add_option("--timeout", o.timeout, "planner timeout in seconds")->check(CLI::PositiveNumber);
    std::vector<std::string> argv_store{"hytask"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char *> argv;
    for (auto &a : argv_store)
        argv.push_back(a.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp &) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion &) {
        out << kVersion << "\n";
        return 0;
    } catch (const CLI::ParseError &e) {
        error_json(err, "usage_error", e.what());
        return 2;
    }

    try {
        if (app.got_subcommand(validate_cmd))
            return cmd_validate(o, out);
        if (app.got_subcommand(plan_cmd))
            return cmd_plan(o, out);
        if (app.got_subcommand(synth_cmd))
            return cmd_synthesize(o, out);
        if (app.got_subcommand(verify_cmd))
            return cmd_verify(o, out);
        if (app.got_subcommand(sim_cmd))
            return cmd_simulate(o, out);
        if (app.got_subcommand(base_cmd))
            return cmd_baseline(o, out);
        if (app.got_subcommand(pddl_cmd))
            return cmd_export_pddl(o, out);
        if (app.got_subcommand(prism_cmd))
            return cmd_export_prism(o, out);
        if (app.got_subcommand(bench_cmd))
            return cmd_bench(o, out);
    } catch (const SpecError &e) {
        error_json(err, e.kind(), e.what(), e.field_path());
        return 1;
    } catch (const Error &e) {
        error_json(err, e.kind(), e.what());
        return 1;
    } catch (const std::exception &e) {
        error_json(err, "internal_error", e.what());
        return 1;
    }
    error_json(err, "usage_error", "no subcommand");
    return 2;
}

} // namespace hytask
