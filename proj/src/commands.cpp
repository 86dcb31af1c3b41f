#include "plateflow/cli/commands.hpp"

#include <chrono>
#include <cstdlib>
#include <future>
#include <iostream>
#include <limits>
#include <json.hpp>

#include "plateflow/cli/field_io.hpp"
#include "plateflow/diagnostics.hpp"

namespace plateflow::cli {

using json = nlohmann::ordered_json;

Command parse_command(const std::string& name)
{
    if (name == "solve")
        return Command::Solve;
    if (name == "verify")
        return Command::Verify;
    if (name == "refine")
        return Command::Refine;
    if (name == "penalty-study")
        return Command::PenaltyStudy;
    throw std::invalid_argument("unknown command '" + name + "'");
}

std::string to_string(Command c)
{
    switch (c) {
    case Command::Solve: return "solve";
    case Command::Verify: return "verify";
    case Command::Refine: return "refine";
    case Command::PenaltyStudy: return "penalty-study";
    }
    return "unknown";
}

namespace {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

Level log_level()
{
    static const Level level = [] {
        const char* env = std::getenv("PLATEFLOW_LOG");
        const std::string v = env ? env : "";
        if (v == "error")
            return Level::Error;
        if (v == "info")
            return Level::Info;
        if (v == "debug")
            return Level::Debug;
        return Level::Warn;
    }();
    return level;
}

void log(Level level, const std::string& msg)
{
    static const char* names[] = {"error", "warn", "info", "debug"};
    if (level <= log_level())
        std::cerr << "[plateflow " << names[static_cast<int>(level)] << "] " << msg << '\n';
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string csv_row(std::initializer_list<std::string> cells)
{
    std::string out;
    bool first = true;
    for (const std::string& c : cells) {
        if (!first)
            out += ',';
        out += c;
        first = false;
    }
    return out + '\n';
}

std::string num(double v)
{
    return format_double(v);
}

json config_echo(const RunConfig& cfg)
{
    json j;
    j["domain"] = {{"dim", cfg.dim}, {"L", cfg.lengths}, {"m", cfg.interior_counts}};
    j["problem"] = {{"f", cfg.obstacle.text}, {"u0", cfg.initial.text}};
    j["time"] = {{"T", cfg.horizon}, {"n", cfg.n_steps}, {"tau", cfg.horizon / cfg.n_steps}};
    j["solver"] = {{"strategy", to_string(cfg.step.solver)},
                   {"eps_schedule", cfg.step.penalty_eps_schedule},
                   {"newton_tol", cfg.step.newton_tol},
                   {"max_newton_iters", cfg.step.max_newton_iters},
                   {"fallback_pg_iters", cfg.step.fallback_pg_iters}};
    j["output"] = {{"fields", cfg.fields.text()},
                   {"diagnostics", cfg.emit_diagnostics},
                   {"aggregates", cfg.emit_aggregates}};
    return j;
}

json error_record(const std::exception& e)
{
    json j;
    if (const auto* sf = dynamic_cast<const StepFailure*>(&e)) {
        j["kind"] = "step_failure";
        j["step"] = sf->index();
    } else if (const auto* nc = dynamic_cast<const NoConvergence*>(&e)) {
        j["kind"] = "no_convergence";
        j["iterations"] = nc->iterations();
    } else if (dynamic_cast<const DescentViolation*>(&e)) {
        j["kind"] = "descent_violation";
    } else if (dynamic_cast<const SolverError*>(&e)) {
        j["kind"] = "solver_error";
    } else if (dynamic_cast<const ProblemError*>(&e)) {
        j["kind"] = "problem_error";
    } else {
        j["kind"] = "error";
    }
    j["message"] = e.what();
    return j;
}

class Output {
public:
    Output(Command cmd, const RunConfig& cfg, const CommandOptions& opts)
        : opts_(opts), start_(Clock::now())
    {
        summary_["command"] = to_string(cmd);
        summary_["status"] = "ok";
        summary_["config"] = config_echo(cfg);
    }

    json& summary() { return summary_; }

    void file(const std::string& name, const std::string& text)
    {
        write_text(opts_.out_dir / name, text);
        summary_["files"].push_back(name);
    }

    void timing(const std::string& what, double seconds) { timings_[what] = seconds; }

    int fail(const std::exception& e, int code)
    {
        log(Level::Error, e.what());
        summary_["status"] = code == exit_code::solver_failure ? "solver_failure" : "error";
        summary_["errors"].push_back(error_record(e));
        return code;
    }

    int finish(int code)
    {
        if (code == exit_code::check_failure)
            summary_["status"] = "check_failure";
        if (!summary_.contains("errors"))
            summary_["errors"] = json::array();
        write_text(opts_.out_dir / "summary.json", summary_.dump(2) + "\n");
        if (opts_.write_timings) {
            timings_["total"] = seconds_since(start_);
            write_text(opts_.out_dir / "timings.json", timings_.dump(2) + "\n");
        }
        return code;
    }

private:
    CommandOptions opts_;
    Clock::time_point start_;
    json summary_;
    json timings_ = json::object();
};

std::string field_name(int i, int n)
{
    std::string s = std::to_string(i);
    const std::size_t width = std::to_string(n).size();
    return "fields/u_" + std::string(width - s.size(), '0') + s + ".csv";
}

int contact_count(const Trajectory& tr, int i)
{
    const StepResult& s = tr.steps[static_cast<std::size_t>(i)];
    if (i == 0) {
        const Field gap = tr.state(0) - tr.problem.obstacle();
        const double tol = contact_tolerance(tr.problem.obstacle());
        return static_cast<int>((gap.array() <= tol).count());
    }
    int c = 0;
    for (bool a : s.active_set)
        c += a;
    return c;
}

void emit_trajectory(Output& out, const RunConfig& cfg, const Trajectory& tr)
{
    const Grid& g = tr.grid();
    json steps = json::array();
    std::string table = csv_row({"index", "time", "energy", "dissipation", "mass", "contact_nodes",
                                 "newton_iterations", "active_set_iterations", "used_fallback"});
    for (int i = 0; i <= tr.n_steps; ++i) {
        const StepResult& s = tr.steps[static_cast<std::size_t>(i)];
        double dissipation = 0.0, mass = 0.0;
        if (i > 0) {
            const double v = l2_norm(g, s.v);
            dissipation = tr.tau * v * v;
            mass = measure_mass(g, s.mu).mass;
        }
        const int contact = contact_count(tr, i);
        steps.push_back({{"index", i},
                         {"time", tr.time(i)},
                         {"energy", tr.energies[static_cast<std::size_t>(i)]},
                         {"dissipation", dissipation},
                         {"mass", mass},
                         {"contact_nodes", contact},
                         {"newton_iterations", s.iterations.newton_iterations},
                         {"active_set_iterations", s.iterations.active_set_iterations},
                         {"used_fallback", s.iterations.used_fallback}});
        table += csv_row({std::to_string(i), num(tr.time(i)), num(tr.energies[static_cast<std::size_t>(i)]),
                          num(dissipation), num(mass), std::to_string(contact),
                          std::to_string(s.iterations.newton_iterations),
                          std::to_string(s.iterations.active_set_iterations),
                          s.iterations.used_fallback ? "1" : "0"});
    }
    out.summary()["grid"] = {{"interior_nodes", g.interior_size()}, {"quad_weight", g.quad_weight()}};
    out.summary()["steps"] = std::move(steps);
    out.file("steps.csv", table);

    if (cfg.emit_aggregates) {
        const TrajectoryAggregates agg = trajectory_aggregates(tr);
        out.summary()["aggregates"] = {{"energy_initial", tr.energies.front()},
                                       {"energy_final", tr.energies.back()},
                                       {"dissipation", agg.dissipation},
                                       {"mass_sq_sum", agg.mass_sq_sum},
                                       {"w2inf_sum", agg.w2inf_sum},
                                       {"max_laplacian_norm", max_laplacian_norm(tr)},
                                       {"interpolant_gap", interpolant_gap(tr)}};
    }
    for (int i : cfg.fields.resolve(tr.n_steps))
        out.file(field_name(i, tr.n_steps), field_csv(g, tr.state(i)));
}

bool emit_checks(Output& out, const Trajectory& tr)
{
    const std::vector<CheckReport> reports = run_invariant_suite(tr);
    json checks = json::array();
    std::string table = csv_row({"name", "bound", "observed", "tolerance", "margin", "passed"});
    for (const CheckReport& r : reports) {
        checks.push_back({{"name", r.name},
                          {"bound", r.bound},
                          {"observed", r.observed},
                          {"tolerance", r.tolerance},
                          {"margin", r.margin},
                          {"passed", r.passed},
                          {"details", r.details}});
        table += csv_row({r.name, num(r.bound), num(r.observed), num(r.tolerance), num(r.margin),
                          r.passed ? "1" : "0"});
        log(r.passed ? Level::Info : Level::Warn,
            r.name + (r.passed ? " passed" : " FAILED") + ": observed " + num(r.observed) + " bound " + num(r.bound));
    }
    out.summary()["checks"] = std::move(checks);
    out.file("checks.csv", table);

    const HolderModuli hm = holder_moduli(tr);
    json h = {{"l2_quotient", hm.l2_quotient},
              {"sup_quotient", hm.sup_quotient},
              {"sup_exponent", hm.sup_exponent},
              {"empirical_exponent_l2", hm.empirical_exponents.l2},
              {"empirical_exponent_sup", hm.empirical_exponents.sup}};
    if (hm.grad_sup_quotient_1d) {
        h["grad_sup_quotient_1d"] = *hm.grad_sup_quotient_1d;
        h["empirical_exponent_grad_sup_1d"] = hm.empirical_exponents.grad_sup_1d;
    }
    out.summary()["holder"] = std::move(h);
    return all_passed(reports);
}

int solve_or_verify(Output& out, const RunConfig& cfg, bool verify)
{
    const ObstacleProblem p = cfg.problem();
    const auto t0 = Clock::now();
    const Trajectory tr = run_flow(p, cfg.horizon, cfg.n_steps, cfg.step);
    out.timing("flow", seconds_since(t0));
    log(Level::Info, "flow finished: " + std::to_string(cfg.n_steps) + " steps");
    emit_trajectory(out, cfg, tr);
    if (!verify && !cfg.emit_diagnostics)
        return exit_code::ok;
    const auto t1 = Clock::now();
    const bool ok = emit_checks(out, tr);
    out.timing("checks", seconds_since(t1));
    return verify && !ok ? exit_code::check_failure : exit_code::ok;
}

int refine(Output& out, const RunConfig& cfg)
{
    const ObstacleProblem p = cfg.problem();
    const Grid& g = p.grid();
    std::vector<int> ladder;
    for (int k = 0; k < 4; ++k)
        ladder.push_back(cfg.n_steps << k);

    const auto t0 = Clock::now();
    std::vector<std::future<Trajectory>> jobs;
    for (int n : ladder)
        jobs.push_back(std::async(std::launch::async, [&, n] { return run_flow(p, cfg.horizon, n, cfg.step); }));
    std::vector<Trajectory> runs;
    std::exception_ptr failure;
    for (auto& job : jobs) {
        try {
            runs.push_back(job.get());
        } catch (...) {
            if (!failure)
                failure = std::current_exception();
        }
    }
    if (failure)
        std::rethrow_exception(failure);
    out.timing("flows", seconds_since(t0));

    std::vector<double> cauchy(runs.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 0; k + 1 < runs.size(); ++k) {
        double d = 0.0;
        for (int j = 0; j <= cfg.n_steps; ++j) {
            const double t = cfg.horizon * j / cfg.n_steps;
            d = std::max(d, l2_norm(g, eval_interpolant(runs[k], t, Interpolant::Linear) -
                                           eval_interpolant(runs[k + 1], t, Interpolant::Linear)));
        }
        cauchy[k] = d;
    }
    bool monotone = true;
    for (std::size_t k = 1; k + 1 < runs.size(); ++k)
        monotone = monotone && cauchy[k] < cauchy[k - 1];

    json levels = json::array();
    std::string table = csv_row({"n", "tau", "energy_final", "dissipation", "mass_sq_sum", "w2inf_sum",
                                 "max_laplacian_norm", "interpolant_gap", "cauchy_l2_to_next"});
    double mass_lo = std::numeric_limits<double>::infinity(), mass_hi = 0.0;
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const Trajectory& tr = runs[k];
        const TrajectoryAggregates agg = trajectory_aggregates(tr);
        mass_lo = std::min(mass_lo, agg.mass_sq_sum);
        mass_hi = std::max(mass_hi, agg.mass_sq_sum);
        const double lap = max_laplacian_norm(tr);
        const double gap = interpolant_gap(tr);
        json level = {{"n", tr.n_steps},
                      {"tau", tr.tau},
                      {"energy_final", tr.energies.back()},
                      {"dissipation", agg.dissipation},
                      {"mass_sq_sum", agg.mass_sq_sum},
                      {"w2inf_sum", agg.w2inf_sum},
                      {"max_laplacian_norm", lap},
                      {"interpolant_gap", gap}};
        level["cauchy_l2_to_next"] = k + 1 < runs.size() ? json(cauchy[k]) : json(nullptr);
        levels.push_back(std::move(level));
        table += csv_row({std::to_string(tr.n_steps), num(tr.tau), num(tr.energies.back()), num(agg.dissipation),
                          num(agg.mass_sq_sum), num(agg.w2inf_sum), num(lap), num(gap),
                          k + 1 < runs.size() ? num(cauchy[k]) : ""});
    }
    out.summary()["levels"] = std::move(levels);
    out.summary()["cauchy_monotone"] = monotone;
    out.summary()["mass_sq_sum_ratio"] = mass_lo > 0.0 ? mass_hi / mass_lo : 1.0;
    out.file("refine.csv", table);
    log(Level::Info, std::string("Cauchy differences ") + (monotone ? "decrease" : "do not decrease"));
    return exit_code::ok;
}

int penalty_study(Output& out, const RunConfig& cfg)
{
    const ObstacleProblem p = cfg.problem();
    const Grid& g = p.grid();
    const Field& f = p.obstacle();
    const Field& u0 = p.initial();
    StepConfig sc = cfg.step;
    sc.tau = cfg.horizon / cfg.n_steps;
    const double e0 = energy(g, u0);

    const ActiveSetStep exact = solve_step_active_set(g, u0, f, sc.tau, sc);

    // probe: the node carrying the largest contact multiplier, else the
    // node closest to the obstacle
    Index probe = 0;
    if (exact.multipliers.size() && exact.multipliers.maxCoeff() > 0.0)
        exact.multipliers.maxCoeff(&probe);
    else
        (exact.u - f).minCoeff(&probe);

    std::vector<PenaltyRecord> profile;
    SolverTelemetry telemetry;
    std::vector<Field> iterates;
    (void)penalty_continuation(g, u0, f, sc, profile, telemetry,
                               [&](const PenaltyRecord&, const Field& w) { iterates.push_back(w); });

    json rows = json::array();
    std::string table = csv_row({"eps", "inserted", "newton_iterations", "violation_l2", "violation_sup", "penalty",
                                 "energy", "proximal", "distance_l2", "distance_sup", "w_probe"});
    bool penalty_ok = true, violation_ok = true, distance_monotone = true;
    double prev_distance = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < profile.size(); ++k) {
        const PenaltyRecord& r = profile[k];
        const Field diff = iterates[k] - exact.u;
        const double dl2 = l2_norm(g, diff);
        const double dsup = diff.cwiseAbs().maxCoeff();
        const double wp = iterates[k][probe];
        penalty_ok = penalty_ok && r.penalty <= e0 * (1.0 + 1e-9);
        violation_ok = violation_ok && r.violation_l2 * r.violation_l2 <= e0 * r.eps * (1.0 + 1e-9);
        distance_monotone = distance_monotone && dl2 < prev_distance;
        prev_distance = dl2;
        rows.push_back({{"eps", r.eps},
                        {"inserted", r.inserted},
                        {"newton_iterations", r.newton_iterations},
                        {"violation_l2", r.violation_l2},
                        {"violation_sup", r.violation_sup},
                        {"penalty", r.penalty},
                        {"energy", r.energy},
                        {"proximal", r.proximal},
                        {"distance_l2", dl2},
                        {"distance_sup", dsup},
                        {"w_probe", wp}});
        table += csv_row({num(r.eps), r.inserted ? "1" : "0", std::to_string(r.newton_iterations),
                          num(r.violation_l2), num(r.violation_sup), num(r.penalty), num(r.energy), num(r.proximal),
                          num(dl2), num(dsup), num(wp)});
    }
    const Point x = g.interior_coords(probe);
    json probe_json = {{"node", probe}, {"coords", std::vector<double>(x.begin(), x.begin() + g.dim())}};
    probe_json["obstacle"] = f[probe];
    probe_json["u_exact"] = exact.u[probe];
    out.summary()["step"] = 1;
    out.summary()["energy_initial"] = e0;
    out.summary()["probe"] = std::move(probe_json);
    out.summary()["exact"] = {{"kkt_residual", exact.telemetry.kkt_residual},
                              {"contact_nodes", std::count(exact.active_set.begin(), exact.active_set.end(), true)}};
    out.summary()["eps_rows"] = std::move(rows);
    out.summary()["bounds"] = {{"penalty_below_initial_energy", penalty_ok},
                               {"violation_sq_below_energy_times_eps", violation_ok},
                               {"distance_decreasing", distance_monotone}};
    out.file("penalty_study.csv", table);
    if (cfg.fields.mode != FieldSelection::Mode::None) {
        out.file("fields/u_exact.csv", field_csv(g, exact.u));
        for (std::size_t k = 0; k < iterates.size(); ++k)
            out.file("fields/w_eps_" + std::to_string(k) + ".csv", field_csv(g, iterates[k]));
    }
    return exit_code::ok;
}

}  // namespace

int run_command(Command cmd, const RunConfig& cfg, const CommandOptions& opts)
{
    Output out(cmd, cfg, opts);
    int code = exit_code::ok;
    try {
        switch (cmd) {
        case Command::Solve: code = solve_or_verify(out, cfg, false); break;
        case Command::Verify: code = solve_or_verify(out, cfg, true); break;
        case Command::Refine: code = refine(out, cfg); break;
        case Command::PenaltyStudy: code = penalty_study(out, cfg); break;
        }
    } catch (const SolverError& e) {
        code = out.fail(e, exit_code::solver_failure);
    } catch (const ProblemError& e) {
        code = out.fail(e, exit_code::usage_error);
    }
    return out.finish(code);
}

}  // namespace plateflow::cli
