#include "tubeplan/closed_loop.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "tubeplan/errors.hpp"
#include "tubeplan/rng.hpp"

namespace tubeplan::mpc {

std::string outcome_name(Outcome o) {
    switch (o) {
        case Outcome::Reached: return "reached";
        case Outcome::Timeout: return "timeout";
        case Outcome::Collision: return "collision";
    }
    return "?";
}

namespace {

double clearance(const Scenario& scenario, Vec2 p) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& obs : scenario.obstacles)
        best = std::min(best, (p - obs.center).norm() - obs.radius);
    return best;
}

bool inside_obstacle(const Scenario& scenario, Vec2 p) {
    for (const auto& obs : scenario.obstacles)
        if ((p - obs.center).norm() < obs.radius) return true;
    return false;
}

}  // namespace

ClosedLoopLog closed_loop_run(const Scenario& scenario, const ClosedLoopConfig& cfg) {
    scenario.validate();
    cfg.mpc.validate();
    cfg.tracker.validate(cfg.mpc.dt);
    if (cfg.max_steps < 1) throw ValidationError("max_steps must be >= 1");

    int history_len = cfg.mpc.tube.mode == TubeMode::Dynamic ? cfg.mpc.tube.model->cfg.history : 0;

    Rng rng(substream(cfg.seed, 0xC7));
    Vec2 z = scenario.start;
    sim::TrackerState x;
    x.p = scenario.start;

    sim::HistoryBuffer hist(static_cast<std::size_t>(std::max(history_len, 1)));
    for (int i = 0; i < history_len; ++i) {
        x = sim::tracker_step(x, z, Vec2{}, cfg.tracker, rng);
        hist.push(sim::tracking_error(x, z), z, Vec2{});
    }

    ClosedLoopLog log;
    log.min_clearance = scenario.obstacles.empty() ? std::numeric_limits<double>::infinity()
                                                   : clearance(scenario, x.p);

    Vec2 v_prev{};
    std::vector<Vec2> warm;
    std::vector<double> w_prev;

    for (int k = 0; k < cfg.max_steps; ++k) {
        StepLog step;
        step.k = k;
        step.z = z;
        step.proj = sim::project(x);
        step.e = sim::tracking_error(x, z);

        MpcConfig step_cfg = cfg.mpc;
        if (k == 0) step_cfg.scp_max_iters = std::max(cfg.first_solve_scp_iters,
                                                      cfg.mpc.scp_max_iters);

        auto t0 = std::chrono::steady_clock::now();
        Vec2 v_apply = v_prev;
        try {
            MpcSolution sol;
            if (cfg.mpc.tube.mode == TubeMode::None)
                sol = solve_nominal(scenario, z, step_cfg, warm.empty() ? nullptr : &warm);
            else
                sol = solve_dynamic_tube(scenario, z, hist, step_cfg,
                                         warm.empty() ? nullptr : &warm);
            v_apply = sol.v.front();
            step.nominal_status = sol.nominal_status;
            step.tube_status = sol.status;
            step.w_profile = sol.w;
            step.z_plan = sol.z;
            w_prev = sol.w;
            // shift for the next warm start, repeating the last input
            warm.assign(sol.v.begin() + 1, sol.v.end());
            warm.push_back(sol.v.back());
        } catch (const SolverError&) {
            step.solver_failed = true;
            step.w_profile = w_prev;
            warm.clear();
        }
        step.solve_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
        step.v = v_apply;
        log.step_logs.push_back(step);

        // advance: the tracker follows the pre-step planner state and the
        // applied input, matching the data-collection convention
        Vec2 z_next = sim::planner_step(z, v_apply, cfg.mpc.dt);
        x = sim::tracker_step(x, z, v_apply, cfg.tracker, rng);
        v_prev = v_apply;

        double e_next = sim::tracking_error(x, z_next);
        hist.push(e_next, z_next, v_apply);
        z = z_next;
        log.steps = k + 1;

        if (!scenario.obstacles.empty())
            log.min_clearance = std::min(log.min_clearance, clearance(scenario, x.p));
        if (inside_obstacle(scenario, x.p)) {
            log.outcome = Outcome::Collision;
            return log;
        }
        if ((z - scenario.goal).norm() <= scenario.goal_tolerance) {
            log.outcome = Outcome::Reached;
            log.steps_to_goal = k + 1;
            return log;
        }
        if (cfg.stall_window > 0 && k + 1 >= cfg.stall_window) {
            Vec2 z_then = log.step_logs[static_cast<std::size_t>(k + 1 - cfg.stall_window)].z;
            if ((z - z_then).norm() < cfg.stall_eps) {
                log.outcome = Outcome::Timeout;
                return log;
            }
        }
    }
    log.outcome = Outcome::Timeout;
    return log;
}

RunSummary summarize_run(const Scenario& scenario, const std::string& mode_label, uint64_t seed,
                         const ClosedLoopLog& log) {
    RunSummary s;
    s.scenario = scenario.name;
    s.mode = mode_label;
    s.seed = seed;
    s.outcome = outcome_name(log.outcome);
    s.steps = log.steps;
    s.steps_to_goal = log.steps_to_goal;
    s.min_clearance = log.min_clearance;

    std::size_t covered = 0, checked = 0, failures = 0;
    std::vector<double> times;
    times.reserve(log.step_logs.size());
    for (std::size_t k = 0; k < log.step_logs.size(); ++k) {
        const auto& step = log.step_logs[k];
        times.push_back(step.solve_ms);
        if (step.solver_failed) ++failures;
        if (k + 1 < log.step_logs.size() && step.w_profile.size() >= 2) {
            ++checked;
            if (log.step_logs[k + 1].e <= step.w_profile[1]) ++covered;
        }
    }
    s.tube_correctness = checked ? static_cast<double>(covered) / static_cast<double>(checked)
                                 : 1.0;
    s.solver_failure_frac =
        log.step_logs.empty() ? 0.0
                              : static_cast<double>(failures) /
                                    static_cast<double>(log.step_logs.size());
    if (!times.empty()) {
        double sum = 0.0, mx = 0.0;
        for (double t : times) {
            sum += t;
            mx = std::max(mx, t);
        }
        s.mean_solve_ms = sum / static_cast<double>(times.size());
        s.max_solve_ms = mx;
        std::sort(times.begin(), times.end());
        std::size_t idx = static_cast<std::size_t>(std::ceil(0.95 * times.size()));
        if (idx > 0) --idx;
        s.p95_solve_ms = times[std::min(idx, times.size() - 1)];
    }
    return s;
}

Table step_table(const ClosedLoopLog& log) {
    Table t({"k", "z_x", "z_y", "v_x", "v_y", "proj_x", "proj_y", "e", "w0", "w1",
             "nominal_status", "tube_status", "solver_failed", "solve_ms"});
    for (const auto& s : log.step_logs) {
        double w0 = s.w_profile.size() > 0 ? s.w_profile[0] : 0.0;
        double w1 = s.w_profile.size() > 1 ? s.w_profile[1] : 0.0;
        t.add_row({std::to_string(s.k), Table::fmt(s.z.x), Table::fmt(s.z.y), Table::fmt(s.v.x),
                   Table::fmt(s.v.y), Table::fmt(s.proj.x), Table::fmt(s.proj.y), Table::fmt(s.e),
                   Table::fmt(w0), Table::fmt(w1), status_name(s.nominal_status),
                   status_name(s.tube_status), s.solver_failed ? "1" : "0",
                   Table::fmt(s.solve_ms)});
    }
    return t;
}

Table plan_table(const ClosedLoopLog& log, int stride) {
    Table t({"k", "node", "z_x", "z_y", "w"});
    if (stride < 1) stride = 1;
    for (std::size_t k = 0; k < log.step_logs.size(); k += static_cast<std::size_t>(stride)) {
        const auto& s = log.step_logs[k];
        for (std::size_t node = 0; node < s.z_plan.size(); ++node) {
            double w = node < s.w_profile.size() ? s.w_profile[node] : 0.0;
            t.add_row({std::to_string(s.k), std::to_string(node), Table::fmt(s.z_plan[node].x),
                       Table::fmt(s.z_plan[node].y), Table::fmt(w)});
        }
    }
    return t;
}

Table summary_table(const std::vector<RunSummary>& rows) {
    Table t({"scenario", "mode", "seed", "outcome", "steps", "steps_to_goal", "min_clearance",
             "tube_correctness", "solver_failure_frac", "mean_solve_ms", "max_solve_ms",
             "p95_solve_ms"});
    for (const auto& r : rows)
        t.add_row({r.scenario, r.mode, std::to_string(r.seed), r.outcome,
                   std::to_string(r.steps), std::to_string(r.steps_to_goal),
                   Table::fmt(r.min_clearance), Table::fmt(r.tube_correctness),
                   Table::fmt(r.solver_failure_frac), Table::fmt(r.mean_solve_ms),
                   Table::fmt(r.max_solve_ms), Table::fmt(r.p95_solve_ms)});
    return t;
}

const std::vector<std::string>& timing_columns() {
    static const std::vector<std::string> cols{"solve_ms", "mean_solve_ms", "max_solve_ms",
                                               "p95_solve_ms"};
    return cols;
}

}  // namespace tubeplan::mpc
