#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tubeplan/mpc.hpp"
#include "tubeplan/sim_core.hpp"
#include "tubeplan/table.hpp"

namespace tubeplan::mpc {

struct ClosedLoopConfig {
    MpcConfig mpc;
    sim::TrackerParams tracker;
    uint64_t seed = 1;
    int max_steps = 600;
    // The first solve runs to convergence; later solves keep the
    // real-time iteration cap from mpc.scp_max_iters.
    int first_solve_scp_iters = 30;
    // Early exit when the planner state moves less than stall_eps over
    // stall_window steps (0 disables). A stalled run counts as Timeout.
    int stall_window = 50;
    double stall_eps = 0.01;
};

enum class Outcome { Reached, Timeout, Collision };
std::string outcome_name(Outcome o);

struct StepLog {
    int k = 0;
    Vec2 z;      // planner state when the solve ran
    Vec2 v;      // input applied
    Vec2 proj;   // tracker projection at the same instant
    double e = 0.0;  // ||z - proj||
    std::vector<double> w_profile;  // N+1 tube radii of the executed plan
    std::vector<Vec2> z_plan;       // planned trajectory of the executed solve
    SolveStatus nominal_status = SolveStatus::Converged;
    SolveStatus tube_status = SolveStatus::Converged;
    bool solver_failed = false;  // numerical failure; previous input replayed
    double solve_ms = 0.0;
};

struct ClosedLoopLog {
    Outcome outcome = Outcome::Timeout;
    int steps = 0;
    int steps_to_goal = -1;
    double min_clearance = 0.0;  // min over steps/obstacles of ||p - c|| - r
    std::vector<StepLog> step_logs;
};

// Warm-up of H tracker steps at standstill fills the history buffer with
// real measurements, then the receding-horizon loop runs until the goal
// ball, a collision, a stall, or max_steps.
ClosedLoopLog closed_loop_run(const Scenario& scenario, const ClosedLoopConfig& cfg);

struct RunSummary {
    std::string scenario;
    std::string mode;
    uint64_t seed = 0;
    std::string outcome;
    int steps = 0;
    int steps_to_goal = -1;
    double min_clearance = 0.0;
    double tube_correctness = 0.0;  // fraction of steps with e_{k+1} <= w_1 of step k
    double mean_solve_ms = 0.0;
    double max_solve_ms = 0.0;
    double p95_solve_ms = 0.0;
    double solver_failure_frac = 0.0;
};

RunSummary summarize_run(const Scenario& scenario, const std::string& mode_label, uint64_t seed,
                         const ClosedLoopLog& log);

Table step_table(const ClosedLoopLog& log);
// Planned trajectory and tube snapshots every `stride` steps, one row per
// (step, node).
Table plan_table(const ClosedLoopLog& log, int stride);
Table summary_table(const std::vector<RunSummary>& rows);

// All wall-clock columns, excluded when comparing reruns.
const std::vector<std::string>& timing_columns();

}  // namespace tubeplan::mpc
