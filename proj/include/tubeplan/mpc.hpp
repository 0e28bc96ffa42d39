#pragma once

#include <span>
#include <string>
#include <vector>

#include "tubeplan/qp.hpp"
#include "tubeplan/scenario.hpp"
#include "tubeplan/sim_core.hpp"
#include "tubeplan/tube_model.hpp"

namespace tubeplan::mpc {

enum class TubeMode { None, Fixed, Dynamic };

std::string tube_mode_name(TubeMode m);
TubeMode tube_mode_from_name(const std::string& s);

struct TubeSetting {
    TubeMode mode = TubeMode::None;
    double fixed_radius = 0.0;              // Fixed
    const tube::TubeModel* model = nullptr;  // Dynamic
};

struct MpcConfig {
    int horizon = 25;
    double dt = 0.1;
    double q = 10.0;     // stage position weight
    double r = 0.1;      // stage input weight
    double q_f = 100.0;  // terminal position weight
    double r_r = 1.0;    // input-rate weight (tube stage)
    int scp_max_iters = 4;
    int qp_iters = 400;
    double trust_region_radius = 0.0;  // 0 resolves to v_bar / 2
    double slack_penalty = 1e3;
    double convergence_tol = 1e-5;
    TubeSetting tube;

    void validate() const;
};

enum class SolveStatus { Converged, IterCapped, Infeasible };
std::string status_name(SolveStatus s);

struct MpcSolution {
    std::vector<Vec2> z;   // N+1, satisfies the planner recursion exactly
    std::vector<Vec2> v;   // N, always within [-v_bar, v_bar]^2
    std::vector<double> w; // N+1 tube radii used by the constraints
    SolveStatus status = SolveStatus::IterCapped;
    SolveStatus nominal_status = SolveStatus::Converged;  // pre-solve stage
    double objective = 0.0;
    double max_violation = 0.0;  // over nodes 1..N and all obstacles
    int scp_iters = 0;
};

// (z - c)'(z - c) - (w + r)^2; the node is safely outside when >= 0.
double tube_constraint_value(Vec2 z, double w, const Obstacle& obstacle);

struct TubeLinearization {
    std::vector<double> w;  // N+1, w[0] is the measured anchor
    linalg::Matrix dw_dz;   // (N+1) x 2(N+1)
    linalg::Matrix dw_dv;   // (N+1) x 2N
};

// First-order model of the tube prediction around the given plan, rows via
// one reverse sweep per horizon node.
TubeLinearization linearize_tube_dynamics(const tube::TubeModel& model,
                                          const sim::HistoryBuffer& hist,
                                          std::span<const Vec2> z_plan,
                                          std::span<const Vec2> v_plan);

// Point-containment MPC toward the scenario goal (quadratic stage/terminal
// cost); requires cfg.tube.mode == None.
MpcSolution solve_nominal(const Scenario& scenario, Vec2 z_init, const MpcConfig& cfg,
                          const std::vector<Vec2>* warm_v = nullptr);

// Tube-buffered problem tracking an internal nominal pre-solve, with an
// input-rate penalty. Fixed mode uses a constant radius; Dynamic evaluates
// and linearizes the learned tube each SCP iteration.
MpcSolution solve_dynamic_tube(const Scenario& scenario, Vec2 z_init,
                               const sim::HistoryBuffer& hist, const MpcConfig& cfg,
                               const std::vector<Vec2>* warm_v = nullptr);

}  // namespace tubeplan::mpc
