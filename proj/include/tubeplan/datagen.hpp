#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tubeplan/dataset.hpp"
#include "tubeplan/rng.hpp"
#include "tubeplan/sim_core.hpp"
#include "tubeplan/vec2.hpp"

namespace tubeplan::data {

// Piecewise-constant velocity references with mode draws per segment (hold /
// new direction / full stop), smoothed by a short moving average so the
// trajectories resemble receding-horizon solutions: long straight runs near
// the speed bound, slowdowns, dwells.
struct ReferenceGenConfig {
    int traj_len = 200;
    double v_bar = 0.2;
    int seg_min = 5;
    int seg_max = 30;
    double hold_prob = 0.35;
    double turn_prob = 0.45;  // leftover probability mass also turns
    double stop_prob = 0.20;
    double full_speed_frac = 0.4;  // fraction of turns pinned at |v| = v_bar
    int smooth_window = 3;

    void validate() const;
};

// Pre-smoothing segments, exposed so tests can check segment statistics.
std::vector<Vec2> sample_reference_segments(const ReferenceGenConfig& cfg, Rng& rng,
                                            std::vector<int>* segment_lengths);
std::vector<Vec2> sample_reference(const ReferenceGenConfig& cfg, Rng& rng);

struct Range {
    double lo = 0.0;
    double hi = 0.0;
    double sample(Rng& rng) const { return rng.uniform(lo, hi); }
    bool contains(double v) const { return v >= lo && v <= hi; }
};

// Uniform per-environment parameter ranges. Ranges must contain the nominal
// value; bias is sampled per component in [-bias_max, bias_max].
struct RandomizationConfig {
    sim::TrackerParams nominal;
    Range tau{0.15, 0.40};
    Range kp{3.0, 5.0};
    Range kd{1.5, 2.5};
    Range kf{0.7, 1.3};
    Range cp{0.4, 0.6};
    Range cv{0.8, 1.2};
    Range cf{0.24, 0.36};
    Range ca{1.2, 1.8};
    Range sigma{0.002, 0.008};
    double bias_max = 0.05;

    void validate(double planner_dt) const;
};

sim::TrackerParams sample_env_params(const RandomizationConfig& cfg, Rng& rng);

struct InitialConditionConfig {
    Box2 z0_box{{-1.0, -1.0}, {1.0, 1.0}};
    double e0_max = 0.05;  // radius of the initial tracker offset disc
};

struct DatagenConfig {
    int n_envs = 256;
    int refs_per_env = 8;
    double dt = 0.1;
    uint64_t master_seed = 1;
    int workers = 0;  // 0 = hardware concurrency
    ReferenceGenConfig ref;
    RandomizationConfig rand;
    InitialConditionConfig init;

    void validate() const;
    nlohmann::json to_json() const;
};

// Runs the planner recursion (in float32) and the tracked simulation for one
// reference sequence.
RolloutRecord rollout(const sim::TrackerParams& params, const std::vector<Vec2>& v_seq, Vec2 z0,
                      sim::TrackerState x0, double dt, Rng& rng, uint32_t env_id,
                      uint64_t seed_label);

struct GenFailure {
    uint32_t env_id = 0;
    int record = 0;
    std::string reason;
};

// n_envs * refs_per_env rollouts, each keyed by a counter-derived stream so
// output is identical for any worker count. Records with non-finite states
// are dropped and reported through `failures`.
Dataset generate_dataset(const DatagenConfig& cfg, std::vector<GenFailure>* failures = nullptr);

}  // namespace tubeplan::data
