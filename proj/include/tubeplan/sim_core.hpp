#pragma once

#include <cstddef>
#include <vector>

#include "tubeplan/rng.hpp"
#include "tubeplan/vec2.hpp"

namespace tubeplan::sim {

// Full-order surrogate: position, velocity, and realized acceleration of a
// point mass whose actuator lags commands first-order.
struct TrackerState {
    Vec2 p;
    Vec2 vel;
    Vec2 act;
};

struct TrackerParams {
    double tau = 0.25;   // actuator time constant [s]
    double kp = 4.0;     // position gain
    double kd = 2.0;     // velocity damping gain
    double kf = 1.0;     // feedforward gain
    double cp = 0.5;     // position-error clip [m]
    double cv = 1.0;     // velocity clip [m/s]
    double cf = 0.3;     // feedforward clip [m/s]
    double ca = 1.5;     // acceleration command clip [m/s^2]
    double sigma = 0.005;  // per-substep velocity noise std [m/s]
    Vec2 bias;             // constant disturbance acceleration [m/s^2]
    double dt_sim = 0.01;  // substep [s]
    int substeps = 10;     // substeps * dt_sim must equal the planner dt

    // Throws ValidationError on violated bounds or dt mismatch (±1e-12).
    void validate(double planner_dt) const;
};

// Rolling window of the last H measurements: tracking error, planner
// position, and the input applied on the step that produced them. Most
// recent entries last; the final error entry is the current error.
class HistoryBuffer {
public:
    HistoryBuffer() = default;
    explicit HistoryBuffer(std::size_t capacity) : capacity_(capacity) {}

    void push(double e, Vec2 z, Vec2 v);
    bool full() const { return e_.size() == capacity_; }
    std::size_t size() const { return e_.size(); }
    std::size_t capacity() const { return capacity_; }

    const std::vector<double>& e_hist() const { return e_; }
    const std::vector<Vec2>& z_hist() const { return z_; }
    const std::vector<Vec2>& v_hist() const { return v_; }

private:
    std::size_t capacity_ = 0;
    std::vector<double> e_;
    std::vector<Vec2> z_;
    std::vector<Vec2> v_;
};

// Single-integrator planning model: z + dt * v.
Vec2 planner_step(Vec2 z, Vec2 v, double dt);

// Componentwise clamp of u to [-c, c].
Vec2 clip_vec(Vec2 u, double c);

// Clipped PD-plus-feedforward rule mapping tracking errors to a commanded
// acceleration, saturated at ca.
Vec2 raibert_control(const TrackerState& x, Vec2 z_ref, Vec2 v_ref, const TrackerParams& params);

// Advances the surrogate plant by `substeps` substeps against a fixed
// reference, recomputing the command each substep. Deterministic given the
// rng state; with sigma = 0 no rng draws are consumed.
TrackerState tracker_step(TrackerState x, Vec2 z_ref, Vec2 v_ref, const TrackerParams& params,
                          Rng& rng);

// Projection onto the planning space: drops velocity and acceleration.
Vec2 project(const TrackerState& x);

// Euclidean distance between the planner state and the projected tracker.
double tracking_error(const TrackerState& x, Vec2 z);

}  // namespace tubeplan::sim
