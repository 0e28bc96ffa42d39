#include "tubeplan/sim_core.hpp"

#include <algorithm>
#include <cmath>

#include "tubeplan/errors.hpp"

namespace tubeplan::sim {

void TrackerParams::validate(double planner_dt) const {
    if (!(tau > 0.0)) throw ValidationError("tracker tau must be > 0");
    if (kp < 0.0 || kd < 0.0 || kf < 0.0) throw ValidationError("tracker gains must be >= 0");
    if (cp < 0.0 || cv < 0.0 || cf < 0.0 || ca < 0.0)
        throw ValidationError("tracker clip radii must be >= 0");
    if (sigma < 0.0) throw ValidationError("tracker sigma must be >= 0");
    if (!bias.finite()) throw ValidationError("tracker bias must be finite");
    if (!(dt_sim > 0.0)) throw ValidationError("tracker dt_sim must be > 0");
    if (substeps < 1) throw ValidationError("tracker substeps must be >= 1");
    if (std::abs(substeps * dt_sim - planner_dt) > 1e-12)
        throw ValidationError("substeps * dt_sim must equal the planner dt");
}

void HistoryBuffer::push(double e, Vec2 z, Vec2 v) {
    if (capacity_ == 0) return;
    if (e_.size() == capacity_) {
        e_.erase(e_.begin());
        z_.erase(z_.begin());
        v_.erase(v_.begin());
    }
    e_.push_back(e);
    z_.push_back(z);
    v_.push_back(v);
}

Vec2 planner_step(Vec2 z, Vec2 v, double dt) {
    return z + v * dt;
}

Vec2 clip_vec(Vec2 u, double c) {
    return {std::clamp(u.x, -c, c), std::clamp(u.y, -c, c)};
}

Vec2 raibert_control(const TrackerState& x, Vec2 z_ref, Vec2 v_ref, const TrackerParams& params) {
    Vec2 e_p = clip_vec(z_ref - x.p, params.cp);
    Vec2 e_v = clip_vec(Vec2{} - x.vel, params.cv);
    Vec2 e_f = clip_vec(v_ref, params.cf);
    return clip_vec(e_p * params.kp + e_v * params.kd + e_f * params.kf, params.ca);
}

TrackerState tracker_step(TrackerState x, Vec2 z_ref, Vec2 v_ref, const TrackerParams& params,
                          Rng& rng) {
    for (int s = 0; s < params.substeps; ++s) {
        Vec2 a_cmd = raibert_control(x, z_ref, v_ref, params);
        x.act += (a_cmd - x.act) * (params.dt_sim / params.tau);
        x.vel += (x.act + params.bias) * params.dt_sim;
        if (params.sigma > 0.0) {
            x.vel.x += params.sigma * rng.normal();
            x.vel.y += params.sigma * rng.normal();
        }
        x.p += x.vel * params.dt_sim;
    }
    return x;
}

Vec2 project(const TrackerState& x) {
    return x.p;
}

double tracking_error(const TrackerState& x, Vec2 z) {
    return (z - project(x)).norm();
}

}  // namespace tubeplan::sim
