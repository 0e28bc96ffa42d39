#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "tubeplan/rng.hpp"
#include "tubeplan/sim_core.hpp"

using namespace tubeplan;
using namespace tubeplan::sim;

namespace {

// Independent per-axis re-derivation of the clipped PD-plus-feedforward rule,
// written against the scalar formulas rather than Vec2 ops.
double scalar_clip(double v, double c) { return v < -c ? -c : (v > c ? c : v); }

double raibert_axis(double p, double vel, double z_ref, double v_ref, const TrackerParams& k) {
    double ep = scalar_clip(z_ref - p, k.cp);
    double ev = scalar_clip(-vel, k.cv);
    double ef = scalar_clip(v_ref, k.cf);
    return scalar_clip(k.kp * ep + k.kd * ev + k.kf * ef, k.ca);
}

TrackerParams default_params() {
    TrackerParams p;
    p.validate(0.1);
    return p;
}

}  // namespace

TEST_CASE("planner_step examples") {
    Vec2 a = planner_step({0, 0}, {1, 0}, 0.1);
    CHECK(a.x == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(a.y == 0.0);

    Vec2 b = planner_step({1, -2}, {0, 0}, 0.1);
    CHECK(b.x == 1.0);
    CHECK(b.y == -2.0);

    Vec2 c = planner_step({0.5, 0.5}, {-0.2, 0.2}, 0.1);
    CHECK(c.x == doctest::Approx(0.48).epsilon(1e-15));
    CHECK(c.y == doctest::Approx(0.52).epsilon(1e-15));
}

TEST_CASE("planner_step is exactly linear") {
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        Vec2 z{rng.uniform(-5, 5), rng.uniform(-5, 5)};
        Vec2 v{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        double dt = rng.uniform(0.01, 0.5);
        Vec2 dz = planner_step(z, v, dt) - z;
        CHECK(dz.x == v.x * dt);
        CHECK(dz.y == v.y * dt);
    }
}

TEST_CASE("clip_vec examples and projection property") {
    Vec2 a = clip_vec({2, -3}, 1);
    CHECK(a.x == 1.0);
    CHECK(a.y == -1.0);
    Vec2 b = clip_vec({0.1, 0.2}, 1);
    CHECK(b.x == 0.1);
    CHECK(b.y == 0.2);
    Vec2 c = clip_vec({5, 0}, 0);
    CHECK(c.x == 0.0);
    CHECK(c.y == 0.0);

    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        Vec2 u{rng.uniform(-4, 4), rng.uniform(-4, 4)};
        double r = rng.uniform(0, 2);
        Vec2 once = clip_vec(u, r);
        Vec2 twice = clip_vec(once, r);
        CHECK(once.x == twice.x);
        CHECK(once.y == twice.y);
        CHECK(once.inf_norm() <= r + 1e-15);
    }
}

TEST_CASE("raibert_control examples") {
    TrackerParams p = default_params();

    TrackerState rest;
    rest.p = {1, 2};
    Vec2 a = raibert_control(rest, {1, 2}, {0, 0}, p);
    CHECK(a.x == 0.0);
    CHECK(a.y == 0.0);

    TrackerParams clip_p = p;
    clip_p.kp = 1;
    clip_p.kd = 0;
    clip_p.kf = 0;
    clip_p.cp = 0.5;
    clip_p.ca = 1;
    TrackerState x;
    Vec2 cmd = raibert_control(x, {10, 0}, {0, 0}, clip_p);
    CHECK(cmd.x == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(cmd.y == 0.0);
}

TEST_CASE("raibert_control matches an independent scalar re-derivation") {
    Rng rng(23);
    for (int i = 0; i < 500; ++i) {
        TrackerParams p = default_params();
        p.kp = rng.uniform(0, 6);
        p.kd = rng.uniform(0, 4);
        p.kf = rng.uniform(0, 2);
        p.cp = rng.uniform(0, 1);
        p.cv = rng.uniform(0, 2);
        p.cf = rng.uniform(0, 0.5);
        p.ca = rng.uniform(0, 3);
        TrackerState x;
        x.p = {rng.uniform(-2, 2), rng.uniform(-2, 2)};
        x.vel = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        Vec2 z_ref{rng.uniform(-2, 2), rng.uniform(-2, 2)};
        Vec2 v_ref{rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4)};

        Vec2 cmd = raibert_control(x, z_ref, v_ref, p);
        CHECK(cmd.x == doctest::Approx(raibert_axis(x.p.x, x.vel.x, z_ref.x, v_ref.x, p))
                           .epsilon(1e-14));
        CHECK(cmd.y == doctest::Approx(raibert_axis(x.p.y, x.vel.y, z_ref.y, v_ref.y, p))
                           .epsilon(1e-14));
        CHECK(cmd.inf_norm() <= p.ca + 1e-15);
    }
}

TEST_CASE("tracker_step equilibrium") {
    TrackerParams p = default_params();
    p.sigma = 0;
    TrackerState x;
    x.p = {0.3, -0.7};
    Rng rng(1);
    TrackerState next = tracker_step(x, x.p, {0, 0}, p, rng);
    CHECK(next.p.x == x.p.x);
    CHECK(next.p.y == x.p.y);
    CHECK(next.vel.x == 0.0);
    CHECK(next.act.x == 0.0);
}

TEST_CASE("tracker_step pure bias integration") {
    TrackerParams p = default_params();
    p.sigma = 0;
    p.kp = p.kd = p.kf = 0;
    p.bias = {1, 0};
    p.tau = 0.01;
    p.dt_sim = 0.01;
    p.substeps = 1;
    TrackerState x;
    Rng rng(1);
    TrackerState next = tracker_step(x, {0, 0}, {0, 0}, p, rng);
    CHECK(next.vel.x == doctest::Approx(0.01).epsilon(1e-14));
    CHECK(next.p.x == doctest::Approx(0.0001).epsilon(1e-12));
    CHECK(next.vel.y == 0.0);
}

TEST_CASE("tracker_step matches a scalar straight-line re-simulation") {
    TrackerParams p = default_params();
    p.sigma = 0;
    p.bias = {0.02, 0};

    // library rollout: constant v_ref along x, reference moving each step
    TrackerState x;
    Rng rng(3);
    Vec2 z{0, 0};
    Vec2 v{0.2, 0};
    for (int k = 0; k < 100; ++k) {
        x = tracker_step(x, z, v, p, rng);
        z = planner_step(z, v, 0.1);
    }

    // independent scalar loop, x-axis only (y stays identically zero)
    double sp = 0.0, sv = 0.0, sa = 0.0, sz = 0.0;
    for (int k = 0; k < 100; ++k) {
        for (int s = 0; s < p.substeps; ++s) {
            double cmd = raibert_axis(sp, sv, sz, v.x, p);
            sa += (p.dt_sim / p.tau) * (cmd - sa);
            sv += p.dt_sim * (sa + p.bias.x);
            sp += p.dt_sim * sv;
        }
        sz += 0.1 * v.x;
    }
    CHECK(x.p.x == doctest::Approx(sp).epsilon(1e-12));
    CHECK(x.p.y == 0.0);
    CHECK(tracking_error(x, z) == doctest::Approx(std::abs(sz - sp)).epsilon(1e-10));
}

TEST_CASE("project and tracking_error examples") {
    TrackerState x;
    x.p = {1, 2};
    x.vel = {9, 9};
    x.act = {9, 9};
    Vec2 z = project(x);
    CHECK(z.x == 1.0);
    CHECK(z.y == 2.0);

    CHECK(tracking_error(x, {1, 2}) == 0.0);
    TrackerState y;
    y.p = {0, 4};
    CHECK(tracking_error(y, {3, 0}) == doctest::Approx(5.0).epsilon(1e-15));
    TrackerState o;
    CHECK(tracking_error(o, {0.1, 0}) == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("sigma=0 runs are bitwise deterministic") {
    TrackerParams p = default_params();
    p.sigma = 0;
    p.bias = {0.01, -0.02};
    auto run = [&]() {
        TrackerState x;
        Rng rng(5);
        Vec2 z{0, 0};
        for (int k = 0; k < 50; ++k) {
            x = tracker_step(x, z, {0.15, -0.1}, p, rng);
            z = planner_step(z, {0.15, -0.1}, 0.1);
        }
        return x;
    };
    TrackerState a = run();
    TrackerState b = run();
    CHECK(a.p.x == b.p.x);
    CHECK(a.p.y == b.p.y);
    CHECK(a.vel.x == b.vel.x);
    CHECK(a.act.y == b.act.y);
}

TEST_CASE("equilibrium invariance over many steps") {
    TrackerParams p = default_params();
    p.sigma = 0;
    p.bias = {0, 0};
    TrackerState x;
    x.p = {1.5, -2.5};
    Rng rng(1);
    for (int k = 0; k < 200; ++k) {
        x = tracker_step(x, {1.5, -2.5}, {0, 0}, p, rng);
        CHECK(tracking_error(x, {1.5, -2.5}) == 0.0);
    }
}

TEST_CASE("translation equivariance") {
    TrackerParams p = default_params();
    p.sigma = 0;
    p.bias = {0.03, 0.01};
    Vec2 shift{5, -3};

    auto run = [&](Vec2 z0) {
        TrackerState x;
        x.p = z0 + Vec2{0.02, -0.01};
        Rng rng(9);
        Vec2 z = z0;
        std::vector<Vec2> traj;
        for (int k = 0; k < 60; ++k) {
            Vec2 v{0.1, 0.05};
            x = tracker_step(x, z, v, p, rng);
            z = planner_step(z, v, 0.1);
            traj.push_back(x.p);
        }
        return traj;
    };
    auto base = run({0, 0});
    auto moved = run(shift);
    for (std::size_t k = 0; k < base.size(); ++k) {
        CHECK(moved[k].x == doctest::Approx(base[k].x + shift.x).epsilon(1e-12));
        CHECK(moved[k].y == doctest::Approx(base[k].y + shift.y).epsilon(1e-12));
    }
}

TEST_CASE("mean tracking error grows with reference speed") {
    TrackerParams p = default_params();
    auto mean_error = [&](double speed) {
        double total = 0.0;
        for (int seed = 0; seed < 100; ++seed) {
            TrackerState x;
            Rng rng(1000 + static_cast<uint64_t>(seed));
            Vec2 z{0, 0};
            Vec2 v{speed, 0};
            double err = 0.0;
            for (int k = 0; k < 80; ++k) {
                x = tracker_step(x, z, v, p, rng);
                z = planner_step(z, v, 0.1);
                err += tracking_error(x, z);
            }
            total += err / 80.0;
        }
        return total / 100.0;
    };
    double fast = mean_error(0.2);
    double slow = mean_error(0.04);
    CHECK(fast > slow);
}
