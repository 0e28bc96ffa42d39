#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "tubeplan/vec2.hpp"

namespace tubeplan::mpc {

struct Obstacle {
    Vec2 center;
    double radius = 0.0;
};

struct Scenario {
    std::string name = "unnamed";
    std::vector<Obstacle> obstacles;
    Vec2 start;
    Vec2 goal;
    double v_bar = 0.2;
    double goal_tolerance = 0.05;
    Box2 bounds{{-1.0, -1.0}, {3.0, 1.0}};

    void validate() const;
};

Scenario empty_scenario();

// Two discs leaving a vertical gap of the given width on the straight line
// from start to goal; world bounds block detours around the discs.
Scenario narrow_gap_scenario(double gap, double disc_radius = 0.35);

// Two consecutive disc pairs with laterally offset gaps.
Scenario corridor_scenario(double gap = 0.16, double offset = 0.10, double disc_radius = 0.3);

// Seeded random discs between start and goal.
Scenario clutter_scenario(uint64_t seed, int n_discs = 8);

// name in {empty, narrow_gap, corridor, clutter}; params may override
// geometry knobs (gap, offset, disc_radius, seed, n_discs).
Scenario builtin_scenario(const std::string& name, const nlohmann::json& params);

void write_scenario(const Scenario& s, const std::filesystem::path& path);
Scenario read_scenario(const std::filesystem::path& path);

}  // namespace tubeplan::mpc
