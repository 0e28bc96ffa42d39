#include "tubeplan/scenario.hpp"

#include <cmath>
#include <fstream>

#include "tubeplan/errors.hpp"
#include "tubeplan/rng.hpp"

namespace tubeplan::mpc {

void Scenario::validate() const {
    if (!(v_bar > 0.0)) throw ValidationError("scenario v_bar must be > 0");
    if (!(goal_tolerance > 0.0)) throw ValidationError("goal_tolerance must be > 0");
    if (bounds.lo.x >= bounds.hi.x || bounds.lo.y >= bounds.hi.y)
        throw ValidationError("scenario bounds are empty");
    if (!bounds.contains(start) || !bounds.contains(goal))
        throw ValidationError("start and goal must lie inside the bounds");
    for (const auto& o : obstacles) {
        if (!(o.radius > 0.0)) throw ValidationError("obstacle radii must be > 0");
        if ((start - o.center).norm() <= o.radius)
            throw ValidationError("start lies inside an obstacle");
    }
}

Scenario empty_scenario() {
    Scenario s;
    s.name = "empty";
    s.start = {0.0, 0.0};
    s.goal = {2.0, 0.0};
    s.bounds = {{-0.5, -0.6}, {2.5, 0.6}};
    return s;
}

Scenario narrow_gap_scenario(double gap, double disc_radius) {
    if (!(gap > 0.0)) throw ValidationError("gap must be > 0");
    Scenario s;
    s.name = "narrow_gap";
    s.start = {0.0, 0.0};
    s.goal = {2.0, 0.0};
    s.bounds = {{-0.5, -0.55}, {2.5, 0.55}};
    double cy = disc_radius + 0.5 * gap;
    s.obstacles = {{{1.0, cy}, disc_radius}, {{1.0, -cy}, disc_radius}};
    return s;
}

Scenario corridor_scenario(double gap, double offset, double disc_radius) {
    Scenario s;
    s.name = "corridor";
    s.start = {0.0, 0.0};
    s.goal = {2.2, 0.0};
    s.bounds = {{-0.5, -0.6}, {2.7, 0.6}};
    double cy = disc_radius + 0.5 * gap;
    s.obstacles = {{{0.8, cy + offset}, disc_radius},
                   {{0.8, -cy + offset}, disc_radius},
                   {{1.6, cy - offset}, disc_radius},
                   {{1.6, -cy - offset}, disc_radius}};
    return s;
}

Scenario clutter_scenario(uint64_t seed, int n_discs) {
    Scenario s;
    s.name = "clutter";
    s.start = {0.0, 0.0};
    s.goal = {2.2, 0.0};
    s.bounds = {{-0.5, -0.7}, {2.7, 0.7}};
    Rng rng(substream(seed, 0xC1));
    const double keepout = 0.18;
    int placed = 0;
    int attempts = 0;
    while (placed < n_discs && attempts < 1000) {
        ++attempts;
        Obstacle o;
        o.radius = rng.uniform(0.10, 0.22);
        o.center = {rng.uniform(0.4, 1.9), rng.uniform(-0.5, 0.5)};
        if ((o.center - s.start).norm() < o.radius + keepout) continue;
        if ((o.center - s.goal).norm() < o.radius + keepout) continue;
        s.obstacles.push_back(o);
        ++placed;
    }
    return s;
}

Scenario builtin_scenario(const std::string& name, const nlohmann::json& params) {
    Scenario s;
    if (name == "empty") {
        s = empty_scenario();
    } else if (name == "narrow_gap") {
        s = narrow_gap_scenario(params.value("gap", 0.12), params.value("disc_radius", 0.35));
    } else if (name == "corridor") {
        s = corridor_scenario(params.value("gap", 0.16), params.value("offset", 0.10),
                              params.value("disc_radius", 0.3));
    } else if (name == "clutter") {
        s = clutter_scenario(params.value("seed", 1ull), params.value("n_discs", 8));
    } else {
        throw ValidationError("unknown builtin scenario: " + name);
    }
    if (params.contains("start")) s.start = {params["start"][0], params["start"][1]};
    if (params.contains("goal")) s.goal = {params["goal"][0], params["goal"][1]};
    if (params.contains("v_bar")) s.v_bar = params["v_bar"];
    if (params.contains("goal_tolerance")) s.goal_tolerance = params["goal_tolerance"];
    s.validate();
    return s;
}

void write_scenario(const Scenario& s, const std::filesystem::path& path) {
    nlohmann::json j = {
        {"format", "tubeplan.scenario"},
        {"version", 1},
        {"name", s.name},
        {"start", {s.start.x, s.start.y}},
        {"goal", {s.goal.x, s.goal.y}},
        {"v_bar", s.v_bar},
        {"goal_tolerance", s.goal_tolerance},
        {"bounds", {s.bounds.lo.x, s.bounds.lo.y, s.bounds.hi.x, s.bounds.hi.y}},
    };
    for (const auto& o : s.obstacles)
        j["obstacles"].push_back({{"x", o.center.x}, {"y", o.center.y}, {"radius", o.radius}});
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << j.dump(2) << "\n";
}

Scenario read_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad scenario file " + path.string() + ": " + e.what());
    }
    if (j.value("format", "") != std::string("tubeplan.scenario"))
        throw FormatError("not a scenario file: " + path.string());
    Scenario s;
    s.name = j.value("name", "unnamed");
    s.start = {j.at("start")[0], j.at("start")[1]};
    s.goal = {j.at("goal")[0], j.at("goal")[1]};
    s.v_bar = j.at("v_bar");
    s.goal_tolerance = j.at("goal_tolerance");
    auto b = j.at("bounds");
    s.bounds = {{b[0], b[1]}, {b[2], b[3]}};
    for (const auto& o : j.value("obstacles", nlohmann::json::array()))
        s.obstacles.push_back({{o.at("x"), o.at("y")}, o.at("radius")});
    s.validate();
    return s;
}

}  // namespace tubeplan::mpc
