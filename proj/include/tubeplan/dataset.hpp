#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tubeplan/vec2.hpp"

namespace tubeplan::data {

// One planner trajectory plus the tracked projection. Arrays are float32,
// matching the on-disk format, so write/read round-trips bitwise. The z
// recursion is evaluated in float as well, making the single-integrator
// identity exact in stored precision.
struct RolloutRecord {
    std::vector<float> z;     // (traj_len + 1) * 2
    std::vector<float> v;     // traj_len * 2
    std::vector<float> proj;  // (traj_len + 1) * 2
    uint32_t env_id = 0;
    uint64_t seed = 0;

    Vec2 z_at(int k) const { return {z[2 * k], z[2 * k + 1]}; }
    Vec2 v_at(int k) const { return {v[2 * k], v[2 * k + 1]}; }
    Vec2 proj_at(int k) const { return {proj[2 * k], proj[2 * k + 1]}; }
    double error_at(int k) const { return (z_at(k) - proj_at(k)).norm(); }
};

struct DatasetMeta {
    double dt = 0.1;
    double v_bar = 0.2;
    int traj_len = 200;  // number of planner inputs per record
    nlohmann::json configs;  // generator configs, error quantiles, ...

    bool operator==(const DatasetMeta& o) const {
        return dt == o.dt && v_bar == o.v_bar && traj_len == o.traj_len && configs == o.configs;
    }
};

struct Dataset {
    DatasetMeta meta;
    std::vector<RolloutRecord> records;
};

// Directory layout: meta.json plus flat little-endian float32 arrays
// (z.f32, v.f32, proj.f32) and a per-record index table (index.bin).
void write_dataset(const Dataset& d, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

// Record-level partition: (train, holdout). Deterministic in `seed`,
// disjoint and exhaustive; both sides non-empty for 0 < frac < 1.
std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double holdout_frac, uint64_t seed);

std::vector<double> record_errors(const RolloutRecord& r);
std::vector<double> pooled_errors(const Dataset& d);

// Empirical quantile: smallest sample with at least an alpha fraction of the
// data at or below it.
double empirical_quantile(std::vector<double> values, double alpha);
double error_quantile(const Dataset& d, double alpha);

bool datasets_equal(const Dataset& a, const Dataset& b);
uint64_t dataset_hash(const std::filesystem::path& dir);

}  // namespace tubeplan::data
