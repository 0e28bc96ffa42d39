#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tubeplan/datagen.hpp"
#include "tubeplan/mpc.hpp"
#include "tubeplan/tube_model.hpp"

namespace tubeplan::cli {

// Experiment configs are one JSON document with named sections; each command
// reads its own section. Relative paths resolve against the config file's
// directory.
nlohmann::json load_config_file(const std::filesystem::path& path);

const nlohmann::json& require_section(const nlohmann::json& root, const std::string& name);

data::DatagenConfig parse_datagen(const nlohmann::json& section);

struct TrainSettings {
    std::filesystem::path dataset;
    tube::TubeModelConfig tube_cfg;
    tube::TrainConfig tcfg;
    double holdout_frac = 0.2;
    uint64_t split_seed = 42;
    int eval_stride = 5;
    std::string name = "model";
};
TrainSettings parse_train(const nlohmann::json& section, const std::filesystem::path& base);

struct SweepSettings {
    std::filesystem::path dataset;
    std::vector<int> h_list{1, 5, 10, 25};
    std::vector<tube::Mode> modes{tube::Mode::OneShot, tube::Mode::Recursive};
    tube::TubeModelConfig base_cfg;
    tube::TrainConfig tcfg;
    double holdout_frac = 0.2;
    uint64_t split_seed = 42;
    int eval_stride = 5;
};
SweepSettings parse_sweep(const nlohmann::json& section, const std::filesystem::path& base);

mpc::Scenario parse_scenario(const nlohmann::json& spec, const std::filesystem::path& base);
mpc::MpcConfig parse_mpc(const nlohmann::json& section);
sim::TrackerParams parse_tracker(const nlohmann::json& section, double dt);

// Tube selection: none | fixed (explicit radius or a dataset quantile) |
// dynamic (model checkpoint).
struct TubeSpec {
    mpc::TubeMode mode = mpc::TubeMode::None;
    double fixed_w = -1.0;
    std::filesystem::path quantile_dataset;
    double quantile_alpha = 0.9;
    std::filesystem::path model_dir;
};
TubeSpec parse_tube_spec(const nlohmann::json& spec, const std::filesystem::path& base);

struct RunSettings {
    nlohmann::json scenario_spec;
    TubeSpec tube;
    mpc::MpcConfig mpc_cfg;
    nlohmann::json tracker_spec;
    uint64_t seed = 1;
    int max_steps = 600;
    int first_solve_scp_iters = 30;
    int stall_window = 50;
    double stall_eps = 0.01;
    int plan_stride = 25;
};
RunSettings parse_run(const nlohmann::json& section, const std::filesystem::path& base);

struct CompareVariant {
    std::string label;
    TubeSpec tube;
    std::optional<double> v_bar;
};

struct CompareSettings {
    nlohmann::json scenario_spec;
    mpc::MpcConfig mpc_cfg;
    nlohmann::json tracker_spec;
    std::vector<uint64_t> seeds{1};
    int max_steps = 700;
    int first_solve_scp_iters = 30;
    int stall_window = 50;
    double stall_eps = 0.01;
    std::vector<CompareVariant> variants;
    std::string ratio_numerator;
    std::string ratio_denominator;
};
CompareSettings parse_compare(const nlohmann::json& section, const std::filesystem::path& base);

}  // namespace tubeplan::cli
