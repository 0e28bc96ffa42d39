#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "tubeplan/closed_loop.hpp"
#include "tubeplan/config.hpp"
#include "tubeplan/table.hpp"
#include "tubeplan/tube_model.hpp"

namespace tubeplan::cli {

// Exit codes shared by the CLI: 0 success, 2 validation error, 3 IO error,
// 4 solver-failure-dominated run.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitSolver = 4;

struct DatagenOutput {
    std::filesystem::path dataset_dir;
    std::size_t records = 0;
    std::size_t failures = 0;
    double q50 = 0.0, q90 = 0.0;
    double substeps_per_sec = 0.0;
};
DatagenOutput cmd_datagen(const nlohmann::json& root, const std::filesystem::path& base,
                          const std::filesystem::path& out_dir,
                          std::optional<uint64_t> seed_override);

struct TrainOutput {
    std::filesystem::path model_dir;
    tube::EvalMetrics holdout;
    std::vector<tube::TrainCurvePoint> curve;
};
TrainOutput cmd_train(const nlohmann::json& root, const std::filesystem::path& base,
                      const std::filesystem::path& out_dir,
                      std::optional<uint64_t> seed_override);

struct SweepOutput {
    Table table;
    std::filesystem::path table_path;
};
SweepOutput cmd_sweep(const nlohmann::json& root, const std::filesystem::path& base,
                      const std::filesystem::path& out_dir,
                      std::optional<uint64_t> seed_override);

struct RunOutput {
    mpc::RunSummary summary;
    std::filesystem::path dir;
    int exit_code = kExitOk;
};
RunOutput cmd_run(const nlohmann::json& root, const std::filesystem::path& base,
                  const std::filesystem::path& out_dir, std::optional<uint64_t> seed_override);

struct CompareOutput {
    Table table;
    std::filesystem::path table_path;
    bool ratio_valid = false;
    double completion_ratio = 0.0;  // numerator steps / denominator steps
};
CompareOutput cmd_compare(const nlohmann::json& root, const std::filesystem::path& base,
                          const std::filesystem::path& out_dir,
                          std::optional<uint64_t> seed_override);

// Resolves a TubeSpec into an MpcConfig tube setting; loads the checkpoint
// or dataset quantile as needed. `storage` keeps the loaded model alive.
mpc::TubeSetting resolve_tube(const TubeSpec& spec, std::optional<tube::TubeModel>& storage);

}  // namespace tubeplan::cli
