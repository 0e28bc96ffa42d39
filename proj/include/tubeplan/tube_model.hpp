#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "tubeplan/dataset.hpp"
#include "tubeplan/linalg.hpp"
#include "tubeplan/nn.hpp"
#include "tubeplan/tape.hpp"
#include "tubeplan/tube_features.hpp"

namespace tubeplan::tube {

struct NormStats {
    std::vector<double> mu;
    std::vector<double> sigma;
    double out_scale = 1.0;  // network output head -> tube radius [m]
};

struct TubeModel {
    nn::Mlp net;
    TubeModelConfig cfg;
    NormStats norm;
    double train_dt = 0.1;

    int feature_dim() const;
    void validate() const;
};

// w[0] is the measured current error; w[1..N] are predictions.
struct TubePrediction {
    std::vector<double> w;
};

// Tape over one prediction: leaves are the flattened plan arrays, so
// backward sweeps give Jacobians with respect to the plan.
struct PredictionGraph {
    nn::Tape tape;
    nn::Tape::Id w_node = -1;
    nn::Tape::Id z_leaf = -1;  // 2(N+1)
    nn::Tape::Id v_leaf = -1;  // 2N
};

// freeze_feedback severs the reverse sweep through predicted-tube entries
// fed back into later windows (training); prediction Jacobians keep them.
PredictionGraph build_prediction_graph(const TubeModel& model, std::span<const double> e_hist,
                                       std::span<const Vec2> z_hist, std::span<const Vec2> v_hist,
                                       std::span<const Vec2> z_plan, std::span<const Vec2> v_plan,
                                       bool freeze_feedback);

TubePrediction predict_oneshot(const TubeModel& model, const sim::HistoryBuffer& hist,
                               std::span<const Vec2> z_plan, std::span<const Vec2> v_plan);
TubePrediction predict_recursive(const TubeModel& model, const sim::HistoryBuffer& hist,
                                 std::span<const Vec2> z_plan, std::span<const Vec2> v_plan);
TubePrediction predict(const TubeModel& model, const sim::HistoryBuffer& hist,
                       std::span<const Vec2> z_plan, std::span<const Vec2> v_plan);

struct TrainConfig {
    double alpha = 0.9;         // mirrored into TubeModelConfig::alpha by callers
    double huber_delta = 1.0;
    double learning_rate = 1e-3;
    int batch_size = 256;
    int epochs = 5;
    int steps_per_epoch = 200;
    uint64_t seed = 1;
    double grad_clip_norm = 10.0;
    std::vector<int> hidden{64, 64};
    double beta = 5.0;
    int norm_sample_windows = 20000;
    int threads = 0;

    void validate() const;
};

struct TrainCurvePoint {
    int epoch = 0;
    double mean_loss = 0.0;
};

struct TrainResult {
    TubeModel model;
    std::vector<TrainCurvePoint> curve;
};

// Quantile training over uniformly sampled (record, k) windows with
// k >= H and k + N <= traj_len. Throws ValidationError on an empty or
// too-short dataset.
TrainResult train_tube_model(const data::Dataset& train, const TubeModelConfig& cfg,
                             const TrainConfig& tcfg);

// Fraction of indices with w_i >= e_i.
double correctness_rate(std::span<const double> w, std::span<const double> e);

// Mean of (w_i - e_i) over correct indices; throws NoCorrectIndicesError
// when no index is correct.
double mec(std::span<const double> w, std::span<const double> e);

struct EvalMetrics {
    double correctness = 0.0;       // pooled over all window indices
    double correctness_traj = 0.0;  // mean of per-record pooled correctness
    double mec = 0.0;
    double mec_traj = 0.0;
    std::size_t windows = 0;
    std::size_t indices = 0;
};

EvalMetrics evaluate_tube_model(const TubeModel& model, const data::Dataset& d, int k_stride,
                                int threads = 0);

struct SweepRow {
    int history = 0;
    Mode mode = Mode::Recursive;
    EvalMetrics metrics;
};

// Trains one model per (H, mode) with shared seeds and evaluates on the
// holdout split.
std::vector<SweepRow> history_sweep(const data::Dataset& train, const data::Dataset& holdout,
                                    const std::vector<int>& h_list, const std::vector<Mode>& modes,
                                    TubeModelConfig base, TrainConfig tcfg, int eval_stride);

// Checkpoint: model.json metadata plus flat little-endian float32 parameters.
void save_tube_model(const TubeModel& model, const std::filesystem::path& dir);
TubeModel load_tube_model(const std::filesystem::path& dir);

}  // namespace tubeplan::tube
