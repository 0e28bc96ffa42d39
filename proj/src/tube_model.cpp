#include "tubeplan/tube_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "json.hpp"
#include "tubeplan/binio.hpp"
#include "tubeplan/errors.hpp"
#include "tubeplan/parallel.hpp"
#include "tubeplan/rng.hpp"

namespace tubeplan::tube {

namespace {

constexpr uint32_t kModelVersion = 1;
constexpr char kMagicParams[8] = {'T', 'P', 'M', 'O', 'D', 'E', 'L', 'P'};

bool is_const_source(FeatureRef::Src src) {
    switch (src) {
        case FeatureRef::Src::EHist:
        case FeatureRef::Src::ZHist:
        case FeatureRef::Src::VHist:
            return true;
        case FeatureRef::Src::WPred:
        case FeatureRef::Src::ZPlan:
        case FeatureRef::Src::VPlan:
        case FeatureRef::Src::StepIndex:
            return false;
    }
    return false;
}

// Node ids follow the fixed construction order in GraphBuilder::build:
// leaves 0 (z) and 1 (v); per recursive step m a (gather, mlp, stop) triple;
// the gathered prediction vector last.
int recursive_gather_id(int m) { return 2 + 3 * (m - 1); }
int recursive_mlp_id(int m) { return 3 + 3 * (m - 1); }
int recursive_stop_id(int m) { return 4 + 3 * (m - 1); }

// Builds tapes for one model; the layout, term structure, and node ids are
// identical for every window, so they are assembled once and reused.
class GraphBuilder {
public:
    explicit GraphBuilder(const TubeModel& model) : model_(model) {
        model.validate();
        int n = model.cfg.horizon;
        w_spec_.constants.assign(static_cast<std::size_t>(n), 0.0);
        w_spec_.term_offsets.push_back(0);
        if (model.cfg.mode == Mode::OneShot) {
            steps_.push_back(make_step(oneshot_layout(model.cfg)));
            for (int m = 1; m <= n; ++m) {
                w_spec_.terms.push_back({3, m - 1, model.norm.out_scale});
                w_spec_.term_offsets.push_back(static_cast<int>(w_spec_.terms.size()));
            }
        } else {
            for (int m = 1; m <= n; ++m)
                steps_.push_back(make_step(recursive_layout(model.cfg, m)));
            for (int m = 1; m <= n; ++m) {
                w_spec_.terms.push_back({recursive_mlp_id(m), 0, model.norm.out_scale});
                w_spec_.term_offsets.push_back(static_cast<int>(w_spec_.terms.size()));
            }
        }
    }

    PredictionGraph build(std::span<const double> e_hist, std::span<const Vec2> z_hist,
                          std::span<const Vec2> v_hist, std::span<const Vec2> z_plan,
                          std::span<const Vec2> v_plan, bool freeze_feedback) const {
        const auto& cfg = model_.cfg;
        int h = cfg.history, n = cfg.horizon;
        if (static_cast<int>(e_hist.size()) != h || static_cast<int>(z_hist.size()) != h ||
            static_cast<int>(v_hist.size()) != h)
            throw ShapeError("history length does not match tube model config");
        if (static_cast<int>(z_plan.size()) != n + 1 || static_cast<int>(v_plan.size()) != n)
            throw ShapeError("plan lengths do not match tube model config");

        PredictionGraph g;
        std::vector<double> zflat(2 * (static_cast<std::size_t>(n) + 1));
        for (int j = 0; j <= n; ++j) {
            zflat[2 * j] = z_plan[static_cast<std::size_t>(j)].x;
            zflat[2 * j + 1] = z_plan[static_cast<std::size_t>(j)].y;
        }
        std::vector<double> vflat(2 * static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) {
            vflat[2 * j] = v_plan[static_cast<std::size_t>(j)].x;
            vflat[2 * j + 1] = v_plan[static_cast<std::size_t>(j)].y;
        }
        g.z_leaf = g.tape.leaf(std::move(zflat));
        g.v_leaf = g.tape.leaf(std::move(vflat));

        double anchor = e_hist.back();
        WindowView view{e_hist, z_hist, v_hist, z_plan, v_plan, {&anchor, 1}, cfg.canonicalize};

        for (const auto& step : steps_) {
            nn::Tape::GatherSpec spec;
            spec.constants = step.base_constants;
            spec.terms = freeze_feedback ? step.terms_frozen : step.terms_live;
            spec.term_offsets = step.term_offsets;
            for (const auto& [idx, ref] : step.window_consts)
                spec.constants[static_cast<std::size_t>(idx)] +=
                    eval_feature(ref, view, n) * step.inv_sigma[static_cast<std::size_t>(idx)];
            auto gather = g.tape.gather(std::move(spec));
            auto out = g.tape.apply_mlp(&model_.net, gather);
            g.tape.stop_gradient(out);
        }

        nn::Tape::GatherSpec w_spec = w_spec_;
        g.w_node = g.tape.gather(std::move(w_spec));
        return g;
    }

private:
    struct Step {
        std::vector<double> base_constants;
        std::vector<double> inv_sigma;
        std::vector<nn::Tape::Term> terms_live;
        std::vector<nn::Tape::Term> terms_frozen;
        std::vector<int> term_offsets;
        std::vector<std::pair<int, FeatureRef>> window_consts;
    };

    Step make_step(std::vector<FeatureRef> layout) const {
        const auto& norm = model_.norm;
        const auto& cfg = model_.cfg;
        if (layout.size() != norm.mu.size())
            throw ShapeError("normalization stats do not match feature layout");
        Step step;
        step.term_offsets.push_back(0);
        for (std::size_t i = 0; i < layout.size(); ++i) {
            const FeatureRef& ref = layout[i];
            double inv_sigma = 1.0 / norm.sigma[i];
            step.inv_sigma.push_back(inv_sigma);
            double base = -norm.mu[i] * inv_sigma;
            if (ref.src == FeatureRef::Src::StepIndex) {
                base += (static_cast<double>(ref.step - 1) / cfg.horizon) * inv_sigma;
            } else if (is_const_source(ref.src) ||
                       (ref.src == FeatureRef::Src::WPred && ref.index == 0)) {
                step.window_consts.emplace_back(static_cast<int>(i), ref);
            } else if (ref.src == FeatureRef::Src::WPred) {
                step.terms_live.push_back({recursive_mlp_id(ref.index), 0,
                                           norm.out_scale * inv_sigma});
                step.terms_frozen.push_back({recursive_stop_id(ref.index), 0,
                                             norm.out_scale * inv_sigma});
            } else if (ref.src == FeatureRef::Src::ZPlan) {
                if (!(cfg.canonicalize && ref.index == 0)) {
                    step.terms_live.push_back({0, 2 * ref.index + ref.comp, inv_sigma});
                    step.terms_frozen.push_back(step.terms_live.back());
                    if (cfg.canonicalize) {
                        step.terms_live.push_back({0, ref.comp, -inv_sigma});
                        step.terms_frozen.push_back(step.terms_live.back());
                    }
                }
            } else {  // VPlan
                step.terms_live.push_back({1, 2 * ref.index + ref.comp, inv_sigma});
                step.terms_frozen.push_back(step.terms_live.back());
            }
            step.base_constants.push_back(base);
            step.term_offsets.push_back(static_cast<int>(step.terms_live.size()));
        }
        return step;
    }

    const TubeModel& model_;
    std::vector<Step> steps_;
    nn::Tape::GatherSpec w_spec_;
};

}  // namespace

int TubeModel::feature_dim() const {
    return cfg.mode == Mode::OneShot ? oneshot_feature_dim(cfg) : recursive_feature_dim(cfg);
}

void TubeModel::validate() const {
    cfg.validate();
    if (net.input_dim() != feature_dim())
        throw ShapeError("net input dim does not match feature layout");
    int want_out = cfg.mode == Mode::OneShot ? cfg.horizon : 1;
    if (net.output_dim() != want_out) throw ShapeError("net output dim does not match config");
    if (static_cast<int>(norm.mu.size()) != feature_dim() || norm.mu.size() != norm.sigma.size())
        throw ShapeError("normalization stats do not match feature layout");
    if (!(norm.out_scale > 0.0)) throw ValidationError("out_scale must be > 0");
}

PredictionGraph build_prediction_graph(const TubeModel& model, std::span<const double> e_hist,
                                       std::span<const Vec2> z_hist, std::span<const Vec2> v_hist,
                                       std::span<const Vec2> z_plan, std::span<const Vec2> v_plan,
                                       bool freeze_feedback) {
    GraphBuilder builder(model);
    return builder.build(e_hist, z_hist, v_hist, z_plan, v_plan, freeze_feedback);
}

namespace {

TubePrediction prediction_from_graph(const PredictionGraph& g, double anchor) {
    TubePrediction p;
    const auto& w = g.tape.value(g.w_node);
    p.w.reserve(w.size() + 1);
    p.w.push_back(anchor);
    p.w.insert(p.w.end(), w.begin(), w.end());
    return p;
}

TubePrediction predict_impl(const TubeModel& model, const sim::HistoryBuffer& hist,
                            std::span<const Vec2> z_plan, std::span<const Vec2> v_plan) {
    if (hist.size() != static_cast<std::size_t>(model.cfg.history))
        throw ShapeError("history buffer length does not match tube model");
    auto g = build_prediction_graph(model, hist.e_hist(), hist.z_hist(), hist.v_hist(), z_plan,
                                    v_plan, false);
    return prediction_from_graph(g, hist.e_hist().back());
}

}  // namespace

TubePrediction predict_oneshot(const TubeModel& model, const sim::HistoryBuffer& hist,
                               std::span<const Vec2> z_plan, std::span<const Vec2> v_plan) {
    if (model.cfg.mode != Mode::OneShot)
        throw ValidationError("predict_oneshot called on a non-one-shot model");
    return predict_impl(model, hist, z_plan, v_plan);
}

TubePrediction predict_recursive(const TubeModel& model, const sim::HistoryBuffer& hist,
                                 std::span<const Vec2> z_plan, std::span<const Vec2> v_plan) {
    if (model.cfg.mode != Mode::Recursive)
        throw ValidationError("predict_recursive called on a non-recursive model");
    return predict_impl(model, hist, z_plan, v_plan);
}

TubePrediction predict(const TubeModel& model, const sim::HistoryBuffer& hist,
                       std::span<const Vec2> z_plan, std::span<const Vec2> v_plan) {
    return predict_impl(model, hist, z_plan, v_plan);
}

void TrainConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must be in (0, 1)");
    if (!(huber_delta > 0.0)) throw ValidationError("huber_delta must be > 0");
    if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
    if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
    if (epochs < 1) throw ValidationError("epochs must be >= 1");
    if (steps_per_epoch < 1) throw ValidationError("steps_per_epoch must be >= 1");
    if (!(grad_clip_norm > 0.0)) throw ValidationError("grad_clip_norm must be > 0");
    if (hidden.empty()) throw ValidationError("need at least one hidden layer");
    if (!(beta > 0.0)) throw ValidationError("beta must be > 0");
}

namespace {

struct Window {
    std::vector<double> e_hist;
    std::vector<Vec2> z_hist, v_hist, z_plan, v_plan;
    std::vector<double> targets;
};

void extract_window(const data::RolloutRecord& r, int k, int h, int n, Window& w) {
    w.e_hist.resize(static_cast<std::size_t>(h));
    w.z_hist.resize(static_cast<std::size_t>(h));
    w.v_hist.resize(static_cast<std::size_t>(h));
    w.z_plan.resize(static_cast<std::size_t>(n) + 1);
    w.v_plan.resize(static_cast<std::size_t>(n));
    w.targets.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < h; ++i) {
        int t = k - h + 1 + i;
        w.e_hist[static_cast<std::size_t>(i)] = r.error_at(t);
        w.z_hist[static_cast<std::size_t>(i)] = r.z_at(t);
        w.v_hist[static_cast<std::size_t>(i)] = r.v_at(k - h + i);
    }
    for (int j = 0; j <= n; ++j) w.z_plan[static_cast<std::size_t>(j)] = r.z_at(k + j);
    for (int j = 0; j < n; ++j) {
        w.v_plan[static_cast<std::size_t>(j)] = r.v_at(k + j);
        w.targets[static_cast<std::size_t>(j)] = r.error_at(k + j + 1);
    }
}

int windows_per_record(int traj_len, const TubeModelConfig& cfg) {
    return traj_len - cfg.horizon - cfg.history + 1;  // k in [H, traj_len - N]
}

NormStats compute_norm_stats(const data::Dataset& d, const TubeModelConfig& cfg, double beta,
                             int target_windows) {
    int h = cfg.history, n = cfg.horizon;
    int per_rec = windows_per_record(d.meta.traj_len, cfg);
    std::size_t total = d.records.size() * static_cast<std::size_t>(per_rec);

    bool oneshot = cfg.mode == Mode::OneShot;
    int evals_per_window = oneshot ? 1 : n;
    std::size_t want =
        std::max<std::size_t>(200, static_cast<std::size_t>(target_windows) /
                                       static_cast<std::size_t>(evals_per_window));
    std::size_t stride = std::max<std::size_t>(1, total / want);

    std::vector<std::vector<FeatureRef>> layouts;
    if (oneshot) {
        layouts.push_back(oneshot_layout(cfg));
    } else {
        for (int m = 1; m <= n; ++m) layouts.push_back(recursive_layout(cfg, m));
    }
    std::size_t dim = layouts.front().size();

    std::vector<double> sum(dim, 0.0), sum_sq(dim, 0.0);
    std::vector<double> errors;
    std::size_t count = 0;
    Window win;
    std::vector<double> w_truth;
    for (std::size_t idx = 0; idx < total; idx += stride) {
        int rec = static_cast<int>(idx / static_cast<std::size_t>(per_rec));
        int k = h + static_cast<int>(idx % static_cast<std::size_t>(per_rec));
        extract_window(d.records[static_cast<std::size_t>(rec)], k, h, n, win);
        w_truth.assign(1, win.e_hist.back());
        w_truth.insert(w_truth.end(), win.targets.begin(), win.targets.end());
        WindowView view{win.e_hist, win.z_hist, win.v_hist, win.z_plan, win.v_plan, w_truth,
                        cfg.canonicalize};
        for (const auto& layout : layouts) {
            for (std::size_t i = 0; i < dim; ++i) {
                double f = eval_feature(layout[i], view, n);
                sum[i] += f;
                sum_sq[i] += f * f;
            }
            ++count;
        }
        errors.insert(errors.end(), win.targets.begin(), win.targets.end());
    }

    NormStats stats;
    stats.mu.resize(dim);
    stats.sigma.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        double mu = sum[i] / static_cast<double>(count);
        double var = std::max(0.0, sum_sq[i] / static_cast<double>(count) - mu * mu);
        stats.mu[i] = mu;
        stats.sigma[i] = std::max(std::sqrt(var), 1e-8);
    }
    // Output head scale: the initial constant prediction softplus(0) lands
    // near the marginal alpha-quantile of the errors.
    double q = data::empirical_quantile(std::move(errors), cfg.alpha);
    stats.out_scale = std::max(q, 1e-6) / nn::softplus(0.0, beta);
    return stats;
}

}  // namespace

TrainResult train_tube_model(const data::Dataset& train, const TubeModelConfig& cfg,
                             const TrainConfig& tcfg) {
    cfg.validate();
    tcfg.validate();
    if (train.records.empty()) throw ValidationError("training dataset is empty");
    int per_rec = windows_per_record(train.meta.traj_len, cfg);
    if (per_rec < 1)
        throw ValidationError("records too short for history " + std::to_string(cfg.history) +
                              " + horizon " + std::to_string(cfg.horizon));

    TubeModelConfig model_cfg = cfg;
    model_cfg.alpha = tcfg.alpha;

    TrainResult result;
    result.model.cfg = model_cfg;
    result.model.train_dt = train.meta.dt;
    result.model.norm =
        compute_norm_stats(train, model_cfg, tcfg.beta, tcfg.norm_sample_windows);

    std::vector<int> dims;
    dims.push_back(model_cfg.mode == Mode::OneShot ? oneshot_feature_dim(model_cfg)
                                                   : recursive_feature_dim(model_cfg));
    dims.insert(dims.end(), tcfg.hidden.begin(), tcfg.hidden.end());
    dims.push_back(model_cfg.mode == Mode::OneShot ? model_cfg.horizon : 1);
    result.model.net = nn::Mlp::create(dims, tcfg.beta, substream(tcfg.seed, 0xF0));

    TubeModel& model = result.model;
    GraphBuilder builder(model);

    std::vector<double> params = model.net.flatten_params();
    nn::AdamState adam;
    nn::AdamConfig adam_cfg;
    adam_cfg.lr = tcfg.learning_rate;

    std::size_t total = train.records.size() * static_cast<std::size_t>(per_rec);
    Rng sampler(substream(tcfg.seed, 0xBA));

    const int groups = 16;
    std::vector<nn::MlpGrads> group_grads;
    for (int g = 0; g < groups; ++g) group_grads.push_back(nn::MlpGrads::zeros_like(model.net));
    std::vector<double> group_loss(groups, 0.0);
    std::vector<std::pair<int, int>> batch(static_cast<std::size_t>(tcfg.batch_size));

    for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (int step = 0; step < tcfg.steps_per_epoch; ++step) {
            for (auto& [rec, k] : batch) {
                std::size_t idx = static_cast<std::size_t>(sampler.uniform() *
                                                           static_cast<double>(total));
                if (idx >= total) idx = total - 1;
                rec = static_cast<int>(idx / static_cast<std::size_t>(per_rec));
                k = cfg.history + static_cast<int>(idx % static_cast<std::size_t>(per_rec));
            }
            for (int g = 0; g < groups; ++g) {
                group_grads[static_cast<std::size_t>(g)].scale(0.0);
                group_loss[static_cast<std::size_t>(g)] = 0.0;
            }
            for_each_group(batch.size(), groups, tcfg.threads,
                           [&](int g, std::size_t b0, std::size_t b1) {
                               Window win;
                               for (std::size_t b = b0; b < b1; ++b) {
                                   auto [rec, k] = batch[b];
                                   extract_window(train.records[static_cast<std::size_t>(rec)], k,
                                                  cfg.history, cfg.horizon, win);
                                   auto graph = builder.build(win.e_hist, win.z_hist, win.v_hist,
                                                              win.z_plan, win.v_plan, true);
                                   auto loss = graph.tape.quantile_loss_node(
                                       graph.w_node, win.targets, tcfg.alpha, tcfg.huber_delta);
                                   double seed = 1.0;
                                   graph.tape.backward(loss, {&seed, 1}, true);
                                   group_grads[static_cast<std::size_t>(g)].add_scaled(
                                       graph.tape.grads_for(&model.net), 1.0);
                                   group_loss[static_cast<std::size_t>(g)] +=
                                       graph.tape.value(loss)[0];
                               }
                           });
            nn::MlpGrads total_grads = nn::MlpGrads::zeros_like(model.net);
            double batch_loss = 0.0;
            for (int g = 0; g < groups; ++g) {
                total_grads.add_scaled(group_grads[static_cast<std::size_t>(g)], 1.0);
                batch_loss += group_loss[static_cast<std::size_t>(g)];
            }
            total_grads.scale(1.0 / tcfg.batch_size);
            double norm = std::sqrt(total_grads.sq_norm());
            if (norm > tcfg.grad_clip_norm) total_grads.scale(tcfg.grad_clip_norm / norm);
            auto flat = total_grads.flatten();
            nn::adam_step(params, flat, adam, adam_cfg);
            model.net.set_params(params);
            epoch_loss += batch_loss / tcfg.batch_size;
        }
        result.curve.push_back({epoch, epoch_loss / tcfg.steps_per_epoch});
    }
    return result;
}

double correctness_rate(std::span<const double> w, std::span<const double> e) {
    if (w.size() != e.size()) throw ShapeError("correctness_rate length mismatch");
    if (w.empty()) throw ValidationError("correctness_rate of empty vectors");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < w.size(); ++i)
        if (w[i] >= e[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(w.size());
}

double mec(std::span<const double> w, std::span<const double> e) {
    if (w.size() != e.size()) throw ShapeError("mec length mismatch");
    double slack = 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < w.size(); ++i)
        if (w[i] >= e[i]) {
            slack += w[i] - e[i];
            ++correct;
        }
    if (correct == 0) throw NoCorrectIndicesError("mec undefined: no correct indices");
    return slack / static_cast<double>(correct);
}

EvalMetrics evaluate_tube_model(const TubeModel& model, const data::Dataset& d, int k_stride,
                                int threads) {
    model.validate();
    if (k_stride < 1) throw ValidationError("k_stride must be >= 1");
    int per_rec = windows_per_record(d.meta.traj_len, model.cfg);
    if (per_rec < 1 || d.records.empty())
        throw ValidationError("dataset too short to evaluate");

    GraphBuilder builder(model);
    int h = model.cfg.history, n = model.cfg.horizon;
    std::size_t n_rec = d.records.size();

    std::vector<std::size_t> rec_correct(n_rec, 0), rec_indices(n_rec, 0), rec_windows(n_rec, 0);
    std::vector<double> rec_slack(n_rec, 0.0);

    int groups = std::max(1, std::min<int>(static_cast<int>(n_rec), 4 * resolve_threads(threads)));
    for_each_group(n_rec, groups, threads, [&](int, std::size_t r0, std::size_t r1) {
        Window win;
        for (std::size_t r = r0; r < r1; ++r) {
            for (int k = h; k + n <= d.meta.traj_len; k += k_stride) {
                extract_window(d.records[r], k, h, n, win);
                auto graph = builder.build(win.e_hist, win.z_hist, win.v_hist, win.z_plan,
                                           win.v_plan, false);
                const auto& w = graph.tape.value(graph.w_node);
                for (int j = 0; j < n; ++j) {
                    double slack = w[static_cast<std::size_t>(j)] -
                                   win.targets[static_cast<std::size_t>(j)];
                    ++rec_indices[r];
                    if (slack >= 0.0) {
                        ++rec_correct[r];
                        rec_slack[r] += slack;
                    }
                }
                ++rec_windows[r];
            }
        }
    });

    EvalMetrics m;
    std::size_t correct = 0;
    double slack = 0.0;
    double traj_corr_sum = 0.0, traj_mec_sum = 0.0;
    std::size_t traj_corr_n = 0, traj_mec_n = 0;
    for (std::size_t r = 0; r < n_rec; ++r) {
        m.windows += rec_windows[r];
        m.indices += rec_indices[r];
        correct += rec_correct[r];
        slack += rec_slack[r];
        if (rec_indices[r] > 0) {
            traj_corr_sum += static_cast<double>(rec_correct[r]) /
                             static_cast<double>(rec_indices[r]);
            ++traj_corr_n;
        }
        if (rec_correct[r] > 0) {
            traj_mec_sum += rec_slack[r] / static_cast<double>(rec_correct[r]);
            ++traj_mec_n;
        }
    }
    m.correctness = m.indices ? static_cast<double>(correct) / static_cast<double>(m.indices) : 0.0;
    m.mec = correct ? slack / static_cast<double>(correct)
                    : std::numeric_limits<double>::quiet_NaN();
    m.correctness_traj = traj_corr_n ? traj_corr_sum / static_cast<double>(traj_corr_n) : 0.0;
    m.mec_traj = traj_mec_n ? traj_mec_sum / static_cast<double>(traj_mec_n)
                            : std::numeric_limits<double>::quiet_NaN();
    return m;
}

std::vector<SweepRow> history_sweep(const data::Dataset& train, const data::Dataset& holdout,
                                    const std::vector<int>& h_list, const std::vector<Mode>& modes,
                                    TubeModelConfig base, TrainConfig tcfg, int eval_stride) {
    std::vector<SweepRow> rows;
    for (Mode mode : modes) {
        for (int h : h_list) {
            TubeModelConfig cfg = base;
            cfg.history = h;
            cfg.mode = mode;
            auto trained = train_tube_model(train, cfg, tcfg);
            SweepRow row;
            row.history = h;
            row.mode = mode;
            row.metrics = evaluate_tube_model(trained.model, holdout, eval_stride, tcfg.threads);
            rows.push_back(row);
        }
    }
    return rows;
}

void save_tube_model(const TubeModel& model, const std::filesystem::path& dir) {
    model.validate();
    std::filesystem::create_directories(dir);
    std::vector<int> dims;
    dims.push_back(model.net.input_dim());
    for (int l = 0; l < model.net.layer_count(); ++l) dims.push_back(model.net.weights[l].rows);

    nlohmann::json meta = {
        {"format", "tubeplan.model"},
        {"version", kModelVersion},
        {"mode", mode_name(model.cfg.mode)},
        {"history", model.cfg.history},
        {"horizon", model.cfg.horizon},
        {"alpha", model.cfg.alpha},
        {"canonicalize", model.cfg.canonicalize},
        {"beta", model.net.beta},
        {"layers", dims},
        {"mu", model.norm.mu},
        {"sigma", model.norm.sigma},
        {"out_scale", model.norm.out_scale},
        {"train_dt", model.train_dt},
    };
    std::ofstream out(dir / "model.json");
    if (!out) throw IoError("cannot open for writing: " + (dir / "model.json").string());
    out << meta.dump(2) << "\n";

    auto flat = model.net.flatten_params();
    std::vector<float> flat_f(flat.size());
    for (std::size_t i = 0; i < flat.size(); ++i) flat_f[i] = static_cast<float>(flat[i]);
    write_f32_file(dir / "params.f32", kMagicParams, kModelVersion, flat_f);
}

TubeModel load_tube_model(const std::filesystem::path& dir) {
    std::ifstream in(dir / "model.json");
    if (!in) throw IoError("cannot open for reading: " + (dir / "model.json").string());
    nlohmann::json meta;
    try {
        in >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad model.json: ") + e.what());
    }
    if (meta.value("format", "") != std::string("tubeplan.model"))
        throw FormatError("not a tube model checkpoint: " + dir.string());
    if (meta.value("version", 0u) != kModelVersion)
        throw VersionError("unsupported model version");

    TubeModel model;
    model.cfg.mode = mode_from_name(meta.at("mode").get<std::string>());
    model.cfg.history = meta.at("history").get<int>();
    model.cfg.horizon = meta.at("horizon").get<int>();
    model.cfg.alpha = meta.at("alpha").get<double>();
    model.cfg.canonicalize = meta.at("canonicalize").get<bool>();
    model.norm.mu = meta.at("mu").get<std::vector<double>>();
    model.norm.sigma = meta.at("sigma").get<std::vector<double>>();
    model.norm.out_scale = meta.at("out_scale").get<double>();
    model.train_dt = meta.at("train_dt").get<double>();

    auto dims = meta.at("layers").get<std::vector<int>>();
    model.net = nn::Mlp::create(dims, meta.at("beta").get<double>(), 0);
    auto flat_f = read_f32_file(dir / "params.f32", kMagicParams, kModelVersion);
    if (flat_f.size() != model.net.param_count())
        throw ShapeError("parameter payload does not match recorded layer sizes");
    std::vector<double> flat(flat_f.begin(), flat_f.end());
    model.net.set_params(flat);
    model.validate();
    return model;
}

}  // namespace tubeplan::tube
