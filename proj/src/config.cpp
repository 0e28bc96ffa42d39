#include "tubeplan/config.hpp"

#include <fstream>

#include "tubeplan/errors.hpp"
#include "tubeplan/scenario.hpp"

namespace tubeplan::cli {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

data::Range parse_range(const nlohmann::json& j, data::Range fallback) {
    if (j.is_null()) return fallback;
    if (!j.is_array() || j.size() != 2) throw ValidationError("range must be [lo, hi]");
    return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

nlohmann::json load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad JSON in " + path.string() + ": " + e.what());
    }
    return j;
}

const nlohmann::json& require_section(const nlohmann::json& root, const std::string& name) {
    auto it = root.find(name);
    if (it == root.end())
        throw ValidationError("config is missing the '" + name + "' section");
    return *it;
}

data::DatagenConfig parse_datagen(const nlohmann::json& s) {
    data::DatagenConfig cfg;
    cfg.n_envs = s.value("n_envs", cfg.n_envs);
    cfg.refs_per_env = s.value("refs_per_env", cfg.refs_per_env);
    cfg.dt = s.value("dt", cfg.dt);
    cfg.master_seed = s.value("master_seed", cfg.master_seed);
    cfg.workers = s.value("workers", cfg.workers);

    const auto ref = s.value("reference", nlohmann::json::object());
    cfg.ref.traj_len = ref.value("traj_len", cfg.ref.traj_len);
    cfg.ref.v_bar = ref.value("v_bar", cfg.ref.v_bar);
    cfg.ref.seg_min = ref.value("seg_min", cfg.ref.seg_min);
    cfg.ref.seg_max = ref.value("seg_max", cfg.ref.seg_max);
    cfg.ref.hold_prob = ref.value("hold_prob", cfg.ref.hold_prob);
    cfg.ref.turn_prob = ref.value("turn_prob", cfg.ref.turn_prob);
    cfg.ref.stop_prob = ref.value("stop_prob", cfg.ref.stop_prob);
    cfg.ref.full_speed_frac = ref.value("full_speed_frac", cfg.ref.full_speed_frac);
    cfg.ref.smooth_window = ref.value("smooth_window", cfg.ref.smooth_window);

    const auto rnd = s.value("randomization", nlohmann::json::object());
    cfg.rand.nominal.dt_sim = cfg.dt / cfg.rand.nominal.substeps;
    cfg.rand.tau = parse_range(rnd.value("tau", nlohmann::json()), cfg.rand.tau);
    cfg.rand.kp = parse_range(rnd.value("kp", nlohmann::json()), cfg.rand.kp);
    cfg.rand.kd = parse_range(rnd.value("kd", nlohmann::json()), cfg.rand.kd);
    cfg.rand.kf = parse_range(rnd.value("kf", nlohmann::json()), cfg.rand.kf);
    cfg.rand.cp = parse_range(rnd.value("cp", nlohmann::json()), cfg.rand.cp);
    cfg.rand.cv = parse_range(rnd.value("cv", nlohmann::json()), cfg.rand.cv);
    cfg.rand.cf = parse_range(rnd.value("cf", nlohmann::json()), cfg.rand.cf);
    cfg.rand.ca = parse_range(rnd.value("ca", nlohmann::json()), cfg.rand.ca);
    cfg.rand.sigma = parse_range(rnd.value("sigma", nlohmann::json()), cfg.rand.sigma);
    cfg.rand.bias_max = rnd.value("bias_max", cfg.rand.bias_max);

    const auto init = s.value("initial", nlohmann::json::object());
    if (init.contains("z0_box")) {
        auto b = init["z0_box"];
        cfg.init.z0_box = {{b[0], b[1]}, {b[2], b[3]}};
    }
    cfg.init.e0_max = init.value("e0_max", cfg.init.e0_max);
    cfg.validate();
    return cfg;
}

namespace {

void parse_train_common(const nlohmann::json& s, tube::TubeModelConfig& tube_cfg,
                        tube::TrainConfig& tcfg) {
    tube_cfg.history = s.value("history", tube_cfg.history);
    tube_cfg.horizon = s.value("horizon", tube_cfg.horizon);
    tube_cfg.alpha = s.value("alpha", tube_cfg.alpha);
    tube_cfg.canonicalize = s.value("canonicalize", tube_cfg.canonicalize);
    if (s.contains("mode")) tube_cfg.mode = tube::mode_from_name(s["mode"].get<std::string>());

    tcfg.alpha = tube_cfg.alpha;
    tcfg.huber_delta = s.value("huber_delta", tcfg.huber_delta);
    tcfg.learning_rate = s.value("learning_rate", tcfg.learning_rate);
    tcfg.batch_size = s.value("batch_size", tcfg.batch_size);
    tcfg.epochs = s.value("epochs", tcfg.epochs);
    tcfg.steps_per_epoch = s.value("steps_per_epoch", tcfg.steps_per_epoch);
    tcfg.seed = s.value("seed", tcfg.seed);
    tcfg.grad_clip_norm = s.value("grad_clip_norm", tcfg.grad_clip_norm);
    if (s.contains("hidden")) tcfg.hidden = s["hidden"].get<std::vector<int>>();
    tcfg.beta = s.value("beta", tcfg.beta);
    tcfg.norm_sample_windows = s.value("norm_sample_windows", tcfg.norm_sample_windows);
    tcfg.threads = s.value("threads", tcfg.threads);
}

}  // namespace

TrainSettings parse_train(const nlohmann::json& s, const std::filesystem::path& base) {
    TrainSettings t;
    if (!s.contains("dataset")) throw ValidationError("train section needs 'dataset'");
    t.dataset = resolve(base, s["dataset"].get<std::string>());
    parse_train_common(s, t.tube_cfg, t.tcfg);
    t.holdout_frac = s.value("holdout_frac", t.holdout_frac);
    t.split_seed = s.value("split_seed", t.split_seed);
    t.eval_stride = s.value("eval_stride", t.eval_stride);
    t.name = s.value("name", t.name);
    return t;
}

SweepSettings parse_sweep(const nlohmann::json& s, const std::filesystem::path& base) {
    SweepSettings sw;
    if (!s.contains("dataset")) throw ValidationError("sweep section needs 'dataset'");
    sw.dataset = resolve(base, s["dataset"].get<std::string>());
    if (s.contains("h_list")) sw.h_list = s["h_list"].get<std::vector<int>>();
    if (s.contains("modes")) {
        sw.modes.clear();
        for (const auto& m : s["modes"]) sw.modes.push_back(tube::mode_from_name(m));
    }
    parse_train_common(s, sw.base_cfg, sw.tcfg);
    sw.holdout_frac = s.value("holdout_frac", sw.holdout_frac);
    sw.split_seed = s.value("split_seed", sw.split_seed);
    sw.eval_stride = s.value("eval_stride", sw.eval_stride);
    return sw;
}

mpc::Scenario parse_scenario(const nlohmann::json& spec, const std::filesystem::path& base) {
    if (spec.contains("file")) return mpc::read_scenario(resolve(base, spec["file"]));
    if (spec.contains("builtin"))
        return mpc::builtin_scenario(spec["builtin"].get<std::string>(), spec);
    throw ValidationError("scenario spec needs 'builtin' or 'file'");
}

mpc::MpcConfig parse_mpc(const nlohmann::json& s) {
    mpc::MpcConfig cfg;
    cfg.horizon = s.value("horizon", cfg.horizon);
    cfg.dt = s.value("dt", cfg.dt);
    cfg.q = s.value("q", cfg.q);
    cfg.r = s.value("r", cfg.r);
    cfg.q_f = s.value("q_f", cfg.q_f);
    cfg.r_r = s.value("r_r", cfg.r_r);
    cfg.scp_max_iters = s.value("scp_max_iters", cfg.scp_max_iters);
    cfg.qp_iters = s.value("qp_iters", cfg.qp_iters);
    cfg.trust_region_radius = s.value("trust_region_radius", cfg.trust_region_radius);
    cfg.slack_penalty = s.value("slack_penalty", cfg.slack_penalty);
    cfg.convergence_tol = s.value("convergence_tol", cfg.convergence_tol);
    return cfg;
}

sim::TrackerParams parse_tracker(const nlohmann::json& s, double dt) {
    sim::TrackerParams p;
    p.substeps = s.value("substeps", p.substeps);
    p.dt_sim = s.value("dt_sim", dt / p.substeps);
    p.tau = s.value("tau", p.tau);
    p.kp = s.value("kp", p.kp);
    p.kd = s.value("kd", p.kd);
    p.kf = s.value("kf", p.kf);
    p.cp = s.value("cp", p.cp);
    p.cv = s.value("cv", p.cv);
    p.cf = s.value("cf", p.cf);
    p.ca = s.value("ca", p.ca);
    p.sigma = s.value("sigma", p.sigma);
    if (s.contains("bias")) p.bias = {s["bias"][0], s["bias"][1]};
    p.validate(dt);
    return p;
}

TubeSpec parse_tube_spec(const nlohmann::json& spec, const std::filesystem::path& base) {
    TubeSpec t;
    t.mode = mpc::tube_mode_from_name(spec.value("mode", "none"));
    if (t.mode == mpc::TubeMode::Fixed) {
        if (spec.contains("w")) {
            t.fixed_w = spec["w"].get<double>();
        } else if (spec.contains("quantile_dataset")) {
            t.quantile_dataset = resolve(base, spec["quantile_dataset"].get<std::string>());
            t.quantile_alpha = spec.value("alpha", t.quantile_alpha);
        } else {
            throw ValidationError("fixed tube needs 'w' or 'quantile_dataset'");
        }
    } else if (t.mode == mpc::TubeMode::Dynamic) {
        if (!spec.contains("model")) throw ValidationError("dynamic tube needs 'model'");
        t.model_dir = resolve(base, spec["model"].get<std::string>());
    }
    return t;
}

RunSettings parse_run(const nlohmann::json& s, const std::filesystem::path& base) {
    RunSettings r;
    r.scenario_spec = require_section(s, "scenario");
    r.tube = parse_tube_spec(s.value("tube", nlohmann::json{{"mode", "none"}}), base);
    r.mpc_cfg = parse_mpc(s.value("mpc", nlohmann::json::object()));
    r.tracker_spec = s.value("tracker", nlohmann::json::object());
    r.seed = s.value("seed", r.seed);
    r.max_steps = s.value("max_steps", r.max_steps);
    r.first_solve_scp_iters = s.value("first_solve_scp_iters", r.first_solve_scp_iters);
    r.stall_window = s.value("stall_window", r.stall_window);
    r.stall_eps = s.value("stall_eps", r.stall_eps);
    r.plan_stride = s.value("plan_stride", r.plan_stride);
    return r;
}

CompareSettings parse_compare(const nlohmann::json& s, const std::filesystem::path& base) {
    CompareSettings c;
    c.scenario_spec = require_section(s, "scenario");
    c.mpc_cfg = parse_mpc(s.value("mpc", nlohmann::json::object()));
    c.tracker_spec = s.value("tracker", nlohmann::json::object());
    if (s.contains("seeds")) c.seeds = s["seeds"].get<std::vector<uint64_t>>();
    c.max_steps = s.value("max_steps", c.max_steps);
    c.first_solve_scp_iters = s.value("first_solve_scp_iters", c.first_solve_scp_iters);
    c.stall_window = s.value("stall_window", c.stall_window);
    c.stall_eps = s.value("stall_eps", c.stall_eps);
    if (!s.contains("variants") || s["variants"].empty())
        throw ValidationError("compare section needs non-empty 'variants'");
    for (const auto& v : s["variants"]) {
        CompareVariant var;
        var.label = v.value("label", std::string("variant"));
        var.tube = parse_tube_spec(require_section(v, "tube"), base);
        if (v.contains("v_bar")) var.v_bar = v["v_bar"].get<double>();
        c.variants.push_back(var);
    }
    const auto ratio = s.value("ratio", nlohmann::json::object());
    c.ratio_numerator = ratio.value("numerator", "");
    c.ratio_denominator = ratio.value("denominator", "");
    return c;
}

}  // namespace tubeplan::cli
