#include "tubeplan/commands.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>

#include "tubeplan/datagen.hpp"
#include "tubeplan/errors.hpp"

namespace tubeplan::cli {

namespace {

void save_json(const nlohmann::json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << j.dump(2) << "\n";
}

}  // namespace

DatagenOutput cmd_datagen(const nlohmann::json& root, const std::filesystem::path& base,
                          const std::filesystem::path& out_dir,
                          std::optional<uint64_t> seed_override) {
    const auto& section = require_section(root, "datagen");
    data::DatagenConfig cfg = parse_datagen(section);
    if (seed_override) cfg.master_seed = *seed_override;

    auto t0 = std::chrono::steady_clock::now();
    std::vector<data::GenFailure> failures;
    data::Dataset d = data::generate_dataset(cfg, &failures);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    DatagenOutput out;
    out.records = d.records.size();
    out.failures = failures.size();
    out.q50 = data::error_quantile(d, 0.5);
    out.q90 = data::error_quantile(d, 0.9);
    double substeps = static_cast<double>(d.records.size()) * cfg.ref.traj_len *
                      cfg.rand.nominal.substeps;
    out.substeps_per_sec = secs > 0.0 ? substeps / secs : 0.0;

    d.meta.configs["error_quantiles"] = {{"q50", out.q50}, {"q90", out.q90}};

    out.dataset_dir = out_dir / section.value("name", std::string("dataset"));
    (void)base;
    data::write_dataset(d, out.dataset_dir);

    std::printf("datagen: %zu records (%zu failures), e q50=%.5f q90=%.5f, %.3g substeps/s\n",
                out.records, out.failures, out.q50, out.q90, out.substeps_per_sec);
    return out;
}

TrainOutput cmd_train(const nlohmann::json& root, const std::filesystem::path& base,
                      const std::filesystem::path& out_dir,
                      std::optional<uint64_t> seed_override) {
    TrainSettings s = parse_train(require_section(root, "train"), base);
    if (seed_override) s.tcfg.seed = *seed_override;

    data::Dataset d = data::read_dataset(s.dataset);
    auto [train_split, holdout] = data::split_dataset(d, s.holdout_frac, s.split_seed);
    auto trained = tube::train_tube_model(train_split, s.tube_cfg, s.tcfg);

    TrainOutput out;
    out.model_dir = out_dir / s.name;
    tube::save_tube_model(trained.model, out.model_dir);
    out.curve = trained.curve;

    Table curve({"epoch", "mean_loss"});
    for (const auto& p : trained.curve)
        curve.add_row({std::to_string(p.epoch), Table::fmt(p.mean_loss)});
    curve.write(out.model_dir / "curve.csv");

    // Metrics come from the reloaded checkpoint so the printed numbers are
    // exactly reproducible from the saved artifact.
    tube::TubeModel reloaded = tube::load_tube_model(out.model_dir);
    out.holdout = tube::evaluate_tube_model(reloaded, holdout, s.eval_stride, s.tcfg.threads);

    save_json(
        {
            {"holdout_correctness", out.holdout.correctness},
            {"holdout_correctness_traj", out.holdout.correctness_traj},
            {"holdout_mec", out.holdout.mec},
            {"holdout_mec_traj", out.holdout.mec_traj},
            {"windows", out.holdout.windows},
            {"indices", out.holdout.indices},
        },
        out.model_dir / "metrics.json");

    std::printf("train: holdout correctness=%.4f (traj %.4f) mec=%.5f (traj %.5f)\n",
                out.holdout.correctness, out.holdout.correctness_traj, out.holdout.mec,
                out.holdout.mec_traj);
    return out;
}

SweepOutput cmd_sweep(const nlohmann::json& root, const std::filesystem::path& base,
                      const std::filesystem::path& out_dir,
                      std::optional<uint64_t> seed_override) {
    SweepSettings s = parse_sweep(require_section(root, "sweep"), base);
    if (seed_override) s.tcfg.seed = *seed_override;

    data::Dataset d = data::read_dataset(s.dataset);
    auto [train_split, holdout] = data::split_dataset(d, s.holdout_frac, s.split_seed);
    auto rows = tube::history_sweep(train_split, holdout, s.h_list, s.modes, s.base_cfg, s.tcfg,
                                    s.eval_stride);

    SweepOutput out;
    out.table = Table({"history", "mode", "correctness", "correctness_traj", "mec", "mec_traj",
                       "windows"});
    for (const auto& row : rows)
        out.table.add_row({std::to_string(row.history), tube::mode_name(row.mode),
                           Table::fmt(row.metrics.correctness),
                           Table::fmt(row.metrics.correctness_traj), Table::fmt(row.metrics.mec),
                           Table::fmt(row.metrics.mec_traj), std::to_string(row.metrics.windows)});
    std::filesystem::create_directories(out_dir);
    out.table_path = out_dir / "sweep.csv";
    out.table.write(out.table_path);
    std::printf("sweep: wrote %zu rows to %s\n", out.table.row_count(),
                out.table_path.c_str());
    return out;
}

mpc::TubeSetting resolve_tube(const TubeSpec& spec, std::optional<tube::TubeModel>& storage) {
    mpc::TubeSetting setting;
    setting.mode = spec.mode;
    if (spec.mode == mpc::TubeMode::Fixed) {
        if (spec.fixed_w >= 0.0) {
            setting.fixed_radius = spec.fixed_w;
        } else {
            data::Dataset d = data::read_dataset(spec.quantile_dataset);
            setting.fixed_radius = data::error_quantile(d, spec.quantile_alpha);
        }
    } else if (spec.mode == mpc::TubeMode::Dynamic) {
        storage = tube::load_tube_model(spec.model_dir);
        setting.model = &*storage;
    }
    return setting;
}

namespace {

struct RunArtifacts {
    mpc::ClosedLoopLog log;
    mpc::RunSummary summary;
};

RunArtifacts execute_run(const mpc::Scenario& scenario, const mpc::MpcConfig& mpc_cfg,
                         const nlohmann::json& tracker_spec, uint64_t seed, int max_steps,
                         int first_iters, int stall_window, double stall_eps,
                         const std::string& label) {
    mpc::ClosedLoopConfig cl;
    cl.mpc = mpc_cfg;
    cl.tracker = parse_tracker(tracker_spec, mpc_cfg.dt);
    cl.seed = seed;
    cl.max_steps = max_steps;
    cl.first_solve_scp_iters = first_iters;
    cl.stall_window = stall_window;
    cl.stall_eps = stall_eps;

    RunArtifacts art;
    art.log = mpc::closed_loop_run(scenario, cl);
    art.summary = mpc::summarize_run(scenario, label, seed, art.log);
    return art;
}

}  // namespace

RunOutput cmd_run(const nlohmann::json& root, const std::filesystem::path& base,
                  const std::filesystem::path& out_dir, std::optional<uint64_t> seed_override) {
    RunSettings s = parse_run(require_section(root, "run"), base);
    if (seed_override) s.seed = *seed_override;

    mpc::Scenario scenario = parse_scenario(s.scenario_spec, base);
    std::optional<tube::TubeModel> model;
    s.mpc_cfg.tube = resolve_tube(s.tube, model);

    auto art = execute_run(scenario, s.mpc_cfg, s.tracker_spec, s.seed, s.max_steps,
                           s.first_solve_scp_iters, s.stall_window, s.stall_eps,
                           mpc::tube_mode_name(s.mpc_cfg.tube.mode));

    RunOutput out;
    out.dir = out_dir;
    std::filesystem::create_directories(out_dir);
    mpc::step_table(art.log).write(out_dir / "steps.csv");
    mpc::plan_table(art.log, s.plan_stride).write(out_dir / "plans.csv");
    mpc::summary_table({art.summary}).write(out_dir / "summary.csv");
    mpc::write_scenario(scenario, out_dir / "scenario.json");
    out.summary = art.summary;
    if (art.summary.solver_failure_frac > 0.5) out.exit_code = kExitSolver;

    std::printf("run: %s/%s seed=%llu outcome=%s steps=%d clearance=%.4f tube_correct=%.3f\n",
                scenario.name.c_str(), art.summary.mode.c_str(),
                static_cast<unsigned long long>(s.seed), art.summary.outcome.c_str(),
                art.summary.steps, art.summary.min_clearance, art.summary.tube_correctness);
    return out;
}

CompareOutput cmd_compare(const nlohmann::json& root, const std::filesystem::path& base,
                          const std::filesystem::path& out_dir,
                          std::optional<uint64_t> seed_override) {
    CompareSettings s = parse_compare(require_section(root, "compare"), base);
    if (seed_override && !s.seeds.empty()) s.seeds[0] = *seed_override;

    std::vector<mpc::RunSummary> rows;
    std::map<std::string, std::vector<int>> steps_by_label;
    std::map<std::string, int> reached_by_label;

    for (const auto& variant : s.variants) {
        mpc::Scenario scenario = parse_scenario(s.scenario_spec, base);
        if (variant.v_bar) scenario.v_bar = *variant.v_bar;
        std::optional<tube::TubeModel> model;
        mpc::MpcConfig cfg = s.mpc_cfg;
        cfg.tube = resolve_tube(variant.tube, model);
        for (uint64_t seed : s.seeds) {
            auto art = execute_run(scenario, cfg, s.tracker_spec, seed, s.max_steps,
                                   s.first_solve_scp_iters, s.stall_window, s.stall_eps,
                                   variant.label);
            rows.push_back(art.summary);
            if (art.log.outcome == mpc::Outcome::Reached) {
                steps_by_label[variant.label].push_back(art.log.steps_to_goal);
                reached_by_label[variant.label] += 1;
            }
        }
    }

    CompareOutput out;
    out.table = mpc::summary_table(rows);
    std::filesystem::create_directories(out_dir);
    out.table_path = out_dir / "compare.csv";
    out.table.write(out.table_path);

    auto mean_steps = [&](const std::string& label) -> double {
        auto it = steps_by_label.find(label);
        if (it == steps_by_label.end() || it->second.empty()) return -1.0;
        double sum = 0.0;
        for (int v : it->second) sum += v;
        return sum / static_cast<double>(it->second.size());
    };

    for (const auto& variant : s.variants) {
        double ms = mean_steps(variant.label);
        std::printf("compare: %-14s reached %d/%zu runs, mean steps-to-goal %s\n",
                    variant.label.c_str(), reached_by_label[variant.label], s.seeds.size(),
                    ms < 0 ? "n/a" : Table::fmt(ms).c_str());
    }
    if (!s.ratio_numerator.empty() && !s.ratio_denominator.empty()) {
        double num = mean_steps(s.ratio_numerator);
        double den = mean_steps(s.ratio_denominator);
        if (num > 0 && den > 0) {
            out.ratio_valid = true;
            out.completion_ratio = num / den;
            std::printf("compare: completion ratio %s/%s = %.3f\n", s.ratio_numerator.c_str(),
                        s.ratio_denominator.c_str(), out.completion_ratio);
        }
    }
    return out;
}

}  // namespace tubeplan::cli
