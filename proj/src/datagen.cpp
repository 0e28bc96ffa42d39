#include "tubeplan/datagen.hpp"

#include <cmath>

#include "tubeplan/errors.hpp"
#include "tubeplan/parallel.hpp"

namespace tubeplan::data {

void ReferenceGenConfig::validate() const {
    if (traj_len < 1) throw ValidationError("traj_len must be >= 1");
    if (!(v_bar >= 0.0)) throw ValidationError("v_bar must be >= 0");
    if (seg_min < 1 || seg_max < seg_min)
        throw ValidationError("need 1 <= seg_min <= seg_max");
    for (double p : {hold_prob, turn_prob, stop_prob})
        if (p < 0.0 || p > 1.0) throw ValidationError("segment probabilities must be in [0, 1]");
    if (hold_prob + turn_prob + stop_prob > 1.0 + 1e-12)
        throw ValidationError("segment probabilities must sum to <= 1");
    if (full_speed_frac < 0.0 || full_speed_frac > 1.0)
        throw ValidationError("full_speed_frac must be in [0, 1]");
    if (smooth_window < 1) throw ValidationError("smooth_window must be >= 1");
}

std::vector<Vec2> sample_reference_segments(const ReferenceGenConfig& cfg, Rng& rng,
                                            std::vector<int>* segment_lengths) {
    cfg.validate();
    std::vector<Vec2> out;
    out.reserve(cfg.traj_len);
    Vec2 v{};
    while (static_cast<int>(out.size()) < cfg.traj_len) {
        int seg = rng.uniform_int(cfg.seg_min, cfg.seg_max);
        double u = rng.uniform();
        if (u < cfg.hold_prob) {
            // keep current v
        } else if (u < 1.0 - cfg.stop_prob) {
            // turn; leftover probability mass lands here too
            double angle = rng.uniform(0.0, 2.0 * M_PI);
            double speed = rng.uniform() < cfg.full_speed_frac ? cfg.v_bar
                                                               : rng.uniform(0.0, cfg.v_bar);
            v = {speed * std::cos(angle), speed * std::sin(angle)};
            v = sim::clip_vec(v, cfg.v_bar);
        } else {
            v = {};
        }
        if (segment_lengths) segment_lengths->push_back(seg);
        for (int i = 0; i < seg && static_cast<int>(out.size()) < cfg.traj_len; ++i)
            out.push_back(v);
    }
    return out;
}

std::vector<Vec2> sample_reference(const ReferenceGenConfig& cfg, Rng& rng) {
    std::vector<Vec2> raw = sample_reference_segments(cfg, rng, nullptr);
    if (cfg.smooth_window <= 1) return raw;
    // trailing moving average; componentwise averaging keeps |v| <= v_bar
    std::vector<Vec2> out(raw.size());
    for (std::size_t k = 0; k < raw.size(); ++k) {
        std::size_t begin = k + 1 >= static_cast<std::size_t>(cfg.smooth_window)
                                ? k + 1 - cfg.smooth_window
                                : 0;
        Vec2 acc{};
        for (std::size_t i = begin; i <= k; ++i) acc += raw[i];
        out[k] = acc / static_cast<double>(k - begin + 1);
    }
    return out;
}

void RandomizationConfig::validate(double planner_dt) const {
    nominal.validate(planner_dt);
    struct Check {
        const Range& r;
        double nom;
        const char* name;
    };
    const Check checks[] = {
        {tau, nominal.tau, "tau"}, {kp, nominal.kp, "kp"},       {kd, nominal.kd, "kd"},
        {kf, nominal.kf, "kf"},    {cp, nominal.cp, "cp"},       {cv, nominal.cv, "cv"},
        {cf, nominal.cf, "cf"},    {ca, nominal.ca, "ca"},       {sigma, nominal.sigma, "sigma"},
    };
    for (const auto& c : checks) {
        if (c.r.lo > c.r.hi) throw ValidationError(std::string("empty range for ") + c.name);
        if (!c.r.contains(c.nom))
            throw ValidationError(std::string("range for ") + c.name +
                                  " does not contain the nominal value");
    }
    if (tau.lo <= 0.0) throw ValidationError("tau range must be positive");
    for (const auto& c : {&kp, &kd, &kf, &cp, &cv, &cf, &ca, &sigma})
        if (c->lo < 0.0) throw ValidationError("parameter ranges must be nonnegative");
    if (bias_max < 0.0) throw ValidationError("bias_max must be >= 0");
}

sim::TrackerParams sample_env_params(const RandomizationConfig& cfg, Rng& rng) {
    sim::TrackerParams p = cfg.nominal;
    p.tau = cfg.tau.sample(rng);
    p.kp = cfg.kp.sample(rng);
    p.kd = cfg.kd.sample(rng);
    p.kf = cfg.kf.sample(rng);
    p.cp = cfg.cp.sample(rng);
    p.cv = cfg.cv.sample(rng);
    p.cf = cfg.cf.sample(rng);
    p.ca = cfg.ca.sample(rng);
    p.sigma = cfg.sigma.sample(rng);
    p.bias = {rng.uniform(-cfg.bias_max, cfg.bias_max), rng.uniform(-cfg.bias_max, cfg.bias_max)};
    return p;
}

void DatagenConfig::validate() const {
    if (n_envs < 1) throw ValidationError("n_envs must be >= 1");
    if (refs_per_env < 1) throw ValidationError("refs_per_env must be >= 1");
    if (!(dt > 0.0)) throw ValidationError("dt must be > 0");
    ref.validate();
    rand.validate(dt);
    if (init.e0_max < 0.0) throw ValidationError("e0_max must be >= 0");
    if (init.z0_box.lo.x > init.z0_box.hi.x || init.z0_box.lo.y > init.z0_box.hi.y)
        throw ValidationError("z0_box is empty");
}

nlohmann::json DatagenConfig::to_json() const {
    auto range = [](const Range& r) { return nlohmann::json{r.lo, r.hi}; };
    return {
        {"n_envs", n_envs},
        {"refs_per_env", refs_per_env},
        {"dt", dt},
        {"master_seed", master_seed},
        {"reference",
         {{"traj_len", ref.traj_len},
          {"v_bar", ref.v_bar},
          {"seg_min", ref.seg_min},
          {"seg_max", ref.seg_max},
          {"hold_prob", ref.hold_prob},
          {"turn_prob", ref.turn_prob},
          {"stop_prob", ref.stop_prob},
          {"full_speed_frac", ref.full_speed_frac},
          {"smooth_window", ref.smooth_window}}},
        {"randomization",
         {{"tau", range(rand.tau)},
          {"kp", range(rand.kp)},
          {"kd", range(rand.kd)},
          {"kf", range(rand.kf)},
          {"cp", range(rand.cp)},
          {"cv", range(rand.cv)},
          {"cf", range(rand.cf)},
          {"ca", range(rand.ca)},
          {"sigma", range(rand.sigma)},
          {"bias_max", rand.bias_max}}},
        {"initial",
         {{"z0_box", {init.z0_box.lo.x, init.z0_box.lo.y, init.z0_box.hi.x, init.z0_box.hi.y}},
          {"e0_max", init.e0_max}}},
    };
}

RolloutRecord rollout(const sim::TrackerParams& params, const std::vector<Vec2>& v_seq, Vec2 z0,
                      sim::TrackerState x0, double dt, Rng& rng, uint32_t env_id,
                      uint64_t seed_label) {
    int n = static_cast<int>(v_seq.size());
    RolloutRecord r;
    r.env_id = env_id;
    r.seed = seed_label;
    r.z.resize(2 * (n + 1));
    r.v.resize(2 * n);
    r.proj.resize(2 * (n + 1));

    float dt_f = static_cast<float>(dt);
    float zx = static_cast<float>(z0.x);
    float zy = static_cast<float>(z0.y);
    r.z[0] = zx;
    r.z[1] = zy;
    r.proj[0] = static_cast<float>(x0.p.x);
    r.proj[1] = static_cast<float>(x0.p.y);

    sim::TrackerState x = x0;
    for (int k = 0; k < n; ++k) {
        float vx = static_cast<float>(v_seq[k].x);
        float vy = static_cast<float>(v_seq[k].y);
        r.v[2 * k] = vx;
        r.v[2 * k + 1] = vy;

        Vec2 z_ref{zx, zy};
        Vec2 v_ref{vx, vy};
        x = sim::tracker_step(x, z_ref, v_ref, params, rng);
        if (!x.p.finite() || !x.vel.finite() || !x.act.finite())
            throw Error("non-finite tracker state at step " + std::to_string(k));

        zx += dt_f * vx;
        zy += dt_f * vy;
        r.z[2 * (k + 1)] = zx;
        r.z[2 * (k + 1) + 1] = zy;
        r.proj[2 * (k + 1)] = static_cast<float>(x.p.x);
        r.proj[2 * (k + 1) + 1] = static_cast<float>(x.p.y);
    }
    return r;
}

Dataset generate_dataset(const DatagenConfig& cfg, std::vector<GenFailure>* failures) {
    cfg.validate();
    std::size_t total = static_cast<std::size_t>(cfg.n_envs) * cfg.refs_per_env;

    Dataset d;
    d.meta.dt = cfg.dt;
    d.meta.v_bar = cfg.ref.v_bar;
    d.meta.traj_len = cfg.ref.traj_len;
    d.meta.configs = {{"datagen", cfg.to_json()}};
    d.records.resize(total);

    std::vector<bool> ok(total, false);
    int groups = std::max(16, resolve_threads(cfg.workers) * 4);
    std::vector<std::vector<GenFailure>> group_failures(static_cast<std::size_t>(groups));

    for_each_group(total, groups, cfg.workers, [&](int g, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            uint32_t env = static_cast<uint32_t>(i / cfg.refs_per_env);
            int rec = static_cast<int>(i % cfg.refs_per_env);

            Rng env_rng(substream(cfg.master_seed, env, 0));
            sim::TrackerParams params = sample_env_params(cfg.rand, env_rng);

            uint64_t record_seed = substream(cfg.master_seed, env, 1 + static_cast<uint64_t>(rec));
            Rng rng(record_seed);
            Vec2 z0{rng.uniform(cfg.init.z0_box.lo.x, cfg.init.z0_box.hi.x),
                    rng.uniform(cfg.init.z0_box.lo.y, cfg.init.z0_box.hi.y)};
            double angle = rng.uniform(0.0, 2.0 * M_PI);
            double radius = cfg.init.e0_max * std::sqrt(rng.uniform());
            sim::TrackerState x0;
            x0.p = z0 + Vec2{radius * std::cos(angle), radius * std::sin(angle)};

            std::vector<Vec2> v_seq = sample_reference(cfg.ref, rng);
            try {
                d.records[i] = rollout(params, v_seq, z0, x0, cfg.dt, rng, env, record_seed);
                ok[i] = true;
            } catch (const std::exception& e) {
                group_failures[static_cast<std::size_t>(g)].push_back(
                    GenFailure{env, rec, e.what()});
            }
        }
    });

    if (failures)
        for (auto& gf : group_failures)
            failures->insert(failures->end(), gf.begin(), gf.end());

    // compact out failed records, preserving order
    std::size_t kept = 0;
    for (std::size_t i = 0; i < total; ++i)
        if (ok[i]) {
            if (kept != i) d.records[kept] = std::move(d.records[i]);
            ++kept;
        }
    d.records.resize(kept);
    return d;
}

}  // namespace tubeplan::data
