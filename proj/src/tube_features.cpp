#include "tubeplan/tube_features.hpp"

#include "tubeplan/errors.hpp"

namespace tubeplan::tube {

std::string mode_name(Mode m) {
    return m == Mode::OneShot ? "one_shot" : "recursive";
}

Mode mode_from_name(const std::string& s) {
    if (s == "one_shot") return Mode::OneShot;
    if (s == "recursive") return Mode::Recursive;
    throw ValidationError("unknown tube mode: " + s);
}

void TubeModelConfig::validate() const {
    if (history < 1) throw ValidationError("history must be >= 1");
    if (horizon < 1) throw ValidationError("horizon must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must be in (0, 1)");
}

std::vector<FeatureRef> oneshot_layout(const TubeModelConfig& cfg) {
    std::vector<FeatureRef> layout;
    int h = cfg.history, n = cfg.horizon;
    layout.reserve(static_cast<std::size_t>(oneshot_feature_dim(cfg)));
    for (int i = 0; i < h; ++i) layout.push_back({FeatureRef::Src::EHist, i, 0, 0});
    for (int i = 0; i < h; ++i)
        for (int c = 0; c < 2; ++c) layout.push_back({FeatureRef::Src::ZHist, i, c, 0});
    for (int j = 0; j <= n; ++j)
        for (int c = 0; c < 2; ++c) layout.push_back({FeatureRef::Src::ZPlan, j, c, 0});
    for (int i = 0; i < h; ++i)
        for (int c = 0; c < 2; ++c) layout.push_back({FeatureRef::Src::VHist, i, c, 0});
    for (int j = 0; j < n; ++j)
        for (int c = 0; c < 2; ++c) layout.push_back({FeatureRef::Src::VPlan, j, c, 0});
    return layout;
}

int oneshot_feature_dim(const TubeModelConfig& cfg) {
    int h = cfg.history, n = cfg.horizon;
    return h + 2 * (h + n + 1) + 2 * (h + n);
}

std::vector<FeatureRef> recursive_layout(const TubeModelConfig& cfg, int step_m) {
    if (step_m < 1 || step_m > cfg.horizon)
        throw ValidationError("recursive step out of range");
    int h = cfg.history;
    std::vector<FeatureRef> layout;
    layout.reserve(static_cast<std::size_t>(recursive_feature_dim(cfg)));
    // error-or-tube window: time offsets (m-h .. m-1) relative to the anchor
    for (int o = step_m - h; o <= step_m - 1; ++o) {
        if (o < 0)
            layout.push_back({FeatureRef::Src::EHist, h - 1 + o, 0, 0});
        else
            layout.push_back({FeatureRef::Src::WPred, o, 0, 0});
    }
    // positions over the same offsets
    for (int o = step_m - h; o <= step_m - 1; ++o)
        for (int c = 0; c < 2; ++c) {
            if (o <= 0)
                layout.push_back({FeatureRef::Src::ZHist, h - 1 + o, c, 0});
            else
                layout.push_back({FeatureRef::Src::ZPlan, o, c, 0});
        }
    // inputs applied at those positions
    for (int o = step_m - h; o <= step_m - 1; ++o)
        for (int c = 0; c < 2; ++c) {
            if (o < 0)
                layout.push_back({FeatureRef::Src::VHist, h + o, c, 0});
            else
                layout.push_back({FeatureRef::Src::VPlan, o, c, 0});
        }
    layout.push_back({FeatureRef::Src::StepIndex, 0, 0, step_m});
    return layout;
}

int recursive_feature_dim(const TubeModelConfig& cfg) {
    return 5 * cfg.history + 1;
}

double eval_feature(const FeatureRef& ref, const WindowView& view, int horizon) {
    switch (ref.src) {
        case FeatureRef::Src::EHist:
            return view.e_hist[static_cast<std::size_t>(ref.index)];
        case FeatureRef::Src::ZHist: {
            Vec2 z = view.z_hist[static_cast<std::size_t>(ref.index)];
            if (view.canonicalize) z -= view.z_hist.back();
            return ref.comp == 0 ? z.x : z.y;
        }
        case FeatureRef::Src::VHist: {
            Vec2 v = view.v_hist[static_cast<std::size_t>(ref.index)];
            return ref.comp == 0 ? v.x : v.y;
        }
        case FeatureRef::Src::ZPlan: {
            Vec2 z = view.z_plan[static_cast<std::size_t>(ref.index)];
            if (view.canonicalize) z -= view.z_plan.front();
            return ref.comp == 0 ? z.x : z.y;
        }
        case FeatureRef::Src::VPlan: {
            Vec2 v = view.v_plan[static_cast<std::size_t>(ref.index)];
            return ref.comp == 0 ? v.x : v.y;
        }
        case FeatureRef::Src::WPred:
            return view.w[static_cast<std::size_t>(ref.index)];
        case FeatureRef::Src::StepIndex:
            return static_cast<double>(ref.step - 1) / horizon;
    }
    throw Error("unreachable");
}

std::vector<double> assemble_features(const std::vector<FeatureRef>& layout,
                                      const WindowView& view, int horizon) {
    std::vector<double> out(layout.size());
    for (std::size_t i = 0; i < layout.size(); ++i) out[i] = eval_feature(layout[i], view, horizon);
    return out;
}

std::vector<double> assemble_features_oneshot(const sim::HistoryBuffer& hist,
                                              std::span<const Vec2> z_plan,
                                              std::span<const Vec2> v_plan,
                                              const TubeModelConfig& cfg) {
    cfg.validate();
    if (hist.size() != static_cast<std::size_t>(cfg.history))
        throw ShapeError("history length does not match config");
    if (z_plan.size() != static_cast<std::size_t>(cfg.horizon + 1) ||
        v_plan.size() != static_cast<std::size_t>(cfg.horizon))
        throw ShapeError("plan lengths do not match config");
    WindowView view{hist.e_hist(), hist.z_hist(), hist.v_hist(), z_plan, v_plan, {},
                    cfg.canonicalize};
    return assemble_features(oneshot_layout(cfg), view, cfg.horizon);
}

}  // namespace tubeplan::tube
