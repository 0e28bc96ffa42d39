#pragma once

#include <span>
#include <string>
#include <vector>

#include "tubeplan/sim_core.hpp"
#include "tubeplan/vec2.hpp"

namespace tubeplan::tube {

enum class Mode { OneShot, Recursive };

std::string mode_name(Mode m);
Mode mode_from_name(const std::string& s);

struct TubeModelConfig {
    int history = 25;   // H
    int horizon = 25;   // N
    double alpha = 0.9;
    Mode mode = Mode::Recursive;
    bool canonicalize = true;  // positions relative to the current position

    void validate() const;
};

// One scalar feature. Positions are canonicalized against the current
// position: history entries against z_hist.back() (data), plan entries
// against z_plan[0] (a decision variable), which coincide in any consistent
// call but keep Jacobians with respect to the plan translation-clean.
struct FeatureRef {
    enum class Src {
        EHist,      // error history, index into e_hist
        ZHist,      // position history component
        VHist,      // applied-input history component
        ZPlan,      // planned position component
        VPlan,      // planned input component
        WPred,      // tube prediction w[index]; index 0 is the measured anchor
        StepIndex,  // (m-1)/N for recursive step m
    };
    Src src;
    int index = 0;
    int comp = 0;      // 0/1 for 2-vector sources
    int step = 0;      // recursive step m (for StepIndex)
};

// [e_hist | z_hist | z_plan | v_hist | v_plan]
std::vector<FeatureRef> oneshot_layout(const TubeModelConfig& cfg);
int oneshot_feature_dim(const TubeModelConfig& cfg);

// Sliding window ending at recursion time j = k+m-1: H entries each of
// e-or-w (entries before time k from the error history, at/after k from the
// prediction), positions, and the inputs applied at those positions, plus a
// normalized step index. Produces w[m].
std::vector<FeatureRef> recursive_layout(const TubeModelConfig& cfg, int step_m);
int recursive_feature_dim(const TubeModelConfig& cfg);

struct WindowView {
    std::span<const double> e_hist;  // H, most recent last (current error)
    std::span<const Vec2> z_hist;    // H
    std::span<const Vec2> v_hist;    // H
    std::span<const Vec2> z_plan;    // N+1
    std::span<const Vec2> v_plan;    // N
    std::span<const double> w;       // N+1 tube values for WPred slots
    bool canonicalize = true;
};

double eval_feature(const FeatureRef& ref, const WindowView& view, int horizon);
std::vector<double> assemble_features(const std::vector<FeatureRef>& layout,
                                      const WindowView& view, int horizon);

// Feature vector for the one-shot tube dynamics, un-normalized.
std::vector<double> assemble_features_oneshot(const sim::HistoryBuffer& hist,
                                              std::span<const Vec2> z_plan,
                                              std::span<const Vec2> v_plan,
                                              const TubeModelConfig& cfg);

}  // namespace tubeplan::tube
