#pragma once

#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "tubeplan/nn.hpp"

namespace tubeplan::nn {

// Small reverse-mode graph over vector values. It supports exactly what tube
// prediction and training compose: affine gathers of leaf/intermediate
// components, MLP applications, elementwise products, and the quantile loss.
// stop_gradient passes values through and blocks the reverse sweep, which is
// how recursive training freezes the predicted-tube feedback entries.
class Tape {
public:
    using Id = int;

    struct Term {
        Id node = -1;
        int index = 0;
        double coeff = 1.0;
    };

    // Component i evaluates to constants[i] plus the sum of
    // term.coeff * value(term.node)[term.index] over its terms, which live in
    // the flat `terms` array at [term_offsets[i], term_offsets[i+1]).
    struct GatherSpec {
        std::vector<double> constants;
        std::vector<Term> terms;
        std::vector<int> term_offsets;  // size = constants.size() + 1, first entry 0
    };

    Id leaf(std::vector<double> value, bool requires_grad = true);
    Id stop_gradient(Id input);
    Id gather(GatherSpec spec);
    Id apply_mlp(const Mlp* net, Id input);
    Id mul(Id a, Id b);                       // elementwise
    Id affine(Id input, double scale, double shift);  // componentwise
    Id quantile_loss_node(Id w, std::vector<double> targets, double alpha, double delta);

    const std::vector<double>& value(Id id) const { return nodes_[static_cast<std::size_t>(id)].value; }

    void zero_adjoints();
    // Reverse sweep from `root` seeded with `seed` (same length as the root's
    // value). Adjoints accumulate; call zero_adjoints between sweeps.
    void backward(Id root, std::span<const double> seed, bool accumulate_param_grads = true);
    const std::vector<double>& adjoint(Id id) const {
        return nodes_[static_cast<std::size_t>(id)].adjoint;
    }
    // Parameter gradients accumulated across backward sweeps for `net`.
    MlpGrads& grads_for(const Mlp* net);
    bool has_grads_for(const Mlp* net) const { return mlp_grads_.count(net) > 0; }

private:
    enum class Op { Leaf, StopGradient, Gather, Mlp, Mul, Affine, QuantileLoss };

    struct Node {
        Op op;
        std::vector<double> value;
        std::vector<double> adjoint;
        bool requires_grad = true;
        Id a = -1, b = -1;
        GatherSpec spec;
        const Mlp* net = nullptr;
        std::unique_ptr<MlpTape> mlp_tape;
        double scale = 1.0, shift = 0.0;
        std::vector<double> targets;
        double alpha = 0.0, delta = 1.0;
    };

    Id push(Node n);
    std::vector<Node> nodes_;
    std::unordered_map<const Mlp*, MlpGrads> mlp_grads_;
};

}  // namespace tubeplan::nn
