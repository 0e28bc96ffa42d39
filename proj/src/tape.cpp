#include "tubeplan/tape.hpp"

#include "tubeplan/errors.hpp"

namespace tubeplan::nn {

Tape::Id Tape::push(Node n) {
    n.adjoint.assign(n.value.size(), 0.0);
    nodes_.push_back(std::move(n));
    return static_cast<Id>(nodes_.size() - 1);
}

Tape::Id Tape::leaf(std::vector<double> value, bool requires_grad) {
    Node n;
    n.op = Op::Leaf;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    return push(std::move(n));
}

Tape::Id Tape::stop_gradient(Id input) {
    Node n;
    n.op = Op::StopGradient;
    n.a = input;
    n.value = value(input);
    return push(std::move(n));
}

Tape::Id Tape::gather(GatherSpec spec) {
    if (spec.term_offsets.size() != spec.constants.size() + 1 || spec.term_offsets.front() != 0 ||
        spec.term_offsets.back() != static_cast<int>(spec.terms.size()))
        throw ShapeError("gather term offsets inconsistent");
    Node n;
    n.op = Op::Gather;
    n.value.resize(spec.constants.size());
    for (std::size_t i = 0; i < spec.constants.size(); ++i) {
        double s = spec.constants[i];
        for (int t = spec.term_offsets[i]; t < spec.term_offsets[i + 1]; ++t) {
            const Term& term = spec.terms[static_cast<std::size_t>(t)];
            s += term.coeff * value(term.node)[static_cast<std::size_t>(term.index)];
        }
        n.value[i] = s;
    }
    n.spec = std::move(spec);
    return push(std::move(n));
}

Tape::Id Tape::apply_mlp(const Mlp* net, Id input) {
    Node n;
    n.op = Op::Mlp;
    n.a = input;
    n.net = net;
    n.mlp_tape = std::make_unique<MlpTape>();
    n.value = mlp_forward(*net, value(input), n.mlp_tape.get());
    return push(std::move(n));
}

Tape::Id Tape::mul(Id a, Id b) {
    const auto& va = value(a);
    const auto& vb = value(b);
    if (va.size() != vb.size()) throw ShapeError("mul size mismatch");
    Node n;
    n.op = Op::Mul;
    n.a = a;
    n.b = b;
    n.value.resize(va.size());
    for (std::size_t i = 0; i < va.size(); ++i) n.value[i] = va[i] * vb[i];
    return push(std::move(n));
}

Tape::Id Tape::affine(Id input, double scale, double shift) {
    Node n;
    n.op = Op::Affine;
    n.a = input;
    n.scale = scale;
    n.shift = shift;
    n.value = value(input);
    for (double& v : n.value) v = v * scale + shift;
    return push(std::move(n));
}

Tape::Id Tape::quantile_loss_node(Id w, std::vector<double> targets, double alpha, double delta) {
    const auto& vw = value(w);
    if (vw.size() != targets.size()) throw ShapeError("quantile loss length mismatch");
    Node n;
    n.op = Op::QuantileLoss;
    n.a = w;
    n.targets = std::move(targets);
    n.alpha = alpha;
    n.delta = delta;
    n.value = {quantile_loss(vw, n.targets, alpha, delta)};
    return push(std::move(n));
}

void Tape::zero_adjoints() {
    for (auto& n : nodes_) std::fill(n.adjoint.begin(), n.adjoint.end(), 0.0);
}

MlpGrads& Tape::grads_for(const Mlp* net) {
    auto it = mlp_grads_.find(net);
    if (it == mlp_grads_.end())
        it = mlp_grads_.emplace(net, MlpGrads::zeros_like(*net)).first;
    return it->second;
}

void Tape::backward(Id root, std::span<const double> seed, bool accumulate_param_grads) {
    auto& root_node = nodes_[static_cast<std::size_t>(root)];
    if (seed.size() != root_node.value.size()) throw ShapeError("backward seed size mismatch");
    for (std::size_t i = 0; i < seed.size(); ++i) root_node.adjoint[i] += seed[i];

    for (Id id = root; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        bool any = false;
        for (double g : n.adjoint)
            if (g != 0.0) {
                any = true;
                break;
            }
        if (!any) continue;
        switch (n.op) {
            case Op::Leaf:
                break;
            case Op::StopGradient:
                break;  // blocks the sweep
            case Op::Gather:
                for (std::size_t i = 0; i < n.spec.constants.size(); ++i) {
                    double g = n.adjoint[i];
                    if (g == 0.0) continue;
                    for (int t = n.spec.term_offsets[i]; t < n.spec.term_offsets[i + 1]; ++t) {
                        const Term& term = n.spec.terms[static_cast<std::size_t>(t)];
                        nodes_[static_cast<std::size_t>(term.node)]
                            .adjoint[static_cast<std::size_t>(term.index)] += term.coeff * g;
                    }
                }
                break;
            case Op::Mlp: {
                MlpGrads* acc = accumulate_param_grads ? &grads_for(n.net) : nullptr;
                auto in_grad = mlp_backward(*n.net, *n.mlp_tape, n.adjoint, acc);
                auto& target = nodes_[static_cast<std::size_t>(n.a)].adjoint;
                for (std::size_t i = 0; i < in_grad.size(); ++i) target[i] += in_grad[i];
                break;
            }
            case Op::Mul: {
                const auto& va = nodes_[static_cast<std::size_t>(n.a)].value;
                const auto& vb = nodes_[static_cast<std::size_t>(n.b)].value;
                auto& ga = nodes_[static_cast<std::size_t>(n.a)].adjoint;
                auto& gb = nodes_[static_cast<std::size_t>(n.b)].adjoint;
                for (std::size_t i = 0; i < n.value.size(); ++i) {
                    ga[i] += n.adjoint[i] * vb[i];
                    gb[i] += n.adjoint[i] * va[i];
                }
                break;
            }
            case Op::Affine: {
                auto& ga = nodes_[static_cast<std::size_t>(n.a)].adjoint;
                for (std::size_t i = 0; i < n.value.size(); ++i)
                    ga[i] += n.adjoint[i] * n.scale;
                break;
            }
            case Op::QuantileLoss: {
                const auto& vw = nodes_[static_cast<std::size_t>(n.a)].value;
                auto gw = quantile_loss_grad_w(vw, n.targets, n.alpha, n.delta);
                auto& ga = nodes_[static_cast<std::size_t>(n.a)].adjoint;
                for (std::size_t i = 0; i < gw.size(); ++i) ga[i] += n.adjoint[0] * gw[i];
                break;
            }
        }
    }
}

}  // namespace tubeplan::nn
