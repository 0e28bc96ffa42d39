#include "tubeplan/nn.hpp"

#include <cmath>

#include "tubeplan/errors.hpp"
#include "tubeplan/rng.hpp"

namespace tubeplan::nn {

double softplus(double x, double beta) {
    double bx = beta * x;
    if (bx > 30.0) return x + std::log1p(std::exp(-bx)) / beta;
    return std::log1p(std::exp(bx)) / beta;
}

double softplus_grad(double x, double beta) {
    double bx = beta * x;
    if (bx > 30.0) return 1.0 / (1.0 + std::exp(-bx));
    double e = std::exp(bx);
    return e / (1.0 + e);
}

namespace {
double activate(double x, Activation act, double beta) {
    return act == Activation::Softplus ? softplus(x, beta) : x;
}
double activate_grad(double x, Activation act, double beta) {
    return act == Activation::Softplus ? softplus_grad(x, beta) : 1.0;
}
}  // namespace

Mlp Mlp::create(const std::vector<int>& dims, double beta, uint64_t seed) {
    if (dims.size() < 2) throw ValidationError("mlp needs at least input and output dims");
    if (!(beta > 0.0)) throw ValidationError("softplus beta must be > 0");
    Mlp net;
    net.beta = beta;
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        int in = dims[l];
        int out = dims[l + 1];
        if (in < 1 || out < 1) throw ValidationError("layer dims must be >= 1");
        linalg::Matrix w(out, in);
        double s = std::sqrt(6.0 / (in + out));
        for (double& a : w.a) a = rng.uniform(-s, s);
        net.weights.push_back(std::move(w));
        net.biases.emplace_back(static_cast<std::size_t>(out), 0.0);
    }
    return net;
}

std::size_t Mlp::param_count() const {
    std::size_t n = 0;
    for (int l = 0; l < layer_count(); ++l)
        n += weights[l].a.size() + biases[l].size();
    return n;
}

std::vector<double> Mlp::flatten_params() const {
    std::vector<double> flat;
    flat.reserve(param_count());
    for (int l = 0; l < layer_count(); ++l) {
        flat.insert(flat.end(), weights[l].a.begin(), weights[l].a.end());
        flat.insert(flat.end(), biases[l].begin(), biases[l].end());
    }
    return flat;
}

void Mlp::set_params(std::span<const double> flat) {
    if (flat.size() != param_count()) throw ShapeError("flat parameter size mismatch");
    std::size_t off = 0;
    for (int l = 0; l < layer_count(); ++l) {
        std::copy(flat.begin() + off, flat.begin() + off + weights[l].a.size(),
                  weights[l].a.begin());
        off += weights[l].a.size();
        std::copy(flat.begin() + off, flat.begin() + off + biases[l].size(), biases[l].begin());
        off += biases[l].size();
    }
}

std::vector<double> mlp_forward(const Mlp& net, std::span<const double> input, MlpTape* tape) {
    if (static_cast<int>(input.size()) != net.input_dim())
        throw ShapeError("mlp input dimension mismatch");
    if (tape) {
        tape->input.assign(input.begin(), input.end());
        tape->pre.assign(static_cast<std::size_t>(net.layer_count()), {});
        tape->post.assign(static_cast<std::size_t>(net.layer_count()), {});
    }
    std::vector<double> cur(input.begin(), input.end());
    for (int l = 0; l < net.layer_count(); ++l) {
        const auto& w = net.weights[l];
        std::vector<double> pre(static_cast<std::size_t>(w.rows));
        linalg::matvec(w, cur, pre);
        for (int i = 0; i < w.rows; ++i) pre[static_cast<std::size_t>(i)] += net.biases[l][i];
        Activation act = l + 1 == net.layer_count() ? net.output_act : net.hidden_act;
        std::vector<double> post(pre.size());
        for (std::size_t i = 0; i < pre.size(); ++i)
            post[i] = activate(pre[i], act, net.beta);
        if (tape) {
            tape->pre[static_cast<std::size_t>(l)] = pre;
            tape->post[static_cast<std::size_t>(l)] = post;
        }
        cur = std::move(post);
    }
    return cur;
}

MlpGrads MlpGrads::zeros_like(const Mlp& net) {
    MlpGrads g;
    for (int l = 0; l < net.layer_count(); ++l) {
        g.w.emplace_back(net.weights[l].rows, net.weights[l].cols);
        g.b.emplace_back(net.biases[l].size(), 0.0);
    }
    return g;
}

void MlpGrads::add_scaled(const MlpGrads& o, double s) {
    for (std::size_t l = 0; l < w.size(); ++l) {
        for (std::size_t i = 0; i < w[l].a.size(); ++i) w[l].a[i] += s * o.w[l].a[i];
        for (std::size_t i = 0; i < b[l].size(); ++i) b[l][i] += s * o.b[l][i];
    }
}

void MlpGrads::scale(double s) {
    for (auto& m : w)
        for (double& a : m.a) a *= s;
    for (auto& v : b)
        for (double& a : v) a *= s;
}

double MlpGrads::sq_norm() const {
    double s = 0.0;
    for (const auto& m : w)
        for (double a : m.a) s += a * a;
    for (const auto& v : b)
        for (double a : v) s += a * a;
    return s;
}

std::vector<double> MlpGrads::flatten() const {
    std::vector<double> flat;
    for (std::size_t l = 0; l < w.size(); ++l) {
        flat.insert(flat.end(), w[l].a.begin(), w[l].a.end());
        flat.insert(flat.end(), b[l].begin(), b[l].end());
    }
    return flat;
}

std::vector<double> mlp_backward(const Mlp& net, const MlpTape& tape,
                                 std::span<const double> out_grad, MlpGrads* acc) {
    int layers = net.layer_count();
    if (static_cast<int>(tape.pre.size()) != layers ||
        static_cast<int>(tape.input.size()) != net.input_dim() ||
        static_cast<int>(out_grad.size()) != net.output_dim())
        throw ShapeError("tape does not match net");
    for (int l = 0; l < layers; ++l)
        if (static_cast<int>(tape.pre[static_cast<std::size_t>(l)].size()) !=
            net.weights[l].rows)
            throw ShapeError("tape does not match net");

    std::vector<double> grad(out_grad.begin(), out_grad.end());
    for (int l = layers - 1; l >= 0; --l) {
        const auto& w = net.weights[l];
        const auto& pre = tape.pre[static_cast<std::size_t>(l)];
        Activation act = l + 1 == layers ? net.output_act : net.hidden_act;
        // d/d pre-activation
        for (int i = 0; i < w.rows; ++i)
            grad[static_cast<std::size_t>(i)] *=
                activate_grad(pre[static_cast<std::size_t>(i)], act, net.beta);
        const std::vector<double>& below =
            l == 0 ? tape.input : tape.post[static_cast<std::size_t>(l - 1)];
        if (acc) {
            auto& gw = acc->w[static_cast<std::size_t>(l)];
            auto& gb = acc->b[static_cast<std::size_t>(l)];
            for (int i = 0; i < w.rows; ++i) {
                double gi = grad[static_cast<std::size_t>(i)];
                gb[static_cast<std::size_t>(i)] += gi;
                if (gi == 0.0) continue;
                double* grow = gw.row_ptr(i);
                for (int j = 0; j < w.cols; ++j) grow[j] += gi * below[static_cast<std::size_t>(j)];
            }
        }
        std::vector<double> grad_below(static_cast<std::size_t>(w.cols), 0.0);
        linalg::mat_t_vec(w, grad, grad_below);
        grad = std::move(grad_below);
    }
    return grad;
}

std::vector<double> check_loss(std::span<const double> w, std::span<const double> e,
                               double alpha) {
    if (w.size() != e.size()) throw ShapeError("check_loss length mismatch");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must be in (0, 1)");
    std::vector<double> r(w.size());
    for (std::size_t i = 0; i < w.size(); ++i)
        r[i] = w[i] >= e[i] ? alpha * (w[i] - e[i]) : (1.0 - alpha) * (e[i] - w[i]);
    return r;
}

double huber(double s, double delta) {
    if (!(delta > 0.0)) throw ValidationError("huber delta must be > 0");
    return s <= delta ? 0.5 * s * s : delta * (s - 0.5 * delta);
}

double huber_grad(double s, double delta) {
    return s <= delta ? s : delta;
}

double quantile_loss(std::span<const double> w, std::span<const double> e, double alpha,
                     double delta) {
    auto r = check_loss(w, e, alpha);
    double l1 = 0.0;
    for (double ri : r) l1 += ri;
    return huber(l1, delta);
}

std::vector<double> quantile_loss_grad_w(std::span<const double> w, std::span<const double> e,
                                         double alpha, double delta) {
    auto r = check_loss(w, e, alpha);
    double l1 = 0.0;
    for (double ri : r) l1 += ri;
    double outer = huber_grad(l1, delta);
    std::vector<double> g(w.size());
    for (std::size_t i = 0; i < w.size(); ++i)
        g[i] = outer * (w[i] >= e[i] ? alpha : -(1.0 - alpha));
    return g;
}

void adam_step(std::vector<double>& params, std::span<const double> grads, AdamState& state,
               const AdamConfig& cfg) {
    if (params.size() != grads.size()) throw ShapeError("adam param/grad size mismatch");
    if (state.m.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    if (state.m.size() != params.size()) throw ShapeError("adam state size mismatch");
    state.t += 1;
    double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
        double m_hat = state.m[i] / c1;
        double v_hat = state.v[i] / c2;
        params[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
}

}  // namespace tubeplan::nn
