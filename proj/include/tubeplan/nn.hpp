#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tubeplan/linalg.hpp"

namespace tubeplan::nn {

enum class Activation { Softplus, Identity };

double softplus(double x, double beta);
double softplus_grad(double x, double beta);  // = sigmoid(beta * x)

// Fully-connected net with softplus activations on every layer, including the
// output head (predictions are tube radii, so the head keeps them positive).
// The Identity activation exists as a test hook for checking linear algebra.
struct Mlp {
    std::vector<linalg::Matrix> weights;  // layer l: out x in
    std::vector<std::vector<double>> biases;
    double beta = 5.0;
    Activation hidden_act = Activation::Softplus;
    Activation output_act = Activation::Softplus;

    static Mlp create(const std::vector<int>& dims, double beta, uint64_t seed);

    int layer_count() const { return static_cast<int>(weights.size()); }
    int input_dim() const { return weights.empty() ? 0 : weights.front().cols; }
    int output_dim() const { return weights.empty() ? 0 : weights.back().rows; }
    std::size_t param_count() const;
    std::vector<double> flatten_params() const;
    void set_params(std::span<const double> flat);
};

struct MlpTape {
    std::vector<double> input;
    std::vector<std::vector<double>> pre;   // pre-activations per layer
    std::vector<std::vector<double>> post;  // post-activations per layer
};

// Forward pass; fills `tape` (when given) with what backward needs.
// Throws ShapeError on an input dimension mismatch.
std::vector<double> mlp_forward(const Mlp& net, std::span<const double> input,
                                MlpTape* tape = nullptr);

struct MlpGrads {
    std::vector<linalg::Matrix> w;
    std::vector<std::vector<double>> b;

    static MlpGrads zeros_like(const Mlp& net);
    void add_scaled(const MlpGrads& o, double s);
    void scale(double s);
    double sq_norm() const;
    std::vector<double> flatten() const;
};

// Reverse pass from `out_grad`; accumulates parameter gradients into `acc`
// (when given) and returns the gradient with respect to the input.
// Throws ShapeError if the tape does not match the net ("stale tape").
std::vector<double> mlp_backward(const Mlp& net, const MlpTape& tape,
                                 std::span<const double> out_grad, MlpGrads* acc = nullptr);

// Asymmetric quantile residual: alpha-weighted overprediction,
// (1-alpha)-weighted underprediction; zero exactly at w = e.
std::vector<double> check_loss(std::span<const double> w, std::span<const double> e, double alpha);

// Quadratic below delta, linear above, C1 at the knee.
double huber(double s, double delta);
double huber_grad(double s, double delta);

// huber(l1_norm(check_loss(w, e, alpha)), delta)
double quantile_loss(std::span<const double> w, std::span<const double> e, double alpha,
                     double delta);
std::vector<double> quantile_loss_grad_w(std::span<const double> w, std::span<const double> e,
                                         double alpha, double delta);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    long t = 0;
};

// First/second-moment update with bias correction over flat parameter arrays.
void adam_step(std::vector<double>& params, std::span<const double> grads, AdamState& state,
               const AdamConfig& cfg);

}  // namespace tubeplan::nn
