#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace gascast::neural {

struct Matrix {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> v;

    Matrix() = default;
    Matrix(size_t r, size_t c) : rows(r), cols(c), v(r * c, 0.0) {}
    double& at(size_t r, size_t c) { return v[r * cols + c]; }
    double at(size_t r, size_t c) const { return v[r * cols + c]; }
};

struct Shape {
    size_t rows = 0;  // timesteps
    size_t cols = 0;  // channels
    bool operator==(const Shape&) const = default;
};

struct Param {
    std::string name;
    std::vector<double>* w = nullptr;
    std::vector<double>* g = nullptr;
};

// Single-sequence layers: forward caches what backward needs; backward
// accumulates parameter gradients and returns the input gradient.
class Layer {
public:
    virtual ~Layer() = default;
    virtual Matrix forward(const Matrix& x) = 0;
    virtual Matrix backward(const Matrix& dy) = 0;
    // Shape inference without allocation; throws NumericalError naming the
    // layer on any mismatch.
    virtual Shape check(const Shape& in) const = 0;
    virtual void init(std::mt19937_64& rng) = 0;
    virtual void collect_params(const std::string& prefix,
                                std::vector<Param>& out) = 0;
};

std::unique_ptr<Layer> make_dense(size_t in, size_t out);
std::unique_ptr<Layer> make_tanh();
std::unique_ptr<Layer> make_lstm(size_t in, size_t units);
std::unique_ptr<Layer> make_conv1d(size_t in_channels, size_t filters,
                                   size_t kernel);
std::unique_ptr<Layer> make_last_step();
// Encoder LSTM produces hidden states h_i; an alignment LSTM consumes the
// full encoder sequence, its hidden states act as queries; k_i = v_i = h_i;
// dot-product scores, softmax weights, context = sum of weighted h_i.
std::unique_ptr<Layer> make_attention_head(size_t in, size_t units);
std::unique_ptr<Layer> make_sequential(std::vector<std::unique_ptr<Layer>> layers);

enum class ConcatMode { Columns, Rows };
// Fan-out: every branch sees the same input; outputs are concatenated along
// columns (equal row counts) or stacked along rows (equal column counts).
std::unique_ptr<Layer> make_parallel(std::vector<std::unique_ptr<Layer>> branches,
                                     ConcatMode mode);

class Network {
public:
    Network(std::unique_ptr<Layer> root, Shape input_shape);

    // Validates shape composition end to end; throws before any training.
    Shape output_shape() const;
    Shape input_shape() const { return input_shape_; }

    void init(uint64_t seed);
    Matrix forward(const Matrix& x);
    Matrix backward(const Matrix& dy);

    std::vector<Param>& params() { return params_; }
    size_t param_count() const;
    std::vector<double> get_params_flat() const;
    void set_params_flat(const std::vector<double>& flat);
    void zero_grads();

private:
    std::unique_ptr<Layer> root_;
    Shape input_shape_;
    std::vector<Param> params_;
};

struct AdamConfig {
    double alpha = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class AdamState {
public:
    AdamState(size_t n_params, AdamConfig cfg = {});
    // Standard update with bias correction; grads read from the network's
    // parameter gradient buffers.
    void step(std::vector<Param>& params);
    size_t steps_taken() const { return t_; }

private:
    AdamConfig cfg_;
    std::vector<double> m_;
    std::vector<double> v_;
    size_t t_ = 0;
};

struct Example {
    Matrix x;               // n x V
    std::vector<double> y;  // 1 or H targets
};

struct TrainConfig {
    size_t epochs = 15;
    size_t batch_size = 32;
    AdamConfig adam;
    uint64_t seed = 0;
};

struct TrainReport {
    std::vector<double> train_loss;  // per epoch, MSE on normalized targets
    std::vector<double> val_loss;
    size_t best_epoch = 0;
    std::vector<double> best_params;
};

// Chronological full passes, batch-accumulated gradients, one ADAM step per
// batch; checkpoint at the lowest validation loss. The network is left
// holding the checkpointed parameters.
TrainReport train(Network& net, const std::vector<Example>& train_set,
                  const std::vector<Example>& val_set, const TrainConfig& cfg);

double mse_loss(const Matrix& pred, const std::vector<double>& target);
double evaluate_loss(Network& net, const std::vector<Example>& set);

// Central finite differences (h = 1e-5) against analytic gradients on an MSE
// loss; returns the worst relative error and the offending parameter name.
struct GradientCheckResult {
    double max_rel_error = 0.0;
    std::string worst_param;
};
GradientCheckResult gradient_check(Network& net, const Example& example,
                                   double fd_step = 1e-5);

}  // namespace gascast::neural
