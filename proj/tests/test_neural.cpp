#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "gascast/errors.hpp"
#include "gascast/neural.hpp"
#include "test_support.hpp"

using namespace gascast::neural;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Matrix random_input(size_t rows, size_t cols, uint64_t seed) {
    const auto v = testsupport::gaussian_series(rows * cols, seed);
    Matrix x(rows, cols);
    x.v = v;
    return x;
}

// A dense layer whose backward pass deliberately corrupts one weight
// gradient: proves the finite-difference checker actually catches bugs.
class SabotagedDense final : public Layer {
public:
    SabotagedDense(size_t in, size_t out) : inner_(make_dense(in, out)) {}
    Matrix forward(const Matrix& x) override { return inner_->forward(x); }
    Matrix backward(const Matrix& dy) override {
        Matrix dx = inner_->backward(dy);
        std::vector<Param> params;
        inner_->collect_params("", params);
        (*params[0].g)[0] += 1.0;  // the sabotage
        return dx;
    }
    Shape check(const Shape& in) const override { return inner_->check(in); }
    void init(std::mt19937_64& rng) override { inner_->init(rng); }
    void collect_params(const std::string& prefix,
                        std::vector<Param>& out) override {
        inner_->collect_params(prefix, out);
    }

private:
    std::unique_ptr<Layer> inner_;
};

}  // namespace

TEST_CASE("shape validation happens before any training") {
    std::vector<std::unique_ptr<Layer>> layers;
    layers.push_back(make_lstm(2, 4));
    layers.push_back(make_last_step());
    layers.push_back(make_dense(5, 1));  // wrong: lstm emits 4 columns
    CHECK_THROWS_AS(Network(make_sequential(std::move(layers)), Shape{10, 2}),
                    gascast::NumericalError);
}

TEST_CASE("all-zero LSTM parameters and inputs produce zero output") {
    Network net(make_lstm(1, 3), {5, 1});
    net.set_params_flat(std::vector<double>(net.param_count(), 0.0));
    Matrix x(5, 1);
    const Matrix h = net.forward(x);
    for (double v : h.v) CHECK(v == 0.0);
}

TEST_CASE("2-unit LSTM over 3 steps matches a hand-rolled gate reference") {
    const size_t U = 2, T = 3;
    Network net(make_lstm(1, U), {T, 1});
    net.init(42);
    const auto p = net.get_params_flat();
    // Flat layout: wx (4U x 1), wh (4U x U), b (4U); gate rows i, f, g, o.
    const double* wx = p.data();
    const double* wh = p.data() + 4 * U;
    const double* b = p.data() + 4 * U + 4 * U * U;

    const Matrix x = random_input(T, 1, 7);
    const Matrix h_lib = net.forward(x);

    double h_prev[U] = {0.0, 0.0}, c_prev[U] = {0.0, 0.0};
    for (size_t t = 0; t < T; ++t) {
        double z[4 * U];
        for (size_t r = 0; r < 4 * U; ++r) {
            z[r] = b[r] + wx[r] * x.at(t, 0);
            for (size_t c = 0; c < U; ++c) z[r] += wh[r * U + c] * h_prev[c];
        }
        double h_new[U], c_new[U];
        for (size_t u = 0; u < U; ++u) {
            const double gi = sigmoid(z[u]);
            const double gf = sigmoid(z[U + u]);
            const double gg = std::tanh(z[2 * U + u]);
            const double go = sigmoid(z[3 * U + u]);
            c_new[u] = gf * c_prev[u] + gi * gg;
            h_new[u] = go * std::tanh(c_new[u]);
        }
        for (size_t u = 0; u < U; ++u) {
            CHECK(h_lib.at(t, u) == doctest::Approx(h_new[u]).epsilon(1e-12));
            h_prev[u] = h_new[u];
            c_prev[u] = c_new[u];
        }
    }
}

TEST_CASE("attention over a single timestep ignores the alignment model") {
    Network net(make_attention_head(3, 4), {1, 3});
    net.init(11);
    const Matrix x = random_input(1, 3, 5);
    const Matrix y0 = net.forward(x);
    REQUIRE(y0.rows == 1);
    REQUIRE(y0.cols == 4);

    // Softmax over one score is 1 whatever the alignment LSTM computes, so
    // perturbing its parameters must leave the context unchanged.
    for (auto& param : net.params()) {
        if (param.name.find("att.align.") == std::string::npos) continue;
        for (double& w : *param.w) w += 0.37;
    }
    const Matrix y1 = net.forward(x);
    for (size_t i = 0; i < y0.v.size(); ++i)
        CHECK(y1.v[i] == doctest::Approx(y0.v[i]).epsilon(1e-12));
}

TEST_CASE("conv1d with a single-tap kernel equals the dense equivalent") {
    const size_t in = 2, out = 3, T = 6;
    Network conv(make_conv1d(in, out, 1), {T, in});
    Network dense(make_dense(in, out), {T, in});
    conv.init(3);
    dense.set_params_flat(conv.get_params_flat());

    const Matrix x = random_input(T, in, 21);
    const Matrix yc = conv.forward(x);
    const Matrix yd = dense.forward(x);
    REQUIRE(yc.v.size() == yd.v.size());
    for (size_t i = 0; i < yc.v.size(); ++i)
        CHECK(yc.v[i] == doctest::Approx(yd.v[i]).epsilon(1e-12));

    Matrix dy = random_input(T, out, 22);
    conv.zero_grads();
    dense.zero_grads();
    const Matrix dxc = conv.backward(dy);
    const Matrix dxd = dense.backward(dy);
    for (size_t i = 0; i < dxc.v.size(); ++i)
        CHECK(dxc.v[i] == doctest::Approx(dxd.v[i]).epsilon(1e-12));
    // Same flat gradient: conv (w, b) vs dense (w, b) share the layout.
    std::vector<double> gc, gd;
    for (auto& p : conv.params()) gc.insert(gc.end(), p.g->begin(), p.g->end());
    for (auto& p : dense.params()) gd.insert(gd.end(), p.g->begin(), p.g->end());
    REQUIRE(gc.size() == gd.size());
    for (size_t i = 0; i < gc.size(); ++i)
        CHECK(gc[i] == doctest::Approx(gd[i]).epsilon(1e-12));
}

TEST_CASE("perfect prediction yields all-zero parameter gradients") {
    std::vector<std::unique_ptr<Layer>> layers;
    layers.push_back(make_dense(2, 2));
    layers.push_back(make_last_step());
    Network net(make_sequential(std::move(layers)), {3, 2});
    net.init(9);
    const Matrix x = random_input(3, 2, 2);
    const Matrix pred = net.forward(x);
    // Loss gradient of MSE at y_pred == y_true is zero.
    Matrix dy(pred.rows, pred.cols);
    net.zero_grads();
    net.backward(dy);
    for (auto& p : net.params())
        for (double g : *p.g) CHECK(g == 0.0);
}

TEST_CASE("gradient check: plain dense network is exact to 1e-9") {
    std::vector<std::unique_ptr<Layer>> layers;
    layers.push_back(make_last_step());
    layers.push_back(make_dense(3, 2));
    Network net(make_sequential(std::move(layers)), {4, 3});
    net.init(17);
    Example ex{random_input(4, 3, 31), {0.3, -0.7}};
    const auto res = gradient_check(net, ex);
    CHECK(res.max_rel_error < 1e-9);
}

TEST_CASE("gradient check: every layer kind in one network, error < 1e-4") {
    // dense + lstm + conv1d + attention head + parallel concat, all at once.
    std::vector<std::unique_ptr<Layer>> branch1;
    branch1.push_back(make_conv1d(2, 3, 3));
    branch1.push_back(make_lstm(3, 4));
    std::vector<std::unique_ptr<Layer>> branch2;
    branch2.push_back(make_attention_head(2, 4));

    std::vector<std::unique_ptr<Layer>> b1seq;
    b1seq.push_back(make_sequential(std::move(branch1)));
    b1seq.push_back(make_last_step());

    std::vector<std::unique_ptr<Layer>> branches;
    branches.push_back(make_sequential(std::move(b1seq)));
    branches.push_back(make_sequential(std::move(branch2)));

    std::vector<std::unique_ptr<Layer>> top;
    top.push_back(make_parallel(std::move(branches), ConcatMode::Columns));
    top.push_back(make_tanh());
    top.push_back(make_dense(8, 2));
    Network net(make_sequential(std::move(top)), {5, 2});
    net.init(23);

    Example ex{random_input(5, 2, 41), {0.5, -0.25}};
    const auto res = gradient_check(net, ex);
    CHECK(res.max_rel_error < 1e-4);
}

TEST_CASE("gradient check: row-stacked parallel branches") {
    std::vector<std::unique_ptr<Layer>> branches;
    for (int i = 0; i < 3; ++i) branches.push_back(make_attention_head(2, 3));
    std::vector<std::unique_ptr<Layer>> top;
    top.push_back(make_parallel(std::move(branches), ConcatMode::Rows));
    top.push_back(make_lstm(3, 2));
    top.push_back(make_last_step());
    top.push_back(make_dense(2, 1));
    Network net(make_sequential(std::move(top)), {4, 2});
    net.init(29);
    Example ex{random_input(4, 2, 43), {0.1}};
    const auto res = gradient_check(net, ex);
    CHECK(res.max_rel_error < 1e-4);
}

TEST_CASE("sabotaged gradient is detected by the checker") {
    std::vector<std::unique_ptr<Layer>> layers;
    layers.push_back(std::make_unique<SabotagedDense>(2, 2));
    layers.push_back(make_last_step());
    Network net(make_sequential(std::move(layers)), {3, 2});
    net.init(5);
    Example ex{random_input(3, 2, 51), {1.0, -1.0}};
    const auto res = gradient_check(net, ex);
    CHECK(res.max_rel_error > 1e-2);
}

TEST_CASE("adam: zero gradients leave parameters untouched") {
    std::vector<double> w = {1.0, -2.0, 3.0};
    std::vector<double> g = {0.0, 0.0, 0.0};
    std::vector<Param> params = {{"w", &w, &g}};
    AdamState adam(3);
    for (int i = 0; i < 10; ++i) adam.step(params);
    CHECK(w == std::vector<double>{1.0, -2.0, 3.0});
}

TEST_CASE("adam: constant gradient steps stay bounded near alpha") {
    std::vector<double> w = {0.0};
    std::vector<double> g = {2.5};
    std::vector<Param> params = {{"w", &w, &g}};
    AdamConfig cfg;
    AdamState adam(1, cfg);
    double prev = w[0];
    for (int i = 0; i < 50; ++i) {
        adam.step(params);
        const double delta = std::fabs(w[0] - prev);
        CHECK(delta <= cfg.alpha * 1.01);
        prev = w[0];
    }
}

TEST_CASE("adam: 100 steps shrink a 1-D quadratic monotonically") {
    // loss = 0.5 w^2, gradient = w; after a short warm-up each step must not
    // increase the loss.
    std::vector<double> w = {5.0};
    std::vector<double> g = {0.0};
    std::vector<Param> params = {{"w", &w, &g}};
    AdamConfig cfg;
    cfg.alpha = 0.05;
    AdamState adam(1, cfg);
    double prev_loss = 0.5 * w[0] * w[0];
    for (int i = 0; i < 100; ++i) {
        g[0] = w[0];
        adam.step(params);
        const double loss = 0.5 * w[0] * w[0];
        if (i >= 5) CHECK(loss <= prev_loss + 1e-12);
        prev_loss = loss;
    }
    CHECK(prev_loss < 0.5 * 25.0);
}

namespace {

std::vector<Example> sine_examples(size_t count, size_t n, uint64_t seed) {
    const auto series = testsupport::sinusoid_ar1(count + n + 1, seed, 1.0, 0.0,
                                                  0.3, 0.05, 24);
    std::vector<Example> out;
    for (size_t i = 0; i < count; ++i) {
        Example ex;
        ex.x = Matrix(n, 1);
        for (size_t r = 0; r < n; ++r) ex.x.at(r, 0) = series[i + r];
        ex.y = {series[i + n]};
        out.push_back(std::move(ex));
    }
    return out;
}

Network small_lstm_net(size_t n) {
    std::vector<std::unique_ptr<Layer>> layers;
    layers.push_back(make_lstm(1, 6));
    layers.push_back(make_last_step());
    layers.push_back(make_dense(6, 1));
    return Network(make_sequential(std::move(layers)), {n, 1});
}

}  // namespace

TEST_CASE("train: zero learning rate freezes parameters and losses") {
    const auto train_set = sine_examples(40, 12, 61);
    const auto val_set = sine_examples(12, 12, 62);
    Network net = small_lstm_net(12);
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.adam.alpha = 0.0;
    cfg.seed = 5;
    const auto rep = train(net, train_set, val_set, cfg);
    for (size_t e = 1; e < rep.train_loss.size(); ++e) {
        CHECK(rep.train_loss[e] == rep.train_loss[0]);
        CHECK(rep.val_loss[e] == rep.val_loss[0]);
    }
}

TEST_CASE("train: same seed twice is bitwise identical") {
    const auto train_set = sine_examples(40, 12, 63);
    const auto val_set = sine_examples(12, 12, 64);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.seed = 77;

    Network a = small_lstm_net(12);
    const auto ra = train(a, train_set, val_set, cfg);
    Network b = small_lstm_net(12);
    const auto rb = train(b, train_set, val_set, cfg);

    REQUIRE(ra.train_loss.size() == rb.train_loss.size());
    for (size_t e = 0; e < ra.train_loss.size(); ++e) {
        CHECK(ra.train_loss[e] == rb.train_loss[e]);
        CHECK(ra.val_loss[e] == rb.val_loss[e]);
    }
    CHECK(ra.best_epoch == rb.best_epoch);
    CHECK(a.get_params_flat() == b.get_params_flat());
}

TEST_CASE("train: checkpointed parameters reproduce the best epoch loss") {
    const auto train_set = sine_examples(60, 12, 65);
    const auto val_set = sine_examples(20, 12, 66);
    Network net = small_lstm_net(12);
    TrainConfig cfg;
    cfg.epochs = 6;
    cfg.seed = 13;
    const auto rep = train(net, train_set, val_set, cfg);
    double best = rep.val_loss[0];
    for (double v : rep.val_loss) best = std::min(best, v);
    CHECK(rep.val_loss[rep.best_epoch] == best);
    CHECK(evaluate_loss(net, val_set) == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("train: sinusoid LSTM learns (loss drops substantially)") {
    const auto train_set = sine_examples(200, 24, 67);
    const auto val_set = sine_examples(60, 24, 68);
    Network net = small_lstm_net(24);
    TrainConfig cfg;
    cfg.epochs = 15;
    cfg.seed = 3;
    const auto rep = train(net, train_set, val_set, cfg);
    CHECK(rep.val_loss[rep.best_epoch] < 0.5 * rep.val_loss.front());
}

TEST_CASE("mse_loss: hand values") {
    Matrix pred(1, 2);
    pred.at(0, 0) = 1.0;
    pred.at(0, 1) = 3.0;
    CHECK(mse_loss(pred, {0.0, 1.0}) == doctest::Approx(2.5));
}
