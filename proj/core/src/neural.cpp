#include "gascast/neural.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

#include "gascast/errors.hpp"

namespace gascast::neural {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void init_uniform(std::vector<double>& w, size_t fan_in, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& x : w) x = dist(rng);
}

[[noreturn]] void shape_error(const std::string& layer, const std::string& what) {
    throw NumericalError("shape mismatch in " + layer + ": " + what);
}

class DenseLayer final : public Layer {
public:
    DenseLayer(size_t in, size_t out) : in_(in), out_(out) {
        w_.resize(in * out, 0.0);
        b_.resize(out, 0.0);
        gw_.resize(w_.size(), 0.0);
        gb_.resize(b_.size(), 0.0);
    }

    Shape check(const Shape& s) const override {
        if (s.cols != in_) shape_error("dense", "expected " + std::to_string(in_) +
                                       " input columns, got " + std::to_string(s.cols));
        return {s.rows, out_};
    }

    Matrix forward(const Matrix& x) override {
        check({x.rows, x.cols});
        x_ = x;
        Matrix y(x.rows, out_);
        for (size_t r = 0; r < x.rows; ++r)
            for (size_t o = 0; o < out_; ++o) {
                double acc = b_[o];
                for (size_t i = 0; i < in_; ++i)
                    acc += x.at(r, i) * w_[o * in_ + i];
                y.at(r, o) = acc;
            }
        return y;
    }

    Matrix backward(const Matrix& dy) override {
        Matrix dx(x_.rows, in_);
        for (size_t r = 0; r < x_.rows; ++r)
            for (size_t o = 0; o < out_; ++o) {
                const double g = dy.at(r, o);
                gb_[o] += g;
                for (size_t i = 0; i < in_; ++i) {
                    gw_[o * in_ + i] += x_.at(r, i) * g;
                    dx.at(r, i) += w_[o * in_ + i] * g;
                }
            }
        return dx;
    }

    void init(std::mt19937_64& rng) override {
        init_uniform(w_, in_, rng);
        std::fill(b_.begin(), b_.end(), 0.0);
    }

    void collect_params(const std::string& prefix, std::vector<Param>& out) override {
        out.push_back({prefix + "dense.w", &w_, &gw_});
        out.push_back({prefix + "dense.b", &b_, &gb_});
    }

private:
    size_t in_, out_;
    std::vector<double> w_, b_, gw_, gb_;
    Matrix x_;
};

class TanhLayer final : public Layer {
public:
    Shape check(const Shape& s) const override { return s; }

    Matrix forward(const Matrix& x) override {
        y_ = x;
        for (double& v : y_.v) v = std::tanh(v);
        return y_;
    }

    Matrix backward(const Matrix& dy) override {
        Matrix dx = dy;
        for (size_t i = 0; i < dx.v.size(); ++i)
            dx.v[i] *= 1.0 - y_.v[i] * y_.v[i];
        return dx;
    }

    void init(std::mt19937_64&) override {}
    void collect_params(const std::string&, std::vector<Param>&) override {}

private:
    Matrix y_;
};

class LastStepLayer final : public Layer {
public:
    Shape check(const Shape& s) const override {
        if (s.rows == 0) shape_error("last_step", "empty sequence");
        return {1, s.cols};
    }

    Matrix forward(const Matrix& x) override {
        rows_ = x.rows;
        Matrix y(1, x.cols);
        for (size_t c = 0; c < x.cols; ++c) y.at(0, c) = x.at(x.rows - 1, c);
        return y;
    }

    Matrix backward(const Matrix& dy) override {
        Matrix dx(rows_, dy.cols);
        for (size_t c = 0; c < dy.cols; ++c) dx.at(rows_ - 1, c) = dy.at(0, c);
        return dx;
    }

    void init(std::mt19937_64&) override {}
    void collect_params(const std::string&, std::vector<Param>&) override {}

private:
    size_t rows_ = 0;
};

class Conv1dLayer final : public Layer {
public:
    Conv1dLayer(size_t in_channels, size_t filters, size_t kernel)
        : in_(in_channels), filters_(filters), kernel_(kernel),
          pad_(kernel / 2) {
        if (kernel % 2 == 0)
            throw UsageError("conv1d: kernel size must be odd for same-length padding");
        w_.resize(filters * kernel * in_channels, 0.0);
        b_.resize(filters, 0.0);
        gw_.resize(w_.size(), 0.0);
        gb_.resize(b_.size(), 0.0);
    }

    Shape check(const Shape& s) const override {
        if (s.cols != in_) shape_error("conv1d", "expected " + std::to_string(in_) +
                                       " channels, got " + std::to_string(s.cols));
        return {s.rows, filters_};
    }

    Matrix forward(const Matrix& x) override {
        check({x.rows, x.cols});
        x_ = x;
        const long long T = static_cast<long long>(x.rows);
        Matrix y(x.rows, filters_);
        for (long long t = 0; t < T; ++t)
            for (size_t f = 0; f < filters_; ++f) {
                double acc = b_[f];
                for (size_t k = 0; k < kernel_; ++k) {
                    const long long src = t + static_cast<long long>(k) -
                                          static_cast<long long>(pad_);
                    if (src < 0 || src >= T) continue;
                    for (size_t c = 0; c < in_; ++c)
                        acc += w_[(f * kernel_ + k) * in_ + c] *
                               x.at(static_cast<size_t>(src), c);
                }
                y.at(static_cast<size_t>(t), f) = acc;
            }
        return y;
    }

    Matrix backward(const Matrix& dy) override {
        const long long T = static_cast<long long>(x_.rows);
        Matrix dx(x_.rows, in_);
        for (long long t = 0; t < T; ++t)
            for (size_t f = 0; f < filters_; ++f) {
                const double g = dy.at(static_cast<size_t>(t), f);
                gb_[f] += g;
                for (size_t k = 0; k < kernel_; ++k) {
                    const long long src = t + static_cast<long long>(k) -
                                          static_cast<long long>(pad_);
                    if (src < 0 || src >= T) continue;
                    for (size_t c = 0; c < in_; ++c) {
                        gw_[(f * kernel_ + k) * in_ + c] +=
                            g * x_.at(static_cast<size_t>(src), c);
                        dx.at(static_cast<size_t>(src), c) +=
                            g * w_[(f * kernel_ + k) * in_ + c];
                    }
                }
            }
        return dx;
    }

    void init(std::mt19937_64& rng) override {
        init_uniform(w_, kernel_ * in_, rng);
        std::fill(b_.begin(), b_.end(), 0.0);
    }

    void collect_params(const std::string& prefix, std::vector<Param>& out) override {
        out.push_back({prefix + "conv1d.w", &w_, &gw_});
        out.push_back({prefix + "conv1d.b", &b_, &gb_});
    }

private:
    size_t in_, filters_, kernel_, pad_;
    std::vector<double> w_, b_, gw_, gb_;
    Matrix x_;
};

// Gate order in the stacked 4U blocks: input, forget, cell, output.
class LstmLayer final : public Layer {
public:
    LstmLayer(size_t in, size_t units) : in_(in), units_(units) {
        wx_.resize(4 * units * in, 0.0);
        wh_.resize(4 * units * units, 0.0);
        b_.resize(4 * units, 0.0);
        gwx_.resize(wx_.size(), 0.0);
        gwh_.resize(wh_.size(), 0.0);
        gb_.resize(b_.size(), 0.0);
    }

    Shape check(const Shape& s) const override {
        if (s.cols != in_) shape_error("lstm", "expected " + std::to_string(in_) +
                                       " input columns, got " + std::to_string(s.cols));
        return {s.rows, units_};
    }

    Matrix forward(const Matrix& x) override {
        check({x.rows, x.cols});
        x_ = x;
        const size_t T = x.rows;
        const size_t U = units_;
        gate_i_ = Matrix(T, U); gate_f_ = Matrix(T, U);
        gate_g_ = Matrix(T, U); gate_o_ = Matrix(T, U);
        cell_ = Matrix(T, U); tanh_c_ = Matrix(T, U);
        Matrix h(T, U);

        std::vector<double> h_prev(U, 0.0), c_prev(U, 0.0), z(4 * U);
        for (size_t t = 0; t < T; ++t) {
            for (size_t r = 0; r < 4 * U; ++r) {
                double acc = b_[r];
                for (size_t c = 0; c < in_; ++c) acc += wx_[r * in_ + c] * x.at(t, c);
                for (size_t c = 0; c < U; ++c) acc += wh_[r * U + c] * h_prev[c];
                z[r] = acc;
            }
            for (size_t u = 0; u < U; ++u) {
                const double gi = sigmoid(z[u]);
                const double gf = sigmoid(z[U + u]);
                const double gg = std::tanh(z[2 * U + u]);
                const double go = sigmoid(z[3 * U + u]);
                const double c_new = gf * c_prev[u] + gi * gg;
                const double tc = std::tanh(c_new);
                gate_i_.at(t, u) = gi;
                gate_f_.at(t, u) = gf;
                gate_g_.at(t, u) = gg;
                gate_o_.at(t, u) = go;
                cell_.at(t, u) = c_new;
                tanh_c_.at(t, u) = tc;
                h.at(t, u) = go * tc;
            }
            for (size_t u = 0; u < U; ++u) {
                h_prev[u] = h.at(t, u);
                c_prev[u] = cell_.at(t, u);
            }
        }
        h_ = h;
        return h;
    }

    Matrix backward(const Matrix& dH) override {
        const size_t T = x_.rows;
        const size_t U = units_;
        Matrix dx(T, in_);
        std::vector<double> dh_next(U, 0.0), dc_next(U, 0.0), dz(4 * U);

        for (size_t t = T; t-- > 0;) {
            for (size_t u = 0; u < U; ++u) {
                const double dh = dH.at(t, u) + dh_next[u];
                const double go = gate_o_.at(t, u);
                const double tc = tanh_c_.at(t, u);
                const double d_o = dh * tc;
                double dc = dc_next[u] + dh * go * (1.0 - tc * tc);
                const double gi = gate_i_.at(t, u);
                const double gf = gate_f_.at(t, u);
                const double gg = gate_g_.at(t, u);
                const double c_prev = t == 0 ? 0.0 : cell_.at(t - 1, u);
                const double d_i = dc * gg;
                const double d_g = dc * gi;
                const double d_f = dc * c_prev;
                dc_next[u] = dc * gf;
                dz[u] = d_i * gi * (1.0 - gi);
                dz[U + u] = d_f * gf * (1.0 - gf);
                dz[2 * U + u] = d_g * (1.0 - gg * gg);
                dz[3 * U + u] = d_o * go * (1.0 - go);
            }
            for (size_t r = 0; r < 4 * U; ++r) {
                const double g = dz[r];
                gb_[r] += g;
                for (size_t c = 0; c < in_; ++c) {
                    gwx_[r * in_ + c] += g * x_.at(t, c);
                    dx.at(t, c) += g * wx_[r * in_ + c];
                }
            }
            std::fill(dh_next.begin(), dh_next.end(), 0.0);
            if (t > 0) {
                for (size_t r = 0; r < 4 * U; ++r) {
                    const double g = dz[r];
                    for (size_t c = 0; c < U; ++c) {
                        gwh_[r * U + c] += g * h_.at(t - 1, c);
                        dh_next[c] += g * wh_[r * U + c];
                    }
                }
            }
        }
        return dx;
    }

    void init(std::mt19937_64& rng) override {
        init_uniform(wx_, in_, rng);
        init_uniform(wh_, units_, rng);
        std::fill(b_.begin(), b_.end(), 0.0);
        // Forget-gate bias +1.
        for (size_t u = 0; u < units_; ++u) b_[units_ + u] = 1.0;
    }

    void collect_params(const std::string& prefix, std::vector<Param>& out) override {
        out.push_back({prefix + "lstm.wx", &wx_, &gwx_});
        out.push_back({prefix + "lstm.wh", &wh_, &gwh_});
        out.push_back({prefix + "lstm.b", &b_, &gb_});
    }

private:
    size_t in_, units_;
    std::vector<double> wx_, wh_, b_, gwx_, gwh_, gb_;
    Matrix x_, h_, gate_i_, gate_f_, gate_g_, gate_o_, cell_, tanh_c_;
};

class AttentionHeadLayer final : public Layer {
public:
    AttentionHeadLayer(size_t in, size_t units)
        : units_(units), encoder_(in, units), align_(units, units) {}

    Shape check(const Shape& s) const override {
        const Shape h = encoder_.check(s);
        align_.check(h);
        return {1, units_};
    }

    Matrix forward(const Matrix& x) override {
        h_ = encoder_.forward(x);
        ht_ = align_.forward(h_);
        const size_t T = h_.rows;

        std::vector<double> scores(T);
        double max_score = -1e300;
        for (size_t t = 0; t < T; ++t) {
            double e = 0.0;
            for (size_t u = 0; u < units_; ++u) e += ht_.at(t, u) * h_.at(t, u);
            scores[t] = e;
            max_score = std::max(max_score, e);
        }
        alpha_.assign(T, 0.0);
        double z = 0.0;
        for (size_t t = 0; t < T; ++t) {
            alpha_[t] = std::exp(scores[t] - max_score);
            z += alpha_[t];
        }
        double asum = 0.0;
        for (double& a : alpha_) {
            a /= z;
            asum += a;
        }
        assert(std::fabs(asum - 1.0) < 1e-9);

        Matrix ctx(1, units_);
        for (size_t t = 0; t < T; ++t)
            for (size_t u = 0; u < units_; ++u)
                ctx.at(0, u) += alpha_[t] * h_.at(t, u);
        return ctx;
    }

    Matrix backward(const Matrix& dctx) override {
        const size_t T = h_.rows;
        Matrix dh(T, units_);
        std::vector<double> dalpha(T, 0.0);
        for (size_t t = 0; t < T; ++t)
            for (size_t u = 0; u < units_; ++u) {
                dalpha[t] += dctx.at(0, u) * h_.at(t, u);
                dh.at(t, u) += alpha_[t] * dctx.at(0, u);
            }
        // Softmax jacobian.
        double dot = 0.0;
        for (size_t t = 0; t < T; ++t) dot += alpha_[t] * dalpha[t];
        Matrix dht(T, units_);
        for (size_t t = 0; t < T; ++t) {
            const double de = alpha_[t] * (dalpha[t] - dot);
            for (size_t u = 0; u < units_; ++u) {
                dht.at(t, u) += de * h_.at(t, u);
                dh.at(t, u) += de * ht_.at(t, u);
            }
        }
        const Matrix dh_from_align = align_.backward(dht);
        for (size_t i = 0; i < dh.v.size(); ++i) dh.v[i] += dh_from_align.v[i];
        return encoder_.backward(dh);
    }

    void init(std::mt19937_64& rng) override {
        encoder_.init(rng);
        align_.init(rng);
    }

    void collect_params(const std::string& prefix, std::vector<Param>& out) override {
        encoder_.collect_params(prefix + "att.enc.", out);
        align_.collect_params(prefix + "att.align.", out);
    }

private:
    size_t units_;
    LstmLayer encoder_;
    LstmLayer align_;
    Matrix h_, ht_;
    std::vector<double> alpha_;
};

class SequentialLayer final : public Layer {
public:
    explicit SequentialLayer(std::vector<std::unique_ptr<Layer>> layers)
        : layers_(std::move(layers)) {}

    Shape check(const Shape& in) const override {
        Shape s = in;
        for (const auto& l : layers_) s = l->check(s);
        return s;
    }

    Matrix forward(const Matrix& x) override {
        Matrix cur = x;
        for (auto& l : layers_) cur = l->forward(cur);
        return cur;
    }

    Matrix backward(const Matrix& dy) override {
        Matrix cur = dy;
        for (size_t i = layers_.size(); i-- > 0;) cur = layers_[i]->backward(cur);
        return cur;
    }

    void init(std::mt19937_64& rng) override {
        for (auto& l : layers_) l->init(rng);
    }

    void collect_params(const std::string& prefix, std::vector<Param>& out) override {
        for (size_t i = 0; i < layers_.size(); ++i)
            layers_[i]->collect_params(prefix + std::to_string(i) + ".", out);
    }

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

class ParallelLayer final : public Layer {
public:
    ParallelLayer(std::vector<std::unique_ptr<Layer>> branches, ConcatMode mode)
        : branches_(std::move(branches)), mode_(mode) {
        if (branches_.empty()) throw UsageError("parallel: no branches");
    }

    Shape check(const Shape& in) const override {
        Shape first = branches_.front()->check(in);
        size_t total = mode_ == ConcatMode::Columns ? first.cols : first.rows;
        for (size_t i = 1; i < branches_.size(); ++i) {
            const Shape s = branches_[i]->check(in);
            if (mode_ == ConcatMode::Columns) {
                if (s.rows != first.rows)
                    shape_error("parallel", "branch row counts differ");
                total += s.cols;
            } else {
                if (s.cols != first.cols)
                    shape_error("parallel", "branch column counts differ");
                total += s.rows;
            }
        }
        return mode_ == ConcatMode::Columns ? Shape{first.rows, total}
                                            : Shape{total, first.cols};
    }

    Matrix forward(const Matrix& x) override {
        outs_.clear();
        for (auto& b : branches_) outs_.push_back(b->forward(x));
        in_shape_ = {x.rows, x.cols};

        if (mode_ == ConcatMode::Columns) {
            size_t total_cols = 0;
            for (const auto& o : outs_) total_cols += o.cols;
            Matrix y(outs_.front().rows, total_cols);
            size_t off = 0;
            for (const auto& o : outs_) {
                for (size_t r = 0; r < o.rows; ++r)
                    for (size_t c = 0; c < o.cols; ++c)
                        y.at(r, off + c) = o.at(r, c);
                off += o.cols;
            }
            return y;
        }
        size_t total_rows = 0;
        for (const auto& o : outs_) total_rows += o.rows;
        Matrix y(total_rows, outs_.front().cols);
        size_t off = 0;
        for (const auto& o : outs_) {
            for (size_t r = 0; r < o.rows; ++r)
                for (size_t c = 0; c < o.cols; ++c)
                    y.at(off + r, c) = o.at(r, c);
            off += o.rows;
        }
        return y;
    }

    Matrix backward(const Matrix& dy) override {
        Matrix dx(in_shape_.rows, in_shape_.cols);
        size_t off = 0;
        for (size_t bi = 0; bi < branches_.size(); ++bi) {
            const Matrix& o = outs_[bi];
            Matrix slice(o.rows, o.cols);
            if (mode_ == ConcatMode::Columns) {
                for (size_t r = 0; r < o.rows; ++r)
                    for (size_t c = 0; c < o.cols; ++c)
                        slice.at(r, c) = dy.at(r, off + c);
                off += o.cols;
            } else {
                for (size_t r = 0; r < o.rows; ++r)
                    for (size_t c = 0; c < o.cols; ++c)
                        slice.at(r, c) = dy.at(off + r, c);
                off += o.rows;
            }
            const Matrix dxi = branches_[bi]->backward(slice);
            for (size_t i = 0; i < dx.v.size(); ++i) dx.v[i] += dxi.v[i];
        }
        return dx;
    }

    void init(std::mt19937_64& rng) override {
        for (auto& b : branches_) b->init(rng);
    }

    void collect_params(const std::string& prefix, std::vector<Param>& out) override {
        for (size_t i = 0; i < branches_.size(); ++i)
            branches_[i]->collect_params(prefix + "head" + std::to_string(i) + ".", out);
    }

private:
    std::vector<std::unique_ptr<Layer>> branches_;
    ConcatMode mode_;
    std::vector<Matrix> outs_;
    Shape in_shape_;
};

}  // namespace

std::unique_ptr<Layer> make_dense(size_t in, size_t out) {
    return std::make_unique<DenseLayer>(in, out);
}
std::unique_ptr<Layer> make_tanh() { return std::make_unique<TanhLayer>(); }
std::unique_ptr<Layer> make_lstm(size_t in, size_t units) {
    return std::make_unique<LstmLayer>(in, units);
}
std::unique_ptr<Layer> make_conv1d(size_t in_channels, size_t filters, size_t kernel) {
    return std::make_unique<Conv1dLayer>(in_channels, filters, kernel);
}
std::unique_ptr<Layer> make_last_step() { return std::make_unique<LastStepLayer>(); }
std::unique_ptr<Layer> make_attention_head(size_t in, size_t units) {
    return std::make_unique<AttentionHeadLayer>(in, units);
}
std::unique_ptr<Layer> make_sequential(std::vector<std::unique_ptr<Layer>> layers) {
    return std::make_unique<SequentialLayer>(std::move(layers));
}
std::unique_ptr<Layer> make_parallel(std::vector<std::unique_ptr<Layer>> branches,
                                     ConcatMode mode) {
    return std::make_unique<ParallelLayer>(std::move(branches), mode);
}

Network::Network(std::unique_ptr<Layer> root, Shape input_shape)
    : root_(std::move(root)), input_shape_(input_shape) {
    root_->check(input_shape_);  // validate before any allocation-heavy work
    root_->collect_params("", params_);
}

Shape Network::output_shape() const { return root_->check(input_shape_); }

void Network::init(uint64_t seed) {
    std::mt19937_64 rng(seed);
    root_->init(rng);
}

Matrix Network::forward(const Matrix& x) {
    if (Shape{x.rows, x.cols} != input_shape_)
        throw NumericalError("network input shape mismatch");
    return root_->forward(x);
}

Matrix Network::backward(const Matrix& dy) { return root_->backward(dy); }

size_t Network::param_count() const {
    size_t n = 0;
    for (const auto& p : params_) n += p.w->size();
    return n;
}

std::vector<double> Network::get_params_flat() const {
    std::vector<double> flat;
    flat.reserve(param_count());
    for (const auto& p : params_) flat.insert(flat.end(), p.w->begin(), p.w->end());
    return flat;
}

void Network::set_params_flat(const std::vector<double>& flat) {
    size_t off = 0;
    for (auto& p : params_) {
        if (off + p.w->size() > flat.size())
            throw UsageError("set_params_flat: size mismatch");
        std::copy(flat.begin() + off, flat.begin() + off + p.w->size(), p.w->begin());
        off += p.w->size();
    }
    if (off != flat.size()) throw UsageError("set_params_flat: size mismatch");
}

void Network::zero_grads() {
    for (auto& p : params_) std::fill(p.g->begin(), p.g->end(), 0.0);
}

AdamState::AdamState(size_t n_params, AdamConfig cfg)
    : cfg_(cfg), m_(n_params, 0.0), v_(n_params, 0.0) {}

void AdamState::step(std::vector<Param>& params) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    size_t off = 0;
    for (auto& p : params) {
        for (size_t i = 0; i < p.w->size(); ++i) {
            const double g = (*p.g)[i];
            m_[off + i] = cfg_.beta1 * m_[off + i] + (1.0 - cfg_.beta1) * g;
            v_[off + i] = cfg_.beta2 * v_[off + i] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = m_[off + i] / bc1;
            const double vhat = v_[off + i] / bc2;
            (*p.w)[i] -= cfg_.alpha * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
        off += p.w->size();
    }
}

double mse_loss(const Matrix& pred, const std::vector<double>& target) {
    if (pred.v.size() != target.size())
        throw UsageError("mse_loss: output/target size mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < target.size(); ++i) {
        const double e = pred.v[i] - target[i];
        acc += e * e;
    }
    return acc / static_cast<double>(target.size());
}

double evaluate_loss(Network& net, const std::vector<Example>& set) {
    if (set.empty()) throw UsageError("evaluate_loss: empty set");
    double acc = 0.0;
    for (const auto& ex : set) acc += mse_loss(net.forward(ex.x), ex.y);
    return acc / static_cast<double>(set.size());
}

TrainReport train(Network& net, const std::vector<Example>& train_set,
                  const std::vector<Example>& val_set, const TrainConfig& cfg) {
    if (train_set.empty() || val_set.empty())
        throw UsageError("train: empty train or validation set");

    net.init(cfg.seed);
    AdamState adam(net.param_count(), cfg.adam);

    TrainReport report;
    double best = std::numeric_limits<double>::infinity();
    for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        size_t seen = 0;
        for (size_t start = 0; start < train_set.size(); start += cfg.batch_size) {
            const size_t end = std::min(start + cfg.batch_size, train_set.size());
            const double inv = 1.0 / static_cast<double>(end - start);
            net.zero_grads();
            for (size_t i = start; i < end; ++i) {
                const Example& ex = train_set[i];
                Matrix pred = net.forward(ex.x);
                const double loss = mse_loss(pred, ex.y);
                if (!std::isfinite(loss))
                    throw NumericalError("train: NaN loss at epoch " +
                                         std::to_string(epoch) + ", batch starting at example " +
                                         std::to_string(start));
                epoch_loss += loss;
                ++seen;
                Matrix dy = pred;
                const double scale = 2.0 / static_cast<double>(ex.y.size()) * inv;
                for (size_t k = 0; k < dy.v.size(); ++k)
                    dy.v[k] = (pred.v[k] - ex.y[k]) * scale;
                net.backward(dy);
            }
            adam.step(net.params());
        }
        report.train_loss.push_back(epoch_loss / static_cast<double>(seen));

        const double val = evaluate_loss(net, val_set);
        report.val_loss.push_back(val);
        if (val < best) {
            best = val;
            report.best_epoch = epoch;
            report.best_params = net.get_params_flat();
        }
    }
    net.set_params_flat(report.best_params);
    return report;
}

GradientCheckResult gradient_check(Network& net, const Example& example,
                                   double fd_step) {
    net.zero_grads();
    Matrix pred = net.forward(example.x);
    Matrix dy = pred;
    const double scale = 2.0 / static_cast<double>(example.y.size());
    for (size_t k = 0; k < dy.v.size(); ++k)
        dy.v[k] = (pred.v[k] - example.y[k]) * scale;
    net.backward(dy);

    GradientCheckResult res;
    for (auto& p : net.params()) {
        for (size_t i = 0; i < p.w->size(); ++i) {
            const double orig = (*p.w)[i];
            (*p.w)[i] = orig + fd_step;
            const double lp = mse_loss(net.forward(example.x), example.y);
            (*p.w)[i] = orig - fd_step;
            const double lm = mse_loss(net.forward(example.x), example.y);
            (*p.w)[i] = orig;
            const double fd = (lp - lm) / (2.0 * fd_step);
            const double an = (*p.g)[i];
            // Floor the denominator at 1e-6: below that both estimates are
            // dominated by central-difference roundoff (~eps/h), and the ratio
            // would only measure noise.
            const double denom = std::max({std::fabs(fd), std::fabs(an), 1e-6});
            const double rel = std::fabs(fd - an) / denom;
            if (rel > res.max_rel_error) {
                res.max_rel_error = rel;
                res.worst_param = p.name + "[" + std::to_string(i) + "]";
            }
        }
    }
    return res;
}

}  // namespace gascast::neural
