#include "fbgskin/neural.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace fbgskin::nn {

namespace {

int shape_size(const std::vector<int>& s) {
    int n = 1;
    for (int e : s) {
        if (e <= 0) throw std::invalid_argument("tensor extents must be positive");
        n *= e;
    }
    return n;
}

std::string shape_str(const std::vector<int>& s) {
    std::string out;
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(s[i]);
    }
    return out;
}

[[noreturn]] void shape_error(const std::string& what) {
    throw std::invalid_argument("shape mismatch: " + what);
}

}  // namespace

Tensor::Tensor(std::vector<int> s, VectorXd d) : shape(std::move(s)), data(std::move(d)) {
    if (shape_size(shape) != data.size()) shape_error("tensor data length vs extents");
}

Tensor Tensor::zeros(std::vector<int> s) {
    const int n = shape_size(s);
    return Tensor(std::move(s), VectorXd::Zero(n));
}

Tensor Tensor::from_vector(const VectorXd& v) {
    return Tensor({static_cast<int>(v.size())}, v);
}

Tensor Tensor::from_matrix(const Eigen::Ref<const MatrixXd>& m) {
    Tensor t = zeros({static_cast<int>(m.rows()), static_cast<int>(m.cols())});
    t.mat() = m;
    return t;
}

Eigen::Map<RowMajorMatrix> Tensor::mat() {
    if (rank() != 2) shape_error("matrix view of rank-" + std::to_string(rank()) + " tensor");
    return {data.data(), shape[0], shape[1]};
}

Eigen::Map<const RowMajorMatrix> Tensor::mat() const {
    if (rank() != 2) shape_error("matrix view of rank-" + std::to_string(rank()) + " tensor");
    return {data.data(), shape[0], shape[1]};
}

const char* to_string(Activation a) {
    switch (a) {
        case Activation::Linear: return "linear";
        case Activation::ReLU: return "relu";
        case Activation::Softmax: return "softmax";
    }
    return "?";
}

LayerSpec LayerSpec::dense(int units, Activation act) {
    LayerSpec s;
    s.kind = Kind::Dense;
    s.units = units;
    s.activation = act;
    return s;
}

LayerSpec LayerSpec::conv(int filters, int kernel_time, int stride, Activation act) {
    LayerSpec s;
    s.kind = Kind::Conv;
    s.filters = filters;
    s.kernel_time = kernel_time;
    s.stride = stride;
    s.activation = act;
    return s;
}

LayerSpec LayerSpec::maxpool(int window) {
    LayerSpec s;
    s.kind = Kind::MaxPool;
    s.window = window;
    return s;
}

LayerSpec LayerSpec::flatten() {
    LayerSpec s;
    s.kind = Kind::Flatten;
    return s;
}

LayerSpec LayerSpec::dropout(double rate) {
    LayerSpec s;
    s.kind = Kind::Dropout;
    s.rate = rate;
    return s;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
    if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("momentum must be in [0,1)");
    if (minibatch_size < 1) throw std::invalid_argument("minibatch_size must be >= 1");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
}

namespace {

VectorXd softmax(const VectorXd& z) {
    const double m = z.maxCoeff();
    VectorXd e = (z.array() - m).exp();
    return e / e.sum();
}

// y = act(z); returns y and leaves what backward needs in the caller's cache
VectorXd apply_activation(Activation act, const VectorXd& z) {
    switch (act) {
        case Activation::Linear: return z;
        case Activation::ReLU: return z.cwiseMax(0.0);
        case Activation::Softmax: return softmax(z);
    }
    return z;
}

// grad w.r.t. z given grad w.r.t. y
VectorXd activation_backward(Activation act, const VectorXd& z, const VectorXd& y,
                             const VectorXd& gy) {
    switch (act) {
        case Activation::Linear:
            return gy;
        case Activation::ReLU:
            return (z.array() > 0.0).select(gy, VectorXd::Zero(gy.size()));
        case Activation::Softmax: {
            const double dot = gy.dot(y);
            return y.array() * (gy.array() - dot);
        }
    }
    return gy;
}

class DenseLayer : public Layer {
public:
    DenseLayer(int in_dim, int out_dim, Activation act)
        : in_(in_dim), out_(out_dim), act_(act),
          w_(VectorXd::Zero(static_cast<long>(in_dim) * out_dim)),
          b_(VectorXd::Zero(out_dim)),
          gw_(VectorXd::Zero(w_.size())), gb_(VectorXd::Zero(out_dim)),
          vw_(VectorXd::Zero(w_.size())), vb_(VectorXd::Zero(out_dim)) {}

    Tensor forward(const Tensor& x, bool) override {
        if (x.rank() != 1 || x.size() != in_) shape_error("dense input " + shape_str(x.shape));
        x_ = x.data;
        Eigen::Map<const RowMajorMatrix> W(w_.data(), out_, in_);
        z_ = W * x_ + b_;
        y_ = apply_activation(act_, z_);
        return Tensor::from_vector(y_);
    }

    Tensor backward(const Tensor& g) override {
        if (g.size() != out_) shape_error("dense upstream gradient");
        const VectorXd gz = activation_backward(act_, z_, y_, g.data);
        Eigen::Map<RowMajorMatrix> GW(gw_.data(), out_, in_);
        GW.noalias() += gz * x_.transpose();
        gb_ += gz;
        Eigen::Map<const RowMajorMatrix> W(w_.data(), out_, in_);
        return Tensor::from_vector(W.transpose() * gz);
    }

    void init_weights(RngStream& rng) override {
        // He-uniform for ReLU, Glorot-uniform otherwise
        const double limit = (act_ == Activation::ReLU)
                                 ? std::sqrt(6.0 / in_)
                                 : std::sqrt(6.0 / (in_ + out_));
        for (long i = 0; i < w_.size(); ++i) w_[i] = rng.uniform(-limit, limit);
        b_.setZero();
    }

    void collect(std::vector<VectorXd*>& p, std::vector<VectorXd*>& g,
                 std::vector<VectorXd*>& v) override {
        p.push_back(&w_); p.push_back(&b_);
        g.push_back(&gw_); g.push_back(&gb_);
        v.push_back(&vw_); v.push_back(&vb_);
    }

    std::string descriptor() const override {
        return "dense:" + std::to_string(out_) + "," + to_string(act_);
    }

private:
    int in_, out_;
    Activation act_;
    VectorXd w_, b_, gw_, gb_, vw_, vb_;
    VectorXd x_, z_, y_;
};

// Valid (no padding) convolution over the time axis; each filter kernel
// spans all input channels x kernel_time steps.
class ConvLayer : public Layer {
public:
    ConvLayer(int in_channels, int in_time, int filters, int kernel_time, int stride,
              Activation act)
        : c_(in_channels), t_(in_time), f_(filters), k_(kernel_time), s_(stride), act_(act) {
        if (act_ == Activation::Softmax)
            throw std::invalid_argument("softmax is not a conv activation");
        if (k_ < 1 || s_ < 1 || k_ > t_) shape_error("conv kernel/stride vs input time");
        t_out_ = (t_ - k_) / s_ + 1;
        w_ = VectorXd::Zero(static_cast<long>(f_) * c_ * k_);
        b_ = VectorXd::Zero(f_);
        gw_ = VectorXd::Zero(w_.size());
        gb_ = VectorXd::Zero(f_);
        vw_ = VectorXd::Zero(w_.size());
        vb_ = VectorXd::Zero(f_);
    }

    int out_time() const { return t_out_; }

    Tensor forward(const Tensor& x, bool) override {
        if (x.rank() != 2 || x.shape[0] != c_ || x.shape[1] != t_)
            shape_error("conv input " + shape_str(x.shape));
        x_ = x;
        auto in = x.mat();
        Eigen::Map<const RowMajorMatrix> W(w_.data(), f_, c_ * k_);
        z_ = Tensor::zeros({f_, t_out_});
        auto zm = z_.mat();
        VectorXd col(c_ * k_);
        for (int to = 0; to < t_out_; ++to) {
            const int t0 = to * s_;
            for (int kk = 0; kk < k_; ++kk) col.segment(kk * c_, c_) = in.col(t0 + kk);
            zm.col(to) = W * col + b_;
        }
        y_ = z_;
        if (act_ == Activation::ReLU) y_.data = z_.data.cwiseMax(0.0);
        return y_;
    }

    Tensor backward(const Tensor& g) override {
        if (g.shape != std::vector<int>{f_, t_out_}) shape_error("conv upstream gradient");
        Tensor gz = g;
        if (act_ == Activation::ReLU) {
            gz.data = (z_.data.array() > 0.0).select(g.data, VectorXd::Zero(g.size()));
        }
        auto in = x_.mat();
        auto gzm = gz.mat();
        Eigen::Map<const RowMajorMatrix> W(w_.data(), f_, c_ * k_);
        Eigen::Map<RowMajorMatrix> GW(gw_.data(), f_, c_ * k_);
        Tensor gx = Tensor::zeros({c_, t_});
        auto gxm = gx.mat();
        VectorXd col(c_ * k_);
        for (int to = 0; to < t_out_; ++to) {
            const int t0 = to * s_;
            for (int kk = 0; kk < k_; ++kk) col.segment(kk * c_, c_) = in.col(t0 + kk);
            GW.noalias() += gzm.col(to) * col.transpose();
            gb_ += gzm.col(to);
            const VectorXd gcol = W.transpose() * gzm.col(to);
            for (int kk = 0; kk < k_; ++kk) gxm.col(t0 + kk) += gcol.segment(kk * c_, c_);
        }
        return gx;
    }

    void init_weights(RngStream& rng) override {
        const int fan_in = c_ * k_;
        const double limit = (act_ == Activation::ReLU)
                                 ? std::sqrt(6.0 / fan_in)
                                 : std::sqrt(6.0 / (fan_in + f_));
        for (long i = 0; i < w_.size(); ++i) w_[i] = rng.uniform(-limit, limit);
        b_.setZero();
    }

    void collect(std::vector<VectorXd*>& p, std::vector<VectorXd*>& g,
                 std::vector<VectorXd*>& v) override {
        p.push_back(&w_); p.push_back(&b_);
        g.push_back(&gw_); g.push_back(&gb_);
        v.push_back(&vw_); v.push_back(&vb_);
    }

    std::string descriptor() const override {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "conv:f%d,k%d,s%d,%s", f_, k_, s_, to_string(act_));
        return buf;
    }

private:
    int c_, t_, f_, k_, s_, t_out_;
    Activation act_;
    VectorXd w_, b_, gw_, gb_, vw_, vb_;
    Tensor x_, z_, y_;
};

// Max pooling over time per channel; gradient routes to the argmax only,
// ties broken to the lowest index.
class MaxPoolLayer : public Layer {
public:
    MaxPoolLayer(int channels, int in_time, int window)
        : c_(channels), t_(in_time), w_(window) {
        if (w_ < 1 || w_ > t_) shape_error("maxpool window vs input time");
        t_out_ = t_ / w_;
    }

    int out_time() const { return t_out_; }

    Tensor forward(const Tensor& x, bool) override {
        if (x.rank() != 2 || x.shape[0] != c_ || x.shape[1] != t_)
            shape_error("maxpool input " + shape_str(x.shape));
        auto in = x.mat();
        Tensor y = Tensor::zeros({c_, t_out_});
        auto ym = y.mat();
        argmax_.assign(static_cast<size_t>(c_) * t_out_, 0);
        for (int ch = 0; ch < c_; ++ch) {
            for (int to = 0; to < t_out_; ++to) {
                int best = to * w_;
                double bv = in(ch, best);
                for (int j = 1; j < w_; ++j) {
                    const double v = in(ch, to * w_ + j);
                    if (v > bv) { bv = v; best = to * w_ + j; }
                }
                ym(ch, to) = bv;
                argmax_[static_cast<size_t>(ch) * t_out_ + to] = best;
            }
        }
        return y;
    }

    Tensor backward(const Tensor& g) override {
        if (g.shape != std::vector<int>{c_, t_out_}) shape_error("maxpool upstream gradient");
        Tensor gx = Tensor::zeros({c_, t_});
        auto gxm = gx.mat();
        auto gm = g.mat();
        for (int ch = 0; ch < c_; ++ch)
            for (int to = 0; to < t_out_; ++to)
                gxm(ch, argmax_[static_cast<size_t>(ch) * t_out_ + to]) += gm(ch, to);
        return gx;
    }

    std::string descriptor() const override { return "maxpool:" + std::to_string(w_); }

private:
    int c_, t_, w_, t_out_;
    std::vector<int> argmax_;
};

class FlattenLayer : public Layer {
public:
    explicit FlattenLayer(std::vector<int> in_shape)
        : in_shape_(std::move(in_shape)), n_(shape_size(in_shape_)) {}

    Tensor forward(const Tensor& x, bool) override {
        if (x.shape != in_shape_) shape_error("flatten input " + shape_str(x.shape));
        return Tensor({n_}, x.data);
    }

    Tensor backward(const Tensor& g) override {
        if (g.size() != n_) shape_error("flatten upstream gradient");
        return Tensor(in_shape_, g.data);
    }

    std::string descriptor() const override { return "flatten"; }

private:
    std::vector<int> in_shape_;
    int n_;
};

// Inverted dropout: active only in training mode, scaled by 1/(1-rate) so
// inference needs no mask.
class DropoutLayer : public Layer {
public:
    DropoutLayer(double rate, std::shared_ptr<RngStream> rng)
        : rate_(rate), rng_(std::move(rng)) {
        if (rate_ < 0.0 || rate_ >= 1.0) throw std::invalid_argument("dropout rate in [0,1)");
    }

    Tensor forward(const Tensor& x, bool training) override {
        if (!training || rate_ == 0.0) {
            mask_.resize(0);
            return x;
        }
        const double keep = 1.0 - rate_;
        mask_.resize(x.size());
        for (long i = 0; i < mask_.size(); ++i)
            mask_[i] = (rng_->uniform() < keep) ? 1.0 / keep : 0.0;
        Tensor y = x;
        y.data.array() *= mask_.array();
        return y;
    }

    Tensor backward(const Tensor& g) override {
        if (mask_.size() == 0) return g;
        if (g.size() != mask_.size()) shape_error("dropout upstream gradient");
        Tensor gx = g;
        gx.data.array() *= mask_.array();
        return gx;
    }

    std::string descriptor() const override {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "dropout:%g", rate_);
        return buf;
    }

private:
    double rate_;
    std::shared_ptr<RngStream> rng_;
    VectorXd mask_;
};

}  // namespace

Network::Network(NetworkSpec spec, std::vector<int> input_shape)
    : spec_(std::move(spec)), input_shape_(std::move(input_shape)) {
    if (input_shape_.empty()) throw std::invalid_argument("empty input shape");
    std::vector<int> cur = input_shape_;
    for (size_t i = 0; i < spec_.size(); ++i) {
        const LayerSpec& ls = spec_[i];
        if (ls.activation == Activation::Softmax && i + 1 != spec_.size())
            throw std::invalid_argument("softmax allowed only on the final layer");
        switch (ls.kind) {
            case LayerSpec::Kind::Dense: {
                if (cur.size() != 1)
                    shape_error("dense layer needs a flat input, got " + shape_str(cur));
                if (ls.units < 1) throw std::invalid_argument("dense units must be >= 1");
                layers_.push_back(std::make_unique<DenseLayer>(cur[0], ls.units, ls.activation));
                cur = {ls.units};
                break;
            }
            case LayerSpec::Kind::Conv: {
                if (cur.size() != 2)
                    shape_error("conv layer needs a (channels, time) input, got " + shape_str(cur));
                auto layer = std::make_unique<ConvLayer>(cur[0], cur[1], ls.filters,
                                                         ls.kernel_time, ls.stride, ls.activation);
                cur = {ls.filters, layer->out_time()};
                layers_.push_back(std::move(layer));
                break;
            }
            case LayerSpec::Kind::MaxPool: {
                if (cur.size() != 2)
                    shape_error("maxpool needs a (channels, time) input, got " + shape_str(cur));
                auto layer = std::make_unique<MaxPoolLayer>(cur[0], cur[1], ls.window);
                cur = {cur[0], layer->out_time()};
                layers_.push_back(std::move(layer));
                break;
            }
            case LayerSpec::Kind::Flatten: {
                layers_.push_back(std::make_unique<FlattenLayer>(cur));
                cur = {shape_size(cur)};
                break;
            }
            case LayerSpec::Kind::Dropout: {
                layers_.push_back(std::make_unique<DropoutLayer>(ls.rate, dropout_rng_));
                break;
            }
        }
    }
    output_shape_ = cur;
    for (auto& l : layers_) l->collect(params_, grads_, velocity_);
}

void Network::init_weights(std::uint64_t seed) {
    std::uint64_t k = 0;
    for (auto& l : layers_) {
        RngStream rng(derive_seed(seed, k++));
        l->init_weights(rng);
    }
    for (auto* v : velocity_) v->setZero();
}

Tensor Network::forward(const Tensor& x, bool training) {
    if (x.shape != input_shape_)
        shape_error("network input " + shape_str(x.shape) + " vs " + shape_str(input_shape_));
    Tensor cur = x;
    for (auto& l : layers_) cur = l->forward(cur, training);
    forward_done_ = true;
    return cur;
}

Tensor Network::backward(const Tensor& loss_grad) {
    if (!forward_done_) throw std::logic_error("backward called before forward");
    if (loss_grad.shape != output_shape_) shape_error("loss gradient vs network output");
    Tensor g = loss_grad;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
}

void Network::zero_grads() {
    for (auto* g : grads_) g->setZero();
}

void sgd_update(VectorXd& param, const VectorXd& grad, VectorXd& velocity,
                const TrainConfig& cfg, double grad_scale) {
    if (param.size() != grad.size() || param.size() != velocity.size())
        shape_error("sgd_update operands");
    velocity = cfg.momentum * velocity - cfg.learning_rate * grad_scale * grad;
    param += velocity;
}

void Network::sgd_step(const TrainConfig& cfg, double grad_scale) {
    for (size_t i = 0; i < params_.size(); ++i)
        sgd_update(*params_[i], *grads_[i], *velocity_[i], cfg, grad_scale);
}

std::vector<VectorXd*> Network::params() { return params_; }

std::vector<const VectorXd*> Network::params() const {
    return {params_.begin(), params_.end()};
}

std::vector<VectorXd*> Network::grads() { return grads_; }

std::string Network::descriptor() const {
    std::string d = "input:" + shape_str(input_shape_);
    for (const auto& l : layers_) d += "|" + l->descriptor();
    return d;
}

std::uint64_t Network::spec_hash() const { return fnv1a64(descriptor()); }

void Network::reseed_dropout(std::uint64_t seed) { *dropout_rng_ = RngStream(seed); }

double mse(const VectorXd& pred, const VectorXd& target) {
    if (pred.size() != target.size()) shape_error("mse operands");
    return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

VectorXd mse_grad(const VectorXd& pred, const VectorXd& target) {
    if (pred.size() != target.size()) shape_error("mse operands");
    return 2.0 * (pred - target) / static_cast<double>(pred.size());
}

double cross_entropy(const VectorXd& softmax_out, const VectorXd& one_hot) {
    if (softmax_out.size() != one_hot.size()) shape_error("cross_entropy operands");
    double loss = 0.0;
    for (long i = 0; i < softmax_out.size(); ++i) {
        if (one_hot[i] != 0.0)
            loss -= one_hot[i] * std::log(std::max(softmax_out[i], 1e-12));
    }
    return loss;
}

VectorXd cross_entropy_grad(const VectorXd& softmax_out, const VectorXd& one_hot) {
    if (softmax_out.size() != one_hot.size()) shape_error("cross_entropy operands");
    VectorXd g = VectorXd::Zero(softmax_out.size());
    for (long i = 0; i < softmax_out.size(); ++i) {
        if (one_hot[i] != 0.0) g[i] = -one_hot[i] / std::max(softmax_out[i], 1e-12);
    }
    return g;
}

NormStats zscore_fit(const Eigen::Ref<const MatrixXd>& X) {
    if (X.rows() < 2) throw std::invalid_argument("zscore_fit needs >= 2 samples");
    NormStats st;
    const double n = static_cast<double>(X.rows());
    st.mean = X.colwise().mean();
    st.std.resize(X.cols());
    for (long j = 0; j < X.cols(); ++j) {
        const double var = (X.col(j).array() - st.mean[j]).square().sum() / n;
        double sd = std::sqrt(var);
        if (sd < 1e-12) {
            sd = 1e-12;
            st.clamped.push_back(static_cast<int>(j));
        }
        st.std[j] = sd;
    }
    return st;
}

MatrixXd zscore_apply(const NormStats& st, const Eigen::Ref<const MatrixXd>& X) {
    if (X.cols() != st.mean.size()) shape_error("zscore_apply feature count");
    return (X.rowwise() - st.mean.transpose()).array().rowwise() /
           st.std.transpose().array();
}

VectorXd zscore_apply_vec(const NormStats& st, const Eigen::Ref<const VectorXd>& v) {
    if (v.size() != st.mean.size()) shape_error("zscore_apply feature count");
    return (v - st.mean).cwiseQuotient(st.std);
}

FitResult fit(Network& net, const std::vector<Tensor>& inputs,
              const Eigen::Ref<const MatrixXd>& targets, Loss loss, const TrainConfig& cfg) {
    cfg.validate();
    const int n = static_cast<int>(inputs.size());
    if (n == 0) throw std::invalid_argument("fit: empty training set");
    if (targets.rows() != n) shape_error("fit targets vs inputs");

    net.init_weights(cfg.seed);
    net.reseed_dropout(derive_seed(cfg.seed, 0xd0));

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    RngStream shuffle_rng(derive_seed(cfg.seed, 0x5f));

    FitResult result;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates with our own stream so the order is engine-defined
        for (int i = n - 1; i > 0; --i) {
            const int j = shuffle_rng.uniform_int(i + 1);
            std::swap(order[i], order[j]);
        }
        double epoch_loss = 0.0;
        int done = 0;
        while (done < n) {
            const int bs = std::min(cfg.minibatch_size, n - done);
            net.zero_grads();
            for (int k = 0; k < bs; ++k) {
                const int idx = order[done + k];
                const Tensor out = net.forward(inputs[idx], /*training=*/true);
                const VectorXd target = targets.row(idx);
                if (loss == Loss::MSE) {
                    epoch_loss += mse(out.data, target);
                    net.backward(Tensor(out.shape, mse_grad(out.data, target)));
                } else {
                    epoch_loss += cross_entropy(out.data, target);
                    net.backward(Tensor(out.shape, cross_entropy_grad(out.data, target)));
                }
            }
            net.sgd_step(cfg, 1.0 / bs);
            done += bs;
        }
        result.epoch_loss.push_back(epoch_loss / n);
    }
    return result;
}

namespace {

std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    return parts;
}

Activation activation_from(const std::string& s) {
    if (s == "linear") return Activation::Linear;
    if (s == "relu") return Activation::ReLU;
    if (s == "softmax") return Activation::Softmax;
    throw std::runtime_error("unknown activation: " + s);
}

}  // namespace

Network network_from_descriptor(const std::string& descriptor) {
    const auto parts = split_on(descriptor, '|');
    if (parts.empty() || parts[0].rfind("input:", 0) != 0)
        throw std::runtime_error("descriptor must start with input:...");
    std::vector<int> input_shape;
    for (const auto& tok : split_on(parts[0].substr(6), 'x'))
        input_shape.push_back(std::stoi(tok));

    NetworkSpec spec;
    for (size_t i = 1; i < parts.size(); ++i) {
        const std::string& p = parts[i];
        const auto colon = p.find(':');
        const std::string kind = p.substr(0, colon);
        const std::string args = (colon == std::string::npos) ? "" : p.substr(colon + 1);
        if (kind == "dense") {
            const auto a = split_on(args, ',');
            if (a.size() != 2) throw std::runtime_error("bad dense descriptor: " + p);
            spec.push_back(LayerSpec::dense(std::stoi(a[0]), activation_from(a[1])));
        } else if (kind == "conv") {
            int f = 0, k = 0, s = 0;
            char act[16];
            if (std::sscanf(args.c_str(), "f%d,k%d,s%d,%15s", &f, &k, &s, act) != 4)
                throw std::runtime_error("bad conv descriptor: " + p);
            spec.push_back(LayerSpec::conv(f, k, s, activation_from(act)));
        } else if (kind == "maxpool") {
            spec.push_back(LayerSpec::maxpool(std::stoi(args)));
        } else if (kind == "flatten") {
            spec.push_back(LayerSpec::flatten());
        } else if (kind == "dropout") {
            spec.push_back(LayerSpec::dropout(std::stod(args)));
        } else {
            throw std::runtime_error("unknown layer descriptor: " + p);
        }
    }
    return Network(spec, input_shape);
}

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void save_checkpoint(const Network& net, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    auto params = net.params();
    long count = 0;
    for (const auto* p : params) count += p->size();
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(net.spec_hash()));
    os << "fbgskin-ckpt v1\n"
       << "spec_hash " << hex << "\n"
       << "layers " << net.descriptor() << "\n"
       << "params " << count << "\n";
    for (const auto* p : params) {
        os.write(reinterpret_cast<const char*>(p->data()),
                 static_cast<std::streamsize>(p->size() * sizeof(double)));
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

void load_checkpoint(Network& net, const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    std::string magic, key, hash_hex, layers_line;
    std::getline(is, magic);
    if (magic != "fbgskin-ckpt v1") throw std::runtime_error("bad checkpoint magic in " + path);
    is >> key >> hash_hex;
    if (key != "spec_hash") throw std::runtime_error("bad checkpoint header in " + path);
    is.ignore(1);
    std::getline(is, layers_line);
    long count = 0;
    is >> key >> count;
    if (key != "params") throw std::runtime_error("bad checkpoint header in " + path);
    is.ignore(1);

    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(net.spec_hash()));
    if (hash_hex != hex) {
        throw std::runtime_error("checkpoint spec hash mismatch: file " + hash_hex +
                                 " vs network " + hex);
    }
    auto params = net.params();
    long expected = 0;
    for (auto* p : params) expected += p->size();
    if (count != expected) throw std::runtime_error("checkpoint parameter count mismatch");
    for (auto* p : params) {
        is.read(reinterpret_cast<char*>(p->data()),
                static_cast<std::streamsize>(p->size() * sizeof(double)));
    }
    if (!is) throw std::runtime_error("truncated checkpoint: " + path);
}

}  // namespace fbgskin::nn
