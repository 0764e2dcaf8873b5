#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fbgskin/random.hpp"

namespace fbgskin::nn {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense numeric array, row-major, 64-bit floats.
struct Tensor {
    std::vector<int> shape;
    VectorXd data;

    Tensor() = default;
    Tensor(std::vector<int> s, VectorXd d);
    static Tensor zeros(std::vector<int> s);
    static Tensor from_vector(const VectorXd& v);
    static Tensor from_matrix(const Eigen::Ref<const MatrixXd>& m); // (rows, cols)

    int size() const { return static_cast<int>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }

    Eigen::Map<RowMajorMatrix> mat();              // rank-2 view
    Eigen::Map<const RowMajorMatrix> mat() const;  // rank-2 view
};

enum class Activation { Linear, ReLU, Softmax };

const char* to_string(Activation a);

struct LayerSpec {
    enum class Kind { Dense, Conv, MaxPool, Flatten, Dropout };
    Kind kind = Kind::Dense;
    int units = 0;        // Dense
    int filters = 0;      // Conv; kernel spans all input channels x kernel_time
    int kernel_time = 1;  // Conv
    int stride = 1;       // Conv
    int window = 2;       // MaxPool
    double rate = 0.0;    // Dropout
    Activation activation = Activation::Linear;

    static LayerSpec dense(int units, Activation act);
    static LayerSpec conv(int filters, int kernel_time, int stride, Activation act);
    static LayerSpec maxpool(int window);
    static LayerSpec flatten();
    static LayerSpec dropout(double rate);
};

using NetworkSpec = std::vector<LayerSpec>;

struct TrainConfig {
    double learning_rate = 0.05;
    double momentum = 0.9;
    int minibatch_size = 50;
    int epochs = 10;
    std::uint64_t seed = 1;

    void validate() const;
};

class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& x, bool training) = 0;
    virtual Tensor backward(const Tensor& grad_out) = 0;
    virtual std::string descriptor() const = 0;
    virtual void init_weights(RngStream&) {}
    // flat parameter / gradient / velocity blocks, aligned by position
    virtual void collect(std::vector<VectorXd*>&, std::vector<VectorXd*>&,
                         std::vector<VectorXd*>&) {}
};

class Network {
public:
    Network() = default;
    Network(NetworkSpec spec, std::vector<int> input_shape);
    Network(Network&&) = default;
    Network& operator=(Network&&) = default;

    void init_weights(std::uint64_t seed);
    Tensor forward(const Tensor& x, bool training = false);
    // Backpropagates the loss gradient w.r.t. the network output and
    // accumulates parameter gradients; requires a prior forward pass.
    Tensor backward(const Tensor& loss_grad);
    void zero_grads();
    void sgd_step(const TrainConfig& cfg, double grad_scale = 1.0);

    std::vector<VectorXd*> params();
    std::vector<const VectorXd*> params() const;
    std::vector<VectorXd*> grads();

    const std::vector<int>& input_shape() const { return input_shape_; }
    const std::vector<int>& output_shape() const { return output_shape_; }
    const NetworkSpec& spec() const { return spec_; }

    std::string descriptor() const;
    std::uint64_t spec_hash() const;

    // Dropout masks are drawn from this stream; reseeding makes repeated
    // training-mode forwards reproducible (used by gradient checks).
    void reseed_dropout(std::uint64_t seed);

    bool empty() const { return layers_.empty(); }

private:
    NetworkSpec spec_;
    std::vector<int> input_shape_;
    std::vector<int> output_shape_;
    std::vector<std::unique_ptr<Layer>> layers_;
    std::vector<VectorXd*> params_, grads_, velocity_;
    std::shared_ptr<RngStream> dropout_rng_ = std::make_shared<RngStream>(0);
    bool forward_done_ = false;
};

// One momentum-SGD update: v <- momentum*v - lr*scale*g; w <- w + v.
void sgd_update(VectorXd& param, const VectorXd& grad, VectorXd& velocity,
                const TrainConfig& cfg, double grad_scale = 1.0);

// Losses. Shapes must match; cross-entropy expects a softmax output and a
// one-hot target, with logs clamped at 1e-12.
double mse(const VectorXd& pred, const VectorXd& target);
VectorXd mse_grad(const VectorXd& pred, const VectorXd& target);
double cross_entropy(const VectorXd& softmax_out, const VectorXd& one_hot);
VectorXd cross_entropy_grad(const VectorXd& softmax_out, const VectorXd& one_hot);

// Per-feature z-score normalization, statistics from training data only.
struct NormStats {
    VectorXd mean;
    VectorXd std;                 // clamped at 1e-12
    std::vector<int> clamped;     // features whose std hit the clamp
};

NormStats zscore_fit(const Eigen::Ref<const MatrixXd>& train_features); // rows = samples
MatrixXd zscore_apply(const NormStats& stats, const Eigen::Ref<const MatrixXd>& features);
VectorXd zscore_apply_vec(const NormStats& stats, const Eigen::Ref<const VectorXd>& feature_row);

enum class Loss { MSE, CrossEntropy };

struct FitResult {
    std::vector<double> epoch_loss;
};

// Minibatch SGD with momentum; deterministic given (seed, data, config).
FitResult fit(Network& net, const std::vector<Tensor>& inputs,
              const Eigen::Ref<const MatrixXd>& targets, Loss loss,
              const TrainConfig& cfg);

// Checkpoint container: header with a hash of the layer stack, then raw
// little-endian 64-bit float parameter blocks. Loading into a network
// whose stack hash differs is rejected.
void save_checkpoint(const Network& net, const std::string& path);
void load_checkpoint(Network& net, const std::string& path);

// Rebuilds a network skeleton from a descriptor string as produced by
// Network::descriptor() (weights unset).
Network network_from_descriptor(const std::string& descriptor);

std::uint64_t fnv1a64(const std::string& s);

}  // namespace fbgskin::nn
