#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace p3m::nn {

// Forward-pass context. `train` picks batch statistics in BatchNorm;
// `grad` controls whether layers cache what backward needs.
struct Pass {
    bool train = true;
    bool grad = true;
};

inline constexpr Pass kTrainPass{true, true};
inline constexpr Pass kEvalPass{false, true};
inline constexpr Pass kInferPass{false, false};

using ParamVisitor = std::function<void(const std::string&, Tensor&, Tensor&)>;
using BufferVisitor = std::function<void(const std::string&, Tensor&)>;

// 2-D convolution, stride 1, zero padding k/2 ("same"), square kernel.
class Conv2d {
public:
    Conv2d() = default;
    Conv2d(int cin, int cout, int k, bool bias = true);

    void init(Rng& rng);  // He-normal weights, zero bias
    void zero_();         // zero everything (exact-identity fusion branches)

    Tensor forward(const Tensor& x, const Pass& p);
    Tensor backward(const Tensor& gy);

    void visit(const std::string& prefix, const ParamVisitor& v);

    int in_channels() const { return cin_; }
    int out_channels() const { return cout_; }
    int kernel() const { return k_; }

    Tensor weight;  // (cout, cin, k, k)
    Tensor bias;    // (cout, 1, 1, 1); unused when has_bias_ == false
    Tensor gweight, gbias;

private:
    int cin_ = 0, cout_ = 0, k_ = 1, pad_ = 0;
    bool has_bias_ = true;
    Tensor cached_x_;
};

// Per-channel batch normalization. Batch statistics use the biased variance;
// running statistics are updated with momentum 0.1 and used in eval mode.
class BatchNorm2d {
public:
    BatchNorm2d() = default;
    explicit BatchNorm2d(int c);

    Tensor forward(const Tensor& x, const Pass& p);
    Tensor backward(const Tensor& gy);

    void visit(const std::string& prefix, const ParamVisitor& v);
    void visit_buffers(const std::string& prefix, const BufferVisitor& v);
    void zero_affine_();  // gamma = 1, beta = 0 kept; used by zero_ of owners

    Tensor gamma, beta, ggamma, gbeta;      // (1, c, 1, 1)
    Tensor running_mean, running_var;       // (1, c, 1, 1)

private:
    int c_ = 0;
    double eps_ = 1e-5;
    double momentum_ = 0.1;
    bool cached_train_ = false;
    Tensor xhat_;                 // train-mode cache
    std::vector<double> inv_std_; // per channel
};

class ReLU {
public:
    Tensor forward(const Tensor& x, const Pass& p);
    Tensor backward(const Tensor& gy);

private:
    Tensor mask_;
};

class Sigmoid {
public:
    Tensor forward(const Tensor& x, const Pass& p);
    Tensor backward(const Tensor& gy);

private:
    Tensor y_;
};

// Softmax across the channel dimension, per pixel.
class SoftmaxChannel {
public:
    Tensor forward(const Tensor& x, const Pass& p);
    Tensor backward(const Tensor& gy);

private:
    Tensor y_;
};

// Max pooling with kernel == stride == ratio; input sides must divide evenly.
// Records the argmax position (flat y*w+x within the input plane) of every
// output element.
class MaxPool {
public:
    MaxPool() = default;
    explicit MaxPool(int ratio) : r_(ratio) {}

    Tensor forward(const Tensor& x, const Pass& p);
    Tensor backward(const Tensor& gy);

    const std::vector<int32_t>& indices() const { return indices_; }
    int ratio() const { return r_; }

private:
    int r_ = 2;
    int in_h_ = 0, in_w_ = 0;
    std::vector<int32_t> indices_;
};

// Places each value at its recorded argmax position; zeros elsewhere.
class MaxUnpool {
public:
    Tensor forward(const Tensor& x, const std::vector<int32_t>& indices,
                   int out_h, int out_w, const Pass& p);
    Tensor backward(const Tensor& gy);

private:
    std::vector<int32_t> cached_indices_;
    int out_h_ = 0, out_w_ = 0;
};

// Bilinear upsampling by an integer factor (align_corners = false).
class UpsampleBilinear {
public:
    UpsampleBilinear() = default;
    explicit UpsampleBilinear(int factor) : f_(factor) {}

    Tensor forward(const Tensor& x, const Pass& p);
    Tensor backward(const Tensor& gy);

    int factor() const { return f_; }

private:
    int f_ = 2;
    int in_h_ = 0, in_w_ = 0;
};

Tensor concat_channels(const std::vector<const Tensor*>& xs);
std::vector<Tensor> split_channels(const Tensor& g, const std::vector<int>& sizes);

// Adam with bias correction; state is keyed by parameter order, which is
// fixed by the owning network's visit order.
class Adam {
public:
    struct Options {
        double lr = 1e-5;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
        double weight_decay = 0.0;
    };

    explicit Adam(Options opt = {}) : opt_(opt) {}

    void step(std::vector<std::pair<Tensor*, Tensor*>>& params_and_grads);
    void zero_grads(std::vector<std::pair<Tensor*, Tensor*>>& params_and_grads);

    Options& options() { return opt_; }
    int64_t t() const { return t_; }

    // checkpoint support
    std::vector<std::vector<double>>& m() { return m_; }
    std::vector<std::vector<double>>& v() { return v_; }
    void set_t(int64_t t) { t_ = t; }

private:
    Options opt_;
    int64_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

}  // namespace p3m::nn
