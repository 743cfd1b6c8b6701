#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "core.hpp"
#include "nn.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace p3m::net {

// Channel widths scale with base_channels B: encoder stages produce
// {B, B, 2B, 4B, 8B} at scales {1, 2, 4, 8, 16}; the deepest (pooled) map is
// 8B at 1/32. Decoder blocks 5..1 output {8B, 4B, 2B, B, B}.
struct P3MNetConfig {
    int base_channels = 64;
    std::array<int, 4> encoder_blocks{3, 4, 6, 3};
    int dilation_radius = 25;  // radius for supervision trimaps
    int input_divisor = 32;
    bool use_tfi = true;
    bool use_sbfi = true;
    bool use_dbfi = true;

    std::array<int, 5> encoder_channels() const {
        int b = base_channels;
        return {b, b, 2 * b, 4 * b, 8 * b};
    }
    // by block index 5..1 (element 0 is block 5)
    std::array<int, 5> decoder_channels() const {
        int b = base_channels;
        return {8 * b, 4 * b, 2 * b, b, b};
    }
    void validate() const;
};

// Encoder pyramid with the recorded max-pooling argmax indices. Stage b
// (1-based) pools the scale-2^(b-1) feature to scale 2^b.
struct EncoderFeatures {
    Tensor e0, e1, e2, e3, e4, e5;
    std::array<std::vector<int32_t>, 5> pool_indices;
    std::array<std::pair<int, int>, 5> pool_in_sizes;  // (h, w) before stage b pooling
};

// Network outputs for one image.
struct P3MNetOutput {
    AlphaMatte alpha_final;
    Tensor seg_probs;               // (1, 3, H, W), per-pixel simplex
    std::vector<Tensor> side_seg;   // 3 entries, each (1, 3, H, W)
    AlphaMatte matting_detail;      // transition-region prediction
};

// Collaborative fusion: definite classes come from the segmentation argmax,
// the transition region from the matting decoder. Ties pick the lowest class
// index.
AlphaMatte fuse_predictions(const Tensor& seg_probs, const AlphaMatte& matting_detail);

// Batch variant; also returns the per-pixel predicted class (0/1/2) used for
// gradient routing during training.
Tensor fuse_predictions_batch(const Tensor& seg_probs, const Tensor& detail,
                              std::vector<uint8_t>* classes_out = nullptr);

namespace detail {

struct ConvBNReLU {
    nn::Conv2d conv;
    nn::BatchNorm2d bn;
    nn::ReLU relu;

    ConvBNReLU() = default;
    ConvBNReLU(int cin, int cout, int k);
    void init(Rng& rng) { conv.init(rng); }
    void zero_() {
        conv.zero_();
        bn.zero_affine_();
    }
    Tensor forward(const Tensor& x, const nn::Pass& p);
    Tensor backward(const Tensor& gy);
    void visit(const std::string& prefix, const nn::ParamVisitor& v);
    void visit_buffers(const std::string& prefix, const nn::BufferVisitor& v);
};

// ResNet basic block (3x3 + 3x3, identity or projected skip), stride 1.
struct BasicBlock {
    nn::Conv2d conv1, conv2;
    nn::BatchNorm2d bn1, bn2;
    nn::ReLU relu1, relu2;
    bool project = false;
    nn::Conv2d down_conv;
    nn::BatchNorm2d down_bn;

    BasicBlock() = default;
    BasicBlock(int cin, int cout);
    void init(Rng& rng);
    Tensor forward(const Tensor& x, const nn::Pass& p);
    Tensor backward(const Tensor& gy);
    void visit(const std::string& prefix, const nn::ParamVisitor& v);
    void visit_buffers(const std::string& prefix, const nn::BufferVisitor& v);

private:
    Tensor skip_cache_;
};

}  // namespace detail

// Tripartite feature integration: matting, segmentation and encoder features
// at one scale, each projected C -> C/2 by a 1x1 convolution, concatenated
// and fused by a 3x3 conv + BN + ReLU back to C channels.
struct TFI {
    nn::Conv2d proj_m, proj_s, proj_e;
    detail::ConvBNReLU fuse;
    int channels = 0;

    TFI() = default;
    explicit TFI(int c);
    void init(Rng& rng);
    void zero_fusion_();
    Tensor forward(const Tensor& fm, const Tensor& fs, const Tensor& fe, const nn::Pass& p);
    // returns (g_fm, g_fs, g_fe)
    std::array<Tensor, 3> backward(const Tensor& gy);
    void visit(const std::string& prefix, const nn::ParamVisitor& v);
    void visit_buffers(const std::string& prefix, const nn::BufferVisitor& v);
};

// Shallow bipartite integration: the full-resolution encoder map E0 is
// max-pooled to the working scale, both inputs are projected to C/2,
// concatenated, fused, and added back to the matting feature (residual).
struct SBFI {
    nn::MaxPool pool;
    nn::Conv2d proj_e, proj_m;
    detail::ConvBNReLU fuse;
    int channels = 0;

    SBFI() = default;
    SBFI(int c, int e0_channels, int ratio);
    void init(Rng& rng);
    void zero_fusion_();
    Tensor forward(const Tensor& fm, const Tensor& e0, const nn::Pass& p);
    // returns (g_fm, g_e0)
    std::array<Tensor, 2> backward(const Tensor& gy);
    void visit(const std::string& prefix, const nn::ParamVisitor& v);
    void visit_buffers(const std::string& prefix, const nn::BufferVisitor& v);
};

// Deep bipartite integration: the deepest encoder map is upsampled 32/r,
// projected together with the segmentation feature, fused and added back.
struct DBFI {
    nn::UpsampleBilinear up;
    nn::Conv2d proj_e, proj_s;
    detail::ConvBNReLU fuse;
    int channels = 0;

    DBFI() = default;
    DBFI(int c, int deep_channels, int up_ratio);
    void init(Rng& rng);
    void zero_fusion_();
    Tensor forward(const Tensor& fs, const Tensor& e_deep, const nn::Pass& p);
    // returns (g_fs, g_e_deep)
    std::array<Tensor, 2> backward(const Tensor& gy);
    void visit(const std::string& prefix, const nn::ParamVisitor& v);
    void visit_buffers(const std::string& prefix, const nn::BufferVisitor& v);
};

// Gradients of the training loss with respect to the network outputs
// (post-activation); the entry point for P3MNet::backward.
struct OutputGrads {
    Tensor g_seg_probs;              // (N, 3, H, W)
    Tensor g_detail;                 // (N, 1, H, W)
    std::array<Tensor, 3> g_side;    // each (N, 3, H, W)
};

class P3MNet {
public:
    explicit P3MNet(const P3MNetConfig& config);

    void init(uint64_t seed);

    const P3MNetConfig& config() const { return cfg_; }

    // Shared encoder; input (N, 3, H, W) with H, W divisible by 32.
    EncoderFeatures encode(const Tensor& images, const nn::Pass& p);

    struct BatchOutput {
        Tensor seg_probs;             // (N, 3, H, W)
        Tensor detail;                // (N, 1, H, W)
        std::array<Tensor, 3> side;   // each (N, 3, H, W)
    };

    BatchOutput forward(const Tensor& images, const nn::Pass& p);
    void backward(const OutputGrads& grads);

    // Single-image convenience wrapper (inference mode).
    P3MNetOutput run(const Image& image);

    void visit_params(const nn::ParamVisitor& v);
    void visit_buffers(const nn::BufferVisitor& v);
    std::vector<std::pair<Tensor*, Tensor*>> parameters();

    // test hooks
    TFI& tfi(int i) { return *tfi_[i - 1]; }
    SBFI& sbfi(int i) { return *sbfi_[i - 1]; }
    DBFI& dbfi(int i) { return *dbfi_[i - 1]; }

private:
    P3MNetConfig cfg_;

    // encoder
    detail::ConvBNReLU stem_;
    std::array<nn::MaxPool, 5> pools_;
    std::array<std::vector<detail::BasicBlock>, 4> stages_;

    // segmentation decoder (block index 5..1 stored as 0..4)
    std::array<std::array<detail::ConvBNReLU, 3>, 5> sblocks_;
    std::array<nn::UpsampleBilinear, 5> sups_;
    std::array<std::unique_ptr<DBFI>, 3> dbfi_;
    std::array<nn::Conv2d, 3> side_convs_;
    std::array<nn::UpsampleBilinear, 3> side_ups_;
    std::array<nn::SoftmaxChannel, 3> side_softmax_;
    nn::Conv2d seg_head_;
    nn::SoftmaxChannel seg_softmax_;

    // matting decoder
    std::array<std::array<detail::ConvBNReLU, 3>, 5> mblocks_;
    std::array<nn::MaxUnpool, 5> unpools_;
    std::array<std::unique_ptr<TFI>, 4> tfi_;
    std::array<std::unique_ptr<SBFI>, 3> sbfi_;
    nn::Conv2d mat_head_;
    nn::Sigmoid mat_sigmoid_;

    // forward caches for backward
    struct Cache;
    std::unique_ptr<Cache> cache_;

    Tensor run_sblock(int b, const Tensor& x, const nn::Pass& p);      // b in 1..5
    Tensor run_mblock(int b, const Tensor& x, const nn::Pass& p);
    Tensor back_sblock(int b, const Tensor& gy);
    Tensor back_mblock(int b, const Tensor& gy);
};

}  // namespace p3m::net
