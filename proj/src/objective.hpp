#pragma once

#include <array>
#include <vector>

#include "core.hpp"
#include "network.hpp"
#include "tensor.hpp"

namespace p3m::objective {

// Eq.-5 weights: lambda_m for the matting-decoder terms, lambda_s for the
// cross-entropy group, lambda_f for the fused-output terms.
struct LossWeights {
    double lambda_m = 2.0;
    double lambda_s = 1.0 / 6.0;
    double lambda_f = 1.0;
};

struct LossReport {
    double alpha_m = 0.0;               // L1 on matting_detail, transition region
    double lap_m = 0.0;                 // Laplacian on matting_detail, transition region
    std::array<double, 3> ce_side{};    // side-output cross-entropies
    double ce_seg = 0.0;                // final segmentation cross-entropy
    double alpha_f = 0.0;               // L1 on fused alpha, whole image
    double lap_f = 0.0;                 // Laplacian on fused alpha, whole image
    double comp = 0.0;                  // composition loss, whole image
    double total = 0.0;

    double combined(const LossWeights& w) const {
        double ce_sum = ce_side[0] + ce_side[1] + ce_side[2] + 3.0 * ce_seg;
        return w.lambda_m * (alpha_m + lap_m) + w.lambda_s * ce_sum +
               w.lambda_f * (2.0 * alpha_f + 2.0 * lap_f + comp);
    }
};

// Mean absolute difference over the region; 0 on an empty region. When
// grad_pred is non-null it receives d(loss)/d(pred) (same H*W layout).
double alpha_loss(const AlphaMatte& pred, const AlphaMatte& gt, const RegionMask& region,
                  std::vector<double>* grad_pred = nullptr);

// 5-level Laplacian pyramid distance on region-masked inputs: levels 0-3 are
// band-pass (x - blur(x)), level 4 is the low-pass residual; per-level L1
// means weighted by 2^level. Sides must be divisible by 32.
double laplacian_loss(const AlphaMatte& pred, const AlphaMatte& gt, const RegionMask& region,
                      std::vector<double>* grad_pred = nullptr);

// Mean absolute difference between pred*image and gt*image over all pixels
// and channels.
double composition_loss(const AlphaMatte& pred, const AlphaMatte& gt, const Image& image,
                        std::vector<double>* grad_pred = nullptr);

// -sum G*log(clamp(probs, 1e-8)) over classes and pixels; divided by H*W
// unless normalized == false. probs is (1, 3, H, W) and must be a per-pixel
// simplex (validated loosely so finite-difference probes remain legal).
double cross_entropy_loss(const Tensor& probs, const Trimap& g, bool normalized = true,
                          Tensor* grad_probs = nullptr);

// Eq.-5 total on one sample. Matting-decoder terms use the ground-truth
// transition region and the matting_detail prediction; fused-output terms use
// the whole image and alpha_final.
LossReport total_loss(const net::P3MNetOutput& output, const AlphaMatte& gt_alpha,
                      const Trimap& g, const Image& image, const LossWeights& w);

// Training-path variant: also produces gradients w.r.t. the network outputs.
// The fused-alpha terms reach the matting decoder only through pixels whose
// predicted class is TRANSITION (the fusion rule is piecewise constant in the
// segmentation probabilities).
struct SampleLossGrads {
    Tensor g_detail;                // (1, 1, H, W)
    Tensor g_seg_probs;             // (1, 3, H, W)
    std::array<Tensor, 3> g_side;   // each (1, 3, H, W)
};

LossReport total_loss_with_grad(const net::P3MNetOutput& output, const AlphaMatte& gt_alpha,
                                const Trimap& g, const Image& image, const LossWeights& w,
                                SampleLossGrads* grads);

}  // namespace p3m::objective
