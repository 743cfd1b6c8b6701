#pragma once

#include <cstdint>
#include <vector>

#include "tensor.hpp"

namespace p3m {

// RGB image, planar layout (3 contiguous H×W planes), values in [0, 1].
struct Image {
    int h = 0, w = 0;
    std::vector<double> data;  // 3 * h * w

    Image() = default;
    Image(int h_, int w_) : h(h_), w(w_), data(static_cast<size_t>(3) * h_ * w_, 0.0) {}

    double* plane(int ch) { return data.data() + static_cast<size_t>(ch) * h * w; }
    const double* plane(int ch) const { return data.data() + static_cast<size_t>(ch) * h * w; }
    double& at(int ch, int y, int x) { return data[(static_cast<size_t>(ch) * h + y) * w + x]; }
    double at(int ch, int y, int x) const { return data[(static_cast<size_t>(ch) * h + y) * w + x]; }
};

// Per-pixel foreground opacity in [0, 1].
struct AlphaMatte {
    int h = 0, w = 0;
    std::vector<double> data;  // h * w

    AlphaMatte() = default;
    AlphaMatte(int h_, int w_) : h(h_), w(w_), data(static_cast<size_t>(h_) * w_, 0.0) {}

    double& at(int y, int x) { return data[static_cast<size_t>(y) * w + x]; }
    double at(int y, int x) const { return data[static_cast<size_t>(y) * w + x]; }
};

enum class TriClass : uint8_t { Background = 0, Transition = 1, Foreground = 2 };

// 3-class map: definite background / transition band / definite foreground.
struct Trimap {
    int h = 0, w = 0;
    std::vector<uint8_t> labels;  // TriClass values

    Trimap() = default;
    Trimap(int h_, int w_) : h(h_), w(w_), labels(static_cast<size_t>(h_) * w_, 0) {}

    TriClass at(int y, int x) const {
        return static_cast<TriClass>(labels[static_cast<size_t>(y) * w + x]);
    }
    void set(int y, int x, TriClass c) {
        labels[static_cast<size_t>(y) * w + x] = static_cast<uint8_t>(c);
    }

    // 3×H×W indicator planes ordered (BG, TRANSITION, FG); exactly one 1 per pixel.
    Tensor one_hot() const;
};

// Binary pixel set over an image; 0/1 values.
struct RegionMask {
    int h = 0, w = 0;
    std::vector<uint8_t> mask;

    RegionMask() = default;
    RegionMask(int h_, int w_) : h(h_), w(w_), mask(static_cast<size_t>(h_) * w_, 0) {}

    bool at(int y, int x) const { return mask[static_cast<size_t>(y) * w + x] != 0; }
    void set(int y, int x, bool v) { mask[static_cast<size_t>(y) * w + x] = v ? 1 : 0; }
    size_t count() const;
};

// Validation helpers; throw Error(InvalidArgument / SizeMismatch).
void validate_image(const Image& img);
void validate_alpha(const AlphaMatte& alpha);

// Trimap from ground-truth alpha: the soft band {0 < a < 1} dilated by a
// Euclidean disk of dilation_radius; remaining a==1 pixels become FG and
// a==0 pixels BG. The three classes partition the image.
Trimap generate_trimap(const AlphaMatte& alpha, int dilation_radius);

// 1 exactly on TRANSITION pixels.
RegionMask transition_mask(const Trimap& trimap);

// out = a*fg + (1-a)*bg, clamped to [0,1].
Image composite(const AlphaMatte& alpha, const Image& fg, const Image& bg);

}  // namespace p3m
