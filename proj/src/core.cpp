#include "core.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "filters.hpp"

namespace p3m {

Tensor Trimap::one_hot() const {
    Tensor t(1, 3, h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            t.at(0, static_cast<int>(at(y, x)), y, x) = 1.0;
    return t;
}

size_t RegionMask::count() const {
    size_t n = 0;
    for (uint8_t m : mask) n += m != 0;
    return n;
}

void validate_image(const Image& img) {
    if (img.h < 32 || img.w < 32)
        fail(ErrorCode::InvalidArgument, "image must be at least 32x32");
    if (img.data.size() != static_cast<size_t>(3) * img.h * img.w)
        fail(ErrorCode::InvalidArgument, "image buffer size inconsistent with dimensions");
    for (double v : img.data)
        if (!(v >= 0.0 && v <= 1.0))
            fail(ErrorCode::InvalidArgument, "image values must lie in [0,1]");
}

void validate_alpha(const AlphaMatte& alpha) {
    if (alpha.h <= 0 || alpha.w <= 0)
        fail(ErrorCode::InvalidArgument, "alpha matte has empty dimensions");
    if (alpha.data.size() != static_cast<size_t>(alpha.h) * alpha.w)
        fail(ErrorCode::InvalidArgument, "alpha buffer size inconsistent with dimensions");
    for (double v : alpha.data)
        if (!(v >= 0.0 && v <= 1.0))
            fail(ErrorCode::InvalidArgument, "alpha values must lie in [0,1]");
}

Trimap generate_trimap(const AlphaMatte& alpha, int dilation_radius) {
    validate_alpha(alpha);
    if (dilation_radius < 0)
        fail(ErrorCode::InvalidArgument, "dilation radius must be >= 0");

    int h = alpha.h, w = alpha.w;
    std::vector<uint8_t> soft(static_cast<size_t>(h) * w, 0);
    bool any_soft = false;
    for (size_t i = 0; i < soft.size(); ++i) {
        double a = alpha.data[i];
        if (a > 0.0 && a < 1.0) {
            soft[i] = 1;
            any_soft = true;
        }
    }

    Trimap tri(h, w);
    std::vector<double> dist_sq;
    if (any_soft && dilation_radius > 0)
        dist_sq = distance_transform_sq(soft.data(), h, w);

    double r_sq = static_cast<double>(dilation_radius) * dilation_radius;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            size_t i = static_cast<size_t>(y) * w + x;
            bool in_transition =
                soft[i] != 0 ||
                (any_soft && dilation_radius > 0 && dist_sq[i] <= r_sq);
            if (in_transition)
                tri.set(y, x, TriClass::Transition);
            else if (alpha.data[i] >= 1.0)
                tri.set(y, x, TriClass::Foreground);
            else
                tri.set(y, x, TriClass::Background);
        }
    }
    return tri;
}

RegionMask transition_mask(const Trimap& trimap) {
    RegionMask m(trimap.h, trimap.w);
    for (size_t i = 0; i < trimap.labels.size(); ++i)
        m.mask[i] = trimap.labels[i] == static_cast<uint8_t>(TriClass::Transition) ? 1 : 0;
    return m;
}

Image composite(const AlphaMatte& alpha, const Image& fg, const Image& bg) {
    if (alpha.h != fg.h || alpha.w != fg.w || fg.h != bg.h || fg.w != bg.w)
        fail(ErrorCode::SizeMismatch, "composite: alpha, fg, bg must share spatial size");
    Image out(fg.h, fg.w);
    size_t plane = static_cast<size_t>(fg.h) * fg.w;
    for (int ch = 0; ch < 3; ++ch) {
        const double* f = fg.plane(ch);
        const double* b = bg.plane(ch);
        double* o = out.plane(ch);
        for (size_t i = 0; i < plane; ++i) {
            double a = alpha.data[i];
            o[i] = std::clamp(a * f[i] + (1.0 - a) * b[i], 0.0, 1.0);
        }
    }
    return out;
}

}  // namespace p3m
