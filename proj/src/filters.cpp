#include "filters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace p3m {

std::vector<double> gaussian_kernel(double sigma, int radius) {
    if (sigma <= 0.0) throw std::invalid_argument("gaussian_kernel: sigma must be > 0");
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        double g = std::exp(-0.5 * i * i / (sigma * sigma));
        k[i + radius] = g;
        sum += g;
    }
    for (double& x : k) x /= sum;
    return k;
}

std::vector<double> gaussian_deriv_kernel(double sigma, int radius) {
    std::vector<double> g = gaussian_kernel(sigma, radius);
    std::vector<double> d(g.size());
    for (int i = -radius; i <= radius; ++i)
        d[i + radius] = -static_cast<double>(i) / (sigma * sigma) * g[i + radius];
    return d;
}

void conv_rows_reflect(const double* src, double* dst, int h, int w,
                       const std::vector<double>& k) {
    int r = static_cast<int>(k.size()) / 2;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int t = -r; t <= r; ++t)
                acc += k[t + r] * src[static_cast<size_t>(reflect_index(y + t, h)) * w + x];
            dst[static_cast<size_t>(y) * w + x] = acc;
        }
    }
}

void conv_cols_reflect(const double* src, double* dst, int h, int w,
                       const std::vector<double>& k) {
    int r = static_cast<int>(k.size()) / 2;
    for (int y = 0; y < h; ++y) {
        const double* row = src + static_cast<size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int t = -r; t <= r; ++t)
                acc += k[t + r] * row[reflect_index(x + t, w)];
            dst[static_cast<size_t>(y) * w + x] = acc;
        }
    }
}

// Adjoint of y[p] = sum_t k[t] x[reflect(p+t)]: scatter each read back to its
// source. Kernel is not flipped; the roles of read/write swap instead.
void conv_rows_reflect_adjoint(const double* src, double* dst, int h, int w,
                               const std::vector<double>& k) {
    int r = static_cast<int>(k.size()) / 2;
    std::fill(dst, dst + static_cast<size_t>(h) * w, 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double g = src[static_cast<size_t>(y) * w + x];
            for (int t = -r; t <= r; ++t)
                dst[static_cast<size_t>(reflect_index(y + t, h)) * w + x] += k[t + r] * g;
        }
    }
}

void conv_cols_reflect_adjoint(const double* src, double* dst, int h, int w,
                               const std::vector<double>& k) {
    int r = static_cast<int>(k.size()) / 2;
    std::fill(dst, dst + static_cast<size_t>(h) * w, 0.0);
    for (int y = 0; y < h; ++y) {
        double* drow = dst + static_cast<size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            double g = src[static_cast<size_t>(y) * w + x];
            for (int t = -r; t <= r; ++t)
                drow[reflect_index(x + t, w)] += k[t + r] * g;
        }
    }
}

void sep_conv_reflect(const double* src, double* dst, int h, int w,
                      const std::vector<double>& ky, const std::vector<double>& kx) {
    std::vector<double> tmp(static_cast<size_t>(h) * w);
    conv_rows_reflect(src, tmp.data(), h, w, ky);
    conv_cols_reflect(tmp.data(), dst, h, w, kx);
}

void gaussian_blur(const double* src, double* dst, int h, int w, double sigma) {
    int radius = static_cast<int>(std::ceil(4.0 * sigma));
    std::vector<double> k = gaussian_kernel(sigma, radius);
    sep_conv_reflect(src, dst, h, w, k, k);
}

void bilinear_resize(const double* src, int sh, int sw, double* dst, int dh, int dw) {
    double sy_scale = static_cast<double>(sh) / dh;
    double sx_scale = static_cast<double>(sw) / dw;
    for (int y = 0; y < dh; ++y) {
        double sy = std::max(0.0, (y + 0.5) * sy_scale - 0.5);
        int y0 = std::min(static_cast<int>(sy), sh - 1);
        int y1 = std::min(y0 + 1, sh - 1);
        double fy = sy - y0;
        for (int x = 0; x < dw; ++x) {
            double sx = std::max(0.0, (x + 0.5) * sx_scale - 0.5);
            int x0 = std::min(static_cast<int>(sx), sw - 1);
            int x1 = std::min(x0 + 1, sw - 1);
            double fx = sx - x0;
            double a = src[static_cast<size_t>(y0) * sw + x0];
            double b = src[static_cast<size_t>(y0) * sw + x1];
            double c = src[static_cast<size_t>(y1) * sw + x0];
            double d = src[static_cast<size_t>(y1) * sw + x1];
            dst[static_cast<size_t>(y) * dw + x] =
                (1 - fy) * ((1 - fx) * a + fx * b) + fy * ((1 - fx) * c + fx * d);
        }
    }
}

namespace {

// 1-D squared distance transform via lower envelope of parabolas. Parabolas
// at infinite height (no feature in that row/column yet) are skipped so the
// intersection arithmetic never sees inf - inf.
void edt_1d(const double* f, double* d, int n, int* v, double* z) {
    const double inf = std::numeric_limits<double>::infinity();
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (std::isinf(f[q])) continue;
        if (k < 0) {
            k = 0;
            v[0] = q;
            z[0] = -inf;
            z[1] = inf;
            continue;
        }
        double s;
        while (true) {
            s = ((f[q] + q * static_cast<double>(q)) -
                 (f[v[k]] + v[k] * static_cast<double>(v[k]))) /
                (2.0 * q - 2.0 * v[k]);
            if (s <= z[k]) {
                --k;  // z[0] = -inf, so k never drops below 0 here
            } else {
                break;
            }
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = inf;
    }
    if (k < 0) {
        std::fill(d, d + n, inf);
        return;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        double dq = q - static_cast<double>(v[k]);
        d[q] = dq * dq + f[v[k]];
    }
}

}  // namespace

std::vector<double> distance_transform_sq(const unsigned char* feature, int h, int w) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> d(static_cast<size_t>(h) * w);
    for (size_t i = 0; i < d.size(); ++i) d[i] = feature[i] ? 0.0 : inf;

    int n = std::max(h, w);
    std::vector<double> f(n), out(n), z(n + 1);
    std::vector<int> v(n);

    // columns
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) f[y] = d[static_cast<size_t>(y) * w + x];
        edt_1d(f.data(), out.data(), h, v.data(), z.data());
        for (int y = 0; y < h; ++y) d[static_cast<size_t>(y) * w + x] = out[y];
    }
    // rows
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) f[x] = d[static_cast<size_t>(y) * w + x];
        edt_1d(f.data(), out.data(), w, v.data(), z.data());
        for (int x = 0; x < w; ++x) d[static_cast<size_t>(y) * w + x] = out[x];
    }
    return d;
}

}  // namespace p3m
