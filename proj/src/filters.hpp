#pragma once

#include <vector>

namespace p3m {

// Shared low-level image filtering on raw H×W planes. Boundary handling is
// half-sample symmetric reflection everywhere (edge pixel repeated:
// ... d c b a | a b c d | d c b a ...).

// Folds an arbitrary integer index into [0, n) by repeated reflection.
inline int reflect_index(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -1 - i;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

// Unnormalized Gaussian sampled on [-radius, radius], then normalized to sum 1.
std::vector<double> gaussian_kernel(double sigma, int radius);

// First derivative of the normalized Gaussian: d[i] = -i / sigma^2 * g[i].
std::vector<double> gaussian_deriv_kernel(double sigma, int radius);

// Separable 2-D convolution with reflect boundary; ky runs over rows, kx over
// columns. Kernels have odd length 2r+1.
void sep_conv_reflect(const double* src, double* dst, int h, int w,
                      const std::vector<double>& ky, const std::vector<double>& kx);

// Gaussian blur with kernel truncated at ceil(4*sigma).
void gaussian_blur(const double* src, double* dst, int h, int w, double sigma);

// 1-D convolution along rows / columns with reflect boundary, plus the exact
// adjoint (transpose) of the same linear map. Used where analytic gradients
// must match the forward pass to machine precision.
void conv_rows_reflect(const double* src, double* dst, int h, int w,
                       const std::vector<double>& k);
void conv_cols_reflect(const double* src, double* dst, int h, int w,
                       const std::vector<double>& k);
void conv_rows_reflect_adjoint(const double* src, double* dst, int h, int w,
                               const std::vector<double>& k);
void conv_cols_reflect_adjoint(const double* src, double* dst, int h, int w,
                               const std::vector<double>& k);

// Bilinear resize (align_corners = false convention: src = (dst+0.5)*scale-0.5,
// clamped to the valid range).
void bilinear_resize(const double* src, int sh, int sw, double* dst, int dh, int dw);

// Squared Euclidean distance transform (Felzenszwalb-Huttenlocher). Returns,
// for every pixel, the squared distance to the nearest pixel where
// feature[i] != 0. All-zero input yields +inf everywhere.
std::vector<double> distance_transform_sq(const unsigned char* feature, int h, int w);

}  // namespace p3m
