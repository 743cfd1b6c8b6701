#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace p3m {

// Dense NCHW tensor of doubles. All network math runs on this type; 2-D
// planes (mattes, masks) use n = c = 1.
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_),
          v(static_cast<size_t>(n_) * c_ * h_ * w_, 0.0) {}

    static Tensor zeros_like(const Tensor& t) { return Tensor(t.n, t.c, t.h, t.w); }

    size_t size() const { return v.size(); }
    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    double& at(int in, int ic, int iy, int ix) {
        return v[((static_cast<size_t>(in) * c + ic) * h + iy) * w + ix];
    }
    double at(int in, int ic, int iy, int ix) const {
        return v[((static_cast<size_t>(in) * c + ic) * h + iy) * w + ix];
    }

    double* plane(int in, int ic) {
        return v.data() + (static_cast<size_t>(in) * c + ic) * h * w;
    }
    const double* plane(int in, int ic) const {
        return v.data() + (static_cast<size_t>(in) * c + ic) * h * w;
    }

    void fill(double x) { std::fill(v.begin(), v.end(), x); }

    void add_(const Tensor& o) {
        if (!same_shape(o)) throw std::invalid_argument("Tensor::add_: shape mismatch");
        for (size_t i = 0; i < v.size(); ++i) v[i] += o.v[i];
    }

    void scale_(double s) {
        for (double& x : v) x *= s;
    }
};

}  // namespace p3m
