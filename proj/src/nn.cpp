#include "nn.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "errors.hpp"

namespace p3m::nn {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(int cin, int cout, int k, bool bias)
    : weight(cout, cin, k, k),
      bias(cout, 1, 1, 1),
      gweight(cout, cin, k, k),
      gbias(cout, 1, 1, 1),
      cin_(cin),
      cout_(cout),
      k_(k),
      pad_(k / 2),
      has_bias_(bias) {}

void Conv2d::init(Rng& rng) {
    double fan_in = static_cast<double>(cin_) * k_ * k_;
    double stddev = std::sqrt(2.0 / fan_in);
    for (double& v : weight.v) v = rng.normal(0.0, stddev);
    bias.fill(0.0);
}

void Conv2d::zero_() {
    weight.fill(0.0);
    bias.fill(0.0);
}

void Conv2d::visit(const std::string& prefix, const ParamVisitor& v) {
    v(prefix + ".weight", weight, gweight);
    if (has_bias_) v(prefix + ".bias", bias, gbias);
}

namespace {

// Fills `col` (K x M, row-major, K = cin*k*k) for output rows [y0, y1).
void im2col(const Tensor& x, int sample, int k, int pad, int y0, int y1, double* col) {
    int h = x.h, w = x.w, cin = x.c;
    int rows = y1 - y0;
    size_t m = static_cast<size_t>(rows) * w;
    for (int ci = 0; ci < cin; ++ci) {
        const double* plane = x.plane(sample, ci);
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                double* dst = col + (static_cast<size_t>(ci) * k * k + ky * k + kx) * m;
                for (int oy = y0; oy < y1; ++oy) {
                    int sy = oy + ky - pad;
                    double* drow = dst + static_cast<size_t>(oy - y0) * w;
                    if (sy < 0 || sy >= h) {
                        std::memset(drow, 0, sizeof(double) * w);
                        continue;
                    }
                    const double* srow = plane + static_cast<size_t>(sy) * w;
                    int shift = kx - pad;  // source x = out x + shift
                    int xa = std::max(0, -shift);
                    int xb = std::min(w, w - shift);
                    if (xa > 0) std::memset(drow, 0, sizeof(double) * xa);
                    if (xb > xa) std::memcpy(drow + xa, srow + xa + shift, sizeof(double) * (xb - xa));
                    if (xb < w) std::memset(drow + xb, 0, sizeof(double) * (w - xb));
                }
            }
        }
    }
}

// Scatter-add of a K x M column block back into gradient planes.
void col2im_add(const double* col, int cin, int k, int pad, int y0, int y1,
                Tensor& gx, int sample) {
    int h = gx.h, w = gx.w;
    int rows = y1 - y0;
    size_t m = static_cast<size_t>(rows) * w;
    for (int ci = 0; ci < cin; ++ci) {
        double* plane = gx.plane(sample, ci);
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const double* src = col + (static_cast<size_t>(ci) * k * k + ky * k + kx) * m;
                for (int oy = y0; oy < y1; ++oy) {
                    int sy = oy + ky - pad;
                    if (sy < 0 || sy >= h) continue;
                    const double* srow = src + static_cast<size_t>(oy - y0) * w;
                    double* drow = plane + static_cast<size_t>(sy) * w;
                    int shift = kx - pad;
                    int xa = std::max(0, -shift);
                    int xb = std::min(w, w - shift);
                    for (int ox = xa; ox < xb; ++ox) drow[ox + shift] += srow[ox];
                }
            }
        }
    }
}

// Output rows processed per GEMM call, sized to keep the column buffer small.
int conv_chunk_rows(int K, int w) {
    constexpr size_t kColBudget = size_t(48) << 20;  // bytes
    size_t per_row = static_cast<size_t>(K) * w * sizeof(double);
    return std::max<int>(1, static_cast<int>(kColBudget / std::max<size_t>(per_row, 1)));
}

}  // namespace

Tensor Conv2d::forward(const Tensor& x, const Pass& p) {
    if (x.c != cin_) fail(ErrorCode::InvalidArgument, "Conv2d: channel mismatch");
    Tensor y(x.n, cout_, x.h, x.w);
    size_t hw = static_cast<size_t>(x.h) * x.w;
    ConstMapMat wm(weight.v.data(), cout_, static_cast<Eigen::Index>(cin_) * k_ * k_);

    if (k_ == 1) {
        // 1x1 projection: plain channel-mixing GEMM per sample
        for (int n = 0; n < x.n; ++n) {
            ConstMapMat xm(x.plane(n, 0), cin_, hw);
            MapMat ym(y.plane(n, 0), cout_, hw);
            ym.noalias() = wm * xm;
        }
    } else {
        int K = cin_ * k_ * k_;
        int chunk = conv_chunk_rows(K, x.w);
        std::vector<double> col(static_cast<size_t>(K) * std::min(chunk, x.h) * x.w);
        for (int n = 0; n < x.n; ++n) {
            for (int y0 = 0; y0 < x.h; y0 += chunk) {
                int y1 = std::min(x.h, y0 + chunk);
                size_t m = static_cast<size_t>(y1 - y0) * x.w;
                im2col(x, n, k_, pad_, y0, y1, col.data());
                ConstMapMat cm(col.data(), K, m);
                // rows of y are strided by the full plane size
                Eigen::Map<RowMat, 0, Eigen::Stride<Eigen::Dynamic, 1>> ym(
                    y.plane(n, 0) + static_cast<size_t>(y0) * x.w, cout_, m,
                    Eigen::Stride<Eigen::Dynamic, 1>(static_cast<Eigen::Index>(hw), 1));
                ym.noalias() = wm * cm;
            }
        }
    }

    if (has_bias_) {
        for (int n = 0; n < x.n; ++n)
            for (int co = 0; co < cout_; ++co) {
                double b = bias.v[co];
                double* plane = y.plane(n, co);
                for (size_t i = 0; i < hw; ++i) plane[i] += b;
            }
    }

    if (p.grad) cached_x_ = x;
    return y;
}

Tensor Conv2d::backward(const Tensor& gy) {
    const Tensor& x = cached_x_;
    if (x.size() == 0) fail(ErrorCode::BadState, "Conv2d::backward without cached forward");
    Tensor gx(x.n, cin_, x.h, x.w);
    size_t hw = static_cast<size_t>(x.h) * x.w;

    MapMat gwm(gweight.v.data(), cout_, static_cast<Eigen::Index>(cin_) * k_ * k_);
    ConstMapMat wm(weight.v.data(), cout_, static_cast<Eigen::Index>(cin_) * k_ * k_);

    if (has_bias_) {
        for (int co = 0; co < cout_; ++co) {
            double acc = 0.0;
            for (int n = 0; n < gy.n; ++n) {
                const double* plane = gy.plane(n, co);
                for (size_t i = 0; i < hw; ++i) acc += plane[i];
            }
            gbias.v[co] += acc;
        }
    }

    if (k_ == 1) {
        for (int n = 0; n < x.n; ++n) {
            ConstMapMat xm(x.plane(n, 0), cin_, hw);
            ConstMapMat gym(gy.plane(n, 0), cout_, hw);
            MapMat gxm(gx.plane(n, 0), cin_, hw);
            gwm.noalias() += gym * xm.transpose();
            gxm.noalias() = wm.transpose() * gym;
        }
        return gx;
    }

    int K = cin_ * k_ * k_;
    int chunk = conv_chunk_rows(K, x.w);
    std::vector<double> col(static_cast<size_t>(K) * std::min(chunk, x.h) * x.w);
    std::vector<double> colg(col.size());
    for (int n = 0; n < x.n; ++n) {
        for (int y0 = 0; y0 < x.h; y0 += chunk) {
            int y1 = std::min(x.h, y0 + chunk);
            size_t m = static_cast<size_t>(y1 - y0) * x.w;
            im2col(x, n, k_, pad_, y0, y1, col.data());
            ConstMapMat cm(col.data(), K, m);
            Eigen::Map<const RowMat, 0, Eigen::Stride<Eigen::Dynamic, 1>> gym(
                gy.plane(n, 0) + static_cast<size_t>(y0) * x.w, cout_, m,
                Eigen::Stride<Eigen::Dynamic, 1>(static_cast<Eigen::Index>(hw), 1));
            gwm.noalias() += gym * cm.transpose();
            MapMat cgm(colg.data(), K, m);
            cgm.noalias() = wm.transpose() * gym;
            col2im_add(colg.data(), cin_, k_, pad_, y0, y1, gx, n);
        }
    }
    return gx;
}

// ---------------------------------------------------------------------------
// BatchNorm2d

BatchNorm2d::BatchNorm2d(int c)
    : gamma(1, c, 1, 1),
      beta(1, c, 1, 1),
      ggamma(1, c, 1, 1),
      gbeta(1, c, 1, 1),
      running_mean(1, c, 1, 1),
      running_var(1, c, 1, 1),
      c_(c) {
    gamma.fill(1.0);
    running_var.fill(1.0);
}

void BatchNorm2d::visit(const std::string& prefix, const ParamVisitor& v) {
    v(prefix + ".gamma", gamma, ggamma);
    v(prefix + ".beta", beta, gbeta);
}

void BatchNorm2d::visit_buffers(const std::string& prefix, const BufferVisitor& v) {
    v(prefix + ".running_mean", running_mean);
    v(prefix + ".running_var", running_var);
}

void BatchNorm2d::zero_affine_() {
    gamma.fill(1.0);
    beta.fill(0.0);
}

Tensor BatchNorm2d::forward(const Tensor& x, const Pass& p) {
    if (x.c != c_) fail(ErrorCode::InvalidArgument, "BatchNorm2d: channel mismatch");
    Tensor y = Tensor::zeros_like(x);
    size_t hw = static_cast<size_t>(x.h) * x.w;
    double m_count = static_cast<double>(x.n) * hw;

    if (p.train) {
        inv_std_.assign(c_, 0.0);
        if (p.grad) xhat_ = Tensor::zeros_like(x);
        for (int c = 0; c < c_; ++c) {
            double mean = 0.0;
            for (int n = 0; n < x.n; ++n) {
                const double* plane = x.plane(n, c);
                for (size_t i = 0; i < hw; ++i) mean += plane[i];
            }
            mean /= m_count;
            double var = 0.0;
            for (int n = 0; n < x.n; ++n) {
                const double* plane = x.plane(n, c);
                for (size_t i = 0; i < hw; ++i) {
                    double d = plane[i] - mean;
                    var += d * d;
                }
            }
            var /= m_count;
            double istd = 1.0 / std::sqrt(var + eps_);
            inv_std_[c] = istd;
            double g = gamma.v[c], b = beta.v[c];
            for (int n = 0; n < x.n; ++n) {
                const double* plane = x.plane(n, c);
                double* yplane = y.plane(n, c);
                double* xh = p.grad ? xhat_.plane(n, c) : nullptr;
                for (size_t i = 0; i < hw; ++i) {
                    double xhat = (plane[i] - mean) * istd;
                    if (xh) xh[i] = xhat;
                    yplane[i] = g * xhat + b;
                }
            }
            running_mean.v[c] = (1.0 - momentum_) * running_mean.v[c] + momentum_ * mean;
            running_var.v[c] = (1.0 - momentum_) * running_var.v[c] + momentum_ * var;
        }
        cached_train_ = true;
    } else {
        inv_std_.assign(c_, 0.0);
        for (int c = 0; c < c_; ++c) {
            double istd = 1.0 / std::sqrt(running_var.v[c] + eps_);
            inv_std_[c] = istd;
            double g = gamma.v[c], b = beta.v[c], mean = running_mean.v[c];
            for (int n = 0; n < x.n; ++n) {
                const double* plane = x.plane(n, c);
                double* yplane = y.plane(n, c);
                for (size_t i = 0; i < hw; ++i)
                    yplane[i] = g * (plane[i] - mean) * istd + b;
            }
        }
        if (p.grad) {
            xhat_ = Tensor::zeros_like(x);
            for (int c = 0; c < c_; ++c) {
                double istd = inv_std_[c], mean = running_mean.v[c];
                for (int n = 0; n < x.n; ++n) {
                    const double* plane = x.plane(n, c);
                    double* xh = xhat_.plane(n, c);
                    for (size_t i = 0; i < hw; ++i) xh[i] = (plane[i] - mean) * istd;
                }
            }
        }
        cached_train_ = false;
    }
    return y;
}

Tensor BatchNorm2d::backward(const Tensor& gy) {
    if (xhat_.size() == 0) fail(ErrorCode::BadState, "BatchNorm2d::backward without cache");
    Tensor gx = Tensor::zeros_like(gy);
    size_t hw = static_cast<size_t>(gy.h) * gy.w;
    double m_count = static_cast<double>(gy.n) * hw;

    for (int c = 0; c < c_; ++c) {
        double sum_g = 0.0, sum_gx = 0.0;
        for (int n = 0; n < gy.n; ++n) {
            const double* g = gy.plane(n, c);
            const double* xh = xhat_.plane(n, c);
            for (size_t i = 0; i < hw; ++i) {
                sum_g += g[i];
                sum_gx += g[i] * xh[i];
            }
        }
        gbeta.v[c] += sum_g;
        ggamma.v[c] += sum_gx;

        double gsc = gamma.v[c] * inv_std_[c];
        if (cached_train_) {
            double mg = sum_g / m_count;
            double mgx = sum_gx / m_count;
            for (int n = 0; n < gy.n; ++n) {
                const double* g = gy.plane(n, c);
                const double* xh = xhat_.plane(n, c);
                double* out = gx.plane(n, c);
                for (size_t i = 0; i < hw; ++i)
                    out[i] = gsc * (g[i] - mg - xh[i] * mgx);
            }
        } else {
            for (int n = 0; n < gy.n; ++n) {
                const double* g = gy.plane(n, c);
                double* out = gx.plane(n, c);
                for (size_t i = 0; i < hw; ++i) out[i] = gsc * g[i];
            }
        }
    }
    return gx;
}

// ---------------------------------------------------------------------------
// Activations

Tensor ReLU::forward(const Tensor& x, const Pass& p) {
    Tensor y = x;
    for (double& v : y.v) v = v > 0.0 ? v : 0.0;
    if (p.grad) {
        mask_ = Tensor::zeros_like(x);
        for (size_t i = 0; i < x.v.size(); ++i) mask_.v[i] = x.v[i] > 0.0 ? 1.0 : 0.0;
    }
    return y;
}

Tensor ReLU::backward(const Tensor& gy) {
    Tensor gx = gy;
    for (size_t i = 0; i < gx.v.size(); ++i) gx.v[i] *= mask_.v[i];
    return gx;
}

Tensor Sigmoid::forward(const Tensor& x, const Pass& p) {
    Tensor y = x;
    for (double& v : y.v) v = 1.0 / (1.0 + std::exp(-v));
    if (p.grad) y_ = y;
    return y;
}

Tensor Sigmoid::backward(const Tensor& gy) {
    Tensor gx = gy;
    for (size_t i = 0; i < gx.v.size(); ++i) {
        double s = y_.v[i];
        gx.v[i] *= s * (1.0 - s);
    }
    return gx;
}

Tensor SoftmaxChannel::forward(const Tensor& x, const Pass& p) {
    Tensor y = Tensor::zeros_like(x);
    size_t hw = static_cast<size_t>(x.h) * x.w;
    for (int n = 0; n < x.n; ++n) {
        for (size_t i = 0; i < hw; ++i) {
            double mx = -1e300;
            for (int c = 0; c < x.c; ++c) mx = std::max(mx, x.plane(n, c)[i]);
            double sum = 0.0;
            for (int c = 0; c < x.c; ++c) {
                double e = std::exp(x.plane(n, c)[i] - mx);
                y.plane(n, c)[i] = e;
                sum += e;
            }
            for (int c = 0; c < x.c; ++c) y.plane(n, c)[i] /= sum;
        }
    }
    if (p.grad) y_ = y;
    return y;
}

Tensor SoftmaxChannel::backward(const Tensor& gy) {
    Tensor gx = Tensor::zeros_like(gy);
    size_t hw = static_cast<size_t>(gy.h) * gy.w;
    for (int n = 0; n < gy.n; ++n) {
        for (size_t i = 0; i < hw; ++i) {
            double dot = 0.0;
            for (int c = 0; c < gy.c; ++c) dot += gy.plane(n, c)[i] * y_.plane(n, c)[i];
            for (int c = 0; c < gy.c; ++c)
                gx.plane(n, c)[i] = y_.plane(n, c)[i] * (gy.plane(n, c)[i] - dot);
        }
    }
    return gx;
}

// ---------------------------------------------------------------------------
// Pooling

Tensor MaxPool::forward(const Tensor& x, const Pass& p) {
    if (x.h % r_ != 0 || x.w % r_ != 0)
        fail(ErrorCode::InvalidArgument, "MaxPool: input sides must be divisible by ratio");
    int oh = x.h / r_, ow = x.w / r_;
    Tensor y(x.n, x.c, oh, ow);
    in_h_ = x.h;
    in_w_ = x.w;
    indices_.assign(static_cast<size_t>(x.n) * x.c * oh * ow, 0);

    size_t out_i = 0;
    for (int n = 0; n < x.n; ++n) {
        for (int c = 0; c < x.c; ++c) {
            const double* plane = x.plane(n, c);
            double* yplane = y.plane(n, c);
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) {
                    double best = -1e300;
                    int32_t best_idx = 0;
                    for (int ky = 0; ky < r_; ++ky) {
                        const double* row = plane + static_cast<size_t>(oy * r_ + ky) * x.w;
                        for (int kx = 0; kx < r_; ++kx) {
                            double v = row[ox * r_ + kx];
                            if (v > best) {
                                best = v;
                                best_idx = static_cast<int32_t>((oy * r_ + ky) * x.w + ox * r_ + kx);
                            }
                        }
                    }
                    yplane[static_cast<size_t>(oy) * ow + ox] = best;
                    indices_[out_i++] = best_idx;
                }
            }
        }
    }
    (void)p;
    return y;
}

Tensor MaxPool::backward(const Tensor& gy) {
    Tensor gx(gy.n, gy.c, in_h_, in_w_);
    size_t ohw = static_cast<size_t>(gy.h) * gy.w;
    size_t idx = 0;
    for (int n = 0; n < gy.n; ++n) {
        for (int c = 0; c < gy.c; ++c) {
            const double* g = gy.plane(n, c);
            double* out = gx.plane(n, c);
            for (size_t i = 0; i < ohw; ++i) out[indices_[idx + i]] += g[i];
            idx += ohw;
        }
    }
    return gx;
}

Tensor MaxUnpool::forward(const Tensor& x, const std::vector<int32_t>& indices,
                          int out_h, int out_w, const Pass& p) {
    if (indices.size() != x.size())
        fail(ErrorCode::InvalidArgument, "MaxUnpool: indices do not match input size");
    Tensor y(x.n, x.c, out_h, out_w);
    size_t ihw = static_cast<size_t>(x.h) * x.w;
    size_t idx = 0;
    for (int n = 0; n < x.n; ++n) {
        for (int c = 0; c < x.c; ++c) {
            const double* plane = x.plane(n, c);
            double* yplane = y.plane(n, c);
            for (size_t i = 0; i < ihw; ++i) yplane[indices[idx + i]] = plane[i];
            idx += ihw;
        }
    }
    if (p.grad) {
        cached_indices_ = indices;
        out_h_ = x.h;
        out_w_ = x.w;
    }
    return y;
}

Tensor MaxUnpool::backward(const Tensor& gy) {
    Tensor gx(gy.n, gy.c, out_h_, out_w_);
    size_t ihw = static_cast<size_t>(out_h_) * out_w_;
    size_t idx = 0;
    for (int n = 0; n < gy.n; ++n) {
        for (int c = 0; c < gy.c; ++c) {
            const double* g = gy.plane(n, c);
            double* out = gx.plane(n, c);
            for (size_t i = 0; i < ihw; ++i) out[i] = g[cached_indices_[idx + i]];
            idx += ihw;
        }
    }
    return gx;
}

// ---------------------------------------------------------------------------
// Bilinear upsampling

Tensor UpsampleBilinear::forward(const Tensor& x, const Pass& p) {
    int oh = x.h * f_, ow = x.w * f_;
    Tensor y(x.n, x.c, oh, ow);
    in_h_ = x.h;
    in_w_ = x.w;

    std::vector<int> y0(oh), y1(oh), x0(ow), x1(ow);
    std::vector<double> fy(oh), fx(ow);
    for (int oy = 0; oy < oh; ++oy) {
        double sy = std::max(0.0, (oy + 0.5) / f_ - 0.5);
        y0[oy] = std::min(static_cast<int>(sy), x.h - 1);
        y1[oy] = std::min(y0[oy] + 1, x.h - 1);
        fy[oy] = sy - y0[oy];
    }
    for (int ox = 0; ox < ow; ++ox) {
        double sx = std::max(0.0, (ox + 0.5) / f_ - 0.5);
        x0[ox] = std::min(static_cast<int>(sx), x.w - 1);
        x1[ox] = std::min(x0[ox] + 1, x.w - 1);
        fx[ox] = sx - x0[ox];
    }

    for (int n = 0; n < x.n; ++n) {
        for (int c = 0; c < x.c; ++c) {
            const double* plane = x.plane(n, c);
            double* yplane = y.plane(n, c);
            for (int oy = 0; oy < oh; ++oy) {
                const double* r0 = plane + static_cast<size_t>(y0[oy]) * x.w;
                const double* r1 = plane + static_cast<size_t>(y1[oy]) * x.w;
                double wy = fy[oy];
                double* yrow = yplane + static_cast<size_t>(oy) * ow;
                for (int ox = 0; ox < ow; ++ox) {
                    double wx = fx[ox];
                    double a = r0[x0[ox]], b = r0[x1[ox]];
                    double cc = r1[x0[ox]], d = r1[x1[ox]];
                    yrow[ox] = (1 - wy) * ((1 - wx) * a + wx * b) + wy * ((1 - wx) * cc + wx * d);
                }
            }
        }
    }
    (void)p;
    return y;
}

Tensor UpsampleBilinear::backward(const Tensor& gy) {
    Tensor gx(gy.n, gy.c, in_h_, in_w_);
    int oh = gy.h, ow = gy.w;
    for (int n = 0; n < gy.n; ++n) {
        for (int c = 0; c < gy.c; ++c) {
            const double* g = gy.plane(n, c);
            double* out = gx.plane(n, c);
            for (int oy = 0; oy < oh; ++oy) {
                double sy = std::max(0.0, (oy + 0.5) / f_ - 0.5);
                int yy0 = std::min(static_cast<int>(sy), in_h_ - 1);
                int yy1 = std::min(yy0 + 1, in_h_ - 1);
                double wy = sy - yy0;
                for (int ox = 0; ox < ow; ++ox) {
                    double sx = std::max(0.0, (ox + 0.5) / f_ - 0.5);
                    int xx0 = std::min(static_cast<int>(sx), in_w_ - 1);
                    int xx1 = std::min(xx0 + 1, in_w_ - 1);
                    double wx = sx - xx0;
                    double gv = g[static_cast<size_t>(oy) * ow + ox];
                    out[static_cast<size_t>(yy0) * in_w_ + xx0] += (1 - wy) * (1 - wx) * gv;
                    out[static_cast<size_t>(yy0) * in_w_ + xx1] += (1 - wy) * wx * gv;
                    out[static_cast<size_t>(yy1) * in_w_ + xx0] += wy * (1 - wx) * gv;
                    out[static_cast<size_t>(yy1) * in_w_ + xx1] += wy * wx * gv;
                }
            }
        }
    }
    return gx;
}

// ---------------------------------------------------------------------------
// Concat / split

Tensor concat_channels(const std::vector<const Tensor*>& xs) {
    int total_c = 0;
    for (const Tensor* t : xs) total_c += t->c;
    const Tensor& first = *xs.front();
    Tensor y(first.n, total_c, first.h, first.w);
    size_t hw = static_cast<size_t>(first.h) * first.w;
    for (int n = 0; n < first.n; ++n) {
        int co = 0;
        for (const Tensor* t : xs) {
            if (t->n != first.n || t->h != first.h || t->w != first.w)
                fail(ErrorCode::SizeMismatch, "concat_channels: spatial/batch mismatch");
            for (int c = 0; c < t->c; ++c, ++co)
                std::memcpy(y.plane(n, co), t->plane(n, c), hw * sizeof(double));
        }
    }
    return y;
}

std::vector<Tensor> split_channels(const Tensor& g, const std::vector<int>& sizes) {
    std::vector<Tensor> parts;
    size_t hw = static_cast<size_t>(g.h) * g.w;
    int co = 0;
    for (int sz : sizes) {
        Tensor part(g.n, sz, g.h, g.w);
        for (int n = 0; n < g.n; ++n)
            for (int c = 0; c < sz; ++c)
                std::memcpy(part.plane(n, c), g.plane(n, co + c), hw * sizeof(double));
        co += sz;
        parts.push_back(std::move(part));
    }
    return parts;
}

// ---------------------------------------------------------------------------
// Adam

void Adam::step(std::vector<std::pair<Tensor*, Tensor*>>& params_and_grads) {
    if (m_.empty()) {
        m_.resize(params_and_grads.size());
        v_.resize(params_and_grads.size());
        for (size_t i = 0; i < params_and_grads.size(); ++i) {
            m_[i].assign(params_and_grads[i].first->size(), 0.0);
            v_[i].assign(params_and_grads[i].first->size(), 0.0);
        }
    }
    ++t_;
    double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    for (size_t i = 0; i < params_and_grads.size(); ++i) {
        Tensor& p = *params_and_grads[i].first;
        Tensor& g = *params_and_grads[i].second;
        auto& m = m_[i];
        auto& v = v_[i];
        for (size_t j = 0; j < p.v.size(); ++j) {
            double grad = g.v[j] + opt_.weight_decay * p.v[j];
            m[j] = opt_.beta1 * m[j] + (1.0 - opt_.beta1) * grad;
            v[j] = opt_.beta2 * v[j] + (1.0 - opt_.beta2) * grad * grad;
            double mhat = m[j] / bc1;
            double vhat = v[j] / bc2;
            p.v[j] -= opt_.lr * mhat / (std::sqrt(vhat) + opt_.eps);
        }
    }
}

void Adam::zero_grads(std::vector<std::pair<Tensor*, Tensor*>>& params_and_grads) {
    for (auto& pg : params_and_grads) pg.second->fill(0.0);
}

}  // namespace p3m::nn
