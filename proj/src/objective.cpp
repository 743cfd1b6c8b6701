#include "objective.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "filters.hpp"

namespace p3m::objective {

namespace {

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void check_same_size(int h1, int w1, int h2, int w2, const char* what) {
    if (h1 != h2 || w1 != w2) fail(ErrorCode::SizeMismatch, what);
}

// --- binomial Laplacian pyramid -------------------------------------------

const std::vector<double>& binomial5() {
    static const std::vector<double> k{1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
    return k;
}

std::vector<double> blur5(const std::vector<double>& x, int h, int w) {
    std::vector<double> tmp(x.size()), out(x.size());
    conv_rows_reflect(x.data(), tmp.data(), h, w, binomial5());
    conv_cols_reflect(tmp.data(), out.data(), h, w, binomial5());
    return out;
}

// exact transpose of blur5
std::vector<double> blur5_adjoint(const std::vector<double>& g, int h, int w) {
    std::vector<double> tmp(g.size()), out(g.size());
    conv_cols_reflect_adjoint(g.data(), tmp.data(), h, w, binomial5());
    conv_rows_reflect_adjoint(tmp.data(), out.data(), h, w, binomial5());
    return out;
}

std::vector<double> sub2(const std::vector<double>& x, int h, int w) {
    std::vector<double> out(static_cast<size_t>(h / 2) * (w / 2));
    for (int y = 0; y < h / 2; ++y)
        for (int xx = 0; xx < w / 2; ++xx)
            out[static_cast<size_t>(y) * (w / 2) + xx] = x[static_cast<size_t>(2 * y) * w + 2 * xx];
    return out;
}

std::vector<double> sub2_adjoint(const std::vector<double>& g, int h, int w) {
    // h, w are the *input* (fine) dimensions
    std::vector<double> out(static_cast<size_t>(h) * w, 0.0);
    for (int y = 0; y < h / 2; ++y)
        for (int xx = 0; xx < w / 2; ++xx)
            out[static_cast<size_t>(2 * y) * w + 2 * xx] = g[static_cast<size_t>(y) * (w / 2) + xx];
    return out;
}

constexpr int kPyramidLevels = 5;

struct Pyramid {
    std::vector<std::vector<double>> levels;  // band-pass 0..3, low-pass residual 4
    std::vector<int> hs, ws;
};

Pyramid build_pyramid(const std::vector<double>& x0, int h, int w) {
    Pyramid p;
    std::vector<double> g = x0;
    for (int l = 0; l < kPyramidLevels - 1; ++l) {
        std::vector<double> b = blur5(g, h, w);
        std::vector<double> band(g.size());
        for (size_t i = 0; i < g.size(); ++i) band[i] = g[i] - b[i];
        p.levels.push_back(std::move(band));
        p.hs.push_back(h);
        p.ws.push_back(w);
        g = sub2(b, h, w);
        h /= 2;
        w /= 2;
    }
    p.levels.push_back(std::move(g));
    p.hs.push_back(h);
    p.ws.push_back(w);
    return p;
}

// Adjoint of build_pyramid: maps per-level cotangents back to the input.
std::vector<double> pyramid_adjoint(const Pyramid& shape_ref,
                                    const std::vector<std::vector<double>>& g_levels) {
    std::vector<double> gg = g_levels[kPyramidLevels - 1];  // g of G_4
    for (int l = kPyramidLevels - 2; l >= 0; --l) {
        int h = shape_ref.hs[l], w = shape_ref.ws[l];
        // G_{l+1} = sub2(B); L_l = G_l - B; B = blur(G_l)
        std::vector<double> gb = sub2_adjoint(gg, h, w);
        for (size_t i = 0; i < gb.size(); ++i) gb[i] -= g_levels[l][i];
        std::vector<double> g_from_blur = blur5_adjoint(gb, h, w);
        gg = g_levels[l];
        for (size_t i = 0; i < gg.size(); ++i) gg[i] += g_from_blur[i];
    }
    return gg;
}

}  // namespace

double alpha_loss(const AlphaMatte& pred, const AlphaMatte& gt, const RegionMask& region,
                  std::vector<double>* grad_pred) {
    check_same_size(pred.h, pred.w, gt.h, gt.w, "alpha_loss: pred/gt size mismatch");
    check_same_size(pred.h, pred.w, region.h, region.w, "alpha_loss: region size mismatch");
    size_t count = region.count();
    if (grad_pred) grad_pred->assign(pred.data.size(), 0.0);
    if (count == 0) return 0.0;

    double acc = 0.0;
    for (size_t i = 0; i < pred.data.size(); ++i) {
        if (!region.mask[i]) continue;
        double d = pred.data[i] - gt.data[i];
        acc += std::abs(d);
        if (grad_pred) (*grad_pred)[i] = sign(d) / static_cast<double>(count);
    }
    return acc / static_cast<double>(count);
}

double laplacian_loss(const AlphaMatte& pred, const AlphaMatte& gt, const RegionMask& region,
                      std::vector<double>* grad_pred) {
    check_same_size(pred.h, pred.w, gt.h, gt.w, "laplacian_loss: pred/gt size mismatch");
    check_same_size(pred.h, pred.w, region.h, region.w, "laplacian_loss: region size mismatch");
    if (pred.h % 32 != 0 || pred.w % 32 != 0)
        fail(ErrorCode::InvalidArgument, "laplacian_loss: sides must be divisible by 32");

    int h = pred.h, w = pred.w;
    std::vector<double> a(pred.data.size()), b(pred.data.size());
    for (size_t i = 0; i < a.size(); ++i) {
        double m = region.mask[i] ? 1.0 : 0.0;
        a[i] = pred.data[i] * m;
        b[i] = gt.data[i] * m;
    }

    Pyramid pa = build_pyramid(a, h, w);
    Pyramid pb = build_pyramid(b, h, w);

    double value = 0.0;
    std::vector<std::vector<double>> g_levels(kPyramidLevels);
    for (int l = 0; l < kPyramidLevels; ++l) {
        double weight = static_cast<double>(1 << l);
        size_t n = pa.levels[l].size();
        double acc = 0.0;
        if (grad_pred) g_levels[l].assign(n, 0.0);
        for (size_t i = 0; i < n; ++i) {
            double d = pa.levels[l][i] - pb.levels[l][i];
            acc += std::abs(d);
            if (grad_pred) g_levels[l][i] = weight * sign(d) / static_cast<double>(n);
        }
        value += weight * acc / static_cast<double>(n);
    }

    if (grad_pred) {
        std::vector<double> ga = pyramid_adjoint(pa, g_levels);
        grad_pred->assign(pred.data.size(), 0.0);
        for (size_t i = 0; i < ga.size(); ++i)
            (*grad_pred)[i] = region.mask[i] ? ga[i] : 0.0;
    }
    return value;
}

double composition_loss(const AlphaMatte& pred, const AlphaMatte& gt, const Image& image,
                        std::vector<double>* grad_pred) {
    check_same_size(pred.h, pred.w, gt.h, gt.w, "composition_loss: pred/gt size mismatch");
    check_same_size(pred.h, pred.w, image.h, image.w, "composition_loss: image size mismatch");
    size_t plane = pred.data.size();
    double denom = static_cast<double>(3 * plane);
    if (grad_pred) grad_pred->assign(plane, 0.0);

    double acc = 0.0;
    for (int ch = 0; ch < 3; ++ch) {
        const double* ip = image.plane(ch);
        for (size_t i = 0; i < plane; ++i) {
            double d = (pred.data[i] - gt.data[i]) * ip[i];
            acc += std::abs(d);
            if (grad_pred) (*grad_pred)[i] += sign(d) * ip[i] / denom;
        }
    }
    return acc / denom;
}

double cross_entropy_loss(const Tensor& probs, const Trimap& g, bool normalized,
                          Tensor* grad_probs) {
    if (probs.n != 1 || probs.c != 3)
        fail(ErrorCode::InvalidArgument, "cross_entropy_loss: probs must be (1,3,H,W)");
    check_same_size(probs.h, probs.w, g.h, g.w, "cross_entropy_loss: probs/trimap size mismatch");

    constexpr double kClamp = 1e-8;
    size_t hw = static_cast<size_t>(probs.h) * probs.w;
    // loose simplex check: tight enough to catch misuse, loose enough for
    // finite-difference probes of individual coordinates
    for (size_t i = 0; i < hw; ++i) {
        double s = probs.plane(0, 0)[i] + probs.plane(0, 1)[i] + probs.plane(0, 2)[i];
        if (!(s > 0.98 && s < 1.02))
            fail(ErrorCode::InvalidArgument, "cross_entropy_loss: probs are not a per-pixel simplex");
    }

    double denom = normalized ? static_cast<double>(hw) : 1.0;
    if (grad_probs) *grad_probs = Tensor(1, 3, probs.h, probs.w);

    double acc = 0.0;
    for (int c = 0; c < 3; ++c) {
        const double* p = probs.plane(0, c);
        double* gp = grad_probs ? grad_probs->plane(0, c) : nullptr;
        for (size_t i = 0; i < hw; ++i) {
            if (g.labels[i] != c) continue;
            double pc = std::max(p[i], kClamp);
            acc -= std::log(pc);
            if (gp) gp[i] = p[i] > kClamp ? -1.0 / (pc * denom) : 0.0;
        }
    }
    return acc / denom;
}

namespace {

RegionMask full_region(int h, int w) {
    RegionMask r(h, w);
    std::fill(r.mask.begin(), r.mask.end(), 1);
    return r;
}

LossReport compute_terms(const net::P3MNetOutput& output, const AlphaMatte& gt_alpha,
                         const Trimap& g, const Image& image, const LossWeights& w,
                         SampleLossGrads* grads) {
    if (output.side_seg.size() != 3)
        fail(ErrorCode::InvalidArgument, "total_loss: expected exactly 3 side outputs");
    check_same_size(gt_alpha.h, gt_alpha.w, g.h, g.w, "total_loss: gt/trimap size mismatch");
    check_same_size(gt_alpha.h, gt_alpha.w, output.alpha_final.h, output.alpha_final.w,
                    "total_loss: prediction/gt size mismatch");

    int h = gt_alpha.h, wd = gt_alpha.w;
    RegionMask transition = transition_mask(g);
    RegionMask whole = full_region(h, wd);

    LossReport rep;
    std::vector<double> g_alpha_m, g_lap_m, g_alpha_f, g_lap_f, g_comp;
    Tensor g_ce_seg;
    std::array<Tensor, 3> g_ce_side;

    rep.alpha_m = alpha_loss(output.matting_detail, gt_alpha, transition,
                             grads ? &g_alpha_m : nullptr);
    rep.lap_m = laplacian_loss(output.matting_detail, gt_alpha, transition,
                               grads ? &g_lap_m : nullptr);
    for (int i = 0; i < 3; ++i)
        rep.ce_side[i] = cross_entropy_loss(output.side_seg[i], g, true,
                                            grads ? &g_ce_side[i] : nullptr);
    rep.ce_seg = cross_entropy_loss(output.seg_probs, g, true, grads ? &g_ce_seg : nullptr);
    rep.alpha_f = alpha_loss(output.alpha_final, gt_alpha, whole, grads ? &g_alpha_f : nullptr);
    rep.lap_f = laplacian_loss(output.alpha_final, gt_alpha, whole, grads ? &g_lap_f : nullptr);
    rep.comp = composition_loss(output.alpha_final, gt_alpha, image, grads ? &g_comp : nullptr);
    rep.total = rep.combined(w);

    if (grads) {
        grads->g_detail = Tensor(1, 1, h, wd);
        grads->g_seg_probs = Tensor(1, 3, h, wd);
        for (auto& t : grads->g_side) t = Tensor(1, 3, h, wd);

        // fused-alpha terms flow into the matting decoder only where the
        // fusion selected the transition class
        size_t hw = static_cast<size_t>(h) * wd;
        const double* p0 = output.seg_probs.plane(0, 0);
        const double* p1 = output.seg_probs.plane(0, 1);
        const double* p2 = output.seg_probs.plane(0, 2);
        double* gd = grads->g_detail.plane(0, 0);
        for (size_t i = 0; i < hw; ++i) {
            double v = w.lambda_m * (g_alpha_m[i] + g_lap_m[i]);
            bool transition_pred = p1[i] > p0[i] && !(p2[i] > p1[i]);
            if (transition_pred)
                v += w.lambda_f * (2.0 * g_alpha_f[i] + 2.0 * g_lap_f[i] + g_comp[i]);
            gd[i] = v;
        }
        for (size_t i = 0; i < grads->g_seg_probs.v.size(); ++i)
            grads->g_seg_probs.v[i] = w.lambda_s * 3.0 * g_ce_seg.v[i];
        for (int s = 0; s < 3; ++s)
            for (size_t i = 0; i < grads->g_side[s].v.size(); ++i)
                grads->g_side[s].v[i] = w.lambda_s * g_ce_side[s].v[i];
    }
    return rep;
}

}  // namespace

LossReport total_loss(const net::P3MNetOutput& output, const AlphaMatte& gt_alpha,
                      const Trimap& g, const Image& image, const LossWeights& w) {
    return compute_terms(output, gt_alpha, g, image, w, nullptr);
}

LossReport total_loss_with_grad(const net::P3MNetOutput& output, const AlphaMatte& gt_alpha,
                                const Trimap& g, const Image& image, const LossWeights& w,
                                SampleLossGrads* grads) {
    return compute_terms(output, gt_alpha, g, image, w, grads);
}

}  // namespace p3m::objective
