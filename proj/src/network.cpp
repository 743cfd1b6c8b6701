#include "network.hpp"

#include <cmath>

#include "errors.hpp"

namespace p3m::net {

void P3MNetConfig::validate() const {
    if (base_channels < 2 || base_channels % 2 != 0)
        fail(ErrorCode::InvalidArgument, "base_channels must be even and >= 2");
    for (int n : encoder_blocks)
        if (n < 1) fail(ErrorCode::InvalidArgument, "encoder stages need at least one block");
    if (dilation_radius < 0)
        fail(ErrorCode::InvalidArgument, "dilation_radius must be >= 0");
    if (input_divisor != 32)
        fail(ErrorCode::InvalidArgument, "input_divisor is fixed at 32 by the 5-stage pooling pyramid");
}

// ---------------------------------------------------------------------------
// fusion

Tensor fuse_predictions_batch(const Tensor& seg_probs, const Tensor& detail,
                              std::vector<uint8_t>* classes_out) {
    if (seg_probs.c != 3 || detail.c != 1 || seg_probs.n != detail.n ||
        seg_probs.h != detail.h || seg_probs.w != detail.w)
        fail(ErrorCode::SizeMismatch, "fuse_predictions: seg_probs (N,3,H,W) and detail (N,1,H,W) required");

    Tensor alpha(detail.n, 1, detail.h, detail.w);
    size_t hw = static_cast<size_t>(detail.h) * detail.w;
    if (classes_out) classes_out->assign(static_cast<size_t>(detail.n) * hw, 0);

    for (int n = 0; n < detail.n; ++n) {
        const double* p0 = seg_probs.plane(n, 0);
        const double* p1 = seg_probs.plane(n, 1);
        const double* p2 = seg_probs.plane(n, 2);
        const double* d = detail.plane(n, 0);
        double* a = alpha.plane(n, 0);
        for (size_t i = 0; i < hw; ++i) {
            int cls = 0;
            double best = p0[i];
            if (p1[i] > best) {
                best = p1[i];
                cls = 1;
            }
            if (p2[i] > best) cls = 2;
            a[i] = cls == 2 ? 1.0 : (cls == 0 ? 0.0 : std::clamp(d[i], 0.0, 1.0));
            if (classes_out) (*classes_out)[n * hw + i] = static_cast<uint8_t>(cls);
        }
    }
    return alpha;
}

AlphaMatte fuse_predictions(const Tensor& seg_probs, const AlphaMatte& matting_detail) {
    Tensor d(1, 1, matting_detail.h, matting_detail.w);
    d.v = matting_detail.data;
    Tensor a = fuse_predictions_batch(seg_probs, d);
    AlphaMatte out(matting_detail.h, matting_detail.w);
    out.data = a.v;
    return out;
}

// ---------------------------------------------------------------------------
// small composites

namespace detail {

ConvBNReLU::ConvBNReLU(int cin, int cout, int k) : conv(cin, cout, k), bn(cout) {}

Tensor ConvBNReLU::forward(const Tensor& x, const nn::Pass& p) {
    return relu.forward(bn.forward(conv.forward(x, p), p), p);
}

Tensor ConvBNReLU::backward(const Tensor& gy) {
    return conv.backward(bn.backward(relu.backward(gy)));
}

void ConvBNReLU::visit(const std::string& prefix, const nn::ParamVisitor& v) {
    conv.visit(prefix + ".conv", v);
    bn.visit(prefix + ".bn", v);
}

void ConvBNReLU::visit_buffers(const std::string& prefix, const nn::BufferVisitor& v) {
    bn.visit_buffers(prefix + ".bn", v);
}

BasicBlock::BasicBlock(int cin, int cout)
    : conv1(cin, cout, 3), conv2(cout, cout, 3), bn1(cout), bn2(cout), project(cin != cout) {
    if (project) {
        down_conv = nn::Conv2d(cin, cout, 1);
        down_bn = nn::BatchNorm2d(cout);
    }
}

void BasicBlock::init(Rng& rng) {
    conv1.init(rng);
    conv2.init(rng);
    if (project) down_conv.init(rng);
}

Tensor BasicBlock::forward(const Tensor& x, const nn::Pass& p) {
    Tensor main = bn2.forward(conv2.forward(relu1.forward(bn1.forward(conv1.forward(x, p), p), p), p), p);
    Tensor skip = project ? down_bn.forward(down_conv.forward(x, p), p) : x;
    main.add_(skip);
    return relu2.forward(main, p);
}

Tensor BasicBlock::backward(const Tensor& gy) {
    Tensor g = relu2.backward(gy);
    Tensor gx_main = conv1.backward(bn1.backward(relu1.backward(conv2.backward(bn2.backward(g)))));
    if (project) {
        Tensor gx_skip = down_conv.backward(down_bn.backward(g));
        gx_main.add_(gx_skip);
    } else {
        gx_main.add_(g);
    }
    return gx_main;
}

void BasicBlock::visit(const std::string& prefix, const nn::ParamVisitor& v) {
    conv1.visit(prefix + ".conv1", v);
    bn1.visit(prefix + ".bn1", v);
    conv2.visit(prefix + ".conv2", v);
    bn2.visit(prefix + ".bn2", v);
    if (project) {
        down_conv.visit(prefix + ".down_conv", v);
        down_bn.visit(prefix + ".down_bn", v);
    }
}

void BasicBlock::visit_buffers(const std::string& prefix, const nn::BufferVisitor& v) {
    bn1.visit_buffers(prefix + ".bn1", v);
    bn2.visit_buffers(prefix + ".bn2", v);
    if (project) down_bn.visit_buffers(prefix + ".down_bn", v);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// integration modules

TFI::TFI(int c)
    : proj_m(c, c / 2, 1),
      proj_s(c, c / 2, 1),
      proj_e(c, c / 2, 1),
      fuse(3 * (c / 2), c, 3),
      channels(c) {}

void TFI::init(Rng& rng) {
    proj_m.init(rng);
    proj_s.init(rng);
    proj_e.init(rng);
    fuse.init(rng);
}

void TFI::zero_fusion_() {
    proj_m.zero_();
    proj_s.zero_();
    proj_e.zero_();
    fuse.zero_();
}

Tensor TFI::forward(const Tensor& fm, const Tensor& fs, const Tensor& fe, const nn::Pass& p) {
    if (fm.c != channels || fs.c != channels || fe.c != channels)
        fail(ErrorCode::InvalidArgument, "TFI: all inputs must have the module channel count");
    if (!fm.same_shape(fs) || !fm.same_shape(fe))
        fail(ErrorCode::SizeMismatch, "TFI: inputs must share shape");
    Tensor pm = proj_m.forward(fm, p);
    Tensor ps = proj_s.forward(fs, p);
    Tensor pe = proj_e.forward(fe, p);
    Tensor cat = nn::concat_channels({&pm, &ps, &pe});
    return fuse.forward(cat, p);
}

std::array<Tensor, 3> TFI::backward(const Tensor& gy) {
    Tensor gcat = fuse.backward(gy);
    int half = channels / 2;
    std::vector<Tensor> parts = nn::split_channels(gcat, {half, half, half});
    return {proj_m.backward(parts[0]), proj_s.backward(parts[1]), proj_e.backward(parts[2])};
}

void TFI::visit(const std::string& prefix, const nn::ParamVisitor& v) {
    proj_m.visit(prefix + ".proj_m", v);
    proj_s.visit(prefix + ".proj_s", v);
    proj_e.visit(prefix + ".proj_e", v);
    fuse.visit(prefix + ".fuse", v);
}

void TFI::visit_buffers(const std::string& prefix, const nn::BufferVisitor& v) {
    fuse.visit_buffers(prefix + ".fuse", v);
}

SBFI::SBFI(int c, int e0_channels, int ratio)
    : pool(ratio),
      proj_e(e0_channels, c / 2, 1),
      proj_m(c, c / 2, 1),
      fuse(c, c, 3),
      channels(c) {}

void SBFI::init(Rng& rng) {
    proj_e.init(rng);
    proj_m.init(rng);
    fuse.init(rng);
}

void SBFI::zero_fusion_() {
    proj_e.zero_();
    proj_m.zero_();
    fuse.zero_();
}

Tensor SBFI::forward(const Tensor& fm, const Tensor& e0, const nn::Pass& p) {
    if (fm.c != channels) fail(ErrorCode::InvalidArgument, "SBFI: channel mismatch");
    Tensor pooled = pool.forward(e0, p);
    if (pooled.h != fm.h || pooled.w != fm.w)
        fail(ErrorCode::SizeMismatch, "SBFI: pooled guidance does not match feature scale");
    Tensor pe = proj_e.forward(pooled, p);
    Tensor pm = proj_m.forward(fm, p);
    Tensor cat = nn::concat_channels({&pe, &pm});
    Tensor out = fuse.forward(cat, p);
    out.add_(fm);  // residual
    return out;
}

std::array<Tensor, 2> SBFI::backward(const Tensor& gy) {
    Tensor gcat = fuse.backward(gy);
    int half = channels / 2;
    std::vector<Tensor> parts = nn::split_channels(gcat, {half, half});
    Tensor g_fm = proj_m.backward(parts[1]);
    g_fm.add_(gy);  // residual path
    Tensor g_e0 = pool.backward(proj_e.backward(parts[0]));
    return {std::move(g_fm), std::move(g_e0)};
}

void SBFI::visit(const std::string& prefix, const nn::ParamVisitor& v) {
    proj_e.visit(prefix + ".proj_e", v);
    proj_m.visit(prefix + ".proj_m", v);
    fuse.visit(prefix + ".fuse", v);
}

void SBFI::visit_buffers(const std::string& prefix, const nn::BufferVisitor& v) {
    fuse.visit_buffers(prefix + ".fuse", v);
}

DBFI::DBFI(int c, int deep_channels, int up_ratio)
    : up(up_ratio),
      proj_e(deep_channels, c / 2, 1),
      proj_s(c, c / 2, 1),
      fuse(c, c, 3),
      channels(c) {}

void DBFI::init(Rng& rng) {
    proj_e.init(rng);
    proj_s.init(rng);
    fuse.init(rng);
}

void DBFI::zero_fusion_() {
    proj_e.zero_();
    proj_s.zero_();
    fuse.zero_();
}

Tensor DBFI::forward(const Tensor& fs, const Tensor& e_deep, const nn::Pass& p) {
    if (fs.c != channels) fail(ErrorCode::InvalidArgument, "DBFI: channel mismatch");
    Tensor upped = up.forward(e_deep, p);
    if (upped.h != fs.h || upped.w != fs.w)
        fail(ErrorCode::SizeMismatch, "DBFI: upsampled guidance does not match feature scale");
    Tensor pe = proj_e.forward(upped, p);
    Tensor ps = proj_s.forward(fs, p);
    Tensor cat = nn::concat_channels({&pe, &ps});
    Tensor out = fuse.forward(cat, p);
    out.add_(fs);
    return out;
}

std::array<Tensor, 2> DBFI::backward(const Tensor& gy) {
    Tensor gcat = fuse.backward(gy);
    int half = channels / 2;
    std::vector<Tensor> parts = nn::split_channels(gcat, {half, half});
    Tensor g_fs = proj_s.backward(parts[1]);
    g_fs.add_(gy);
    Tensor g_deep = up.backward(proj_e.backward(parts[0]));
    return {std::move(g_fs), std::move(g_deep)};
}

void DBFI::visit(const std::string& prefix, const nn::ParamVisitor& v) {
    proj_e.visit(prefix + ".proj_e", v);
    proj_s.visit(prefix + ".proj_s", v);
    fuse.visit(prefix + ".fuse", v);
}

void DBFI::visit_buffers(const std::string& prefix, const nn::BufferVisitor& v) {
    fuse.visit_buffers(prefix + ".fuse", v);
}

// ---------------------------------------------------------------------------
// P3MNet

struct P3MNet::Cache {
    int n = 0;
    std::array<std::array<int, 3>, 6> e_shape;  // (c, h, w) of E0..E5
    bool grad = false;
};

P3MNet::P3MNet(const P3MNetConfig& config) : cfg_(config) {
    cfg_.validate();
    auto ec = cfg_.encoder_channels();   // {B, B, 2B, 4B, 8B} at scales 1..16
    auto dc = cfg_.decoder_channels();   // blocks 5..1

    stem_ = detail::ConvBNReLU(3, ec[0], 7);
    for (int s = 0; s < 5; ++s) pools_[s] = nn::MaxPool(2);
    int stage_cin[4] = {ec[0], ec[1], ec[2], ec[3]};
    int stage_cout[4] = {ec[1], ec[2], ec[3], ec[4]};
    for (int s = 0; s < 4; ++s) {
        stages_[s].emplace_back(stage_cin[s], stage_cout[s]);
        for (int b = 1; b < cfg_.encoder_blocks[s]; ++b)
            stages_[s].emplace_back(stage_cout[s], stage_cout[s]);
    }

    int deep = ec[4];  // E5 channel count

    // decoder blocks, stored deepest first (index j = 5 - b)
    for (int j = 0; j < 5; ++j) {
        int b = 5 - j;
        int cin = j == 0 ? deep : dc[j - 1];
        int cout = dc[j];
        int mat_cin = cin;
        if (!cfg_.use_tfi && b <= 4) mat_cin = 2 * cin;  // plain skip: concat(decoder, encoder)
        sblocks_[j] = {detail::ConvBNReLU(cin, cout, 3), detail::ConvBNReLU(cout, cout, 3),
                       detail::ConvBNReLU(cout, cout, 3)};
        mblocks_[j] = {detail::ConvBNReLU(mat_cin, cout, 3), detail::ConvBNReLU(cout, cout, 3),
                       detail::ConvBNReLU(cout, cout, 3)};
        sups_[j] = nn::UpsampleBilinear(2);
    }

    if (cfg_.use_tfi)
        for (int i = 1; i <= 4; ++i) tfi_[i - 1] = std::make_unique<TFI>(ec[i]);
    if (cfg_.use_sbfi)
        for (int i = 1; i <= 3; ++i)
            sbfi_[i - 1] = std::make_unique<SBFI>(ec[i], ec[0], 1 << i);
    if (cfg_.use_dbfi)
        for (int i = 1; i <= 3; ++i)
            dbfi_[i - 1] = std::make_unique<DBFI>(ec[i], deep, 32 >> i);

    for (int i = 1; i <= 3; ++i) {
        side_convs_[i - 1] = nn::Conv2d(ec[i], 3, 3);
        side_ups_[i - 1] = nn::UpsampleBilinear(1 << i);
    }
    seg_head_ = nn::Conv2d(ec[0], 3, 3);
    mat_head_ = nn::Conv2d(ec[0], 1, 3);
}

void P3MNet::init(uint64_t seed) {
    Rng rng(seed);
    stem_.init(rng);
    for (auto& stage : stages_)
        for (auto& block : stage) block.init(rng);
    for (int j = 0; j < 5; ++j)
        for (auto& c : sblocks_[j]) c.init(rng);
    for (auto& d : dbfi_)
        if (d) d->init(rng);
    for (auto& c : side_convs_) c.init(rng);
    seg_head_.init(rng);
    for (int j = 0; j < 5; ++j)
        for (auto& c : mblocks_[j]) c.init(rng);
    for (auto& t : tfi_)
        if (t) t->init(rng);
    for (auto& s : sbfi_)
        if (s) s->init(rng);
    mat_head_.init(rng);
}

void P3MNet::visit_params(const nn::ParamVisitor& v) {
    stem_.visit("encoder.stem", v);
    for (int s = 0; s < 4; ++s)
        for (size_t b = 0; b < stages_[s].size(); ++b)
            stages_[s][b].visit("encoder.stage" + std::to_string(s + 1) + ".block" + std::to_string(b), v);
    for (int j = 0; j < 5; ++j) {
        std::string p = "seg.block" + std::to_string(5 - j);
        for (int k = 0; k < 3; ++k) sblocks_[j][k].visit(p + ".c" + std::to_string(k + 1), v);
    }
    for (int i = 1; i <= 3; ++i)
        if (dbfi_[i - 1]) dbfi_[i - 1]->visit("seg.dbfi" + std::to_string(i), v);
    for (int i = 1; i <= 3; ++i)
        side_convs_[i - 1].visit("seg.side" + std::to_string(i), v);
    seg_head_.visit("seg.head", v);
    for (int j = 0; j < 5; ++j) {
        std::string p = "mat.block" + std::to_string(5 - j);
        for (int k = 0; k < 3; ++k) mblocks_[j][k].visit(p + ".c" + std::to_string(k + 1), v);
    }
    for (int i = 1; i <= 4; ++i)
        if (tfi_[i - 1]) tfi_[i - 1]->visit("mat.tfi" + std::to_string(i), v);
    for (int i = 1; i <= 3; ++i)
        if (sbfi_[i - 1]) sbfi_[i - 1]->visit("mat.sbfi" + std::to_string(i), v);
    mat_head_.visit("mat.head", v);
}

void P3MNet::visit_buffers(const nn::BufferVisitor& v) {
    stem_.visit_buffers("encoder.stem", v);
    for (int s = 0; s < 4; ++s)
        for (size_t b = 0; b < stages_[s].size(); ++b)
            stages_[s][b].visit_buffers("encoder.stage" + std::to_string(s + 1) + ".block" + std::to_string(b), v);
    for (int j = 0; j < 5; ++j) {
        std::string p = "seg.block" + std::to_string(5 - j);
        for (int k = 0; k < 3; ++k) sblocks_[j][k].visit_buffers(p + ".c" + std::to_string(k + 1), v);
    }
    for (int i = 1; i <= 3; ++i)
        if (dbfi_[i - 1]) dbfi_[i - 1]->visit_buffers("seg.dbfi" + std::to_string(i), v);
    for (int j = 0; j < 5; ++j) {
        std::string p = "mat.block" + std::to_string(5 - j);
        for (int k = 0; k < 3; ++k) mblocks_[j][k].visit_buffers(p + ".c" + std::to_string(k + 1), v);
    }
    for (int i = 1; i <= 4; ++i)
        if (tfi_[i - 1]) tfi_[i - 1]->visit_buffers("mat.tfi" + std::to_string(i), v);
    for (int i = 1; i <= 3; ++i)
        if (sbfi_[i - 1]) sbfi_[i - 1]->visit_buffers("mat.sbfi" + std::to_string(i), v);
}

std::vector<std::pair<Tensor*, Tensor*>> P3MNet::parameters() {
    std::vector<std::pair<Tensor*, Tensor*>> out;
    visit_params([&](const std::string&, Tensor& p, Tensor& g) { out.emplace_back(&p, &g); });
    return out;
}

EncoderFeatures P3MNet::encode(const Tensor& images, const nn::Pass& p) {
    if (images.c != 3) fail(ErrorCode::InvalidArgument, "encode: expected 3-channel input");
    if (images.h % cfg_.input_divisor != 0 || images.w % cfg_.input_divisor != 0)
        fail(ErrorCode::InvalidArgument, "encode: input sides must be divisible by 32");

    EncoderFeatures f;
    f.e0 = stem_.forward(images, p);
    Tensor x = f.e0;
    Tensor* stage_out[4] = {&f.e1, &f.e2, &f.e3, &f.e4};
    for (int s = 0; s < 4; ++s) {
        f.pool_in_sizes[s] = {x.h, x.w};
        x = pools_[s].forward(x, p);
        f.pool_indices[s] = pools_[s].indices();
        for (auto& block : stages_[s]) x = block.forward(x, p);
        *stage_out[s] = x;
    }
    f.pool_in_sizes[4] = {x.h, x.w};
    f.e5 = pools_[4].forward(x, p);
    f.pool_indices[4] = pools_[4].indices();
    return f;
}

Tensor P3MNet::run_sblock(int b, const Tensor& x, const nn::Pass& p) {
    int j = 5 - b;
    Tensor t = sblocks_[j][0].forward(x, p);
    t = sblocks_[j][1].forward(t, p);
    t = sblocks_[j][2].forward(t, p);
    return sups_[j].forward(t, p);
}

Tensor P3MNet::back_sblock(int b, const Tensor& gy) {
    int j = 5 - b;
    Tensor g = sups_[j].backward(gy);
    g = sblocks_[j][2].backward(g);
    g = sblocks_[j][1].backward(g);
    return sblocks_[j][0].backward(g);
}

Tensor P3MNet::run_mblock(int b, const Tensor& x, const nn::Pass& p) {
    int j = 5 - b;
    Tensor t = mblocks_[j][0].forward(x, p);
    t = mblocks_[j][1].forward(t, p);
    t = mblocks_[j][2].forward(t, p);
    // unpool back to the size the paired encoder stage pooled from
    int ih = cache_->e_shape[b - 1][1];
    int iw = cache_->e_shape[b - 1][2];
    return unpools_[j].forward(t, pools_[b - 1].indices(), ih, iw, p);
}

Tensor P3MNet::back_mblock(int b, const Tensor& gy) {
    int j = 5 - b;
    Tensor g = unpools_[j].backward(gy);
    g = mblocks_[j][2].backward(g);
    g = mblocks_[j][1].backward(g);
    return mblocks_[j][0].backward(g);
}

P3MNet::BatchOutput P3MNet::forward(const Tensor& images, const nn::Pass& p) {
    EncoderFeatures f = encode(images, p);

    cache_ = std::make_unique<Cache>();
    cache_->n = images.n;
    cache_->grad = p.grad;
    const Tensor* es[6] = {&f.e0, &f.e1, &f.e2, &f.e3, &f.e4, &f.e5};
    for (int i = 0; i < 6; ++i) cache_->e_shape[i] = {es[i]->c, es[i]->h, es[i]->w};

    // --- segmentation decoder (independent of the matting path) ---
    std::array<Tensor, 5> fs;  // fs[i] = F_s^i for i = 0..4 (index by scale level)
    Tensor xs = f.e5;
    fs[4] = run_sblock(5, xs, p);
    fs[3] = run_sblock(4, fs[4], p);

    BatchOutput out;
    for (int i = 3; i >= 1; --i) {
        Tensor u = cfg_.use_dbfi ? dbfi_[i - 1]->forward(fs[i], f.e5, p) : fs[i];
        Tensor side = side_convs_[i - 1].forward(u, p);
        side = side_ups_[i - 1].forward(side, p);
        out.side[i - 1] = side_softmax_[i - 1].forward(side, p);
        fs[i - 1] = run_sblock(i, u, p);
    }
    out.seg_probs = seg_softmax_.forward(seg_head_.forward(fs[0], p), p);

    // --- matting decoder ---
    Tensor fm = run_mblock(5, f.e5, p);  // F_m^4
    for (int i = 4; i >= 1; --i) {
        Tensor x;
        if (cfg_.use_tfi) {
            x = tfi_[i - 1]->forward(fm, fs[i], *es[i], p);
        } else {
            x = nn::concat_channels({&fm, es[i]});
        }
        if (cfg_.use_sbfi && i <= 3) x = sbfi_[i - 1]->forward(x, f.e0, p);
        fm = run_mblock(i, x, p);
    }
    out.detail = mat_sigmoid_.forward(mat_head_.forward(fm, p), p);
    return out;
}

void P3MNet::backward(const OutputGrads& grads) {
    if (!cache_ || !cache_->grad)
        fail(ErrorCode::BadState, "P3MNet::backward requires a grad-enabled forward pass");

    auto shape_of = [&](int level) {
        return Tensor(cache_->n, cache_->e_shape[level][0], cache_->e_shape[level][1],
                      cache_->e_shape[level][2]);
    };
    std::array<Tensor, 6> ge;  // accumulated encoder-feature grads
    for (int i = 0; i < 6; ++i) ge[i] = shape_of(i);
    std::array<Tensor, 5> gfs;  // accumulated seg-feature grads F_s^0..F_s^4
    for (int i = 0; i < 5; ++i) gfs[i] = shape_of(i);

    // --- matting decoder (fills gfs/ge for the seg/encoder passes) ---
    Tensor g = mat_head_.backward(mat_sigmoid_.backward(grads.g_detail));
    for (int i = 1; i <= 4; ++i) {
        g = back_mblock(i, g);
        if (cfg_.use_sbfi && i <= 3) {
            auto [g_x, g_e0] = sbfi_[i - 1]->backward(g);
            ge[0].add_(g_e0);
            g = std::move(g_x);
        }
        if (cfg_.use_tfi) {
            auto [g_fm, g_fs, g_fe] = tfi_[i - 1]->backward(g);
            gfs[i].add_(g_fs);
            ge[i].add_(g_fe);
            g = std::move(g_fm);
        } else {
            auto parts = nn::split_channels(g, {cache_->e_shape[i][0], cache_->e_shape[i][0]});
            ge[i].add_(parts[1]);
            g = std::move(parts[0]);
        }
    }
    ge[5].add_(back_mblock(5, g));

    // --- segmentation decoder ---
    g = seg_head_.backward(seg_softmax_.backward(grads.g_seg_probs));
    for (int i = 1; i <= 3; ++i) {
        Tensor gu = back_sblock(i, g);
        Tensor gside = side_convs_[i - 1].backward(
            side_ups_[i - 1].backward(side_softmax_[i - 1].backward(grads.g_side[i - 1])));
        gu.add_(gside);
        if (cfg_.use_dbfi) {
            auto [g_fs, g_deep] = dbfi_[i - 1]->backward(gu);
            ge[5].add_(g_deep);
            gfs[i].add_(g_fs);
        } else {
            gfs[i].add_(gu);
        }
        g = gfs[i];
    }
    gfs[4].add_(back_sblock(4, g));
    ge[5].add_(back_sblock(5, gfs[4]));

    // --- encoder ---
    Tensor gx = pools_[4].backward(ge[5]);
    gx.add_(ge[4]);
    for (int s = 3; s >= 0; --s) {
        for (auto it = stages_[s].rbegin(); it != stages_[s].rend(); ++it) gx = it->backward(gx);
        gx = pools_[s].backward(gx);
        gx.add_(ge[s]);
    }
    stem_.backward(gx);
}

P3MNetOutput P3MNet::run(const Image& image) {
    Tensor x(1, 3, image.h, image.w);
    x.v = image.data;
    BatchOutput out = forward(x, nn::kInferPass);

    P3MNetOutput res;
    res.seg_probs = std::move(out.seg_probs);
    res.side_seg.assign(std::make_move_iterator(out.side.begin()),
                        std::make_move_iterator(out.side.end()));
    res.matting_detail = AlphaMatte(image.h, image.w);
    res.matting_detail.data = out.detail.v;
    res.alpha_final = fuse_predictions(res.seg_probs, res.matting_detail);
    return res;
}

}  // namespace p3m::net
