#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "errors.hpp"
#include "filters.hpp"

namespace p3m::metrics {

namespace {

void check_sizes(const AlphaMatte& a, const AlphaMatte& b, const char* what) {
    if (a.h != b.h || a.w != b.w) fail(ErrorCode::SizeMismatch, what);
}

}  // namespace

double sad(const AlphaMatte& pred, const AlphaMatte& gt, const RegionMask& region) {
    check_sizes(pred, gt, "sad: pred/gt size mismatch");
    if (region.h != pred.h || region.w != pred.w)
        fail(ErrorCode::SizeMismatch, "sad: region size mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < pred.data.size(); ++i)
        if (region.mask[i]) acc += std::abs(pred.data[i] - gt.data[i]);
    return acc / 1000.0;
}

double mse(const AlphaMatte& pred, const AlphaMatte& gt, const RegionMask& region) {
    check_sizes(pred, gt, "mse: pred/gt size mismatch");
    if (region.h != pred.h || region.w != pred.w)
        fail(ErrorCode::SizeMismatch, "mse: region size mismatch");
    size_t count = region.count();
    if (count == 0) return 0.0;
    double acc = 0.0;
    for (size_t i = 0; i < pred.data.size(); ++i) {
        if (!region.mask[i]) continue;
        double d = pred.data[i] - gt.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(count);
}

double mad(const AlphaMatte& pred, const AlphaMatte& gt, const RegionMask& region) {
    check_sizes(pred, gt, "mad: pred/gt size mismatch");
    if (region.h != pred.h || region.w != pred.w)
        fail(ErrorCode::SizeMismatch, "mad: region size mismatch");
    size_t count = region.count();
    if (count == 0) return 0.0;
    double acc = 0.0;
    for (size_t i = 0; i < pred.data.size(); ++i)
        if (region.mask[i]) acc += std::abs(pred.data[i] - gt.data[i]);
    return acc / static_cast<double>(count);
}

namespace {

constexpr double kGradSigma = 1.4;

void gradient_magnitude(const AlphaMatte& x, std::vector<double>& mag) {
    int radius = static_cast<int>(4.0 * kGradSigma + 0.5);
    std::vector<double> smooth = gaussian_kernel(kGradSigma, radius);
    std::vector<double> deriv = gaussian_deriv_kernel(kGradSigma, radius);

    size_t n = x.data.size();
    std::vector<double> dx(n), dy(n);
    // d/dx: derivative along columns, smoothing along rows
    sep_conv_reflect(x.data.data(), dx.data(), x.h, x.w, smooth, deriv);
    // d/dy: derivative along rows, smoothing along columns
    sep_conv_reflect(x.data.data(), dy.data(), x.h, x.w, deriv, smooth);

    mag.resize(n);
    for (size_t i = 0; i < n; ++i) mag[i] = std::hypot(dx[i], dy[i]);
}

}  // namespace

double grad(const AlphaMatte& pred, const AlphaMatte& gt) {
    check_sizes(pred, gt, "grad: pred/gt size mismatch");
    std::vector<double> mp, mg;
    gradient_magnitude(pred, mp);
    gradient_magnitude(gt, mg);
    double acc = 0.0;
    for (size_t i = 0; i < mp.size(); ++i) {
        double d = mp[i] - mg[i];
        acc += d * d;
    }
    return acc / 1000.0;
}

namespace {

// Labels the largest connected component of `bin`; returns a 0/1 vector.
// Components are discovered in row-major order; size ties keep the earliest.
std::vector<uint8_t> largest_component(const std::vector<uint8_t>& bin, int h, int w,
                                       int connectivity) {
    std::vector<int> label(bin.size(), -1);
    std::vector<size_t> sizes;
    std::vector<size_t> stack;

    const int dx4[] = {1, -1, 0, 0};
    const int dy4[] = {0, 0, 1, -1};
    const int dx8[] = {1, -1, 0, 0, 1, 1, -1, -1};
    const int dy8[] = {0, 0, 1, -1, 1, -1, 1, -1};
    const int* dx = connectivity == 8 ? dx8 : dx4;
    const int* dy = connectivity == 8 ? dy8 : dy4;
    int nn = connectivity == 8 ? 8 : 4;

    for (size_t start = 0; start < bin.size(); ++start) {
        if (!bin[start] || label[start] >= 0) continue;
        int id = static_cast<int>(sizes.size());
        size_t count = 0;
        stack.clear();
        stack.push_back(start);
        label[start] = id;
        while (!stack.empty()) {
            size_t p = stack.back();
            stack.pop_back();
            ++count;
            int y = static_cast<int>(p / w), x = static_cast<int>(p % w);
            for (int k = 0; k < nn; ++k) {
                int ny = y + dy[k], nx = x + dx[k];
                if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                size_t q = static_cast<size_t>(ny) * w + nx;
                if (bin[q] && label[q] < 0) {
                    label[q] = id;
                    stack.push_back(q);
                }
            }
        }
        sizes.push_back(count);
    }

    std::vector<uint8_t> omega(bin.size(), 0);
    if (sizes.empty()) return omega;
    int best = 0;
    for (size_t i = 1; i < sizes.size(); ++i)
        if (sizes[i] > sizes[best]) best = static_cast<int>(i);
    for (size_t i = 0; i < bin.size(); ++i) omega[i] = label[i] == best ? 1 : 0;
    return omega;
}

}  // namespace

double conn(const AlphaMatte& pred, const AlphaMatte& gt, int connectivity) {
    check_sizes(pred, gt, "conn: pred/gt size mismatch");
    if (connectivity != 4 && connectivity != 8)
        fail(ErrorCode::InvalidArgument, "conn: connectivity must be 4 or 8");

    int h = pred.h, w = pred.w;
    size_t n = pred.data.size();
    constexpr double kStep = 0.1;
    constexpr double kDelta = 0.15;

    std::vector<double> l_map(n, -1.0);
    std::vector<uint8_t> bin(n);
    for (int k = 1; k <= 10; ++k) {
        double theta = kStep * k;
        bool any = false;
        for (size_t i = 0; i < n; ++i) {
            bin[i] = (pred.data[i] >= theta && gt.data[i] >= theta) ? 1 : 0;
            any |= bin[i] != 0;
        }
        // empty shared set: stays empty for all higher thresholds; pixels
        // never dropped keep their default full connectedness
        if (!any) continue;
        std::vector<uint8_t> omega = largest_component(bin, h, w, connectivity);
        for (size_t i = 0; i < n; ++i)
            if (l_map[i] < 0.0 && !omega[i]) l_map[i] = theta - kStep;
    }
    for (size_t i = 0; i < n; ++i)
        if (l_map[i] < 0.0) l_map[i] = 1.0;

    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double dp = pred.data[i] - l_map[i];
        double dg = gt.data[i] - l_map[i];
        double phi_p = 1.0 - (dp >= kDelta ? dp : 0.0);
        double phi_g = 1.0 - (dg >= kDelta ? dg : 0.0);
        acc += std::abs(phi_p - phi_g);
    }
    return acc / 1000.0;
}

MetricReport evaluate(const AlphaMatte& pred, const AlphaMatte& gt, const Trimap& trimap) {
    if (trimap.h != gt.h || trimap.w != gt.w)
        fail(ErrorCode::SizeMismatch, "evaluate: trimap/gt size mismatch");

    AlphaMatte p = pred;
    if (pred.h != gt.h || pred.w != gt.w) {
        std::fprintf(stderr,
                     "warning: resizing prediction %dx%d to ground-truth size %dx%d\n",
                     pred.h, pred.w, gt.h, gt.w);
        AlphaMatte resized(gt.h, gt.w);
        bilinear_resize(pred.data.data(), pred.h, pred.w, resized.data.data(), gt.h, gt.w);
        for (double& v : resized.data) v = std::clamp(v, 0.0, 1.0);
        p = std::move(resized);
    }

    RegionMask whole(gt.h, gt.w);
    std::fill(whole.mask.begin(), whole.mask.end(), 1);
    RegionMask transition = transition_mask(trimap);

    MetricReport r;
    r.sad = sad(p, gt, whole);
    r.mse = mse(p, gt, whole);
    r.mad = mad(p, gt, whole);
    r.grad = grad(p, gt);
    r.conn = conn(p, gt);
    r.sad_t = sad(p, gt, transition);
    r.mse_t = mse(p, gt, transition);
    r.mad_t = mad(p, gt, transition);
    return r;
}

std::string report_csv_header() { return "name,SAD,MSE,MAD,SAD-T,MSE-T,MAD-T,GRAD,CONN"; }

std::string report_csv_row(const std::string& name, const MetricReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f", name.c_str(),
                  r.sad, r.mse, r.mad, r.sad_t, r.mse_t, r.mad_t, r.grad, r.conn);
    return buf;
}

MetricReport mean_report(const std::vector<std::pair<std::string, MetricReport>>& rows) {
    MetricReport m;
    if (rows.empty()) return m;
    for (const auto& [name, r] : rows) {
        m.sad += r.sad;
        m.mse += r.mse;
        m.mad += r.mad;
        m.grad += r.grad;
        m.conn += r.conn;
        m.sad_t += r.sad_t;
        m.mse_t += r.mse_t;
        m.mad_t += r.mad_t;
    }
    double n = static_cast<double>(rows.size());
    m.sad /= n;
    m.mse /= n;
    m.mad /= n;
    m.grad /= n;
    m.conn /= n;
    m.sad_t /= n;
    m.mse_t /= n;
    m.mad_t /= n;
    return m;
}

void write_report_csv(const std::string& path,
                      const std::vector<std::pair<std::string, MetricReport>>& rows,
                      const std::string& comment) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::Io, "cannot open '" + path + "' for writing");
    if (!comment.empty()) out << "# " << comment << "\n";
    out << report_csv_header() << "\n";
    for (const auto& [name, r] : rows) out << report_csv_row(name, r) << "\n";
    out << report_csv_row("MEAN", mean_report(rows)) << "\n";
}

}  // namespace p3m::metrics
