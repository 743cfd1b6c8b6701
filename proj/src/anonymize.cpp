#include "anonymize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "errors.hpp"
#include "filters.hpp"

namespace p3m {

LandmarkSet read_landmarks(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open landmark file '" + path + "'");

    LandmarkSet lm;
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::Io, "invalid landmark JSON in '" + path + "': " + e.what());
        }
        nlohmann::json pts = j;
        if (j.is_object()) {
            if (j.contains("scheme")) lm.scheme = j["scheme"].get<std::string>();
            if (!j.contains("points"))
                fail(ErrorCode::InvalidArgument, "landmark JSON object lacks 'points'");
            pts = j["points"];
        } else if (j.is_array()) {
            lm.scheme = "";
        } else {
            fail(ErrorCode::InvalidArgument, "landmark JSON must be an array or object");
        }
        for (const auto& p : pts) {
            if (!p.is_array() || p.size() != 2)
                fail(ErrorCode::InvalidArgument, "landmark points must be [x, y] pairs");
            lm.points.push_back({p[0].get<double>(), p[1].get<double>()});
        }
    } else {
        std::string line;
        while (std::getline(in, line)) {
            auto hash = line.find('#');
            if (hash != std::string::npos) line.resize(hash);
            std::istringstream ls(line);
            double x, y;
            if (ls >> x >> y) lm.points.push_back({x, y});
        }
        lm.scheme = "";
    }
    if (lm.points.empty())
        fail(ErrorCode::InvalidArgument, "landmark file '" + path + "' contains no points");
    if (lm.scheme.empty())
        lm.scheme = lm.points.size() == 68 ? kLandmarkSchemeIbug68 : kLandmarkSchemePolygon;
    return lm;
}

void write_landmarks(const LandmarkSet& lm, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::Io, "cannot open '" + path + "' for writing");
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
        nlohmann::json pts = nlohmann::json::array();
        for (const auto& p : lm.points) pts.push_back({p.x, p.y});
        nlohmann::json j{{"scheme", lm.scheme}, {"points", pts}};
        out << j.dump(2) << '\n';
    } else {
        out.precision(17);
        for (const auto& p : lm.points) out << p.x << ' ' << p.y << '\n';
    }
}

std::vector<LandmarkPoint> face_polygon(const LandmarkSet& lm) {
    if (lm.points.empty()) fail(ErrorCode::InvalidArgument, "landmark set is empty");
    if (lm.scheme == kLandmarkSchemeIbug68) {
        if (lm.points.size() < 27)
            fail(ErrorCode::InvalidArgument,
                 "ibug68 scheme needs at least 27 points (jaw 0-16, brows 17-26)");
        std::vector<LandmarkPoint> poly;
        poly.reserve(27);
        for (int i = 0; i <= 16; ++i) poly.push_back(lm.points[i]);
        // eyebrow chain walked back toward the start of the jaw; the chain
        // endpoints are joined by straight closing segments
        for (int i = 26; i >= 17; --i) poly.push_back(lm.points[i]);
        return poly;
    }
    if (lm.points.size() < 3)
        fail(ErrorCode::InvalidArgument, "polygon scheme needs at least 3 points");
    return lm.points;
}

namespace {

void check_points_in_bounds(const std::vector<LandmarkPoint>& pts, int h, int w) {
    for (const auto& p : pts)
        if (!(p.x >= 0.0 && p.x < w && p.y >= 0.0 && p.y < h))
            fail(ErrorCode::InvalidArgument, "landmark point outside image bounds");
}

}  // namespace

RegionMask face_mask_from_landmarks(const LandmarkSet& lm, int h, int w) {
    if (h <= 0 || w <= 0) fail(ErrorCode::InvalidArgument, "empty image size");
    std::vector<LandmarkPoint> poly = face_polygon(lm);
    check_points_in_bounds(poly, h, w);

    RegionMask mask(h, w);
    size_t n = poly.size();
    std::vector<double> xs;
    for (int y = 0; y < h; ++y) {
        double yc = y + 0.5;
        xs.clear();
        for (size_t i = 0; i < n; ++i) {
            const auto& a = poly[i];
            const auto& b = poly[(i + 1) % n];
            // half-open crossing rule keeps shared vertices counted once
            if ((a.y <= yc && yc < b.y) || (b.y <= yc && yc < a.y))
                xs.push_back(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
        }
        std::sort(xs.begin(), xs.end());
        for (size_t i = 0; i + 1 < xs.size(); i += 2) {
            int x0 = static_cast<int>(std::ceil(xs[i] - 0.5));
            int x1 = static_cast<int>(std::ceil(xs[i + 1] - 0.5)) - 1;
            x0 = std::max(x0, 0);
            x1 = std::min(x1, w - 1);
            for (int x = x0; x <= x1; ++x) mask.set(y, x, true);
        }
    }
    return mask;
}

RegionMask exclude_transition(const RegionMask& mask, const AlphaMatte& alpha) {
    if (mask.h != alpha.h || mask.w != alpha.w)
        fail(ErrorCode::SizeMismatch, "exclude_transition: mask/alpha size mismatch");
    RegionMask out(mask.h, mask.w);
    for (size_t i = 0; i < out.mask.size(); ++i) {
        double a = alpha.data[i];
        bool soft = a > 0.0 && a < 1.0;
        out.mask[i] = (mask.mask[i] != 0 && !soft) ? 1 : 0;
    }
    return out;
}

Image blur_face(const Image& image, const RegionMask& mask, double sigma, double feather) {
    if (mask.h != image.h || mask.w != image.w)
        fail(ErrorCode::SizeMismatch, "blur_face: image/mask size mismatch");
    if (sigma <= 0.0) fail(ErrorCode::InvalidArgument, "blur_face: sigma must be > 0");

    Image out = image;
    if (mask.count() == 0) return out;

    int h = image.h, w = image.w;
    size_t plane = static_cast<size_t>(h) * w;

    // blend weight: 1 deep inside the mask, ramping down toward the boundary
    std::vector<double> weight(plane, 1.0);
    if (feather > 0.0) {
        std::vector<uint8_t> outside(plane);
        for (size_t i = 0; i < plane; ++i) outside[i] = mask.mask[i] ? 0 : 1;
        std::vector<double> dist_sq = distance_transform_sq(outside.data(), h, w);
        for (size_t i = 0; i < plane; ++i)
            weight[i] = std::min(1.0, std::sqrt(dist_sq[i]) / (feather + 1.0));
    }

    std::vector<double> blurred(plane);
    for (int ch = 0; ch < 3; ++ch) {
        gaussian_blur(image.plane(ch), blurred.data(), h, w, sigma);
        double* o = out.plane(ch);
        const double* src = image.plane(ch);
        for (size_t i = 0; i < plane; ++i) {
            if (!mask.mask[i]) continue;  // outside stays bit-exact
            double t = weight[i];
            o[i] = std::clamp(t * blurred[i] + (1.0 - t) * src[i], 0.0, 1.0);
        }
    }
    return out;
}

namespace {

double default_sigma(const std::vector<LandmarkPoint>& poly) {
    double x0 = poly[0].x, x1 = poly[0].x, y0 = poly[0].y, y1 = poly[0].y;
    for (const auto& p : poly) {
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
    }
    double diag = std::hypot(x1 - x0, y1 - y0);
    return std::max(3.0, 0.12 * diag);
}

}  // namespace

AnonymizeResult anonymize(const Image& image, const LandmarkSet& landmarks,
                          const AlphaMatte& alpha, double sigma, double feather) {
    if (image.h != alpha.h || image.w != alpha.w)
        fail(ErrorCode::SizeMismatch, "anonymize: image/alpha size mismatch");
    RegionMask face = face_mask_from_landmarks(landmarks, image.h, image.w);
    RegionMask adjusted = exclude_transition(face, alpha);
    if (sigma <= 0.0) sigma = default_sigma(face_polygon(landmarks));
    Image blurred = blur_face(image, adjusted, sigma, feather);
    return {std::move(blurred), std::move(adjusted)};
}

AnonymizeResult anonymize_with_mask(const Image& image, const RegionMask& face_mask,
                                    const AlphaMatte& alpha, double sigma, double feather) {
    if (image.h != alpha.h || image.w != alpha.w)
        fail(ErrorCode::SizeMismatch, "anonymize: image/alpha size mismatch");
    RegionMask adjusted = exclude_transition(face_mask, alpha);
    if (sigma <= 0.0) {
        // bounding box of the supplied mask stands in for the face polygon
        int x0 = face_mask.w, x1 = -1, y0 = face_mask.h, y1 = -1;
        for (int y = 0; y < face_mask.h; ++y)
            for (int x = 0; x < face_mask.w; ++x)
                if (face_mask.at(y, x)) {
                    x0 = std::min(x0, x);
                    x1 = std::max(x1, x);
                    y0 = std::min(y0, y);
                    y1 = std::max(y1, y);
                }
        sigma = x1 < x0 ? 3.0 : std::max(3.0, 0.12 * std::hypot(x1 - x0, y1 - y0));
    }
    Image blurred = blur_face(image, adjusted, sigma, feather);
    return {std::move(blurred), std::move(adjusted)};
}

}  // namespace p3m
