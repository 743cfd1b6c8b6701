#pragma once

#include <string>
#include <utility>
#include <vector>

#include "core.hpp"

namespace p3m {

struct LandmarkPoint {
    double x = 0.0, y = 0.0;
};

// Ordered facial landmarks. The "ibug68" scheme is the 68-point convention
// with jawline indices 0-16 and eyebrow indices 17-26; any other scheme id is
// treated as a plain polygon (points used in order).
struct LandmarkSet {
    std::vector<LandmarkPoint> points;
    std::string scheme = "ibug68";
};

inline constexpr const char* kLandmarkSchemePolygon = "polygon";
inline constexpr const char* kLandmarkSchemeIbug68 = "ibug68";

// Parses "x y" per line (# comments allowed) or a JSON file that is either an
// array of [x, y] pairs or {"scheme": ..., "points": [[x, y], ...]}.
// Text files with exactly 68 points default to ibug68, otherwise polygon.
LandmarkSet read_landmarks(const std::string& path);
void write_landmarks(const LandmarkSet& lm, const std::string& path);

// The face polygon used for masking: jaw chain followed by the eyebrow chain
// walked back (ibug68), or the raw point list (polygon scheme).
std::vector<LandmarkPoint> face_polygon(const LandmarkSet& lm);

// Fills the face polygon. A pixel belongs to the mask when its center
// (x+0.5, y+0.5) lies inside the polygon (even-odd rule, half-open edges).
RegionMask face_mask_from_landmarks(const LandmarkSet& lm, int h, int w);

// Removes every pixel with fractional alpha from the mask:
// out = mask AND NOT {0 < alpha < 1}.
RegionMask exclude_transition(const RegionMask& mask, const AlphaMatte& alpha);

// Gaussian blur applied inside the mask only; pixels outside the mask are
// left untouched (bit-exact). feather > 0 ramps the blend weight from the
// mask boundary inward over that many pixels to hide the seam.
Image blur_face(const Image& image, const RegionMask& mask, double sigma,
                double feather = 2.0);

struct AnonymizeResult {
    Image image;
    RegionMask adjusted_mask;
};

// Full pipeline: landmark polygon -> face mask -> transition exclusion ->
// in-mask blur. sigma <= 0 selects the scale-adaptive default
// max(3, 0.12 * polygon bounding-box diagonal).
AnonymizeResult anonymize(const Image& image, const LandmarkSet& landmarks,
                          const AlphaMatte& alpha, double sigma = 0.0,
                          double feather = 2.0);

// Variant for a user-supplied mask (e.g. manually annotated); skips the
// landmark steps but still excludes the transition area.
AnonymizeResult anonymize_with_mask(const Image& image, const RegionMask& face_mask,
                                    const AlphaMatte& alpha, double sigma = 0.0,
                                    double feather = 2.0);

}  // namespace p3m
