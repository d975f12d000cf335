#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "tep/errors.hpp"
#include "tep/image.hpp"

namespace tep {

/// Patch response map over a square comparison window: for each pixel y in
/// the window of half-width R around the observer x, the mean squared
/// difference between the patch at y and the patch at x.
struct PatchResponse {
    Pixel center;
    int half_width = 0; // R
    std::vector<double> values; // (2R+1)^2, row-major over offsets
    bool normalized = false;

    int side() const { return 2 * half_width + 1; }

    double& at_offset(int ox, int oy) {
        return values[static_cast<std::size_t>(oy + half_width) * side() + (ox + half_width)];
    }
    double at_offset(int ox, int oy) const {
        return values[static_cast<std::size_t>(oy + half_width) * side() + (ox + half_width)];
    }
};

/// Computes the patch response around observer x: for every window pixel y
/// with |y - x|_inf <= R, the squared Euclidean distance between the
/// vectorized patches at y and x divided by the patch pixel count (2r+1)^2.
/// Requires the full window of patches to fit inside the image.
inline PatchResponse compute_response(const ImageGrid& img, Pixel x, int r, int R) {
    if (R <= r) throw ConfigError("window half-width R must exceed patch half-width r");
    if (r < 0) throw ConfigError("patch half-width must be >= 0");
    const int m = R + r;
    if (x.x - m < 0 || x.x + m >= img.width() || x.y - m < 0 || x.y + m >= img.height())
        throw ConfigError("comparison window exceeds image bounds");

    PatchResponse resp;
    resp.center = x;
    resp.half_width = R;
    resp.values.resize(static_cast<std::size_t>(2 * R + 1) * (2 * R + 1));

    const double d = static_cast<double>(2 * r + 1) * (2 * r + 1);
    std::size_t k = 0;
    for (int oy = -R; oy <= R; ++oy) {
        for (int ox = -R; ox <= R; ++ox, ++k) {
            double sum = 0.0;
            for (int dy = -r; dy <= r; ++dy) {
                for (int dx = -r; dx <= r; ++dx) {
                    const double diff = img.at(x.x + ox + dx, x.y + oy + dy) -
                                        img.at(x.x + dx, x.y + dy);
                    sum += diff * diff;
                }
            }
            resp.values[k] = sum / d;
        }
    }
    return resp;
}

/// Replaces the response values in the core |y - x|_inf <= delta (which dip
/// to zero at the observer itself) by the mean over the rest of the window.
inline PatchResponse repair_center(const PatchResponse& resp, int delta) {
    const int R = resp.half_width;
    if (delta <= 0 || delta >= R)
        throw ConfigError("exclusion half-width must satisfy 0 < delta < R");

    double sum = 0.0;
    std::size_t n = 0;
    for (int oy = -R; oy <= R; ++oy)
        for (int ox = -R; ox <= R; ++ox)
            if (std::max(std::abs(ox), std::abs(oy)) > delta) {
                sum += resp.at_offset(ox, oy);
                ++n;
            }
    const double mean = sum / static_cast<double>(n);

    PatchResponse out = resp;
    for (int oy = -delta; oy <= delta; ++oy)
        for (int ox = -delta; ox <= delta; ++ox)
            out.at_offset(ox, oy) = mean;
    return out;
}

/// Scales the response into [0,1] by the squared intensity range of the
/// source image (a mean of squared differences is at most range^2).
inline PatchResponse normalize_response(const PatchResponse& resp, double image_range) {
    if (image_range <= 0.0) throw ConfigError("image range must be positive");
    PatchResponse out = resp;
    const double s = 1.0 / (image_range * image_range);
    for (double& v : out.values) v *= s;
    out.normalized = true;
    return out;
}

} // namespace tep
