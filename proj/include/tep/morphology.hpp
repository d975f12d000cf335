#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "tep/consensus.hpp"
#include "tep/errors.hpp"
#include "tep/image.hpp"

namespace tep {

/// Structuring element: a set of integer offsets around the origin.
using StructuringElement = std::vector<Pixel>;

/// Digital line segment of `length` pixels through the origin at the given
/// angle (degrees, measured from the +x axis). Offsets are rounded to the
/// nearest lattice point and deduplicated; the segment is symmetric, so the
/// element equals its own reflection.
inline StructuringElement line_element(int length, double angle_deg) {
    if (length < 1) throw ConfigError("structuring element length must be >= 1");
    const double a = angle_deg * std::numbers::pi / 180.0;
    const double cx = std::cos(a), cy = std::sin(a);
    StructuringElement se;
    for (int i = 0; i < length; ++i) {
        const double t = i - 0.5 * (length - 1);
        const Pixel p{static_cast<int>(std::lround(t * cx)),
                      static_cast<int>(std::lround(t * cy))};
        bool seen = false;
        for (const Pixel& q : se)
            if (q.x == p.x && q.y == p.y) { seen = true; break; }
        if (!seen) se.push_back(p);
    }
    return se;
}

/// Grayscale dilation with the element clipped to the image domain:
/// out(x) = max over in-domain translates f(x - o).
inline ImageGrid dilate(const ImageGrid& img, const StructuringElement& se) {
    if (se.empty()) throw ConfigError("structuring element is empty");
    ImageGrid out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            double m = -std::numeric_limits<double>::infinity();
            for (const Pixel& o : se) {
                const int sx = x - o.x, sy = y - o.y;
                if (img.contains(sx, sy)) m = std::max(m, img.at(sx, sy));
            }
            // the origin-centered segment always contributes, so m is finite
            out.at(x, y) = m;
        }
    return out;
}

/// Grayscale erosion, adjoint to `dilate` under the same domain clipping:
/// out(x) = min over in-domain translates f(x + o).
inline ImageGrid erode(const ImageGrid& img, const StructuringElement& se) {
    if (se.empty()) throw ConfigError("structuring element is empty");
    ImageGrid out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            double m = std::numeric_limits<double>::infinity();
            for (const Pixel& o : se) {
                const int sx = x + o.x, sy = y + o.y;
                if (img.contains(sx, sy)) m = std::min(m, img.at(sx, sy));
            }
            out.at(x, y) = m;
        }
    return out;
}

/// Morphological closing (dilation followed by erosion). With the adjoint
/// pair above it is extensive and idempotent: close(f) >= f pointwise and
/// close(close(f)) = close(f).
inline ImageGrid close(const ImageGrid& img, const StructuringElement& se) {
    return erode(dilate(img, se), se);
}

/// Bridges broken edge responses at junctions and corners: closes the
/// consensus map with line segments at n evenly spaced orientations and
/// keeps the pointwise maximum, clamped to [0, 1]. Vote counters and the
/// validity mask carry over unchanged.
inline EdgeFunction refine_junctions(const EdgeFunction& ef, int line_length = 7,
                                     int n_orientations = 4) {
    if (line_length < 1) throw ConfigError("line length must be >= 1");
    if (n_orientations < 1) throw ConfigError("orientation count must be >= 1");

    EdgeFunction out = ef;
    ImageGrid best(ef.width(), ef.height());
    for (int k = 0; k < n_orientations; ++k) {
        const double angle = 180.0 * k / n_orientations;
        const ImageGrid closed = close(ef.V, line_element(line_length, angle));
        for (std::size_t i = 0; i < best.size(); ++i)
            best[i] = std::max(best[i], closed[i]);
    }
    for (std::size_t i = 0; i < best.size(); ++i)
        out.V[i] = std::min(1.0, std::max(0.0, best[i]));
    return out;
}

} // namespace tep
