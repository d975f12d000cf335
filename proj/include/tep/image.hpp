#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "tep/errors.hpp"

namespace tep {

/// Dense 2D scalar field on a pixel lattice, row-major, 64-bit floats.
/// Coordinates are (x, y) = (column, row) with (0, 0) the top-left pixel.
class ImageGrid {
public:
    ImageGrid() = default;

    ImageGrid(int width, int height, double fill = 0.0)
        : width_(width), height_(height),
          data_(static_cast<std::size_t>(width) * height, fill) {
        if (width <= 0 || height <= 0)
            throw ConfigError("image dimensions must be positive");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }

    double& at(int x, int y) { return data_[idx(x, y)]; }
    double at(int x, int y) const { return data_[idx(x, y)]; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool contains(int x, int y) const {
        return x >= 0 && x < width_ && y >= 0 && y < height_;
    }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    /// Nominal intensity range of the source data (255 for 8-bit gray,
    /// 255*sqrt(3) for brightness of 8-bit color). Defaults to 255.
    double nominal_range = 255.0;

private:
    std::size_t idx(int x, int y) const {
        return static_cast<std::size_t>(y) * width_ + x;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

/// Pixel coordinate.
struct Pixel {
    int x = 0;
    int y = 0;
};

/// Square neighborhood of half-width R around a center pixel.
struct Window {
    Pixel center;
    int half_width = 0; // R

    int side() const { return 2 * half_width + 1; }
};

/// Vectorized square patch: the (2r+1)^2 pixel values around a center,
/// stacked column by column (left to right, top to bottom within a column).
struct PatchVector {
    Pixel center;
    int half_width = 0; // r
    std::vector<double> values;

    int dim() const { return static_cast<int>(values.size()); }
};

/// Extracts the patch of half-width r centered at `center`, in column-wise
/// vector order. The whole patch must lie inside the image.
inline PatchVector extract_patch(const ImageGrid& img, Pixel center, int r) {
    if (r < 0) throw ConfigError("patch half-width must be >= 0");
    if (center.x - r < 0 || center.x + r >= img.width() ||
        center.y - r < 0 || center.y + r >= img.height())
        throw ConfigError("patch exceeds image bounds");

    PatchVector p;
    p.center = center;
    p.half_width = r;
    p.values.reserve(static_cast<std::size_t>(2 * r + 1) * (2 * r + 1));
    for (int dx = -r; dx <= r; ++dx)
        for (int dy = -r; dy <= r; ++dy)
            p.values.push_back(img.at(center.x + dx, center.y + dy));
    return p;
}

/// Three-channel color image, each channel an ImageGrid of equal size.
struct ColorImage {
    ImageGrid r, g, b;

    int width() const { return r.width(); }
    int height() const { return r.height(); }
};

} // namespace tep
