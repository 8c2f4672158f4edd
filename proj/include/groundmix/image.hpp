#pragma once

#include <cstdint>
#include <vector>

#include "groundmix/errors.hpp"
#include "groundmix/geometry.hpp"

namespace groundmix {

/// 8-bit RGB raster, row-major, 3 bytes per pixel.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    Image() = default;
    Image(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, fill) {}

    bool empty() const { return width <= 0 || height <= 0; }
    std::uint8_t* px(int x, int y) {
        return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }
    const std::uint8_t* px(int x, int y) const {
        return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }

    bool operator==(const Image& o) const {
        return width == o.width && height == o.height && data == o.data;
    }
};

struct Color {
    std::uint8_t r = 0, g = 0, b = 0;
};

/// Bilinear sample at continuous pixel coordinates. Pixel centers sit at
/// (i + 0.5, j + 0.5); coordinates are clamped to the image border.
/// Returns one channel as a double in [0, 255].
double sample_bilinear(const Image& img, double x, double y, int channel);

/// Bilinear resize to new_w x new_h. Output pixel centers map linearly onto
/// input pixel centers; channel values round half up to 8 bits.
/// Resizing to the identical size returns an exact copy.
Image resize_bilinear(const Image& img, int new_w, int new_h);

/// Rotates the content by angle (radians) about the pivot, keeping the
/// canvas size. Uses the pixel-frame rotation matrix [[cos,-sin],[sin,cos]];
/// samples outside the source are black. Bilinear, round half up.
Image rotate_bilinear(const Image& img, double angle, const Vec2& pivot);

/// Rotates a pixel coordinate by angle about pivot with the same matrix used
/// by rotate_bilinear, so warped content and transformed annotations agree.
Vec2 rotate_pixel(const Vec2& p, double angle, const Vec2& pivot);

/// Averages two same-size images; each channel is (a + b + 1) / 2, i.e. exact
/// halves round up (black + white = 128).
Image average(const Image& a, const Image& b);

/// Per-pixel opacity of a patch, values in [0, 1].
struct OpacityMask {
    int width = 0;
    int height = 0;
    std::vector<double> alpha;

    OpacityMask() = default;
    OpacityMask(int w, int h) : width(w), height(h), alpha(static_cast<std::size_t>(w) * h, 0.0) {}
    double at(int x, int y) const { return alpha[static_cast<std::size_t>(y) * width + x]; }
    double& at(int x, int y) { return alpha[static_cast<std::size_t>(y) * width + x]; }
};

/// Alpha-composites patch over dst with its top-left corner at (x0, y0):
/// out = round(alpha * patch + (1 - alpha) * dst). The patch must lie fully
/// inside dst and match the mask dimensions.
void composite(Image& dst, const Image& patch, const OpacityMask& mask, int x0, int y0);

/// Crops [x0, x0+w) x [y0, y0+h); the rectangle must lie inside the image.
Image crop(const Image& img, int x0, int y0, int w, int h);

// Integer raster primitives (Bresenham); out-of-bounds pixels are skipped.
void draw_line(Image& img, int x0, int y0, int x1, int y1, Color c);
void draw_rect_outline(Image& img, const Box2D& box, Color c);
void fill_rect(Image& img, const Box2D& box, Color c);

}  // namespace groundmix
