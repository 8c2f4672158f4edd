#include "groundmix/image.hpp"

#include <algorithm>
#include <cmath>

namespace groundmix {

namespace {

inline std::uint8_t round_u8(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

}  // namespace

double sample_bilinear(const Image& img, double x, double y, int channel) {
    const double fx = x - 0.5;
    const double fy = y - 0.5;
    const int x0 = static_cast<int>(std::floor(fx));
    const int y0 = static_cast<int>(std::floor(fy));
    const double wx = fx - x0;
    const double wy = fy - y0;
    auto at = [&](int xi, int yi) {
        xi = std::clamp(xi, 0, img.width - 1);
        yi = std::clamp(yi, 0, img.height - 1);
        return static_cast<double>(img.px(xi, yi)[channel]);
    };
    const double top = at(x0, y0) * (1.0 - wx) + at(x0 + 1, y0) * wx;
    const double bot = at(x0, y0 + 1) * (1.0 - wx) + at(x0 + 1, y0 + 1) * wx;
    return top * (1.0 - wy) + bot * wy;
}

Image resize_bilinear(const Image& img, int new_w, int new_h) {
    if (new_w <= 0 || new_h <= 0) throw DegenerateDims("resize: non-positive target size");
    if (new_w == img.width && new_h == img.height) return img;
    Image out(new_w, new_h);
    const double sx = static_cast<double>(img.width) / new_w;
    const double sy = static_cast<double>(img.height) / new_h;
    for (int y = 0; y < new_h; ++y) {
        for (int x = 0; x < new_w; ++x) {
            const double src_x = (x + 0.5) * sx;
            const double src_y = (y + 0.5) * sy;
            std::uint8_t* p = out.px(x, y);
            for (int c = 0; c < 3; ++c) p[c] = round_u8(sample_bilinear(img, src_x, src_y, c));
        }
    }
    return out;
}

Vec2 rotate_pixel(const Vec2& p, double angle, const Vec2& pivot) {
    const double c = std::cos(angle), s = std::sin(angle);
    const Vec2 d = p - pivot;
    return pivot + Vec2(c * d.x() - s * d.y(), s * d.x() + c * d.y());
}

Image rotate_bilinear(const Image& img, double angle, const Vec2& pivot) {
    Image out(img.width, img.height);
    const double c = std::cos(angle), s = std::sin(angle);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            // inverse map: rotate the destination center back by -angle
            const double dx = (x + 0.5) - pivot.x();
            const double dy = (y + 0.5) - pivot.y();
            const double sx = pivot.x() + c * dx + s * dy;
            const double sy = pivot.y() - s * dx + c * dy;
            if (sx < 0.0 || sy < 0.0 || sx > img.width || sy > img.height) continue;
            std::uint8_t* p = out.px(x, y);
            for (int ch = 0; ch < 3; ++ch) p[ch] = round_u8(sample_bilinear(img, sx, sy, ch));
        }
    }
    return out;
}

Image average(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height)
        throw GeometryMismatch("average: image dimensions differ");
    Image out(a.width, a.height);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = static_cast<std::uint8_t>(
            (static_cast<unsigned>(a.data[i]) + static_cast<unsigned>(b.data[i]) + 1u) >> 1);
    }
    return out;
}

void composite(Image& dst, const Image& patch, const OpacityMask& mask, int x0, int y0) {
    if (patch.width != mask.width || patch.height != mask.height)
        throw GeometryMismatch("composite: mask does not match patch");
    if (x0 < 0 || y0 < 0 || x0 + patch.width > dst.width || y0 + patch.height > dst.height)
        throw GeometryMismatch("composite: patch exceeds destination bounds");
    for (int y = 0; y < patch.height; ++y) {
        for (int x = 0; x < patch.width; ++x) {
            const double a = mask.at(x, y);
            const std::uint8_t* s = patch.px(x, y);
            std::uint8_t* d = dst.px(x0 + x, y0 + y);
            for (int c = 0; c < 3; ++c) d[c] = round_u8(a * s[c] + (1.0 - a) * d[c]);
        }
    }
}

Image crop(const Image& img, int x0, int y0, int w, int h) {
    if (w <= 0 || h <= 0) throw DegenerateDims("crop: non-positive size");
    if (x0 < 0 || y0 < 0 || x0 + w > img.width || y0 + h > img.height)
        throw GeometryMismatch("crop: rectangle outside image");
    Image out(w, h);
    for (int y = 0; y < h; ++y)
        std::copy_n(img.px(x0, y0 + y), static_cast<std::size_t>(w) * 3, out.px(0, y));
    return out;
}

namespace {

inline void put(Image& img, int x, int y, Color c) {
    if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
    std::uint8_t* p = img.px(x, y);
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
}

}  // namespace

void draw_line(Image& img, int x0, int y0, int x1, int y1, Color c) {
    int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
        put(img, x0, y0, c);
        if (x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

void draw_rect_outline(Image& img, const Box2D& box, Color c) {
    const int x0 = static_cast<int>(std::lround(box.x0));
    const int y0 = static_cast<int>(std::lround(box.y0));
    const int x1 = static_cast<int>(std::lround(box.x1));
    const int y1 = static_cast<int>(std::lround(box.y1));
    draw_line(img, x0, y0, x1, y0, c);
    draw_line(img, x1, y0, x1, y1, c);
    draw_line(img, x1, y1, x0, y1, c);
    draw_line(img, x0, y1, x0, y0, c);
}

void fill_rect(Image& img, const Box2D& box, Color c) {
    const int x0 = std::max(0, static_cast<int>(std::lround(box.x0)));
    const int y0 = std::max(0, static_cast<int>(std::lround(box.y0)));
    const int x1 = std::min(img.width, static_cast<int>(std::lround(box.x1)));
    const int y1 = std::min(img.height, static_cast<int>(std::lround(box.y1)));
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) put(img, x, y, c);
}

}  // namespace groundmix
