#ifndef MSEG_BREAST_EXTRACT_HPP
#define MSEG_BREAST_EXTRACT_HPP

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <utility>

#include "mseg/components.hpp"
#include "mseg/image.hpp"
#include "mseg/threshold.hpp"

namespace mseg {

struct EnhanceParams {
    int s_min = 0;
    int s_max = 0;
    double c = 0.0;  // -2 / log(s_max - s_min + 1)
};

inline EnhanceParams enhance_params(const GrayImage& img) {
    int lo = img.max_value(), hi = 0;
    for (std::uint16_t v : img.data()) {
        if (v < lo) lo = v;
        if (v > hi) hi = v;
    }
    if (lo == hi) throw degenerate_input("constant image: normalization factor undefined");
    return EnhanceParams{lo, hi, -2.0 / std::log(static_cast<double>(hi - lo) + 1.0)};
}

/// Logarithmic contrast enhancement G = c*log(I - s_min + 1) + 1.
/// c is negative, so G falls from 1 (at s_min) to -1 (at s_max): the
/// transform inverts intensity order while compressing the bright end.
inline Field log_enhance(const GrayImage& img) {
    const EnhanceParams p = enhance_params(img);
    Field out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            out(x, y) = p.c * std::log(static_cast<double>(img(x, y) - p.s_min) + 1.0) + 1.0;
    return out;
}

/// Affine map [-1,1] -> [0,max_value] so the enhanced field can feed the
/// histogram thresholders.
inline GrayImage rescale_enhanced(const Field& field, int max_value) {
    GrayImage out(field.width(), field.height(), max_value);
    for (int y = 0; y < field.height(); ++y)
        for (int x = 0; x < field.width(); ++x) {
            double v = (field(x, y) + 1.0) * 0.5 * max_value;
            if (v < 0.0) v = 0.0;
            if (v > max_value) v = max_value;
            out(x, y) = static_cast<std::uint16_t>(std::lround(v));
        }
    return out;
}

enum class Orientation { LeftToRight, RightToLeft };

/// Which image half holds more of the mask.  Ties resolve LeftToRight.
inline Orientation detect_orientation(const BinaryMask& mask) {
    const int w = mask.width();
    std::size_t left = 0, right = 0;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < w; ++x)
            if (mask(x, y)) (x < w / 2 ? left : right) += 1;
    if (left + right == 0) throw degenerate_input("empty mask: orientation undefined");
    return right > left ? Orientation::RightToLeft : Orientation::LeftToRight;
}

struct SeparationResult {
    BinaryMask mask;
    std::optional<Pixel> point_a;  // first background pixel in the top strip
    std::optional<Pixel> point_b;  // first background pixel in the bottom strip
    bool skipped = false;          // set when a strip held no background pixel
};

namespace detail {

// Column-major scan of one strip, columns walked from the chest-wall side.
inline std::optional<Pixel> find_strip_point(const BinaryMask& mask, Orientation orient,
                                             int y_begin, int y_end, int y_step) {
    const int w = mask.width();
    for (int i = 0; i < w; ++i) {
        const int x = orient == Orientation::LeftToRight ? i : w - 1 - i;
        for (int y = y_begin; y != y_end; y += y_step)
            if (!mask(x, y)) return Pixel{x, y};
    }
    return std::nullopt;
}

inline void draw_line_background(BinaryMask& mask, Pixel a, Pixel b) {
    // midpoint (Bresenham) rasterization, endpoints inclusive
    int x = a.x, y = a.y;
    const int dx = std::abs(b.x - a.x), dy = -std::abs(b.y - a.y);
    const int sx = a.x < b.x ? 1 : -1, sy = a.y < b.y ? 1 : -1;
    int err = dx + dy;
    while (true) {
        mask.set(x, y, false);
        if (x == b.x && y == b.y) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y += sy;
        }
    }
}

}  // namespace detail

/// Cuts the mask free of border artefacts: locates point A in the top strip
/// and point B in the bottom strip (strip height = ceil(h/12), columns
/// scanned from the chest-wall side), then clears the straight lines joining
/// each chest-wall corner to its point.  When a strip holds no background
/// pixel the cut is skipped and the mask is returned unchanged.
inline SeparationResult separate_background(const BinaryMask& mask, Orientation orient) {
    if (mask.count() == 0) throw degenerate_input("empty mask: separation undefined");
    const int h = mask.height();
    const int strip = (h + 11) / 12;

    SeparationResult res{mask, std::nullopt, std::nullopt, false};
    res.point_a = detail::find_strip_point(mask, orient, 0, strip, 1);
    res.point_b = detail::find_strip_point(mask, orient, h - 1, h - 1 - strip, -1);
    if (!res.point_a || !res.point_b) {
        res.skipped = true;
        return res;
    }

    const int corner_x = orient == Orientation::LeftToRight ? 0 : mask.width() - 1;
    detail::draw_line_background(res.mask, Pixel{corner_x, 0}, *res.point_a);
    detail::draw_line_background(res.mask, Pixel{corner_x, h - 1}, *res.point_b);
    return res;
}

struct BreastRegion {
    BinaryMask mask;
    GrayImage masked_image;  // original where mask is set, zero elsewhere
    std::optional<Pixel> anchor_a;
    std::optional<Pixel> anchor_b;
};

/// Keeps the largest label (ties to the smallest id) and masks the original
/// image with it.
inline BreastRegion select_breast(const LabelMap& labels, const GrayImage& original) {
    if (labels.label_count < 1) throw degenerate_input("empty label map: no region to select");
    const auto areas = label_areas(labels);
    std::int32_t best = 1;
    for (std::int32_t l = 2; l <= labels.label_count; ++l)
        if (areas[static_cast<std::size_t>(l)] > areas[static_cast<std::size_t>(best)]) best = l;

    BreastRegion region{BinaryMask(labels.width(), labels.height()),
                        GrayImage(original.width(), original.height(), original.max_value()),
                        std::nullopt,
                        std::nullopt};
    for (int y = 0; y < labels.height(); ++y)
        for (int x = 0; x < labels.width(); ++x)
            if (labels(x, y) == best) {
                region.mask.set(x, y, true);
                region.masked_image(x, y) = original(x, y);
            }
    return region;
}

}  // namespace mseg

#endif  // MSEG_BREAST_EXTRACT_HPP
