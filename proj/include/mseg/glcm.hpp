#ifndef MSEG_GLCM_HPP
#define MSEG_GLCM_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mseg/image.hpp"
#include "mseg/levelset.hpp"

namespace mseg {

/// Axis-aligned ROI, stored as inclusive pixel bounds.  p1 and p2 expose the
/// (x_min, y_max) / (x_max, y_min) corner pair convention.
struct RoiBox {
    int x_min = 0, y_min = 0, x_max = 0, y_max = 0;

    Pixel p1() const { return {x_min, y_max}; }
    Pixel p2() const { return {x_max, y_min}; }
    int width() const { return x_max - x_min + 1; }
    int height() const { return y_max - y_min + 1; }
    bool operator==(const RoiBox&) const = default;
};

/// Tight bounding box over every labelled region pixel.
inline RoiBox roi_bounding_box(const DetectedRegions& detected) {
    const auto& labels = detected.regions.labels;
    RoiBox box{labels.width(), labels.height(), -1, -1};
    for (int y = 0; y < labels.height(); ++y)
        for (int x = 0; x < labels.width(); ++x) {
            if (labels(x, y) == 0) continue;
            box.x_min = std::min(box.x_min, x);
            box.y_min = std::min(box.y_min, y);
            box.x_max = std::max(box.x_max, x);
            box.y_max = std::max(box.y_max, y);
        }
    if (box.x_max < 0) throw degenerate_input("no detected region pixels to bound");
    return box;
}

struct GlcmOffset {
    int dx = 1, dy = 0;
    bool operator==(const GlcmOffset&) const = default;
};

/// The four unit-distance orientations 0, 45, 90, 135 degrees (y axis points
/// down, so dy = -1 moves up a row).
constexpr std::array<GlcmOffset, 4> kGlcmOrientations{
    GlcmOffset{1, 0}, GlcmOffset{1, -1}, GlcmOffset{0, -1}, GlcmOffset{-1, -1}};

/// Normalized gray-level co-occurrence matrix for a single offset.
struct Glcm {
    int levels = 0;
    GlcmOffset offset;
    std::vector<double> p;  // levels x levels, row-major: p[a*levels + b]

    double operator()(int a, int b) const { return p[static_cast<std::size_t>(a) * levels + b]; }
};

namespace detail {

// linear binning of [lo, hi] into L levels
inline int quantize(std::uint16_t v, int lo, int hi, int levels) {
    return static_cast<int>((static_cast<long>(v) - lo) * levels / (hi - lo + 1));
}

}  // namespace detail

/// Single-direction co-occurrence accumulation over pixel pairs
/// (p, p + offset) inside the box, normalized by the pair count.  Intensities
/// are quantized linearly between the box's observed min and max.
inline Glcm compute_glcm(const GrayImage& img, const RoiBox& box, int levels, GlcmOffset offset) {
    if (levels < 2) throw config_error("GLCM needs at least two quantization levels");
    if (box.x_min < 0 || box.y_min < 0 || box.x_max >= img.width() || box.y_max >= img.height() ||
        box.x_min > box.x_max || box.y_min > box.y_max)
        throw config_error("ROI box outside image");

    int lo = img.max_value(), hi = 0;
    for (int y = box.y_min; y <= box.y_max; ++y)
        for (int x = box.x_min; x <= box.x_max; ++x) {
            lo = std::min(lo, static_cast<int>(img(x, y)));
            hi = std::max(hi, static_cast<int>(img(x, y)));
        }

    Glcm glcm{levels, offset, std::vector<double>(static_cast<std::size_t>(levels) * levels, 0.0)};
    std::size_t pairs = 0;
    for (int y = box.y_min; y <= box.y_max; ++y)
        for (int x = box.x_min; x <= box.x_max; ++x) {
            const int nx = x + offset.dx, ny = y + offset.dy;
            if (nx < box.x_min || nx > box.x_max || ny < box.y_min || ny > box.y_max) continue;
            const int a = detail::quantize(img(x, y), lo, hi, levels);
            const int b = detail::quantize(img(nx, ny), lo, hi, levels);
            glcm.p[static_cast<std::size_t>(a) * levels + b] += 1.0;
            ++pairs;
        }
    if (pairs == 0) throw degenerate_input("ROI box yields no co-occurrence pairs");
    for (double& v : glcm.p) v /= static_cast<double>(pairs);
    return glcm;
}

/// Six averaged texture statistics, the classifier input.
struct FeatureVector {
    double moy = 0.0;
    double variance = 0.0;
    double energy = 0.0;
    double contrast = 0.0;
    double entropy = 0.0;
    double homogeneity = 0.0;

    std::array<double, 6> to_array() const {
        return {moy, variance, energy, contrast, entropy, homogeneity};
    }
    static FeatureVector from_array(const std::array<double, 6>& a) {
        return {a[0], a[1], a[2], a[3], a[4], a[5]};
    }
    bool operator==(const FeatureVector&) const = default;
};

/// Per-offset statistics of one normalized GLCM.  The mean is the
/// index-weighted form sum x*p(x,y); entropy uses log base 2 with
/// 0*log(0) = 0.
inline FeatureVector glcm_features(const Glcm& glcm) {
    double sum = 0.0;
    for (double v : glcm.p) sum += v;
    if (std::abs(sum - 1.0) > 1e-9) throw config_error("GLCM is not normalized");

    FeatureVector f;
    const int n = glcm.levels;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            const double p = glcm(a, b);
            f.moy += a * p;
            f.energy += p * p;
            f.contrast += static_cast<double>((a - b) * (a - b)) * p;
            if (p > 0.0) f.entropy -= p * std::log2(p);
            f.homogeneity += p / (1.0 + static_cast<double>((a - b) * (a - b)));
        }
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            f.variance += (a - f.moy) * (a - f.moy) * glcm(a, b);
    return f;
}

/// Arithmetic mean of each statistic over the four orientations.
inline FeatureVector feature_vector(const GrayImage& img, const RoiBox& box, int levels) {
    FeatureVector avg;
    for (const GlcmOffset& off : kGlcmOrientations) {
        const FeatureVector f = glcm_features(compute_glcm(img, box, levels, off));
        avg.moy += f.moy;
        avg.variance += f.variance;
        avg.energy += f.energy;
        avg.contrast += f.contrast;
        avg.entropy += f.entropy;
        avg.homogeneity += f.homogeneity;
    }
    avg.moy /= 4.0;
    avg.variance /= 4.0;
    avg.energy /= 4.0;
    avg.contrast /= 4.0;
    avg.entropy /= 4.0;
    avg.homogeneity /= 4.0;
    return avg;
}

}  // namespace mseg

#endif  // MSEG_GLCM_HPP
