#ifndef MSEG_PHANTOM_HPP
#define MSEG_PHANTOM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mseg/classify.hpp"
#include "mseg/image.hpp"
#include "mseg/netpbm.hpp"

namespace mseg {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

struct PhantomRng {
    std::uint64_t state;
    explicit PhantomRng(std::uint64_t seed) : state(seed) {}
    double unit() { return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53; }
};

// class-dependent calcification morphology
struct SpotRecipe {
    int count;
    double radius_lo, radius_hi;
    double boost;          // added brightness at the spot centre
    double cluster_spread; // fraction of the breast radius holding the cluster
};

inline SpotRecipe spot_recipe(AcrLabel cls) {
    switch (cls) {
        case AcrLabel::ACR1: return {0, 0.0, 0.0, 0.0, 0.0};
        case AcrLabel::ACR2: return {2, 5.0, 7.0, 130.0, 0.75};
        case AcrLabel::ACR3: return {6, 2.5, 3.5, 110.0, 0.65};
        case AcrLabel::ACR4: return {15, 1.3, 2.0, 90.0, 0.50};
        case AcrLabel::ACR5: return {30, 0.9, 1.3, 70.0, 0.28};
    }
    return {0, 0.0, 0.0, 0.0, 0.0};
}

}  // namespace detail

/// Synthetic mammogram: a half-ellipse breast on dark air, carrying a
/// class-dependent pattern of bright spots that mimics the ACR calcification
/// morphologies (none, few large, few small, many small, dense tiny cluster).
inline GrayImage phantom_mammogram(AcrLabel cls, std::uint64_t seed, int size = 96) {
    detail::PhantomRng rng(seed * 0x9e3779b97f4a7c15ull + static_cast<std::uint64_t>(cls));
    const int w = size, h = size;
    GrayImage img(w, h, 255);

    const double cy = 0.5 * h;
    const double rx = (0.58 + 0.06 * rng.unit()) * w;
    const double ry = (0.40 + 0.05 * rng.unit()) * h;

    auto ellipse_rho = [&](double x, double y) {
        const double ex = x / rx;
        const double ey = (y - cy) / ry;
        return std::sqrt(ex * ex + ey * ey);
    };

    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double rho = ellipse_rho(x, y);
            double v;
            if (rho <= 1.0) {
                v = 100.0 * (1.0 - 0.35 * rho * rho) + 16.0 * (rng.unit() - 0.5);
            } else {
                v = 6.0 + 5.0 * rng.unit();
            }
            img(x, y) = static_cast<std::uint16_t>(std::clamp(v, 0.0, 255.0));
        }

    const detail::SpotRecipe recipe = detail::spot_recipe(cls);
    if (recipe.count > 0) {
        // cluster centre well inside the breast
        const double ca = (rng.unit() - 0.5) * 1.2;  // angular position
        const double cr = 0.25 + 0.25 * rng.unit();
        const double ccx = cr * rx * std::cos(ca);
        const double ccy = cy + cr * ry * std::sin(ca);
        for (int s = 0; s < recipe.count; ++s) {
            double sx = 0.0, sy = 0.0;
            for (int attempt = 0; attempt < 64; ++attempt) {
                const double a = rng.unit() * 6.283185307179586;
                const double r = std::sqrt(rng.unit()) * recipe.cluster_spread;
                sx = ccx + r * rx * std::cos(a);
                sy = ccy + r * ry * std::sin(a);
                if (sx >= 1.0 && ellipse_rho(sx, sy) < 0.82) break;
            }
            const double rad = recipe.radius_lo + rng.unit() * (recipe.radius_hi - recipe.radius_lo);
            const int x0 = std::max(0, static_cast<int>(sx - rad - 1));
            const int x1 = std::min(w - 1, static_cast<int>(sx + rad + 1));
            const int y0 = std::max(0, static_cast<int>(sy - rad - 1));
            const int y1 = std::min(h - 1, static_cast<int>(sy + rad + 1));
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    const double d2 = ((x - sx) * (x - sx) + (y - sy) * (y - sy)) / (rad * rad);
                    if (d2 > 1.0) continue;
                    const double v = img(x, y) + recipe.boost * (1.0 - 0.5 * d2);
                    img(x, y) = static_cast<std::uint16_t>(std::clamp(v, 0.0, 255.0));
                }
        }
    }
    return img;
}

struct SynthOptions {
    int train_per_class = 100;
    int test_per_class = 50;
    int size = 96;
    std::uint64_t seed = 7;
};

/// Writes the 5-class phantom dataset plus a manifest.csv into dir and
/// returns the manifest path.  Fully deterministic in the options.
inline std::string generate_synthetic_dataset(const std::string& dir, const SynthOptions& opt) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path base(dir);

    std::ofstream manifest(base / "manifest.csv", std::ios::trunc);
    if (!manifest) throw io_error("cannot write manifest in '" + dir + "'");
    manifest << "path,label,split\n";

    std::uint64_t counter = opt.seed;
    for (int c = 0; c < kAcrClassCount; ++c) {
        const AcrLabel label = static_cast<AcrLabel>(c);
        for (int split = 0; split < 2; ++split) {
            const int n = split == 0 ? opt.train_per_class : opt.test_per_class;
            const char* split_name = split == 0 ? "train" : "test";
            for (int i = 0; i < n; ++i) {
                const std::uint64_t img_seed = detail::splitmix64(counter);
                const GrayImage img = phantom_mammogram(label, img_seed, opt.size);
                const std::string name = to_string(label) + "_" + split_name + "_" +
                                         std::to_string(i) + ".pgm";
                write_pgm(img, (base / name).string());
                manifest << name << "," << to_string(label) << "," << split_name << "\n";
            }
        }
    }
    return (base / "manifest.csv").string();
}

}  // namespace mseg

#endif  // MSEG_PHANTOM_HPP
