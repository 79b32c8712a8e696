#ifndef MSEG_THRESHOLD_HPP
#define MSEG_THRESHOLD_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "mseg/image.hpp"

namespace mseg {

inline std::vector<std::int64_t> histogram(const GrayImage& img) {
    std::vector<std::int64_t> h(static_cast<std::size_t>(img.max_value()) + 1, 0);
    for (std::uint16_t v : img.data()) ++h[v];
    return h;
}

namespace detail {

inline void require_two_levels(const std::vector<std::int64_t>& hist) {
    int distinct = 0;
    for (std::int64_t c : hist)
        if (c > 0 && ++distinct >= 2) return;
    throw degenerate_input("constant image: no threshold separates two classes");
}

// Smallest t whose criterion reaches the maximum.  Mathematically tied
// candidates (mirror-symmetric histograms, empty-bin runs) can differ by a
// few ulps depending on summation order, so equality carries a relative
// tolerance.
constexpr double kCriterionTieTolerance = 1e-9;

inline int smallest_arg_max(const std::vector<double>& values) {
    double best = -std::numeric_limits<double>::infinity();
    for (double v : values) best = std::max(best, v);
    const double cutoff = best - kCriterionTieTolerance * std::max(1.0, std::abs(best));
    for (int t = 0; t < static_cast<int>(values.size()); ++t)
        if (values[t] >= cutoff) return t;
    return 0;
}

}  // namespace detail

/// Otsu's threshold: maximizes between-class variance of the split
/// {<= t} vs {> t}.  Ties resolve to the smallest t; pixels above the
/// returned value are foreground.
inline int threshold_otsu(const GrayImage& img) {
    const auto hist = histogram(img);
    detail::require_two_levels(hist);
    const int levels = static_cast<int>(hist.size());

    double total = 0.0, total_sum = 0.0;
    for (int i = 0; i < levels; ++i) {
        total += static_cast<double>(hist[i]);
        total_sum += static_cast<double>(i) * static_cast<double>(hist[i]);
    }

    std::vector<double> criterion(static_cast<std::size_t>(levels - 1),
                                  -std::numeric_limits<double>::infinity());
    double n0 = 0.0, s0 = 0.0;
    for (int t = 0; t + 1 < levels; ++t) {
        n0 += static_cast<double>(hist[t]);
        s0 += static_cast<double>(t) * static_cast<double>(hist[t]);
        const double n1 = total - n0;
        if (n0 <= 0.0 || n1 <= 0.0) continue;
        const double mu0 = s0 / n0;
        const double mu1 = (total_sum - s0) / n1;
        criterion[static_cast<std::size_t>(t)] =
            (n0 / total) * (n1 / total) * (mu0 - mu1) * (mu0 - mu1);
    }
    return detail::smallest_arg_max(criterion);
}

/// Kapur's maximum-entropy threshold: maximizes the sum of Shannon
/// entropies of the two normalized histogram halves.
inline int threshold_max_entropy(const GrayImage& img) {
    const auto hist = histogram(img);
    detail::require_two_levels(hist);
    const int levels = static_cast<int>(hist.size());

    double total = 0.0;
    for (std::int64_t c : hist) total += static_cast<double>(c);

    // prefix sums of p and p*log(p)
    double p0 = 0.0, a0 = 0.0;
    double full_p = 1.0, full_a = 0.0;
    for (int i = 0; i < levels; ++i) {
        const double p = static_cast<double>(hist[i]) / total;
        if (p > 0.0) full_a += p * std::log(p);
    }

    std::vector<double> criterion(static_cast<std::size_t>(levels - 1),
                                  -std::numeric_limits<double>::infinity());
    for (int t = 0; t + 1 < levels; ++t) {
        const double p = static_cast<double>(hist[t]) / total;
        p0 += p;
        if (p > 0.0) a0 += p * std::log(p);
        const double p1 = full_p - p0;
        if (p0 <= 0.0 || p1 <= 0.0) continue;
        criterion[static_cast<std::size_t>(t)] =
            std::log(p0) - a0 / p0 + std::log(p1) - (full_a - a0) / p1;
    }
    return detail::smallest_arg_max(criterion);
}

/// Yen's maximum-correlation threshold:
///   TC(t) = -log(S0(t) * S1(t)) + 2*log(P0(t) * P1(t))
/// with S the within-class sums of squared probabilities and P the class
/// probabilities.
inline int threshold_max_correlation(const GrayImage& img) {
    const auto hist = histogram(img);
    detail::require_two_levels(hist);
    const int levels = static_cast<int>(hist.size());

    double total = 0.0;
    for (std::int64_t c : hist) total += static_cast<double>(c);
    double full_sq = 0.0;
    for (std::int64_t c : hist) {
        const double p = static_cast<double>(c) / total;
        full_sq += p * p;
    }

    std::vector<double> criterion(static_cast<std::size_t>(levels - 1),
                                  -std::numeric_limits<double>::infinity());
    double p0 = 0.0, sq0 = 0.0;
    for (int t = 0; t + 1 < levels; ++t) {
        const double p = static_cast<double>(hist[t]) / total;
        p0 += p;
        sq0 += p * p;
        const double p1 = 1.0 - p0;
        const double sq1 = full_sq - sq0;
        if (p0 <= 0.0 || p1 <= 0.0 || sq0 <= 0.0 || sq1 <= 0.0) continue;
        criterion[static_cast<std::size_t>(t)] = -std::log(sq0 * sq1) + 2.0 * std::log(p0 * p1);
    }
    return detail::smallest_arg_max(criterion);
}

/// Foreground = pixels strictly above the threshold.
inline BinaryMask binarize(const GrayImage& img, int threshold) {
    BinaryMask mask(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            mask.set(x, y, img(x, y) > threshold);
    return mask;
}

inline BinaryMask binarize_below(const GrayImage& img, int threshold) {
    BinaryMask mask(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            mask.set(x, y, img(x, y) <= threshold);
    return mask;
}

}  // namespace mseg

#endif  // MSEG_THRESHOLD_HPP
