#include <catch2/catch.hpp>

#include <random>

#include "mseg/threshold.hpp"
#include "oracles.hpp"

using namespace mseg;

namespace {

GrayImage from_values(std::vector<std::uint16_t> v, int max_value = 255) {
    const int n = static_cast<int>(v.size());
    return GrayImage(n, 1, max_value, std::move(v));
}

}  // namespace

TEST_CASE("otsu picks the smallest maximizer on a symmetric two-spike histogram") {
    // 5 pixels at 0 and 5 at 255: every t in [0,254] gives the same split
    std::vector<std::uint16_t> v(10, 0);
    for (int i = 5; i < 10; ++i) v[i] = 255;
    CHECK(threshold_otsu(from_values(v)) == 0);
}

TEST_CASE("otsu separates {10,10,10} from {200}") {
    const GrayImage img = from_values({10, 10, 10, 200});
    const int t = threshold_otsu(img);
    const int expected = oracle::brute_force_threshold(histogram(img),
                                                       oracle::otsu_between_class_variance);
    CHECK(t == expected);
    CHECK(t >= 10);
    CHECK(t < 200);
}

TEST_CASE("constant image has no threshold") {
    const GrayImage img = from_values({7, 7, 7, 7});
    CHECK_THROWS_AS(threshold_otsu(img), degenerate_input);
    CHECK_THROWS_AS(threshold_max_entropy(img), degenerate_input);
    CHECK_THROWS_AS(threshold_max_correlation(img), degenerate_input);
}

TEST_CASE("max entropy splits a bimodal two-spike histogram like otsu") {
    std::vector<std::uint16_t> v;
    for (int i = 0; i < 6; ++i) v.push_back(20);
    for (int i = 0; i < 6; ++i) v.push_back(210);
    const GrayImage img = from_values(v);
    CHECK(threshold_max_entropy(img) == threshold_otsu(img));
}

TEST_CASE("max entropy on a uniform 4-level histogram matches exhaustive evaluation") {
    const GrayImage img = from_values({0, 1, 2, 3}, 3);
    const int expected =
        oracle::brute_force_threshold(histogram(img), oracle::kapur_entropy_sum);
    CHECK(threshold_max_entropy(img) == expected);
}

TEST_CASE("max correlation separates a two-spike histogram") {
    std::vector<std::uint16_t> v;
    for (int i = 0; i < 4; ++i) v.push_back(30);
    for (int i = 0; i < 4; ++i) v.push_back(220);
    const GrayImage img = from_values(v);
    const int t = threshold_max_correlation(img);
    CHECK(t >= 30);
    CHECK(t < 220);
}

TEST_CASE("max correlation on histogram [4,0,0,4] matches exhaustive evaluation") {
    const GrayImage img = from_values({0, 0, 0, 0, 3, 3, 3, 3}, 3);
    const int expected = oracle::brute_force_threshold(histogram(img), oracle::yen_correlation);
    CHECK(threshold_max_correlation(img) == expected);
}

TEST_CASE("all three thresholds agree with brute force on random small-level images") {
    std::mt19937 rng(1234);
    std::uniform_int_distribution<int> size(2, 12);
    std::uniform_int_distribution<int> levels(2, 16);
    for (int rep = 0; rep < 200; ++rep) {
        GrayImage img = oracle::random_small_levels_image(rng, size(rng), size(rng), levels(rng));
        // ensure at least two distinct values
        if (histogram(img)[img(0, 0)] == static_cast<std::int64_t>(img.size()))
            img(0, 0) = img(0, 0) == 0 ? 1 : 0;
        const auto hist = histogram(img);
        CHECK(threshold_otsu(img) ==
              oracle::brute_force_threshold(hist, oracle::otsu_between_class_variance));
        CHECK(threshold_max_entropy(img) ==
              oracle::brute_force_threshold(hist, oracle::kapur_entropy_sum));
        CHECK(threshold_max_correlation(img) ==
              oracle::brute_force_threshold(hist, oracle::yen_correlation));
    }
}

TEST_CASE("binarize marks pixels above the threshold as foreground") {
    const GrayImage img = from_values({0, 100, 101, 255});
    const BinaryMask mask = binarize(img, 100);
    CHECK_FALSE(mask(0, 0));
    CHECK_FALSE(mask(1, 0));
    CHECK(mask(2, 0));
    CHECK(mask(3, 0));

    const BinaryMask below = binarize_below(img, 100);
    for (int x = 0; x < 4; ++x) CHECK(below(x, 0) == !mask(x, 0));
}
