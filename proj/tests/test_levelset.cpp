#include <catch2/catch.hpp>

#include <cmath>
#include <random>

#include "mseg/levelset.hpp"
#include "oracles.hpp"

using namespace mseg;

namespace {

// symmetric discrete Hausdorff distance between the contour set and the
// analytic circle
double contour_circle_hausdorff(const std::vector<Pixel>& contour, double cx, double cy,
                                double r) {
    REQUIRE(!contour.empty());
    double worst = 0.0;
    for (const Pixel& p : contour)
        worst = std::max(worst, std::abs(std::hypot(p.x - cx, p.y - cy) - r));
    for (int k = 0; k < 720; ++k) {
        const double a = k * 3.141592653589793 / 360.0;
        const double px = cx + r * std::cos(a), py = cy + r * std::sin(a);
        double nearest = kInfTime;
        for (const Pixel& p : contour) nearest = std::min(nearest, std::hypot(p.x - px, p.y - py));
        worst = std::max(worst, nearest);
    }
    return worst;
}

double mean_contour_radius(const Field& phi, double cx, double cy) {
    double sum = 0.0;
    int n = 0;
    for (int y = 0; y < phi.height(); ++y)
        for (int x = 0; x < phi.width(); ++x) {
            if (phi(x, y) >= 0.0) continue;
            const bool edge =
                (x > 0 && phi(x - 1, y) >= 0.0) || (x + 1 < phi.width() && phi(x + 1, y) >= 0.0) ||
                (y > 0 && phi(x, y - 1) >= 0.0) || (y + 1 < phi.height() && phi(x, y + 1) >= 0.0);
            if (!edge) continue;
            sum += std::hypot(x - cx, y - cy);
            ++n;
        }
    REQUIRE(n > 0);
    return sum / n;
}

LevelSetField field_from_phi(Field phi, double band, double dt) {
    LevelSetField f;
    f.phi = std::move(phi);
    f.band_width = band;
    f.time_step = dt;
    f.rebuild_band();
    return f;
}

}  // namespace

TEST_CASE("seed_points returns the brightest stratum") {
    GrayImage constant(4, 3, 255, std::uint16_t{9});
    CHECK(seed_points(constant, 0.3).size() == 12);  // all pixels share the max

    GrayImage one_bright(10, 10, 255, std::uint16_t{10});
    one_bright(4, 7) = 200;
    const auto strict = seed_points(one_bright, 0.0);
    REQUIRE(strict.size() == 1);
    CHECK(strict[0] == Pixel{4, 7});

    GrayImage two_bright(10, 10, 255, std::uint16_t{10});
    two_bright(1, 1) = 200;
    two_bright(8, 3) = 200;
    CHECK(seed_points(two_bright, 0.0).size() == 2);
}

TEST_CASE("edge_stop matches 1/(1+|grad|)") {
    const GrayImage flat(5, 5, 255, std::uint16_t{100});
    CHECK(edge_stop(flat, 2, 2) == Approx(1.0));

    GrayImage ramp1(3, 3, 255);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x) ramp1(x, y) = static_cast<std::uint16_t>(x);
    CHECK(edge_stop(ramp1, 1, 1) == Approx(0.5));  // |grad| = 1

    GrayImage ramp3(3, 3, 255);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x) ramp3(x, y) = static_cast<std::uint16_t>(3 * x);
    CHECK(edge_stop(ramp3, 1, 1) == Approx(0.25));  // |grad| = 3
}

TEST_CASE("skew_centred third moment on the worked 3x3 window") {
    GrayImage img(3, 3, 255);
    img(1, 1) = 9;  // eight zeros and one nine: mean 1, (1/9)(8*(-1)^3 + 8^3) = 56
    CHECK(skew_centred(img, 1, 1) == Approx(56.0));

    const GrayImage constant(3, 3, 255, std::uint16_t{7});
    CHECK(skew_centred(constant, 1, 1) == Approx(0.0));

    GrayImage symmetric(3, 3, 255);
    int v = 1;
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x) symmetric(x, y) = static_cast<std::uint16_t>(v++);
    CHECK(skew_centred(symmetric, 1, 1) == Approx(0.0).margin(1e-9));
}

TEST_CASE("skew window clamps at borders with adjusted divisor") {
    GrayImage img(3, 3, 255);
    img(0, 0) = 8;  // corner window holds 4 pixels: {8,0,0,0}, mean 2
    // (1/4)(6^3 + 3*(-2)^3) = (216 - 24)/4 = 48
    CHECK(skew_centred(img, 0, 0) == Approx(48.0));
}

TEST_CASE("normalized skew lies in [-1,1] and vanishes with the normalizer") {
    std::mt19937 rng(5);
    const GrayImage img = oracle::random_image(rng, 12, 12, 16);
    const Field f = skew_centred_normal_field(img);
    double max_abs = 0.0;
    for (double v : f.cells()) {
        CHECK(v >= -1.0);
        CHECK(v <= 1.0);
        max_abs = std::max(max_abs, std::abs(v));
    }
    CHECK(max_abs == Approx(1.0));

    const GrayImage constant(6, 6, 255, std::uint16_t{3});
    const Field zero = skew_centred_normal_field(constant);
    for (double v : zero.cells()) CHECK(v == 0.0);

    // the literal first-power variant vanishes on interior windows
    const Field literal = skew_centred_normal_field(img, true);
    for (int y = 1; y < 11; ++y)
        for (int x = 1; x < 11; ++x) CHECK(literal(x, y) == Approx(0.0).margin(1e-9));
}

TEST_CASE("image fast march with flat image and epsilon 1 is unit speed") {
    const GrayImage flat(7, 7, 255, std::uint16_t{50});
    SpeedParams params;
    params.epsilon = 1.0;
    const std::vector<Pixel> seeds{{3, 3}};
    const ArrivalField t = fast_march(flat, seeds, params);
    CHECK(t(4, 3) == Approx(1.0));
    CHECK(t(4, 4) == Approx(1.0 + 1.0 / std::sqrt(2.0)));
}

TEST_CASE("fast march speed denominator clamps at strong edges") {
    GrayImage edge(8, 8, 255);
    for (int y = 0; y < 8; ++y)
        for (int x = 4; x < 8; ++x) edge(x, y) = 255;
    SpeedParams params;  // epsilon 0.4, alpha 1: denominator would go negative
    const std::vector<Pixel> seeds{{0, 0}};
    const ArrivalField t = fast_march(edge, seeds, params);
    for (double v : t.cells()) CHECK(std::isfinite(v));
}

TEST_CASE("init_phi at t0 = 0 is negative only at the seed") {
    const Field speed(9, 9, 1.0);
    const std::vector<Pixel> seeds{{4, 4}};
    const ArrivalField arrival = fast_march_speed(speed, seeds);
    const LevelSetField field = init_phi(arrival, 0.0, 4.0, 0.1);
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 9; ++x) {
            if (x == 4 && y == 4)
                CHECK(field.phi(x, y) < 0.0);
            else
                CHECK(field.phi(x, y) > 0.0);
        }
}

TEST_CASE("init_phi at the max finite arrival makes every reached cell interior") {
    const Field speed(9, 9, 1.0);
    const std::vector<Pixel> seeds{{4, 4}};
    const ArrivalField arrival = fast_march_speed(speed, seeds);
    double max_t = 0.0;
    for (double v : arrival.cells()) max_t = std::max(max_t, v);
    const LevelSetField field = init_phi(arrival, max_t, 4.0, 0.1);
    for (double v : field.phi.cells()) CHECK(v <= 0.0);
    CHECK(field.band.empty());  // no interface anywhere
}

TEST_CASE("init_phi zero set tracks the arrival iso-circle") {
    const int n = 64;
    const Field speed(n, n, 1.0);
    const std::vector<Pixel> seeds{{32, 32}};
    const ArrivalField arrival = fast_march_speed(speed, seeds);
    const LevelSetField field = init_phi(arrival, 8.0, 6.0, 0.1);

    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const double d = std::hypot(x - 32, y - 32);
            if (field.phi(x, y) < 0.0) CHECK(d <= 8.0 + 1.0);
            const bool edge = x > 0 && (field.phi(x, y) < 0.0) != (field.phi(x - 1, y) < 0.0);
            if (edge) CHECK(std::abs(d - 8.0) <= 1.5);
        }
    CHECK_THROWS_AS(init_phi(Field(4, 4, kInfTime), 0.0, 4.0, 0.1), degenerate_input);
}

TEST_CASE("evolve_step with all weights zero leaves phi bitwise unchanged") {
    const GrayImage img(32, 32, 255, std::uint16_t{40});
    SpeedParams params;
    params.epsilon = params.beta = params.nu = params.theta = 0.0;
    const LevelSetField field = field_from_phi(oracle::circle_sdf(32, 32, 16, 16, 8.0), 6.0, 0.5);
    const LevelSetField next = evolve_step(field, img, params);
    CHECK(next.phi == field.phi);
}

TEST_CASE("pure advection expands the zero set at unit speed") {
    const int n = 64;
    GrayImage flat(n, n, 255, std::uint16_t{80});
    SpeedParams params;
    params.epsilon = params.beta = params.theta = 0.0;
    params.nu = 1.0;
    const double dt = 0.4;  // bound is 0.5/nu
    LevelSetField field = field_from_phi(oracle::circle_sdf(n, n, 32, 32, 8.0), 6.0, dt);
    const SpeedContext ctx = make_speed_context(flat, params);
    for (int step = 1; step <= 10; ++step) {
        field = evolve_step(field, ctx);
        if (step % 5 == 0) field = reinitialize(field);
    }
    // radius grows by n*dt = 4
    CHECK(mean_contour_radius(field.phi, 32, 32) == Approx(12.0).margin(1.0));
}

TEST_CASE("curvature of analytic circle SDFs matches 1/r within 10 percent") {
    const int n = 64;
    for (double r : {5.0, 10.0, 20.0}) {
        const Field phi = oracle::circle_sdf(n, n, 31.5, 31.5, r);
        for (int y = 2; y < n - 2; ++y)
            for (int x = 2; x < n - 2; ++x) {
                if (std::abs(phi(x, y)) > 0.5) continue;
                const double kappa = curvature(phi, x, y);
                CHECK(kappa == Approx(1.0 / r).epsilon(0.10));
            }
    }
}

TEST_CASE("curvature-only evolution moves the contour at rate 1/r") {
    const int n = 64;
    const double r = 10.0;
    const GrayImage flat(n, n, 255, std::uint16_t{60});
    SpeedParams params;
    params.beta = params.nu = params.theta = 0.0;
    params.epsilon = 1.0;
    const double dt = 0.125;  // bound 0.5/(4 eps)
    const LevelSetField field = field_from_phi(oracle::circle_sdf(n, n, 31.5, 31.5, r), 6.0, dt);
    const LevelSetField next = evolve_step(field, flat, params);
    for (int y = 1; y < n - 1; ++y)
        for (int x = 1; x < n - 1; ++x) {
            if (std::abs(field.phi(x, y)) > 0.5) continue;
            const double rate = (next.phi(x, y) - field.phi(x, y)) / dt;
            CHECK(rate == Approx(1.0 / r).epsilon(0.10));
        }
}

TEST_CASE("evolution never touches cells outside the band") {
    std::mt19937 rng(17);
    const GrayImage img = oracle::random_image(rng, 48, 48, 64);
    SpeedParams params;  // defaults, every term active
    const SpeedContext ctx = make_speed_context(img, params);
    LevelSetField field = field_from_phi(oracle::circle_sdf(48, 48, 24, 24, 10.0), 5.0, 0.9 * ctx.stability_bound());
    const LevelSetField next = evolve_step(field, ctx);

    std::vector<bool> in_band(field.phi.cells().size(), false);
    for (auto i : field.band) in_band[static_cast<std::size_t>(i)] = true;
    for (std::size_t i = 0; i < in_band.size(); ++i)
        if (!in_band[i]) REQUIRE(next.phi.cells()[i] == field.phi.cells()[i]);
}

TEST_CASE("evolve_step rejects a time step above the stability bound") {
    const GrayImage img(16, 16, 255, std::uint16_t{30});
    SpeedParams params;
    const SpeedContext ctx = make_speed_context(img, params);
    LevelSetField field = field_from_phi(oracle::circle_sdf(16, 16, 8, 8, 4.0), 4.0,
                                         1.5 * ctx.stability_bound());
    CHECK_THROWS_AS(evolve_step(field, ctx), config_error);
}

TEST_CASE("reinitialize is a fixed point on an exact planar SDF") {
    const int n = 24;
    Field phi(n, n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) phi(x, y) = y - 11.5;
    LevelSetField field = field_from_phi(phi, 6.0, 0.1);
    const LevelSetField out = reinitialize(field);
    for (std::int32_t i : out.band)
        CHECK(out.phi.cells()[static_cast<std::size_t>(i)] ==
              Approx(phi.cells()[static_cast<std::size_t>(i)]).margin(1e-6));
}

TEST_CASE("reinitialize restores unit gradient after scaling, zero set intact") {
    const int n = 48;
    Field phi = oracle::circle_sdf(n, n, 24, 24, 10.0);
    for (double& v : phi.cells()) v *= 3.0;
    LevelSetField field = field_from_phi(phi, 6.0, 0.1);
    field.rebuild_band();
    const LevelSetField out = reinitialize(field);

    for (std::size_t i = 0; i < phi.cells().size(); ++i)
        CHECK((out.phi.cells()[i] < 0.0) == (phi.cells()[i] < 0.0));

    // gradient norm near 1 on cells whose axial neighbours are all in band
    for (int y = 1; y < n - 1; ++y)
        for (int x = 1; x < n - 1; ++x) {
            const double m = std::max({std::abs(out.phi(x - 1, y)), std::abs(out.phi(x + 1, y)),
                                       std::abs(out.phi(x, y - 1)), std::abs(out.phi(x, y + 1)),
                                       std::abs(out.phi(x, y))});
            if (m > out.band_width - 1.0) continue;
            const double g = gradient_norm(out.phi, x, y);
            CHECK(g >= 0.9);
            CHECK(g <= 1.1);
        }

    LevelSetField uniform = field_from_phi(Field(8, 8, 3.0), 4.0, 0.1);
    CHECK_THROWS_AS(reinitialize(uniform), degenerate_input);
}

TEST_CASE("detect recovers a bright disk within two cells") {
    const GrayImage img = oracle::disk_image(64, 32, 32, 12.0, 20, 200);
    SpeedParams params;
    Schedule schedule;
    schedule.max_iterations = 150;
    const DetectedRegions out = detect(img, params, schedule);
    CHECK_FALSE(out.degenerate);
    CHECK(out.regions.label_count == 1);
    CHECK(contour_circle_hausdorff(out.contour, 32, 32, 12.0) <= 2.0);
    // sign consistency: every contour pixel borders the outside
    for (const Pixel& p : out.contour) {
        bool has_outside = false;
        const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
            const int nx = p.x + dx[k], ny = p.y + dy[k];
            if (nx < 0 || nx >= 64 || ny < 0 || ny >= 64) continue;
            has_outside = has_outside || out.regions.labels(nx, ny) == 0;
        }
        REQUIRE(has_outside);
    }
}

TEST_CASE("detect separates two disks into two regions") {
    GrayImage img(64, 64, 255, std::uint16_t{20});
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            if (std::hypot(x - 20, y - 32) <= 8.0) img(x, y) = 200;
            if (std::hypot(x - 44, y - 32) <= 8.0) img(x, y) = 200;
        }
    SpeedParams params;
    Schedule schedule;
    schedule.max_iterations = 150;
    const DetectedRegions out = detect(img, params, schedule);
    CHECK(out.regions.label_count == 2);
}

TEST_CASE("uniform image is flagged degenerate") {
    const GrayImage img(32, 32, 255, std::uint16_t{77});
    const DetectedRegions out = detect(img, SpeedParams{}, Schedule{});
    CHECK(out.degenerate);
}
