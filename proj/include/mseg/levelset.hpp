#ifndef MSEG_LEVELSET_HPP
#define MSEG_LEVELSET_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mseg/components.hpp"
#include "mseg/fast_march.hpp"
#include "mseg/gradient.hpp"
#include "mseg/image.hpp"

namespace mseg {

/// Weights of the evolution speed.  epsilon scales the curvature/edge term,
/// beta the edge-attraction plus local-mean term, nu the constant advection,
/// theta the skew region term; alpha enters the fast-marching speed
/// denominator 1/(epsilon - alpha*|grad I|).
struct SpeedParams {
    double epsilon = 0.4;
    double beta = 0.3;
    double nu = 0.2;
    double theta = 0.1;
    double alpha = 1.0;
    bool nu_outward = true;   // constant term inflates the front when true
    bool literal_skew = false;  // audit switch: first-power deviations instead of cubes
    // Audit switch for the local-mean force.  The default centres Moy/Max on
    // the domain's mean ratio so the force is signed: bright-above-average
    // expands, darker-than-average contracts, and the front can park on spot
    // boundaries.  The literal Moy/Max variant pushes outward everywhere and
    // no weight assignment lets an intensity edge hold the front against it.
    bool literal_mean_ratio = false;

    void validate() const {
        auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
        if (!unit(epsilon) || !unit(beta) || !unit(nu) || !unit(theta))
            throw config_error("speed weights must lie in [0, 1]");
        if (!(alpha >= 0.0) || !std::isfinite(alpha))
            throw config_error("alpha must be finite and non-negative");
    }
};

// floor of the fast-marching speed denominator
constexpr double kFmDenominatorFloor = 1e-3;

/// Brightest-stratum seeding: all pixels with intensity at least
/// (1 - top_fraction) * observed maximum.  top_fraction 0 degenerates to
/// the strict argmax set.
inline std::vector<Pixel> seed_points(const GrayImage& img, double top_fraction,
                                      const BinaryMask* mask = nullptr) {
    if (!(top_fraction >= 0.0 && top_fraction <= 1.0))
        throw config_error("top_fraction must lie in [0, 1]");
    int max_seen = -1;
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            if (mask && !(*mask)(x, y)) continue;
            max_seen = std::max(max_seen, static_cast<int>(img(x, y)));
        }
    std::vector<Pixel> seeds;
    if (max_seen < 0) return seeds;  // empty mask
    const double cut = (1.0 - top_fraction) * max_seen;
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            if (mask && !(*mask)(x, y)) continue;
            if (static_cast<double>(img(x, y)) >= cut) seeds.push_back({x, y});
        }
    return seeds;
}

/// Edge-stopping function g(I) = 1 / (1 + |grad I|).
inline double edge_stop(const GrayImage& img, int x, int y) {
    return 1.0 / (1.0 + gradient_norm(img, x, y));
}

inline Field edge_stop_field(const GrayImage& img) {
    Field g(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            g(x, y) = edge_stop(img, x, y);
    return g;
}

/// Mean gray level of the 3x3 window centred at (x,y); the window is clamped
/// at the borders and the divisor follows the actual pixel count.
inline double local_mean(const GrayImage& img, int x, int y) {
    double sum = 0.0;
    int n = 0;
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx, ny = y + dy;
            if (!img.contains(nx, ny)) continue;
            sum += img(nx, ny);
            ++n;
        }
    return sum / n;
}

/// Windowed central moment of the gray level: (1/n) * sum (I - mean)^3 over
/// the clamped 3x3 window.  The cube makes it a signed asymmetry measure;
/// the literal first-power variant (identically zero on exact arithmetic)
/// stays available for audits.
inline double skew_centred(const GrayImage& img, int x, int y, bool literal_first_power = false) {
    if (literal_first_power) {
        // first-power deviations in exact integer arithmetic:
        // sum_w (I - S/n) = (sum_w n*I - n*S) / n, identically zero
        long long s = 0;
        int n = 0;
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx)
                if (img.contains(x + dx, y + dy)) {
                    s += img(x + dx, y + dy);
                    ++n;
                }
        long long numerator = 0;
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx)
                if (img.contains(x + dx, y + dy))
                    numerator += static_cast<long long>(img(x + dx, y + dy)) * n - s;
        return static_cast<double>(numerator) / (static_cast<double>(n) * n);
    }
    const double mean = local_mean(img, x, y);
    double sum = 0.0;
    int n = 0;
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx, ny = y + dy;
            if (!img.contains(nx, ny)) continue;
            const double d = static_cast<double>(img(nx, ny)) - mean;
            sum += d * d * d;
            ++n;
        }
    return sum / n;
}

/// SkewCentred divided by the per-image normalizer max |SkewCentred|;
/// zero everywhere when the normalizer vanishes.
inline Field skew_centred_normal_field(const GrayImage& img, bool literal_first_power = false) {
    Field raw(img.width(), img.height());
    double max_abs = 0.0;
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            raw(x, y) = skew_centred(img, x, y, literal_first_power);
            max_abs = std::max(max_abs, std::abs(raw(x, y)));
        }
    if (max_abs > 0.0)
        for (double& v : raw.cells()) v /= max_abs;
    else
        raw.fill(0.0);
    return raw;
}

inline double skew_centred_normal(const GrayImage& img, int x, int y,
                                  bool literal_first_power = false) {
    return skew_centred_normal_field(img, literal_first_power)(x, y);
}

/// Fast-marching arrival times from the seed set under the image-derived
/// speed F = 1 / max(floor, epsilon - alpha*|grad I|).
inline ArrivalField fast_march(const GrayImage& img, std::span<const Pixel> seeds,
                               const SpeedParams& params,
                               std::vector<double>* accepted_trace = nullptr) {
    params.validate();
    Field speed(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            const double denom =
                std::max(kFmDenominatorFloor, params.epsilon - params.alpha * gradient_norm(img, x, y));
            speed(x, y) = 1.0 / denom;
        }
    return fast_march_speed(speed, seeds, {}, kInfTime, accepted_trace);
}

/// Narrow-band level-set state.  phi is negative inside, positive outside;
/// cells beyond the band hold the clamped value +-(band_width + 1).
struct LevelSetField {
    Field phi;
    double band_width = 6.0;  // half-width in cells
    double time_step = 0.2;
    std::vector<std::int32_t> band;  // row-major indices with |phi| <= band_width

    void rebuild_band() {
        band.clear();
        const auto& c = phi.cells();
        for (std::size_t i = 0; i < c.size(); ++i)
            if (std::abs(c[i]) <= band_width) band.push_back(static_cast<std::int32_t>(i));
    }
};

/// Quantile of the finite arrival times (index floor(q*(n-1)) of the sorted
/// values).
inline double arrival_quantile(const ArrivalField& arrival, double q) {
    if (!(q >= 0.0 && q <= 1.0)) throw config_error("quantile must lie in [0, 1]");
    std::vector<double> finite;
    finite.reserve(arrival.size());
    for (double t : arrival.cells())
        if (std::isfinite(t)) finite.push_back(t);
    if (finite.empty()) throw degenerate_input("arrival field has no finite times");
    std::sort(finite.begin(), finite.end());
    return finite[static_cast<std::size_t>(q * (finite.size() - 1))];
}

/// Builds phi as the signed distance to the arrival iso-level t0: cells with
/// T <= t0 start inside.  A field with no outside cells is returned as a
/// uniform interior with an empty band.
inline LevelSetField init_phi(const ArrivalField& arrival, double t0, double band_radius,
                              double time_step) {
    if (band_radius < 3.0) throw config_error("band width must be at least 3 cells");
    bool any_finite = false, any_inside = false, any_outside = false;
    Field pseudo(arrival.width(), arrival.height());
    for (int y = 0; y < arrival.height(); ++y)
        for (int x = 0; x < arrival.width(); ++x) {
            const double t = arrival(x, y);
            if (std::isfinite(t)) any_finite = true;
            const bool in = std::isfinite(t) && t <= t0;
            pseudo(x, y) = in ? -0.5 : 0.5;
            (in ? any_inside : any_outside) = true;
        }
    if (!any_finite) throw degenerate_input("all-infinite arrival field");

    LevelSetField field;
    field.band_width = band_radius;
    field.time_step = time_step;
    if (!any_inside || !any_outside) {
        field.phi = Field(arrival.width(), arrival.height(),
                          (any_inside ? -1.0 : 1.0) * (band_radius + 1.0));
        return field;  // no interface; band stays empty
    }
    field.phi = redistance(pseudo, band_radius);
    field.rebuild_band();
    return field;
}

/// Image-derived terms of the speed, frozen once per image.
struct SpeedContext {
    SpeedParams params;
    Field g;       // edge stop
    Field g_dx, g_dy;
    Field mean_ratio;  // local-mean force field (see SpeedParams::literal_mean_ratio)
    Field skew_norm;
    double max_grad_g = 0.0;

    double stability_bound() const {
        const double denom = 4.0 * params.epsilon + params.nu + params.beta * max_grad_g + params.theta;
        return denom <= 0.0 ? kInfTime : 0.5 / denom;
    }
};

inline SpeedContext make_speed_context(const GrayImage& img, const SpeedParams& params,
                                       const BinaryMask* domain = nullptr) {
    params.validate();
    SpeedContext ctx;
    ctx.params = params;
    ctx.g = edge_stop_field(img);
    ctx.g_dx = Field(img.width(), img.height());
    ctx.g_dy = Field(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            ctx.g_dx(x, y) = diff_x(ctx.g, x, y);
            ctx.g_dy(x, y) = diff_y(ctx.g, x, y);
            ctx.max_grad_g = std::max(
                ctx.max_grad_g, std::hypot(ctx.g_dx(x, y), ctx.g_dy(x, y)));
        }
    int max_gray = 0;
    double domain_sum = 0.0;
    std::size_t domain_n = 0;
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            max_gray = std::max(max_gray, static_cast<int>(img(x, y)));
            if (domain && !(*domain)(x, y)) continue;
            domain_sum += img(x, y);
            ++domain_n;
        }
    const double domain_mean_ratio =
        (max_gray > 0 && domain_n > 0) ? domain_sum / domain_n / max_gray : 0.0;
    ctx.mean_ratio = Field(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            const double ratio = max_gray > 0 ? local_mean(img, x, y) / max_gray : 0.0;
            ctx.mean_ratio(x, y) =
                params.literal_mean_ratio ? ratio : ratio - domain_mean_ratio;
        }
    ctx.skew_norm = skew_centred_normal_field(img, params.literal_skew);
    return ctx;
}

namespace detail {

// border-replicated sample
inline double phi_at(const Field& phi, int x, int y) {
    x = std::clamp(x, 0, phi.width() - 1);
    y = std::clamp(y, 0, phi.height() - 1);
    return phi(x, y);
}

}  // namespace detail

/// Mean curvature div(grad phi / |grad phi|) by central differences, clamped
/// to +-1 (one over the cell size).
inline double curvature(const Field& phi, int x, int y) {
    using detail::phi_at;
    const double px = 0.5 * (phi_at(phi, x + 1, y) - phi_at(phi, x - 1, y));
    const double py = 0.5 * (phi_at(phi, x, y + 1) - phi_at(phi, x, y - 1));
    const double pxx = phi_at(phi, x + 1, y) - 2.0 * phi_at(phi, x, y) + phi_at(phi, x - 1, y);
    const double pyy = phi_at(phi, x, y + 1) - 2.0 * phi_at(phi, x, y) + phi_at(phi, x, y - 1);
    const double pxy = 0.25 * (phi_at(phi, x + 1, y + 1) - phi_at(phi, x - 1, y + 1) -
                               phi_at(phi, x + 1, y - 1) + phi_at(phi, x - 1, y - 1));
    const double norm_sq = px * px + py * py;
    if (norm_sq < 1e-12) return 0.0;
    const double kappa =
        (pxx * py * py - 2.0 * px * py * pxy + pyy * px * px) / std::pow(norm_sq, 1.5);
    return std::clamp(kappa, -1.0, 1.0);
}

/// One explicit Euler sweep over the band:
///   phi_t = eps*g*|grad phi|*kappa
///         + beta*(grad g . grad phi)  -  beta*Moy/Max
///         + nu-term (Godunov upwind, outward by default)
///         - theta*SkewCentredNormal
/// The beta advection carries the edge-attraction sign (front pulled into
/// the minima of g from both sides); with the opposite sign edges repel the
/// front and nothing blocks it.  Cells outside the band are copied bitwise.
inline LevelSetField evolve_step(const LevelSetField& field, const SpeedContext& ctx) {
    if (field.band_width < 3.0) throw config_error("band width must be at least 3 cells");
    const double bound = ctx.stability_bound();
    if (field.time_step > bound * (1.0 + 1e-12))
        throw config_error("time step violates the stability bound");

    const Field& phi = field.phi;
    const int w = phi.width();
    LevelSetField next = field;
    using detail::phi_at;

    for (std::int32_t i : field.band) {
        const int x = i % w, y = i / w;
        const double here = phi(x, y);

        const double dxm = here - phi_at(phi, x - 1, y);
        const double dxp = phi_at(phi, x + 1, y) - here;
        const double dym = here - phi_at(phi, x, y - 1);
        const double dyp = phi_at(phi, x, y + 1) - here;
        const double px = 0.5 * (phi_at(phi, x + 1, y) - phi_at(phi, x - 1, y));
        const double py = 0.5 * (phi_at(phi, x, y + 1) - phi_at(phi, x, y - 1));
        const double central_norm = std::sqrt(px * px + py * py);

        double dphi = 0.0;

        if (ctx.params.epsilon > 0.0)
            dphi += ctx.params.epsilon * ctx.g(x, y) * central_norm * curvature(phi, x, y);

        if (ctx.params.beta > 0.0) {
            // edge attraction: advect phi toward the minima of g so the
            // front is pulled into intensity edges from both sides; the
            // local-mean field is a plain scalar source
            const double vx = -ctx.params.beta * ctx.g_dx(x, y);
            const double vy = -ctx.params.beta * ctx.g_dy(x, y);
            dphi -= vx * (vx > 0.0 ? dxm : dxp);
            dphi -= vy * (vy > 0.0 ? dym : dyp);
            dphi -= ctx.params.beta * ctx.mean_ratio(x, y);
        }

        if (ctx.params.nu > 0.0) {
            const double a = ctx.params.nu * ctx.g(x, y);
            if (ctx.params.nu_outward) {
                const double up = std::sqrt(std::max(dxm, 0.0) * std::max(dxm, 0.0) +
                                            std::min(dxp, 0.0) * std::min(dxp, 0.0) +
                                            std::max(dym, 0.0) * std::max(dym, 0.0) +
                                            std::min(dyp, 0.0) * std::min(dyp, 0.0));
                dphi -= a * up;
            } else {
                const double dn = std::sqrt(std::min(dxm, 0.0) * std::min(dxm, 0.0) +
                                            std::max(dxp, 0.0) * std::max(dxp, 0.0) +
                                            std::min(dym, 0.0) * std::min(dym, 0.0) +
                                            std::max(dyp, 0.0) * std::max(dyp, 0.0));
                dphi += a * dn;
            }
        }

        if (ctx.params.theta > 0.0) dphi -= ctx.params.theta * ctx.skew_norm(x, y);

        next.phi.cells()[static_cast<std::size_t>(i)] = here + field.time_step * dphi;
    }
    return next;
}

inline LevelSetField evolve_step(const LevelSetField& field, const GrayImage& img,
                                 const SpeedParams& params) {
    return evolve_step(field, make_speed_context(img, params));
}

/// Fast-marching redistancing of phi to a signed distance function within
/// the band; the zero crossing moves by less than half a cell.
inline LevelSetField reinitialize(const LevelSetField& field) {
    LevelSetField next = field;
    next.phi = redistance(field.phi, field.band_width);
    next.rebuild_band();
    return next;
}

struct Schedule {
    int max_iterations = 300;
    int reinit_period = 10;
    // Convergence when the mean per-sweep fraction of band cells flipping
    // sign stays under this value across one reinit period.  A single-sweep
    // test would stop prematurely: the CFL bound keeps the front well under
    // one cell per sweep, so individual sweeps routinely flip nothing while
    // the front is still moving.
    double convergence_fraction = 1e-3;
    double band_width = 6.0;
    double time_step = 0.0;  // 0 picks 0.9x the stability bound
    double seed_top_fraction = 0.05;
    double t0_quantile = 0.01;

    void validate() const {
        if (max_iterations < 1) throw config_error("max_iterations must be positive");
        if (reinit_period < 1) throw config_error("reinit_period must be positive");
        if (band_width < 3.0) throw config_error("band width must be at least 3 cells");
        if (!(convergence_fraction >= 0.0)) throw config_error("bad convergence fraction");
        if (!(seed_top_fraction >= 0.0 && seed_top_fraction <= 1.0))
            throw config_error("seed fraction must lie in [0, 1]");
        if (!(t0_quantile >= 0.0 && t0_quantile <= 1.0))
            throw config_error("t0 quantile must lie in [0, 1]");
        if (time_step < 0.0) throw config_error("time step must be non-negative");
    }
};

/// Interior labels and contour of the converged front.
struct DetectedRegions {
    LabelMap regions;
    std::vector<Pixel> contour;
    bool converged = false;
    bool degenerate = false;
    int iterations = 0;
};

namespace detail {

inline DetectedRegions extract_regions(const Field& phi, bool converged, bool degenerate,
                                       int iterations) {
    const int w = phi.width(), h = phi.height();
    BinaryMask interior(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) interior.set(x, y, phi(x, y) < 0.0);

    DetectedRegions out{label_components(interior), {}, converged, degenerate, iterations};
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (phi(x, y) >= 0.0) continue;
            const bool edge = (x > 0 && phi(x - 1, y) >= 0.0) || (x + 1 < w && phi(x + 1, y) >= 0.0) ||
                              (y > 0 && phi(x, y - 1) >= 0.0) || (y + 1 < h && phi(x, y + 1) >= 0.0);
            if (edge) out.contour.push_back({x, y});
        }
    return out;
}

}  // namespace detail

/// Full detection pass: seed at the brightest stratum, fast-march arrival
/// times, build the initial band, then evolve with periodic redistancing
/// until the sign-flip fraction drops under the schedule's threshold.
/// Topology is free to split; each interior component becomes one region.
inline DetectedRegions detect(const GrayImage& img, const SpeedParams& params,
                              const Schedule& schedule, const BinaryMask* mask = nullptr) {
    params.validate();
    schedule.validate();

    const std::vector<Pixel> seeds = seed_points(img, schedule.seed_top_fraction, mask);
    if (seeds.empty()) throw degenerate_input("no seed pixels available");
    if (seeds.size() == img.size()) {
        // uniform image: the front has nowhere to go
        Field all_in(img.width(), img.height(), -(schedule.band_width + 1.0));
        return detail::extract_regions(all_in, true, true, 0);
    }

    const ArrivalField arrival = fast_march(img, seeds, params);
    const double t0 = arrival_quantile(arrival, schedule.t0_quantile);
    const SpeedContext ctx = make_speed_context(img, params, mask);
    const double dt =
        schedule.time_step > 0.0 ? schedule.time_step : 0.9 * ctx.stability_bound();

    LevelSetField field = init_phi(arrival, t0, schedule.band_width, dt);
    if (field.band.empty())
        return detail::extract_regions(field.phi, true, true, 0);

    bool converged = false;
    int it = 0;
    std::vector<double> recent_flips;
    while (it < schedule.max_iterations) {
        ++it;
        LevelSetField next = evolve_step(field, ctx);
        std::size_t flips = 0;
        for (std::int32_t i : field.band) {
            const std::size_t k = static_cast<std::size_t>(i);
            if ((field.phi.cells()[k] < 0.0) != (next.phi.cells()[k] < 0.0)) ++flips;
        }
        recent_flips.push_back(static_cast<double>(flips) /
                               static_cast<double>(field.band.size()));
        if (recent_flips.size() > static_cast<std::size_t>(schedule.reinit_period))
            recent_flips.erase(recent_flips.begin());
        field = std::move(next);
        if (it % schedule.reinit_period == 0) {
            try {
                field = reinitialize(field);
            } catch (const degenerate_input&) {
                break;  // front vanished or filled the grid
            }
        }
        if (recent_flips.size() == static_cast<std::size_t>(schedule.reinit_period)) {
            double mean = 0.0;
            for (double f : recent_flips) mean += f;
            mean /= static_cast<double>(recent_flips.size());
            if (mean < schedule.convergence_fraction) {
                converged = true;
                break;
            }
        }
    }
    return detail::extract_regions(field.phi, converged, false, it);
}

}  // namespace mseg

#endif  // MSEG_LEVELSET_HPP
