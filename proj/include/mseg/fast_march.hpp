#ifndef MSEG_FAST_MARCH_HPP
#define MSEG_FAST_MARCH_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <span>
#include <utility>
#include <vector>

#include "mseg/gradient.hpp"
#include "mseg/image.hpp"

namespace mseg {

/// Per-pixel front arrival time; +infinity marks unreached cells.
using ArrivalField = Field;

constexpr double kInfTime = std::numeric_limits<double>::infinity();

namespace detail {

// One-sided upwind update from the smaller accepted neighbour per axis.
// Solves (T-a)^2 + (T-b)^2 = f^2 when both axes contribute.
inline double upwind_solve(double a, double b, double f) {
    if (a > b) std::swap(a, b);
    if (b == kInfTime || b - a >= f) return a + f;
    const double disc = 2.0 * f * f - (b - a) * (b - a);
    return 0.5 * (a + b + std::sqrt(disc));
}

struct HeapEntry {
    double t;
    std::int32_t index;
    bool operator>(const HeapEntry& o) const { return t > o.t; }
};

}  // namespace detail

/// First-order fast marching solve of |grad T| * F = 1 over an explicit
/// speed field.  Seeds start at T = 0 (or the caller-provided times) and
/// cells are accepted exactly once in non-decreasing T order.
///
/// seed_times, when given, must parallel seeds.  stop_time truncates the
/// march; cells beyond it stay at +infinity.  accepted_trace, when non-null,
/// receives the accepted T values in acceptance order.
inline ArrivalField fast_march_speed(const Field& speed, std::span<const Pixel> seeds,
                                     std::span<const double> seed_times = {},
                                     double stop_time = kInfTime,
                                     std::vector<double>* accepted_trace = nullptr) {
    const int w = speed.width();
    const int h = speed.height();
    if (seeds.empty()) throw degenerate_input("fast march requires at least one seed");
    if (!seed_times.empty() && seed_times.size() != seeds.size())
        throw config_error("seed_times must parallel seeds");
    for (double f : speed.cells())
        if (!(f > 0.0)) throw config_error("fast march speed must be strictly positive");

    ArrivalField t(w, h, kInfTime);
    std::vector<std::uint8_t> accepted(t.size(), 0);
    std::priority_queue<detail::HeapEntry, std::vector<detail::HeapEntry>, std::greater<>> heap;

    auto idx = [w](int x, int y) { return y * w + x; };
    for (std::size_t s = 0; s < seeds.size(); ++s) {
        const Pixel p = seeds[s];
        if (!t.contains(p.x, p.y)) throw config_error("seed outside grid");
        const double t0 = seed_times.empty() ? 0.0 : seed_times[s];
        if (t0 < t(p.x, p.y)) {
            t(p.x, p.y) = t0;
            heap.push({t0, idx(p.x, p.y)});
        }
    }

    const int dx[4] = {1, -1, 0, 0};
    const int dy[4] = {0, 0, 1, -1};
    while (!heap.empty()) {
        const auto [tv, i] = heap.top();
        heap.pop();
        if (accepted[i]) continue;  // stale entry
        if (tv > stop_time) break;
        accepted[i] = 1;
        if (accepted_trace) accepted_trace->push_back(tv);
        const int x = i % w, y = i / w;
        for (int k = 0; k < 4; ++k) {
            const int nx = x + dx[k], ny = y + dy[k];
            if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
            if (accepted[idx(nx, ny)]) continue;
            double ax = kInfTime, ay = kInfTime;
            if (nx > 0 && accepted[idx(nx - 1, ny)]) ax = t(nx - 1, ny);
            if (nx + 1 < w && accepted[idx(nx + 1, ny)]) ax = std::min(ax, t(nx + 1, ny));
            if (ny > 0 && accepted[idx(nx, ny - 1)]) ay = t(nx, ny - 1);
            if (ny + 1 < h && accepted[idx(nx, ny + 1)]) ay = std::min(ay, t(nx, ny + 1));
            const double cand = detail::upwind_solve(ax, ay, 1.0 / speed(nx, ny));
            if (cand < t(nx, ny)) {
                t(nx, ny) = cand;
                heap.push({cand, idx(nx, ny)});
            }
        }
    }
    return t;
}

/// Signed distance to the zero crossing of phi, clamped beyond band_radius.
/// The crossing location is taken from linear interpolation along grid
/// edges, so the zero set moves by less than half a cell.  Cells farther
/// than band_radius from the interface receive +-(band_radius + 1).
inline Field redistance(const Field& phi, double band_radius) {
    const int w = phi.width();
    const int h = phi.height();
    const double far_value = band_radius + 1.0;

    auto inside = [&](int x, int y) { return phi(x, y) < 0.0; };

    // interface cells seeded with their interpolated distance to the crossing
    std::vector<Pixel> pos_seeds, neg_seeds;
    std::vector<double> pos_d, neg_d;
    const int dx[4] = {1, -1, 0, 0};
    const int dy[4] = {0, 0, 1, -1};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double tx = kInfTime, ty = kInfTime;
            for (int k = 0; k < 4; ++k) {
                const int nx = x + dx[k], ny = y + dy[k];
                if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                // a neighbour holding an exact zero is a crossing even though
                // it counts as outside
                const bool crosses = inside(nx, ny) != inside(x, y) ||
                                     (phi(nx, ny) == 0.0 && phi(x, y) != 0.0);
                if (!crosses) continue;
                const double denom = phi(x, y) - phi(nx, ny);
                const double theta = denom == 0.0 ? 0.0 : phi(x, y) / denom;
                if (k < 2)
                    tx = std::min(tx, theta);
                else
                    ty = std::min(ty, theta);
            }
            if (tx == kInfTime && ty == kInfTime) continue;
            double d;
            if (tx == 0.0 || ty == 0.0) {
                d = 0.0;
            } else {
                double inv = 0.0;
                if (tx < kInfTime) inv += 1.0 / (tx * tx);
                if (ty < kInfTime) inv += 1.0 / (ty * ty);
                d = 1.0 / std::sqrt(inv);
            }
            if (inside(x, y)) {
                neg_seeds.push_back({x, y});
                neg_d.push_back(d);
            } else {
                pos_seeds.push_back({x, y});
                pos_d.push_back(d);
            }
        }
    }
    if (pos_seeds.empty() && neg_seeds.empty())
        throw degenerate_input("redistance requires a sign change in phi");

    // march each side separately; an artificial wall of non-positive speed is
    // not possible, so restrict by overwriting only same-side cells
    Field unit_speed(w, h, 1.0);
    Field out(w, h, 0.0);

    // Seeds whose crossing sits nearby anchor the zero set and stay frozen
    // through the relaxation below.  A seed whose only crossing lies at the
    // far lattice point (theta near 1) is a poor estimate on curved fronts;
    // it still seeds the march but may be refined.  Every crossing edge keeps
    // a frozen endpoint (theta <= 0.5 on one side), so the interface cannot
    // drift.
    std::vector<std::uint8_t> frozen(static_cast<std::size_t>(w) * h, 0);
    for (std::size_t k = 0; k < pos_seeds.size(); ++k)
        if (pos_d[k] < 0.9)
            frozen[static_cast<std::size_t>(pos_seeds[k].y) * w + pos_seeds[k].x] = 1;
    for (std::size_t k = 0; k < neg_seeds.size(); ++k)
        if (neg_d[k] < 0.9)
            frozen[static_cast<std::size_t>(neg_seeds[k].y) * w + neg_seeds[k].x] = 1;

    for (int side = 0; side < 2; ++side) {
        const bool want_inside = side == 1;
        const auto& seeds = want_inside ? neg_seeds : pos_seeds;
        const auto& seed_d = want_inside ? neg_d : pos_d;
        const double sign = want_inside ? -1.0 : 1.0;
        Field dist(w, h, kInfTime);
        if (!seeds.empty())
            dist = fast_march_speed(unit_speed, seeds, seed_d, band_radius + 1.0);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                if (inside(x, y) != want_inside) continue;
                out(x, y) = sign * std::min(dist(x, y), far_value);
            }
    }

    // The first-order march overshoots by O(0.2) cells along diagonals.
    // A few sign-frozen relaxation sweeps of phi_t = sign(phi)(1 - |grad phi|)
    // pull the gradient norm back to 1; interface cells stay pinned so the
    // zero crossing cannot move.
    const double dtau = 0.3;
    for (int sweep = 0; sweep < 8; ++sweep) {
        Field next = out;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                if (frozen[i]) continue;
                const double here = out(x, y);
                if (std::abs(here) > band_radius) continue;
                const double s = here < 0.0 ? -1.0 : 1.0;
                const double dxm = here - (x > 0 ? out(x - 1, y) : here);
                const double dxp = (x + 1 < w ? out(x + 1, y) : here) - here;
                const double dym = here - (y > 0 ? out(x, y - 1) : here);
                const double dyp = (y + 1 < h ? out(x, y + 1) : here) - here;
                double gx, gy;
                if (s > 0.0) {
                    gx = std::max(std::max(dxm, 0.0), -std::min(dxp, 0.0));
                    gy = std::max(std::max(dym, 0.0), -std::min(dyp, 0.0));
                } else {
                    gx = std::max(-std::min(dxm, 0.0), std::max(dxp, 0.0));
                    gy = std::max(-std::min(dym, 0.0), std::max(dyp, 0.0));
                }
                const double g = std::sqrt(gx * gx + gy * gy);
                double v = here - dtau * s * (g - 1.0);
                // relaxation must not flip the side of a non-interface cell
                if (s > 0.0)
                    v = std::max(v, 1e-12);
                else
                    v = std::min(v, -1e-12);
                next(x, y) = s * std::min(std::abs(v), far_value);
            }
        out = std::move(next);
    }
    return out;
}

}  // namespace mseg

#endif  // MSEG_FAST_MARCH_HPP
