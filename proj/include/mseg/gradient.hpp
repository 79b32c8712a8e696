#ifndef MSEG_GRADIENT_HPP
#define MSEG_GRADIENT_HPP

#include <cmath>

#include "mseg/image.hpp"

namespace mseg {

// Central differences inside, one-sided at the borders, unit cell size.
template <typename GridLike>
inline double diff_x(const GridLike& g, int x, int y) {
    const int w = g.width();
    if (w == 1) return 0.0;
    if (x == 0) return static_cast<double>(g(1, y)) - static_cast<double>(g(0, y));
    if (x == w - 1) return static_cast<double>(g(w - 1, y)) - static_cast<double>(g(w - 2, y));
    return 0.5 * (static_cast<double>(g(x + 1, y)) - static_cast<double>(g(x - 1, y)));
}

template <typename GridLike>
inline double diff_y(const GridLike& g, int x, int y) {
    const int h = g.height();
    if (h == 1) return 0.0;
    if (y == 0) return static_cast<double>(g(x, 1)) - static_cast<double>(g(x, 0));
    if (y == h - 1) return static_cast<double>(g(x, h - 1)) - static_cast<double>(g(x, h - 2));
    return 0.5 * (static_cast<double>(g(x, y + 1)) - static_cast<double>(g(x, y - 1)));
}

template <typename GridLike>
inline double gradient_norm(const GridLike& g, int x, int y) {
    const double gx = diff_x(g, x, y);
    const double gy = diff_y(g, x, y);
    return std::sqrt(gx * gx + gy * gy);
}

template <typename GridLike>
inline Field gradient_magnitude(const GridLike& g) {
    Field out(g.width(), g.height());
    for (int y = 0; y < g.height(); ++y)
        for (int x = 0; x < g.width(); ++x)
            out(x, y) = gradient_norm(g, x, y);
    return out;
}

}  // namespace mseg

#endif  // MSEG_GRADIENT_HPP
