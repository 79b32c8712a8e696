#ifndef MSEG_COMPONENTS_HPP
#define MSEG_COMPONENTS_HPP

#include <cstdint>
#include <numeric>
#include <vector>

#include "mseg/image.hpp"

namespace mseg {

namespace detail {

class UnionFind {
public:
    std::int32_t make() {
        parent_.push_back(static_cast<std::int32_t>(parent_.size()));
        return parent_.back();
    }
    std::int32_t find(std::int32_t a) {
        while (parent_[a] != a) {
            parent_[a] = parent_[parent_[a]];
            a = parent_[a];
        }
        return a;
    }
    void merge(std::int32_t a, std::int32_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[b < a ? a : b] = b < a ? b : a;  // smaller id becomes root
    }

private:
    std::vector<std::int32_t> parent_;
};

}  // namespace detail

/// Two-pass 8-connectivity labelling.  Foreground labels are dense from 1
/// in row-major first-encounter order.
inline LabelMap label_components(const BinaryMask& mask) {
    const int w = mask.width();
    const int h = mask.height();
    LabelMap out{Grid<std::int32_t>(w, h, 0), 0};

    detail::UnionFind uf;
    std::vector<std::int32_t> provisional(static_cast<std::size_t>(w) * h, -1);
    auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * w + x; };

    // pass 1: assign provisional labels, record equivalences with the four
    // already-visited 8-neighbours (W, NW, N, NE)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask(x, y)) continue;
            std::int32_t label = -1;
            const int nbr[4][2] = {{x - 1, y}, {x - 1, y - 1}, {x, y - 1}, {x + 1, y - 1}};
            for (const auto& n : nbr) {
                if (n[0] < 0 || n[0] >= w || n[1] < 0) continue;
                if (!mask(n[0], n[1])) continue;
                const std::int32_t other = provisional[idx(n[0], n[1])];
                if (label < 0)
                    label = other;
                else
                    uf.merge(label, other);
            }
            if (label < 0) label = uf.make();
            provisional[idx(x, y)] = label;
        }
    }

    // pass 2: compress and renumber roots in row-major first-encounter order
    std::vector<std::int32_t> dense;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask(x, y)) continue;
            const std::int32_t root = uf.find(provisional[idx(x, y)]);
            if (static_cast<std::size_t>(root) >= dense.size()) dense.resize(root + 1, 0);
            if (dense[root] == 0) dense[root] = ++out.label_count;
            out.labels(x, y) = dense[root];
        }
    }
    return out;
}

/// Pixel count per label; index 0 is the background count.
inline std::vector<std::size_t> label_areas(const LabelMap& map) {
    std::vector<std::size_t> areas(static_cast<std::size_t>(map.label_count) + 1, 0);
    for (std::int32_t l : map.labels.cells()) ++areas[static_cast<std::size_t>(l)];
    return areas;
}

}  // namespace mseg

#endif  // MSEG_COMPONENTS_HPP
