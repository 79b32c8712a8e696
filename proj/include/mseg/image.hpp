#ifndef MSEG_IMAGE_HPP
#define MSEG_IMAGE_HPP

#include <cassert>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mseg {

/// File/stream level failures (missing file, unwritable destination).
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed content in an otherwise readable file.
class format_error : public std::runtime_error {
public:
    explicit format_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Input is structurally valid but carries no usable signal
/// (constant image, empty mask, empty region set, ...).
class degenerate_input : public std::runtime_error {
public:
    explicit degenerate_input(const std::string& msg) : std::runtime_error(msg) {}
};

/// Rejected parameter combination (unstable time step, bad weights, ...).
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct Pixel {
    int x = 0;  // column
    int y = 0;  // row
    bool operator==(const Pixel&) const = default;
};

/// Rectangular grid of arbitrary cell type, row-major, top-left origin.
/// x indexes columns, y indexes rows; every raster in the library follows
/// this convention.
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(int width, int height, T fill = T{})
        : width_(width), height_(height),
          cells_(static_cast<std::size_t>(width) * height, fill) {
        if (width < 1 || height < 1)
            throw config_error("grid dimensions must be positive");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return cells_.size(); }

    bool contains(int x, int y) const {
        return x >= 0 && x < width_ && y >= 0 && y < height_;
    }

    T& operator()(int x, int y) {
        assert(contains(x, y));
        return cells_[static_cast<std::size_t>(y) * width_ + x];
    }
    const T& operator()(int x, int y) const {
        assert(contains(x, y));
        return cells_[static_cast<std::size_t>(y) * width_ + x];
    }

    T& at(int x, int y) {
        if (!contains(x, y)) throw std::out_of_range("grid index out of range");
        return (*this)(x, y);
    }
    const T& at(int x, int y) const {
        if (!contains(x, y)) throw std::out_of_range("grid index out of range");
        return (*this)(x, y);
    }

    std::vector<T>& cells() { return cells_; }
    const std::vector<T>& cells() const { return cells_; }

    void fill(T value) { cells_.assign(cells_.size(), value); }

    bool operator==(const Grid&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> cells_;
};

using Field = Grid<double>;

/// Grayscale raster with an explicit intensity ceiling.  Values are stored
/// as 16-bit integers; max_value mirrors the netpbm header field and bounds
/// every sample.
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(int width, int height, int max_value, std::uint16_t fill = 0)
        : pixels_(width, height, fill), max_value_(max_value) {
        if (max_value < 1 || max_value > 65535)
            throw config_error("max_value out of range [1, 65535]");
        if (fill > max_value)
            throw config_error("fill value exceeds max_value");
    }
    GrayImage(int width, int height, int max_value, std::vector<std::uint16_t> data)
        : GrayImage(width, height, max_value) {
        if (data.size() != pixels_.size())
            throw config_error("pixel count does not match dimensions");
        for (std::uint16_t v : data)
            if (v > max_value)
                throw config_error("pixel value exceeds max_value");
        pixels_.cells() = std::move(data);
    }

    int width() const { return pixels_.width(); }
    int height() const { return pixels_.height(); }
    int max_value() const { return max_value_; }
    std::size_t size() const { return pixels_.size(); }
    bool contains(int x, int y) const { return pixels_.contains(x, y); }

    std::uint16_t operator()(int x, int y) const { return pixels_(x, y); }
    std::uint16_t& operator()(int x, int y) { return pixels_(x, y); }
    std::uint16_t at(int x, int y) const { return pixels_.at(x, y); }

    std::vector<std::uint16_t>& data() { return pixels_.cells(); }
    const std::vector<std::uint16_t>& data() const { return pixels_.cells(); }

    bool operator==(const GrayImage&) const = default;

private:
    Grid<std::uint16_t> pixels_;
    int max_value_ = 255;
};

/// One boolean per pixel; true marks foreground.
class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int width, int height, bool fill = false)
        : bits_(width, height, fill ? std::uint8_t{1} : std::uint8_t{0}) {}

    int width() const { return bits_.width(); }
    int height() const { return bits_.height(); }
    std::size_t size() const { return bits_.size(); }
    bool contains(int x, int y) const { return bits_.contains(x, y); }

    bool operator()(int x, int y) const { return bits_(x, y) != 0; }
    void set(int x, int y, bool value) { bits_(x, y) = value ? 1 : 0; }

    std::size_t count() const {
        std::size_t n = 0;
        for (std::uint8_t b : bits_.cells()) n += b;
        return n;
    }

    bool operator==(const BinaryMask&) const = default;

private:
    Grid<std::uint8_t> bits_;
};

/// Connected-component labelling result.  Label 0 is background; foreground
/// labels form the contiguous set {1..label_count}.
struct LabelMap {
    Grid<std::int32_t> labels;
    int label_count = 0;

    int width() const { return labels.width(); }
    int height() const { return labels.height(); }
    std::int32_t operator()(int x, int y) const { return labels(x, y); }
};

/// 8-bit RGB raster used for rendered diagnostics.
class OverlayImage {
public:
    OverlayImage() = default;
    OverlayImage(int width, int height)
        : width_(width), height_(height),
          rgb_(static_cast<std::size_t>(width) * height * 3, 0) {
        if (width < 1 || height < 1)
            throw config_error("overlay dimensions must be positive");
    }

    int width() const { return width_; }
    int height() const { return height_; }

    void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * 3;
        rgb_[i] = r;
        rgb_[i + 1] = g;
        rgb_[i + 2] = b;
    }
    std::uint8_t red(int x, int y) const { return channel(x, y, 0); }
    std::uint8_t green(int x, int y) const { return channel(x, y, 1); }
    std::uint8_t blue(int x, int y) const { return channel(x, y, 2); }

    const std::vector<std::uint8_t>& bytes() const { return rgb_; }

    bool operator==(const OverlayImage&) const = default;

private:
    std::uint8_t channel(int x, int y, int c) const {
        assert(x >= 0 && x < width_ && y >= 0 && y < height_);
        return rgb_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c];
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> rgb_;
};

}  // namespace mseg

#endif  // MSEG_IMAGE_HPP
