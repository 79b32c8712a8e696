#ifndef MSEG_NETPBM_HPP
#define MSEG_NETPBM_HPP

#include <cctype>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mseg/image.hpp"

namespace mseg {

namespace detail {

// Reads the next header token, skipping whitespace and '#' comments.
inline std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) continue;
        tok.push_back(static_cast<char>(c));
        while ((c = in.peek()) != EOF && !std::isspace(c) && c != '#')
            tok.push_back(static_cast<char>(in.get()));
        return tok;
    }
    return tok;
}

inline int parse_header_int(std::istream& in, const char* what, int lo, int hi) {
    std::string tok = next_token(in);
    if (tok.empty()) throw format_error(std::string("pgm header truncated before ") + what);
    std::size_t pos = 0;
    long v = 0;
    try {
        v = std::stol(tok, &pos);
    } catch (const std::exception&) {
        throw format_error(std::string("pgm header: bad ") + what + " '" + tok + "'");
    }
    if (pos != tok.size() || v < lo || v > hi)
        throw format_error(std::string("pgm header: bad ") + what + " '" + tok + "'");
    return static_cast<int>(v);
}

}  // namespace detail

/// Reads a portable graymap, plain "P2" or binary "P5".  Multi-byte samples
/// are big-endian per the netpbm convention.
inline GrayImage read_pgm_stream(std::istream& in, const std::string& origin = "<stream>") {
    std::string magic = detail::next_token(in);
    if (magic != "P2" && magic != "P5")
        throw format_error(origin + ": not a portable graymap (magic '" + magic + "')");
    const int width = detail::parse_header_int(in, "width", 1, 1 << 20);
    const int height = detail::parse_header_int(in, "height", 1, 1 << 20);
    const int maxv = detail::parse_header_int(in, "max_value", 1, 65535);

    GrayImage img(width, height, maxv);
    const std::size_t n = img.size();
    if (magic == "P2") {
        for (std::size_t i = 0; i < n; ++i) {
            std::string tok = detail::next_token(in);
            if (tok.empty()) throw format_error(origin + ": truncated payload");
            long v;
            std::size_t pos = 0;
            try {
                v = std::stol(tok, &pos);
            } catch (const std::exception&) {
                throw format_error(origin + ": bad sample '" + tok + "'");
            }
            if (pos != tok.size() || v < 0)
                throw format_error(origin + ": bad sample '" + tok + "'");
            if (v > maxv)
                throw format_error(origin + ": sample exceeds declared max_value");
            img.data()[i] = static_cast<std::uint16_t>(v);
        }
    } else {
        // Exactly one whitespace byte separates the header from the payload.
        int sep = in.get();
        if (sep == EOF || !std::isspace(sep))
            throw format_error(origin + ": missing separator before binary payload");
        const int bytes_per = maxv > 255 ? 2 : 1;
        std::vector<char> buf(n * bytes_per);
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (static_cast<std::size_t>(in.gcount()) != buf.size())
            throw format_error(origin + ": truncated payload");
        for (std::size_t i = 0; i < n; ++i) {
            unsigned v;
            if (bytes_per == 1) {
                v = static_cast<unsigned char>(buf[i]);
            } else {
                v = (static_cast<unsigned>(static_cast<unsigned char>(buf[2 * i])) << 8) |
                    static_cast<unsigned>(static_cast<unsigned char>(buf[2 * i + 1]));
            }
            if (v > static_cast<unsigned>(maxv))
                throw format_error(origin + ": sample exceeds declared max_value");
            img.data()[i] = static_cast<std::uint16_t>(v);
        }
    }
    return img;
}

inline GrayImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path + "'");
    return read_pgm_stream(in, path);
}

enum class PgmVariant { Binary, Plain };

inline void write_pgm_stream(const GrayImage& img, std::ostream& out,
                             PgmVariant variant = PgmVariant::Binary) {
    if (variant == PgmVariant::Plain) {
        out << "P2\n" << img.width() << " " << img.height() << "\n" << img.max_value() << "\n";
        for (int y = 0; y < img.height(); ++y) {
            for (int x = 0; x < img.width(); ++x)
                out << img(x, y) << (x + 1 == img.width() ? '\n' : ' ');
        }
    } else {
        out << "P5\n" << img.width() << " " << img.height() << "\n" << img.max_value() << "\n";
        const bool wide = img.max_value() > 255;
        std::vector<char> buf;
        buf.reserve(img.size() * (wide ? 2 : 1));
        for (std::uint16_t v : img.data()) {
            if (wide) buf.push_back(static_cast<char>(v >> 8));
            buf.push_back(static_cast<char>(v & 0xff));
        }
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
    if (!out) throw io_error("pgm write failed");
}

inline void write_pgm(const GrayImage& img, const std::string& path,
                      PgmVariant variant = PgmVariant::Binary) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot write '" + path + "'");
    write_pgm_stream(img, out, variant);
}

/// Writes an 8-bit binary portable pixmap ("P6").
inline void write_ppm(const OverlayImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot write '" + path + "'");
    out << "P6\n" << img.width() << " " << img.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.bytes().data()),
              static_cast<std::streamsize>(img.bytes().size()));
    if (!out) throw io_error("ppm write failed");
}

struct OverlayBox {
    int x_min = 0, y_min = 0, x_max = 0, y_max = 0;
};

namespace detail {
inline std::uint8_t to_display(std::uint16_t v, int max_value) {
    // round(v * 255 / max_value); identity for 8-bit images
    return static_cast<std::uint8_t>((static_cast<unsigned>(v) * 255u + max_value / 2) /
                                     static_cast<unsigned>(max_value));
}
}  // namespace detail

/// Replicates the gray channel to RGB, paints contour pixels red and the box
/// perimeter green.  Pixels outside those sets are the plain gray replica.
inline OverlayImage render_overlay(const GrayImage& img, std::span<const Pixel> contour,
                                   std::optional<OverlayBox> box = std::nullopt) {
    OverlayImage out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            const std::uint8_t g = detail::to_display(img(x, y), img.max_value());
            out.set(x, y, g, g, g);
        }
    for (const Pixel& p : contour) {
        if (!img.contains(p.x, p.y))
            throw config_error("contour pixel outside image");
        out.set(p.x, p.y, 255, 0, 0);
    }
    if (box) {
        if (!img.contains(box->x_min, box->y_min) || !img.contains(box->x_max, box->y_max) ||
            box->x_min > box->x_max || box->y_min > box->y_max)
            throw config_error("overlay box outside image");
        for (int x = box->x_min; x <= box->x_max; ++x) {
            out.set(x, box->y_min, 0, 255, 0);
            out.set(x, box->y_max, 0, 255, 0);
        }
        for (int y = box->y_min; y <= box->y_max; ++y) {
            out.set(box->x_min, y, 0, 255, 0);
            out.set(box->x_max, y, 0, 255, 0);
        }
    }
    return out;
}

}  // namespace mseg

#endif  // MSEG_NETPBM_HPP
