#include "pcw/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "pcw/error.hpp"

namespace pcw {

namespace {

struct HeaderCursor {
    const std::string& bytes;
    const std::string& origin;
    std::size_t pos = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(origin + ": " + what, pos);
    }

    // Whitespace and '#' comments separate header tokens.
    void skip_separators() {
        while (pos < bytes.size()) {
            const char c = bytes[pos];
            if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos;
            } else if (c == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
    }

    std::size_t read_number(const char* name) {
        skip_separators();
        if (pos >= bytes.size() || !std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
            fail(std::string("expected ") + name);
        }
        std::size_t v = 0;
        while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
            v = v * 10 + static_cast<std::size_t>(bytes[pos] - '0');
            if (v > 1u << 24) fail(std::string(name) + " out of range");
            ++pos;
        }
        return v;
    }
};

}  // namespace

Image::Image(std::size_t w, std::size_t h, std::size_t c)
    : width(w), height(h), channels(c), pixels(w * h * c, 0.0) {
    check_contract(w > 0 && h > 0, "Image: empty dimensions");
    check_contract(c == 1 || c == 3, "Image: channels must be 1 or 3");
}

Image decode_pnm(const std::string& bytes, const std::string& origin) {
    HeaderCursor cur{bytes, origin};
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
        cur.fail("not a P5/P6 file");
    }
    const std::size_t channels = bytes[1] == '6' ? 3 : 1;
    cur.pos = 2;
    const std::size_t w = cur.read_number("width");
    const std::size_t h = cur.read_number("height");
    const std::size_t maxval = cur.read_number("maxval");
    if (w == 0 || h == 0) cur.fail("zero image dimensions");
    if (maxval != 255) cur.fail("maxval must be 255");
    if (cur.pos >= bytes.size() ||
        !std::isspace(static_cast<unsigned char>(bytes[cur.pos]))) {
        cur.fail("expected single whitespace before raster");
    }
    ++cur.pos;

    const std::size_t need = w * h * channels;
    if (bytes.size() - cur.pos < need) {
        throw ParseError(origin + ": raster truncated", bytes.size());
    }
    if (bytes.size() - cur.pos > need) {
        throw ParseError(origin + ": trailing bytes after raster", cur.pos + need);
    }

    Image img(w, h, channels);
    for (std::size_t i = 0; i < need; ++i) {
        img.pixels[i] = static_cast<unsigned char>(bytes[cur.pos + i]) / 255.0;
    }
    return img;
}

std::string encode_pnm(const Image& img) {
    check_contract(img.channels == 1 || img.channels == 3, "encode_pnm: channels must be 1 or 3");
    check_contract(img.pixels.size() == img.width * img.height * img.channels,
                   "encode_pnm: pixel buffer does not match dimensions");
    std::string out;
    out += img.channels == 3 ? "P6\n" : "P5\n";
    out += std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    out.reserve(out.size() + img.pixels.size());
    for (double v : img.pixels) {
        const double clamped = std::min(1.0, std::max(0.0, v));
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(clamped * 255.0))));
    }
    return out;
}

Image read_pnm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_pnm(bytes, path);
}

void write_pnm(const std::string& path, const Image& img) {
    const std::string bytes = encode_pnm(img);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot open " + path + " for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw ConfigError("short write to " + path);
}

Image to_grayscale(const Image& img) {
    if (img.channels == 1) return img;
    Image out(img.width, img.height, 1);
    for (std::size_t i = 0; i < img.width * img.height; ++i) {
        out.pixels[i] = 0.299 * img.pixels[3 * i] + 0.587 * img.pixels[3 * i + 1] +
                        0.114 * img.pixels[3 * i + 2];
    }
    return out;
}

Image resize_bilinear(const Image& img, std::size_t new_w, std::size_t new_h) {
    check_contract(new_w > 0 && new_h > 0, "resize_bilinear: empty target");
    if (new_w == img.width && new_h == img.height) return img;
    Image out(new_w, new_h, img.channels);
    const double sx = static_cast<double>(img.width) / static_cast<double>(new_w);
    const double sy = static_cast<double>(img.height) / static_cast<double>(new_h);
    for (std::size_t y = 0; y < new_h; ++y) {
        // Half-pixel centers: output pixel y samples source (y + 0.5)*sy - 0.5.
        const double fy = std::max(0.0, (static_cast<double>(y) + 0.5) * sy - 0.5);
        const std::size_t y0 = std::min(static_cast<std::size_t>(fy), img.height - 1);
        const std::size_t y1 = std::min(y0 + 1, img.height - 1);
        const double wy = fy - static_cast<double>(y0);
        for (std::size_t x = 0; x < new_w; ++x) {
            const double fx = std::max(0.0, (static_cast<double>(x) + 0.5) * sx - 0.5);
            const std::size_t x0 = std::min(static_cast<std::size_t>(fx), img.width - 1);
            const std::size_t x1 = std::min(x0 + 1, img.width - 1);
            const double wx = fx - static_cast<double>(x0);
            for (std::size_t c = 0; c < img.channels; ++c) {
                const double top = img.at(y0, x0, c) * (1.0 - wx) + img.at(y0, x1, c) * wx;
                const double bot = img.at(y1, x0, c) * (1.0 - wx) + img.at(y1, x1, c) * wx;
                out.at(y, x, c) = top * (1.0 - wy) + bot * wy;
            }
        }
    }
    return out;
}

Image crop_resize(const Image& img, double x0, double y0, double x1, double y1, std::size_t out_w,
                  std::size_t out_h) {
    check_contract(out_w > 0 && out_h > 0, "crop_resize: empty target");
    check_contract(x1 > x0 && y1 > y0, "crop_resize: empty source rectangle");
    Image out(out_w, out_h, img.channels);
    const double sx = (x1 - x0) / static_cast<double>(out_w);
    const double sy = (y1 - y0) / static_cast<double>(out_h);
    for (std::size_t y = 0; y < out_h; ++y) {
        const double fy =
            std::clamp(y0 + (static_cast<double>(y) + 0.5) * sy - 0.5, 0.0,
                       static_cast<double>(img.height - 1));
        const std::size_t iy0 = static_cast<std::size_t>(fy);
        const std::size_t iy1 = std::min(iy0 + 1, img.height - 1);
        const double wy = fy - static_cast<double>(iy0);
        for (std::size_t x = 0; x < out_w; ++x) {
            const double fx =
                std::clamp(x0 + (static_cast<double>(x) + 0.5) * sx - 0.5, 0.0,
                           static_cast<double>(img.width - 1));
            const std::size_t ix0 = static_cast<std::size_t>(fx);
            const std::size_t ix1 = std::min(ix0 + 1, img.width - 1);
            const double wx = fx - static_cast<double>(ix0);
            for (std::size_t c = 0; c < img.channels; ++c) {
                const double top = img.at(iy0, ix0, c) * (1.0 - wx) + img.at(iy0, ix1, c) * wx;
                const double bot = img.at(iy1, ix0, c) * (1.0 - wx) + img.at(iy1, ix1, c) * wx;
                out.at(y, x, c) = top * (1.0 - wy) + bot * wy;
            }
        }
    }
    return out;
}

Tensor image_to_tensor(const Image& img) {
    check_contract(img.channels == 1, "image_to_tensor: expected grayscale");
    return Tensor({1, img.height, img.width}, img.pixels);
}

Image tensor_to_image(const Tensor& t) {
    check_contract(t.rank() == 3 && t.dim(0) == 1, "tensor_to_image: expected [1,H,W]");
    Image img(t.dim(2), t.dim(1), 1);
    for (std::size_t i = 0; i < t.numel(); ++i) {
        img.pixels[i] = std::min(1.0, std::max(0.0, t[i]));
    }
    return img;
}

}  // namespace pcw
