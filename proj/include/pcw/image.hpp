#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcw/tensor.hpp"

namespace pcw {

// Interleaved row-major raster with values in [0,1]. One channel is
// grayscale, three is RGB; nothing else is allowed.
struct Image {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = 1;
    std::vector<double> pixels;

    Image() = default;
    Image(std::size_t w, std::size_t h, std::size_t c);

    double at(std::size_t y, std::size_t x, std::size_t c = 0) const {
        return pixels[(y * width + x) * channels + c];
    }
    double& at(std::size_t y, std::size_t x, std::size_t c = 0) {
        return pixels[(y * width + x) * channels + c];
    }
};

// Binary PGM (P5) / PPM (P6), 8-bit, maxval 255. Reading accepts '#' comments
// in the header and reports malformed input as ParseError with the byte
// offset. Writing picks P5 for one channel and P6 for three; values are
// rounded to the nearest of 256 levels.
Image read_pnm(const std::string& path);
void write_pnm(const std::string& path, const Image& img);

// In-memory equivalents, used by the readers/writers and handy in tests.
Image decode_pnm(const std::string& bytes, const std::string& origin);
std::string encode_pnm(const Image& img);

// 0.299 R + 0.587 G + 0.114 B; grayscale input passes through unchanged.
Image to_grayscale(const Image& img);

// Bilinear resampling with half-pixel centers and edge clamping.
Image resize_bilinear(const Image& img, std::size_t new_w, std::size_t new_h);

// Bilinear crop of the (possibly fractional) source rectangle [x0,x1)x[y0,y1)
// into an out_w x out_h raster. The rectangle may poke past the frame; samples
// clamp to the border.
Image crop_resize(const Image& img, double x0, double y0, double x1, double y1, std::size_t out_w,
                  std::size_t out_h);

// Grayscale image <-> [1,H,W] tensor. tensor_to_image clamps to [0,1].
Tensor image_to_tensor(const Image& img);
Image tensor_to_image(const Tensor& t);

}  // namespace pcw
