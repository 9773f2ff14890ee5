#ifndef PSF_SRC_PIXELMATH_HPP
#define PSF_SRC_PIXELMATH_HPP

// Internal float-image helpers shared by the manipulation and print-scan
// pipelines. Values are carried in planar double buffers and quantized once
// at the end of each public operation (round half away from zero, clamp).

#include <cmath>
#include <cstdint>
#include <vector>

#include "psf/image.hpp"

namespace psf::detail {

inline int round_half_away(double x) {
    return static_cast<int>(x >= 0.0 ? std::floor(x + 0.5) : std::ceil(x - 0.5));
}

inline std::uint8_t quantize_u8(double x) {
    const int v = round_half_away(x);
    if (v < 0) return 0;
    if (v > 255) return 255;
    return static_cast<std::uint8_t>(v);
}

// Mirror about the edge, edge sample included: -1 -> 0, N -> N-1.
inline int reflect_index(int idx, int n) {
    if (n <= 1) return 0;
    while (idx < 0 || idx >= n) {
        if (idx < 0) idx = -idx - 1;
        else idx = 2 * n - idx - 1;
    }
    return idx;
}

inline int clamp_index(int idx, int n) {
    if (idx < 0) return 0;
    if (idx >= n) return n - 1;
    return idx;
}

// Planar image, one contiguous h*w buffer per channel.
struct FloatImage {
    int height = 0;
    int width = 0;
    std::vector<std::vector<double>> planes;

    FloatImage() = default;
    FloatImage(int h, int w, int channels)
        : height(h), width(w),
          planes(channels, std::vector<double>(static_cast<std::size_t>(h) * w, 0.0)) {}

    int channels() const { return static_cast<int>(planes.size()); }
    double& at(int ch, int r, int c) {
        return planes[ch][static_cast<std::size_t>(r) * width + c];
    }
    double at(int ch, int r, int c) const {
        return planes[ch][static_cast<std::size_t>(r) * width + c];
    }
};

inline FloatImage to_float(const imaging::ImageBuffer& img) {
    FloatImage out(img.height, img.width, img.channels);
    const std::size_t n = static_cast<std::size_t>(img.height) * img.width;
    for (int ch = 0; ch < img.channels; ++ch)
        for (std::size_t i = 0; i < n; ++i)
            out.planes[ch][i] = img.data[i * img.channels + ch];
    return out;
}

inline imaging::ImageBuffer to_u8(const FloatImage& img) {
    imaging::ImageBuffer out(img.height, img.width, img.channels());
    const std::size_t n = static_cast<std::size_t>(img.height) * img.width;
    for (int ch = 0; ch < img.channels(); ++ch)
        for (std::size_t i = 0; i < n; ++i)
            out.data[i * img.channels() + ch] = quantize_u8(img.planes[ch][i]);
    return out;
}

// 2-D convolution with a row-major size x size kernel, mirrored borders.
void convolve_reflect(FloatImage& img, const std::vector<double>& kernel, int size);

// Bilinear resize with half-pixel-center coordinates, clamped sampling.
FloatImage resize_bilinear(const FloatImage& img, int out_h, int out_w);

} // namespace psf::detail

#endif
