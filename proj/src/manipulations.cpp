#include "psf/manipulations.hpp"

#include <algorithm>
#include <cmath>

#include "pixelmath.hpp"
#include "psf/error.hpp"
#include "psf/rng.hpp"

namespace psf::manip {

using detail::FloatImage;

const char* tag(Kind kind) {
    switch (kind) {
        case Kind::Awgn: return "awgn";
        case Kind::GaussianBlur: return "gb";
        case Kind::Jpeg: return "jpeg";
        case Kind::MedianFilter: return "mf";
        case Kind::Pristine: return "pr";
        case Kind::Resample: return "rs";
    }
    throw UsageError("unknown manipulation kind");
}

Kind kind_from_tag(const std::string& tag) {
    if (tag == "awgn") return Kind::Awgn;
    if (tag == "gb") return Kind::GaussianBlur;
    if (tag == "jpeg") return Kind::Jpeg;
    if (tag == "mf") return Kind::MedianFilter;
    if (tag == "pr") return Kind::Pristine;
    if (tag == "rs") return Kind::Resample;
    throw UsageError("unknown manipulation tag: " + tag);
}

std::vector<Kind> class_set(bool six_classes) {
    if (six_classes)
        return {Kind::Awgn, Kind::GaussianBlur, Kind::Jpeg,
                Kind::MedianFilter, Kind::Pristine, Kind::Resample};
    return {Kind::Awgn, Kind::GaussianBlur, Kind::MedianFilter, Kind::Pristine};
}

ImageBuffer apply_awgn(const ImageBuffer& img, double sigma, std::uint64_t seed) {
    if (sigma < 0.0)
        throw UsageError("awgn: sigma must be >= 0");
    if (sigma == 0.0)
        return img;
    Rng rng(seed);
    ImageBuffer out(img.height, img.width, img.channels);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        out.data[i] = detail::quantize_u8(img.data[i] + sigma * rng.normal());
    return out;
}

std::vector<double> gaussian_kernel(int size, double sigma) {
    if (size < 3 || size % 2 == 0)
        throw UsageError("gaussian_kernel: size must be odd and >= 3");
    if (sigma <= 0.0)
        throw UsageError("gaussian_kernel: sigma must be > 0");
    const int radius = size / 2;
    std::vector<double> k(static_cast<std::size_t>(size) * size);
    double sum = 0.0;
    for (int r = -radius; r <= radius; ++r)
        for (int c = -radius; c <= radius; ++c) {
            const double v = std::exp(-(r * r + c * c) / (2.0 * sigma * sigma));
            k[static_cast<std::size_t>(r + radius) * size + (c + radius)] = v;
            sum += v;
        }
    for (double& v : k)
        v /= sum;
    return k;
}

ImageBuffer apply_gaussian_blur(const ImageBuffer& img, int size, double sigma) {
    if (size > img.height || size > img.width)
        throw DataError("gaussian blur: kernel larger than image");
    const std::vector<double> kernel = gaussian_kernel(size, sigma);
    FloatImage f = detail::to_float(img);
    detail::convolve_reflect(f, kernel, size);
    return detail::to_u8(f);
}

ImageBuffer apply_median_filter(const ImageBuffer& img, int size) {
    if (size < 3 || size % 2 == 0)
        throw UsageError("median filter: size must be odd and >= 3");
    const int radius = size / 2;
    ImageBuffer out(img.height, img.width, img.channels);
    std::vector<std::uint8_t> window(static_cast<std::size_t>(size) * size);
    for (int ch = 0; ch < img.channels; ++ch) {
        for (int r = 0; r < img.height; ++r) {
            for (int c = 0; c < img.width; ++c) {
                std::size_t n = 0;
                for (int kr = -radius; kr <= radius; ++kr) {
                    const int rr = detail::clamp_index(r + kr, img.height);
                    for (int kc = -radius; kc <= radius; ++kc) {
                        const int cc = detail::clamp_index(c + kc, img.width);
                        window[n++] = img.at(rr, cc, ch);
                    }
                }
                auto mid = window.begin() + static_cast<std::ptrdiff_t>(n / 2);
                std::nth_element(window.begin(), mid, window.begin() + static_cast<std::ptrdiff_t>(n));
                out.at(r, c, ch) = *mid;
            }
        }
    }
    return out;
}

ImageBuffer apply_resample(const ImageBuffer& img, double ratio) {
    if (ratio <= 0.0)
        throw UsageError("resample: ratio must be > 0");
    const int out_h = detail::round_half_away(img.height * ratio);
    const int out_w = detail::round_half_away(img.width * ratio);
    if (out_h < 1 || out_w < 1)
        throw DataError("resample: result smaller than one pixel");
    if (out_h == img.height && out_w == img.width)
        return img;
    FloatImage resized = detail::resize_bilinear(detail::to_float(img), out_h, out_w);
    ImageBuffer quantized = detail::to_u8(resized);
    if (ratio >= 1.0)
        return imaging::center_crop(quantized, img.height, img.width);
    return quantized;
}

ImageBuffer apply_manipulation(const ImageBuffer& img, Kind kind,
                               const Params& params, std::uint64_t seed) {
    switch (kind) {
        case Kind::Awgn:
            return apply_awgn(img, params.awgn_sigma, seed);
        case Kind::GaussianBlur:
            return apply_gaussian_blur(img, params.gb_kernel, params.gb_sigma);
        case Kind::Jpeg:
            return jpeg_roundtrip(img, params.jpeg_quality);
        case Kind::MedianFilter:
            return apply_median_filter(img, params.mf_kernel);
        case Kind::Pristine:
            return img;
        case Kind::Resample:
            return apply_resample(img, params.rs_ratio);
    }
    throw UsageError("unknown manipulation kind");
}

} // namespace psf::manip
