#ifndef PSF_MANIPULATIONS_HPP
#define PSF_MANIPULATIONS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "psf/image.hpp"

namespace psf::manip {

using imaging::ImageBuffer;

// The six global manipulation classes and their dataset default parameters.
enum class Kind { Awgn, GaussianBlur, Jpeg, MedianFilter, Pristine, Resample };

struct Params {
    double awgn_sigma = 2.0;
    int gb_kernel = 5;
    double gb_sigma = 1.1;
    int jpeg_quality = 70;
    int mf_kernel = 5;
    double rs_ratio = 1.5;
};

const char* tag(Kind kind);
Kind kind_from_tag(const std::string& tag);

// Class sets: the restricted four (awgn, gb, mf, pr) or all six.
std::vector<Kind> class_set(bool six_classes);

// out = clamp(round(img + N(0, sigma^2)), 0, 255), deterministic per seed.
ImageBuffer apply_awgn(const ImageBuffer& img, double sigma, std::uint64_t seed);

// Normalized 2-D Gaussian weights, row-major size x size. size must be odd.
std::vector<double> gaussian_kernel(int size, double sigma);

// Per-channel 2-D convolution with gaussian_kernel, mirrored borders.
ImageBuffer apply_gaussian_blur(const ImageBuffer& img, int size, double sigma);

// Exact median of the size x size neighborhood, replicated borders.
ImageBuffer apply_median_filter(const ImageBuffer& img, int size);

// Bilinear resize by `ratio` (half-pixel centers), then center-crop back to
// the source dimensions when ratio >= 1 so block geometry is preserved.
ImageBuffer apply_resample(const ImageBuffer& img, double ratio);

// Baseline JPEG compression applied and inverted in memory: YCbCr conversion,
// 4:2:0 chroma subsampling, 8x8 DCT, quantization at the given quality, then
// the inverse chain. Output dimensions equal input dimensions.
ImageBuffer jpeg_roundtrip(const ImageBuffer& img, int quality);

ImageBuffer apply_manipulation(const ImageBuffer& img, Kind kind,
                               const Params& params, std::uint64_t seed);

} // namespace psf::manip

#endif
