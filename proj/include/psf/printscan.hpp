#ifndef PSF_PRINTSCAN_HPP
#define PSF_PRINTSCAN_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "psf/image.hpp"

namespace psf::printscan {

using imaging::ImageBuffer;

// Parameter bundle for one simulated printer/scanner chain. An all-identity
// profile (identity matrix, zero amplitudes, jitter 0, requant off) is the
// identity map on images.
struct PrinterProfile {
    std::string name;
    std::array<double, 9> color_matrix{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major 3x3
    std::array<double, 3> color_offset{0, 0, 0};                    // gray levels
    double halftone_amplitude = 0.0;                                // gray levels
    int halftone_cell = 4;                                          // pixels, >= 2
    double blur_sigma = 0.0;                                        // pixels
    double noise_sigma = 0.0;                                       // gray levels
    double gain_field_amplitude = 0.0;                              // unitless
    double geometric_jitter = 0.0;                                  // scale eps, |eps| <= 0.02
    int requant_quality = 0;                                        // 1..100, 0 = off
};

void validate_profile(const PrinterProfile& profile);

// Number of fields in which two profiles differ (used to check that shipped
// profiles are mutually distinct).
int profile_field_distance(const PrinterProfile& a, const PrinterProfile& b);

// Degradation chain, in order: affine color transform, ordered-dither
// halftone modulation, Gaussian blur, multiplicative low-frequency gain field
// plus additive Gaussian noise, bilinear scale jitter there-and-back,
// optional JPEG requantization, clamp. Deterministic per (image, profile,
// seed); dimensions are preserved. Input must have 3 channels.
ImageBuffer simulate_printscan(const ImageBuffer& img, const PrinterProfile& profile,
                               std::uint64_t seed);

// The three committed printer/scanner chains: sim-dell, sim-xerox1, sim-xerox2.
std::vector<PrinterProfile> default_profiles();

// Requantization-only chain (the plain JPEG-compression attack).
PrinterProfile jpeg_attack_profile(int quality);

} // namespace psf::printscan

#endif
