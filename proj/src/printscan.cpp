#include "psf/printscan.hpp"

#include <cmath>

#include "pixelmath.hpp"
#include "psf/error.hpp"
#include "psf/manipulations.hpp"
#include "psf/rng.hpp"

namespace psf::printscan {

using detail::FloatImage;

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Clustered-dot threshold pattern on a cell x cell grid, zero mean, range
// roughly [-0.5, 0.5]: positive near the cell center, negative at corners.
std::vector<double> halftone_pattern(int cell) {
    std::vector<double> p(static_cast<std::size_t>(cell) * cell);
    const double ctr = (cell - 1) / 2.0;
    const double dmax = std::sqrt(2.0) * (cell - 1) / 2.0;
    double mean = 0.0;
    for (int r = 0; r < cell; ++r)
        for (int c = 0; c < cell; ++c) {
            const double d = std::sqrt((r - ctr) * (r - ctr) + (c - ctr) * (c - ctr));
            const double v = 0.5 - d / (dmax > 0 ? dmax : 1.0);
            p[static_cast<std::size_t>(r) * cell + c] = v;
            mean += v;
        }
    mean /= static_cast<double>(p.size());
    for (double& v : p)
        v -= mean;
    return p;
}

void apply_color_transform(FloatImage& img, const PrinterProfile& prof) {
    const auto& m = prof.color_matrix;
    const auto& o = prof.color_offset;
    const std::size_t n = static_cast<std::size_t>(img.height) * img.width;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = img.planes[0][i], g = img.planes[1][i], b = img.planes[2][i];
        img.planes[0][i] = m[0] * r + m[1] * g + m[2] * b + o[0];
        img.planes[1][i] = m[3] * r + m[4] * g + m[5] * b + o[1];
        img.planes[2][i] = m[6] * r + m[7] * g + m[8] * b + o[2];
    }
}

void apply_halftone(FloatImage& img, const PrinterProfile& prof) {
    const int cell = prof.halftone_cell;
    const std::vector<double> pattern = halftone_pattern(cell);
    for (int ch = 0; ch < img.channels(); ++ch) {
        // Per-channel phase shift stands in for the per-ink screen angles.
        const int shift = ch * (cell / 3 + 1);
        for (int r = 0; r < img.height; ++r) {
            const int pr = (r + shift) % cell;
            for (int c = 0; c < img.width; ++c) {
                const int pc = (c + shift) % cell;
                img.at(ch, r, c) += prof.halftone_amplitude *
                                    pattern[static_cast<std::size_t>(pr) * cell + pc];
            }
        }
    }
}

// Low-order cosine surface, fixed per profile: a stable per-printer
// shading/illumination fingerprint. Frequencies and phases derive from the
// profile name.
void apply_gain_and_noise(FloatImage& img, const PrinterProfile& prof, Rng& rng) {
    const bool gain = prof.gain_field_amplitude > 0.0;
    const bool noise = prof.noise_sigma > 0.0;
    if (!gain && !noise)
        return;
    const std::uint64_t h = fnv1a(prof.name);
    const double fr = 1.0 + static_cast<double>(h % 3);
    const double fc = 1.0 + static_cast<double>((h >> 8) % 3);
    const double phase_r = static_cast<double>((h >> 16) % 628) / 100.0;
    const double phase_c = static_cast<double>((h >> 24) % 628) / 100.0;
    const double pi = 3.14159265358979323846;
    std::vector<double> row_wave(img.height), col_wave(img.width);
    for (int r = 0; r < img.height; ++r)
        row_wave[r] = std::cos(pi * fr * r / img.height + phase_r);
    for (int c = 0; c < img.width; ++c)
        col_wave[c] = std::cos(pi * fc * c / img.width + phase_c);
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            const double g = gain ? 1.0 + prof.gain_field_amplitude * row_wave[r] * col_wave[c] : 1.0;
            for (int ch = 0; ch < img.channels(); ++ch) {
                double v = img.at(ch, r, c) * g;
                if (noise)
                    v += prof.noise_sigma * rng.normal();
                img.at(ch, r, c) = v;
            }
        }
    }
}

} // namespace

void validate_profile(const PrinterProfile& profile) {
    if (profile.halftone_amplitude < 0 || profile.noise_sigma < 0 ||
        profile.blur_sigma < 0 || profile.gain_field_amplitude < 0)
        throw UsageError("profile '" + profile.name + "': amplitudes must be >= 0");
    if (profile.halftone_cell < 2)
        throw UsageError("profile '" + profile.name + "': halftone cell must be >= 2");
    for (int i = 0; i < 3; ++i) {
        const double d = profile.color_matrix[static_cast<std::size_t>(i) * 4];
        if (d < 0.8 || d > 1.2)
            throw UsageError("profile '" + profile.name + "': color matrix diagonal outside [0.8, 1.2]");
    }
    if (std::abs(profile.geometric_jitter) > 0.02)
        throw UsageError("profile '" + profile.name + "': |geometric jitter| must be <= 0.02");
    if (profile.requant_quality < 0 || profile.requant_quality > 100)
        throw UsageError("profile '" + profile.name + "': requant quality must be 0 (off) or 1..100");
}

int profile_field_distance(const PrinterProfile& a, const PrinterProfile& b) {
    int d = 0;
    d += a.color_matrix != b.color_matrix || a.color_offset != b.color_offset;
    d += a.halftone_amplitude != b.halftone_amplitude;
    d += a.halftone_cell != b.halftone_cell;
    d += a.blur_sigma != b.blur_sigma;
    d += a.noise_sigma != b.noise_sigma;
    d += a.gain_field_amplitude != b.gain_field_amplitude;
    d += a.geometric_jitter != b.geometric_jitter;
    d += a.requant_quality != b.requant_quality;
    return d;
}

ImageBuffer simulate_printscan(const ImageBuffer& img, const PrinterProfile& profile,
                               std::uint64_t seed) {
    validate_profile(profile);
    if (img.channels != 3)
        throw DataError("simulate_printscan: input must have 3 channels");

    Rng rng(mix_seed(seed, fnv1a(profile.name)));
    FloatImage f = detail::to_float(img);

    apply_color_transform(f, profile);

    if (profile.halftone_amplitude > 0.0)
        apply_halftone(f, profile);

    if (profile.blur_sigma > 0.0) {
        const int size = 2 * static_cast<int>(std::ceil(2.5 * profile.blur_sigma)) + 1;
        detail::convolve_reflect(f, manip::gaussian_kernel(size, profile.blur_sigma), size);
    }

    apply_gain_and_noise(f, profile, rng);

    if (profile.geometric_jitter != 0.0) {
        const double s = 1.0 + profile.geometric_jitter;
        const int jh = std::max(1, detail::round_half_away(img.height * s));
        const int jw = std::max(1, detail::round_half_away(img.width * s));
        f = detail::resize_bilinear(detail::resize_bilinear(f, jh, jw), img.height, img.width);
    }

    if (profile.requant_quality > 0)
        f = detail::to_float(manip::jpeg_roundtrip(detail::to_u8(f), profile.requant_quality));

    return detail::to_u8(f);
}

std::vector<PrinterProfile> default_profiles() {
    // Comparable overall severity, distinct artifact structure: screen
    // geometry, colorimetry, noise floor and requantization all differ, so
    // the chains are separable from each other without any one of them being
    // uniformly milder than the rest.
    PrinterProfile dell;
    dell.name = "sim-dell";
    dell.color_matrix = {1.06, 0.02, 0.00, 0.01, 1.00, 0.01, 0.00, 0.03, 0.94};
    dell.color_offset = {3.0, 1.0, -2.0};
    dell.halftone_amplitude = 12.0;
    dell.halftone_cell = 4;
    dell.blur_sigma = 0.6;
    dell.noise_sigma = 3.2;
    dell.gain_field_amplitude = 0.060;
    dell.geometric_jitter = 0.004;
    dell.requant_quality = 82;

    PrinterProfile xerox1;
    xerox1.name = "sim-xerox1";
    xerox1.color_matrix = {0.95, 0.01, 0.02, 0.02, 1.04, 0.00, 0.01, 0.00, 1.05};
    xerox1.color_offset = {-2.0, 2.0, 3.0};
    xerox1.halftone_amplitude = 7.0;
    xerox1.halftone_cell = 6;
    xerox1.blur_sigma = 0.7;
    xerox1.noise_sigma = 1.4;
    xerox1.gain_field_amplitude = 0.040;
    xerox1.geometric_jitter = -0.003;
    xerox1.requant_quality = 90;

    PrinterProfile xerox2;
    xerox2.name = "sim-xerox2";
    xerox2.color_matrix = {1.00, 0.00, 0.01, 0.02, 1.08, 0.02, 0.01, 0.00, 0.92};
    xerox2.color_offset = {-1.0, -4.0, 2.0};
    xerox2.halftone_amplitude = 14.0;
    xerox2.halftone_cell = 3;
    xerox2.blur_sigma = 0.9;
    xerox2.noise_sigma = 2.2;
    xerox2.gain_field_amplitude = 0.020;
    xerox2.geometric_jitter = 0.009;
    xerox2.requant_quality = 70;

    return {dell, xerox1, xerox2};
}

PrinterProfile jpeg_attack_profile(int quality) {
    if (quality < 1 || quality > 100)
        throw UsageError("jpeg attack profile: quality must be in [1, 100]");
    PrinterProfile p;
    p.name = "jpeg" + std::to_string(quality);
    p.requant_quality = quality;
    return p;
}

} // namespace psf::printscan
