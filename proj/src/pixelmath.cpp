#include "pixelmath.hpp"

namespace psf::detail {

void convolve_reflect(FloatImage& img, const std::vector<double>& kernel, int size) {
    const int radius = size / 2;
    const int h = img.height, w = img.width;
    std::vector<double> out(static_cast<std::size_t>(h) * w);
    for (auto& plane : img.planes) {
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                double acc = 0.0;
                for (int kr = -radius; kr <= radius; ++kr) {
                    const int rr = reflect_index(r + kr, h);
                    const double* row = &plane[static_cast<std::size_t>(rr) * w];
                    const double* krow = &kernel[static_cast<std::size_t>(kr + radius) * size];
                    for (int kc = -radius; kc <= radius; ++kc)
                        acc += krow[kc + radius] * row[reflect_index(c + kc, w)];
                }
                out[static_cast<std::size_t>(r) * w + c] = acc;
            }
        }
        plane = out;
    }
}

FloatImage resize_bilinear(const FloatImage& img, int out_h, int out_w) {
    FloatImage out(out_h, out_w, img.channels());
    const double sr = static_cast<double>(img.height) / out_h;
    const double sc = static_cast<double>(img.width) / out_w;
    for (int r = 0; r < out_h; ++r) {
        const double src_r = (r + 0.5) * sr - 0.5;
        const int r0 = static_cast<int>(std::floor(src_r));
        const double fr = src_r - r0;
        const int ra = clamp_index(r0, img.height);
        const int rb = clamp_index(r0 + 1, img.height);
        for (int c = 0; c < out_w; ++c) {
            const double src_c = (c + 0.5) * sc - 0.5;
            const int c0 = static_cast<int>(std::floor(src_c));
            const double fc = src_c - c0;
            const int ca = clamp_index(c0, img.width);
            const int cb = clamp_index(c0 + 1, img.width);
            for (int ch = 0; ch < img.channels(); ++ch) {
                const double top = img.at(ch, ra, ca) * (1.0 - fc) + img.at(ch, ra, cb) * fc;
                const double bot = img.at(ch, rb, ca) * (1.0 - fc) + img.at(ch, rb, cb) * fc;
                out.at(ch, r, c) = top * (1.0 - fr) + bot * fr;
            }
        }
    }
    return out;
}

} // namespace psf::detail
