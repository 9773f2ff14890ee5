// Baseline JPEG transform chain, applied and inverted in memory. Entropy
// coding is irrelevant to a round trip (it is lossless), so the chain is
// color conversion, 4:2:0 subsampling, blockwise DCT and quantization, and
// the inverse of each.

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "pixelmath.hpp"
#include "psf/error.hpp"
#include "psf/manipulations.hpp"

namespace psf::manip {

namespace {

// ITU-T T.81 Annex K reference quantization tables.
constexpr int kLumaQuant[64] = {
    16, 11, 10, 16, 24,  40,  51,  61,
    12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,
    14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,
    24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101,
    72, 92, 95, 98, 112, 100, 103, 99};

constexpr int kChromaQuant[64] = {
    17, 18, 24, 47, 99, 99, 99, 99,
    18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99,
    47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99};

std::array<int, 64> scaled_table(const int* base, int quality) {
    const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
    std::array<int, 64> out{};
    for (int i = 0; i < 64; ++i) {
        const int q = (base[i] * scale + 50) / 100;
        out[i] = q < 1 ? 1 : (q > 255 ? 255 : q);
    }
    return out;
}

struct Plane {
    int h = 0, w = 0;
    std::vector<double> v;
    Plane() = default;
    Plane(int h_, int w_) : h(h_), w(w_), v(static_cast<std::size_t>(h_) * w_, 0.0) {}
    double& at(int r, int c) { return v[static_cast<std::size_t>(r) * w + c]; }
    double at(int r, int c) const { return v[static_cast<std::size_t>(r) * w + c]; }
};

// DCT basis A[u][x] = 0.5 * c(u) * cos((2x+1) u pi / 16), F = A f A^T.
const std::array<std::array<double, 8>, 8>& dct_basis() {
    static const auto basis = [] {
        std::array<std::array<double, 8>, 8> a{};
        for (int u = 0; u < 8; ++u) {
            const double cu = u == 0 ? 1.0 / std::sqrt(2.0) : 1.0;
            for (int x = 0; x < 8; ++x)
                a[u][x] = 0.5 * cu * std::cos((2 * x + 1) * u * 3.14159265358979323846 / 16.0);
        }
        return a;
    }();
    return basis;
}

void transform_block(double block[8][8], const std::array<int, 64>& quant) {
    const auto& a = dct_basis();
    double tmp[8][8], coeff[8][8];
    // rows: tmp = f * A^T
    for (int x = 0; x < 8; ++x)
        for (int v = 0; v < 8; ++v) {
            double s = 0.0;
            for (int y = 0; y < 8; ++y)
                s += block[x][y] * a[v][y];
            tmp[x][v] = s;
        }
    // cols: F = A * tmp
    for (int u = 0; u < 8; ++u)
        for (int v = 0; v < 8; ++v) {
            double s = 0.0;
            for (int x = 0; x < 8; ++x)
                s += a[u][x] * tmp[x][v];
            coeff[u][v] = s;
        }
    // quantize, dequantize
    for (int u = 0; u < 8; ++u)
        for (int v = 0; v < 8; ++v) {
            const int q = quant[u * 8 + v];
            const long long level = std::llround(coeff[u][v] / q);
            coeff[u][v] = static_cast<double>(level * q);
        }
    // inverse: f = A^T * F * A
    for (int x = 0; x < 8; ++x)
        for (int v = 0; v < 8; ++v) {
            double s = 0.0;
            for (int u = 0; u < 8; ++u)
                s += a[u][x] * coeff[u][v];
            tmp[x][v] = s;
        }
    for (int x = 0; x < 8; ++x)
        for (int y = 0; y < 8; ++y) {
            double s = 0.0;
            for (int v = 0; v < 8; ++v)
                s += tmp[x][v] * a[v][y];
            block[x][y] = s;
        }
}

// Quantization round trip over all 8x8 blocks; the plane is padded by edge
// replication to a multiple of 8 and cropped back afterwards.
void roundtrip_plane(Plane& p, const std::array<int, 64>& quant) {
    const int ph = (p.h + 7) / 8 * 8;
    const int pw = (p.w + 7) / 8 * 8;
    Plane padded(ph, pw);
    for (int r = 0; r < ph; ++r) {
        const int rr = r < p.h ? r : p.h - 1;
        for (int c = 0; c < pw; ++c)
            padded.at(r, c) = p.at(rr, c < p.w ? c : p.w - 1);
    }
    double block[8][8];
    for (int br = 0; br < ph; br += 8) {
        for (int bc = 0; bc < pw; bc += 8) {
            for (int r = 0; r < 8; ++r)
                for (int c = 0; c < 8; ++c)
                    block[r][c] = padded.at(br + r, bc + c) - 128.0;
            transform_block(block, quant);
            for (int r = 0; r < 8; ++r)
                for (int c = 0; c < 8; ++c)
                    padded.at(br + r, bc + c) = block[r][c] + 128.0;
        }
    }
    for (int r = 0; r < p.h; ++r)
        for (int c = 0; c < p.w; ++c)
            p.at(r, c) = padded.at(r, c);
}

Plane subsample_2x2(const Plane& p) {
    Plane out((p.h + 1) / 2, (p.w + 1) / 2);
    for (int r = 0; r < out.h; ++r) {
        const int r0 = 2 * r;
        const int r1 = detail::clamp_index(2 * r + 1, p.h);
        for (int c = 0; c < out.w; ++c) {
            const int c0 = 2 * c;
            const int c1 = detail::clamp_index(2 * c + 1, p.w);
            out.at(r, c) = 0.25 * (p.at(r0, c0) + p.at(r0, c1) + p.at(r1, c0) + p.at(r1, c1));
        }
    }
    return out;
}

Plane upsample_2x2(const Plane& p, int out_h, int out_w) {
    Plane out(out_h, out_w);
    for (int r = 0; r < out_h; ++r)
        for (int c = 0; c < out_w; ++c)
            out.at(r, c) = p.at(r / 2, c / 2);
    return out;
}

} // namespace

ImageBuffer jpeg_roundtrip(const ImageBuffer& img, int quality) {
    if (quality < 1 || quality > 100)
        throw UsageError("jpeg: quality must be in [1, 100]");
    if (img.channels != 1 && img.channels != 3)
        throw DataError("jpeg: image must have 1 or 3 channels");

    const auto luma_q = scaled_table(kLumaQuant, quality);
    const auto chroma_q = scaled_table(kChromaQuant, quality);
    const int h = img.height, w = img.width;

    if (img.channels == 1) {
        Plane y(h, w);
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c)
                y.at(r, c) = img.at(r, c, 0);
        roundtrip_plane(y, luma_q);
        ImageBuffer out(h, w, 1);
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c)
                out.at(r, c, 0) = detail::quantize_u8(y.at(r, c));
        return out;
    }

    Plane y(h, w), cb(h, w), cr(h, w);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double red = img.at(r, c, 0);
            const double green = img.at(r, c, 1);
            const double blue = img.at(r, c, 2);
            y.at(r, c) = 0.299 * red + 0.587 * green + 0.114 * blue;
            cb.at(r, c) = -0.168735892 * red - 0.331264108 * green + 0.5 * blue + 128.0;
            cr.at(r, c) = 0.5 * red - 0.418687589 * green - 0.081312411 * blue + 128.0;
        }
    }

    Plane cb_s = subsample_2x2(cb);
    Plane cr_s = subsample_2x2(cr);
    roundtrip_plane(y, luma_q);
    roundtrip_plane(cb_s, chroma_q);
    roundtrip_plane(cr_s, chroma_q);
    cb = upsample_2x2(cb_s, h, w);
    cr = upsample_2x2(cr_s, h, w);

    ImageBuffer out(h, w, 3);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double yy = y.at(r, c);
            const double db = cb.at(r, c) - 128.0;
            const double dr = cr.at(r, c) - 128.0;
            out.at(r, c, 0) = detail::quantize_u8(yy + 1.402 * dr);
            out.at(r, c, 1) = detail::quantize_u8(yy - 0.344136286 * db - 0.714136286 * dr);
            out.at(r, c, 2) = detail::quantize_u8(yy + 1.772 * db);
        }
    }
    return out;
}

} // namespace psf::manip
