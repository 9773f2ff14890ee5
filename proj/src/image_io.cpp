#include <zlib.h>

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "psf/error.hpp"
#include "psf/image.hpp"

namespace psf::imaging {

namespace {

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::error_code ec;
    if (!std::filesystem::exists(path, ec))
        throw FileMissingError("no such file: " + path);
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot open file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw DataError("cannot open file for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw DataError("write failed: " + path);
}

void validate_buffer(const ImageBuffer& img) {
    if (img.height <= 0 || img.width <= 0)
        throw DataError("image has empty dimensions");
    if (img.channels != 1 && img.channels != 3)
        throw DataError("image must have 1 or 3 channels");
    if (img.data.size() != static_cast<std::size_t>(img.height) * img.width * img.channels)
        throw DataError("image data length does not match dimensions");
}

// ---- netpbm (binary P5 / P6) ----

int pnm_read_token(const std::vector<std::uint8_t>& bytes, std::size_t& pos) {
    while (pos < bytes.size()) {
        if (std::isspace(bytes[pos])) {
            ++pos;
        } else if (bytes[pos] == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n')
                ++pos;
        } else {
            break;
        }
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos]))
        throw CorruptStreamError("pnm: malformed header");
    long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
        v = v * 10 + (bytes[pos] - '0');
        if (v > 1 << 30)
            throw CorruptStreamError("pnm: header value out of range");
        ++pos;
    }
    return static_cast<int>(v);
}

ImageBuffer decode_pnm(const std::vector<std::uint8_t>& bytes) {
    const int channels = bytes[1] == '6' ? 3 : 1;
    std::size_t pos = 2;
    const int width = pnm_read_token(bytes, pos);
    const int height = pnm_read_token(bytes, pos);
    const int maxval = pnm_read_token(bytes, pos);
    if (maxval != 255)
        throw UnsupportedFormatError("pnm: only 8-bit (maxval 255) supported");
    if (pos >= bytes.size() || !std::isspace(bytes[pos]))
        throw CorruptStreamError("pnm: missing separator before raster");
    ++pos;
    ImageBuffer img(height, width, channels);
    if (bytes.size() - pos < img.data.size())
        throw CorruptStreamError("pnm: truncated raster");
    std::memcpy(img.data.data(), bytes.data() + pos, img.data.size());
    return img;
}

std::vector<std::uint8_t> encode_pnm(const ImageBuffer& img) {
    char header[64];
    const int n = std::snprintf(header, sizeof(header), "P%c\n%d %d\n255\n",
                                img.channels == 3 ? '6' : '5', img.width, img.height);
    std::vector<std::uint8_t> bytes(header, header + n);
    bytes.insert(bytes.end(), img.data.begin(), img.data.end());
    return bytes;
}

// ---- PNG (8-bit, non-interlaced) ----

constexpr std::uint8_t kPngSig[8] = {137, 80, 78, 71, 13, 10, 26, 10};

std::uint32_t be32(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void put_chunk(std::vector<std::uint8_t>& out, const char type[4],
               const std::uint8_t* data, std::size_t len) {
    put_be32(out, static_cast<std::uint32_t>(len));
    const std::size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    if (len)
        out.insert(out.end(), data, data + len);
    const auto crc = crc32(0L, out.data() + start, static_cast<uInt>(len + 4));
    put_be32(out, static_cast<std::uint32_t>(crc));
}

int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

ImageBuffer decode_png(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8 + 25 || std::memcmp(bytes.data(), kPngSig, 8) != 0)
        throw CorruptStreamError("png: bad signature");

    std::size_t pos = 8;
    int width = 0, height = 0, bit_depth = 0, color_type = 0, interlace = 0;
    bool seen_ihdr = false, seen_iend = false;
    std::vector<std::uint8_t> idat;
    std::vector<std::uint8_t> palette;

    while (pos + 12 <= bytes.size()) {
        const std::uint32_t len = be32(&bytes[pos]);
        if (pos + 12 + len > bytes.size())
            throw CorruptStreamError("png: truncated chunk");
        const char* type = reinterpret_cast<const char*>(&bytes[pos + 4]);
        const std::uint8_t* data = &bytes[pos + 8];
        const std::uint32_t stored_crc = be32(&bytes[pos + 8 + len]);
        const auto crc = crc32(0L, &bytes[pos + 4], static_cast<uInt>(len + 4));
        if (static_cast<std::uint32_t>(crc) != stored_crc)
            throw CorruptStreamError("png: chunk crc mismatch");

        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13)
                throw CorruptStreamError("png: bad IHDR length");
            width = static_cast<int>(be32(data));
            height = static_cast<int>(be32(data + 4));
            bit_depth = data[8];
            color_type = data[9];
            interlace = data[12];
            seen_ihdr = true;
        } else if (std::memcmp(type, "PLTE", 4) == 0) {
            palette.assign(data, data + len);
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            seen_iend = true;
            break;
        }
        pos += 12 + len;
    }

    if (!seen_ihdr || !seen_iend || idat.empty())
        throw CorruptStreamError("png: missing required chunks");
    if (width <= 0 || height <= 0)
        throw CorruptStreamError("png: bad dimensions");
    if (bit_depth != 8)
        throw UnsupportedFormatError("png: only bit depth 8 supported");
    if (interlace != 0)
        throw UnsupportedFormatError("png: interlaced images not supported");

    int src_samples = 0;
    switch (color_type) {
        case 0: src_samples = 1; break;  // gray
        case 2: src_samples = 3; break;  // rgb
        case 3: src_samples = 1; break;  // palette
        case 4: src_samples = 2; break;  // gray + alpha
        case 6: src_samples = 4; break;  // rgba
        default: throw UnsupportedFormatError("png: unsupported color type");
    }
    if (color_type == 3 && (palette.empty() || palette.size() % 3 != 0))
        throw CorruptStreamError("png: palette image without valid PLTE");

    const std::size_t stride = static_cast<std::size_t>(width) * src_samples;
    const std::size_t raw_size = (stride + 1) * height;
    std::vector<std::uint8_t> raw(raw_size);
    uLongf dest_len = static_cast<uLongf>(raw_size);
    const int zret = uncompress(raw.data(), &dest_len, idat.data(),
                                static_cast<uLong>(idat.size()));
    if (zret != Z_OK || dest_len != raw_size)
        throw CorruptStreamError("png: inflate failed");

    // Undo per-row filters in place.
    std::vector<std::uint8_t> prev(stride, 0);
    const int bpp = src_samples;
    for (int r = 0; r < height; ++r) {
        std::uint8_t* row = &raw[static_cast<std::size_t>(r) * (stride + 1)];
        const int filter = row[0];
        std::uint8_t* cur = row + 1;
        switch (filter) {
            case 0:
                break;
            case 1:
                for (std::size_t i = bpp; i < stride; ++i)
                    cur[i] = static_cast<std::uint8_t>(cur[i] + cur[i - bpp]);
                break;
            case 2:
                for (std::size_t i = 0; i < stride; ++i)
                    cur[i] = static_cast<std::uint8_t>(cur[i] + prev[i]);
                break;
            case 3:
                for (std::size_t i = 0; i < stride; ++i) {
                    const int a = i >= static_cast<std::size_t>(bpp) ? cur[i - bpp] : 0;
                    cur[i] = static_cast<std::uint8_t>(cur[i] + ((a + prev[i]) >> 1));
                }
                break;
            case 4:
                for (std::size_t i = 0; i < stride; ++i) {
                    const int a = i >= static_cast<std::size_t>(bpp) ? cur[i - bpp] : 0;
                    const int c = i >= static_cast<std::size_t>(bpp) ? prev[i - bpp] : 0;
                    cur[i] = static_cast<std::uint8_t>(cur[i] + paeth(a, prev[i], c));
                }
                break;
            default:
                throw CorruptStreamError("png: unknown filter type");
        }
        std::memcpy(prev.data(), cur, stride);
    }

    const int out_channels = (color_type == 0 || color_type == 4) ? 1 : 3;
    ImageBuffer img(height, width, out_channels);
    for (int r = 0; r < height; ++r) {
        const std::uint8_t* src = &raw[static_cast<std::size_t>(r) * (stride + 1) + 1];
        std::uint8_t* dst = &img.data[static_cast<std::size_t>(r) * width * out_channels];
        for (int c = 0; c < width; ++c) {
            switch (color_type) {
                case 0:
                    dst[c] = src[c];
                    break;
                case 2:
                    std::memcpy(dst + c * 3, src + c * 3, 3);
                    break;
                case 3: {
                    const std::size_t idx = static_cast<std::size_t>(src[c]) * 3;
                    if (idx + 2 >= palette.size())
                        throw CorruptStreamError("png: palette index out of range");
                    std::memcpy(dst + c * 3, &palette[idx], 3);
                    break;
                }
                case 4:
                    dst[c] = src[c * 2];  // alpha dropped
                    break;
                case 6:
                    std::memcpy(dst + c * 3, src + c * 4, 3);  // alpha dropped
                    break;
            }
        }
    }
    return img;
}

std::vector<std::uint8_t> encode_png(const ImageBuffer& img) {
    const int color_type = img.channels == 3 ? 2 : 0;
    const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;

    // Filter type 0 on every row; simple and bit-exact.
    std::vector<std::uint8_t> raw;
    raw.reserve((stride + 1) * img.height);
    for (int r = 0; r < img.height; ++r) {
        raw.push_back(0);
        const std::uint8_t* row = &img.data[static_cast<std::size_t>(r) * stride];
        raw.insert(raw.end(), row, row + stride);
    }

    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> compressed(bound);
    if (compress2(compressed.data(), &bound, raw.data(),
                  static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw DataError("png: deflate failed");
    compressed.resize(bound);

    std::vector<std::uint8_t> out(kPngSig, kPngSig + 8);
    std::uint8_t ihdr[13];
    ihdr[0] = static_cast<std::uint8_t>(img.width >> 24);
    ihdr[1] = static_cast<std::uint8_t>(img.width >> 16);
    ihdr[2] = static_cast<std::uint8_t>(img.width >> 8);
    ihdr[3] = static_cast<std::uint8_t>(img.width);
    ihdr[4] = static_cast<std::uint8_t>(img.height >> 24);
    ihdr[5] = static_cast<std::uint8_t>(img.height >> 16);
    ihdr[6] = static_cast<std::uint8_t>(img.height >> 8);
    ihdr[7] = static_cast<std::uint8_t>(img.height);
    ihdr[8] = 8;
    ihdr[9] = static_cast<std::uint8_t>(color_type);
    ihdr[10] = 0;
    ihdr[11] = 0;
    ihdr[12] = 0;
    put_chunk(out, "IHDR", ihdr, 13);
    put_chunk(out, "IDAT", compressed.data(), compressed.size());
    put_chunk(out, "IEND", nullptr, 0);
    return out;
}

} // namespace

ImageBuffer load_image(const std::string& path) {
    const std::vector<std::uint8_t> bytes = read_file(path);
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSig, 8) == 0)
        return decode_png(bytes);
    if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6'))
        return decode_pnm(bytes);
    throw UnsupportedFormatError("unrecognized image format: " + path);
}

void save_image(const ImageBuffer& img, const std::string& path) {
    validate_buffer(img);
    const auto dot = path.find_last_of('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
    for (char& ch : ext)
        ch = static_cast<char>(std::tolower(ch));
    if (ext == "png")
        write_file(path, encode_png(img));
    else if (ext == "ppm" || ext == "pgm" || ext == "pnm")
        write_file(path, encode_pnm(img));
    else
        throw UnsupportedFormatError("unsupported output extension: " + path);
}

} // namespace psf::imaging
