#ifndef PSF_IMAGE_HPP
#define PSF_IMAGE_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace psf::imaging {

// 8-bit raster, row-major, channel-interleaved. channels is 1 or 3.
struct ImageBuffer {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<std::uint8_t> data;

    ImageBuffer() = default;
    ImageBuffer(int h, int w, int c, std::uint8_t fill = 0)
        : height(h), width(w), channels(c),
          data(static_cast<std::size_t>(h) * w * c, fill) {}

    std::size_t size() const { return data.size(); }

    std::uint8_t& at(int r, int c, int ch) {
        return data[(static_cast<std::size_t>(r) * width + c) * channels + ch];
    }
    std::uint8_t at(int r, int c, int ch) const {
        return data[(static_cast<std::size_t>(r) * width + c) * channels + ch];
    }

    bool same_pixels(const ImageBuffer& o) const {
        return height == o.height && width == o.width && channels == o.channels &&
               data == o.data;
    }
};

// One tile of a parent image plus where it came from.
struct Block {
    ImageBuffer pixels;
    int origin_row = 0;
    int origin_col = 0;
    std::string parent_id;
};

enum class BlockSelection { All, Central };

// File I/O. Formats: binary PPM (P6) / PGM (P5) and 8-bit PNG, both
// bit-exact. The format of an input file is detected from its magic bytes;
// the output format follows the path extension.
ImageBuffer load_image(const std::string& path);
void save_image(const ImageBuffer& img, const std::string& path);

// Centered window of the given size; offsets are floor((dim - target) / 2).
ImageBuffer center_crop(const ImageBuffer& img, int target_h, int target_w);

// Non-overlapping block grid of floor(H/s) x floor(W/s) tiles, anchored so
// the tiled region is centered in the image. With Central selection, returns
// the k blocks whose centers are nearest the image center, ties row-major.
std::vector<Block> extract_blocks(const ImageBuffer& img, int block_size,
                                  BlockSelection selection = BlockSelection::All,
                                  int central_k = 0,
                                  const std::string& parent_id = "");

// Single-channel copy of channel index 1. Input must have 3 channels.
ImageBuffer green_channel(const ImageBuffer& img);

// FNV-1a over the raw samples; used to pin golden outputs in tests.
std::uint64_t pixel_checksum(const ImageBuffer& img);

} // namespace psf::imaging

#endif
