#include "psf/image.hpp"

#include <algorithm>
#include <cstring>

#include "psf/error.hpp"

namespace psf::imaging {

ImageBuffer center_crop(const ImageBuffer& img, int target_h, int target_w) {
    if (target_h <= 0 || target_w <= 0)
        throw DataError("center_crop: target dimensions must be positive");
    if (target_h > img.height || target_w > img.width)
        throw DataError("center_crop: target exceeds source dimensions");
    const int off_r = (img.height - target_h) / 2;
    const int off_c = (img.width - target_w) / 2;
    ImageBuffer out(target_h, target_w, img.channels);
    const std::size_t row_bytes = static_cast<std::size_t>(target_w) * img.channels;
    for (int r = 0; r < target_h; ++r) {
        const std::uint8_t* src = &img.data[((static_cast<std::size_t>(r) + off_r) * img.width + off_c) * img.channels];
        std::memcpy(&out.data[static_cast<std::size_t>(r) * row_bytes], src, row_bytes);
    }
    return out;
}

std::vector<Block> extract_blocks(const ImageBuffer& img, int block_size,
                                  BlockSelection selection, int central_k,
                                  const std::string& parent_id) {
    if (block_size <= 0)
        throw DataError("extract_blocks: block size must be positive");
    if (block_size > img.height || block_size > img.width)
        throw DataError("extract_blocks: block size larger than image");
    const int rows = img.height / block_size;
    const int cols = img.width / block_size;
    const int top = (img.height - rows * block_size) / 2;
    const int left = (img.width - cols * block_size) / 2;

    struct GridCell {
        int r, c;
        long long dist2;
    };
    std::vector<GridCell> cells;
    cells.reserve(static_cast<std::size_t>(rows) * cols);
    // Distances in doubled pixel coordinates so everything stays integral:
    // a block center is 2*origin + size - 1, the image center is dim - 1.
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const long long dr = 2LL * (top + r * block_size) + block_size - 1 - (img.height - 1);
            const long long dc = 2LL * (left + c * block_size) + block_size - 1 - (img.width - 1);
            cells.push_back({r, c, dr * dr + dc * dc});
        }
    }

    if (selection == BlockSelection::Central) {
        if (central_k <= 0 || central_k > rows * cols)
            throw DataError("extract_blocks: central(k) out of range for grid");
        std::stable_sort(cells.begin(), cells.end(), [](const GridCell& a, const GridCell& b) {
            if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
            if (a.r != b.r) return a.r < b.r;
            return a.c < b.c;
        });
        cells.resize(static_cast<std::size_t>(central_k));
        // Emit in row-major parent order regardless of distance rank.
        std::sort(cells.begin(), cells.end(), [](const GridCell& a, const GridCell& b) {
            if (a.r != b.r) return a.r < b.r;
            return a.c < b.c;
        });
    }

    std::vector<Block> blocks;
    blocks.reserve(cells.size());
    for (const GridCell& cell : cells) {
        Block b;
        b.origin_row = top + cell.r * block_size;
        b.origin_col = left + cell.c * block_size;
        b.parent_id = parent_id;
        b.pixels = ImageBuffer(block_size, block_size, img.channels);
        const std::size_t row_bytes = static_cast<std::size_t>(block_size) * img.channels;
        for (int r = 0; r < block_size; ++r) {
            const std::uint8_t* src =
                &img.data[((static_cast<std::size_t>(b.origin_row) + r) * img.width + b.origin_col) * img.channels];
            std::memcpy(&b.pixels.data[static_cast<std::size_t>(r) * row_bytes], src, row_bytes);
        }
        blocks.push_back(std::move(b));
    }
    return blocks;
}

ImageBuffer green_channel(const ImageBuffer& img) {
    if (img.channels != 3)
        throw DataError("green_channel: input must have 3 channels");
    ImageBuffer out(img.height, img.width, 1);
    const std::size_t n = static_cast<std::size_t>(img.height) * img.width;
    for (std::size_t i = 0; i < n; ++i)
        out.data[i] = img.data[i * 3 + 1];
    return out;
}

std::uint64_t pixel_checksum(const ImageBuffer& img) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t v) {
        h ^= v;
        h *= 0x100000001b3ULL;
    };
    mix(static_cast<std::uint64_t>(img.height));
    mix(static_cast<std::uint64_t>(img.width));
    mix(static_cast<std::uint64_t>(img.channels));
    for (std::uint8_t b : img.data)
        mix(b);
    return h;
}

} // namespace psf::imaging
