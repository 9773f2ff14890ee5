#ifndef PSF_DATASET_HPP
#define PSF_DATASET_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "psf/image.hpp"
#include "psf/manipulations.hpp"
#include "psf/printscan.hpp"
#include "psf/rng.hpp"

namespace psf::harness {

// One generated block. Paths are relative to the manifest's directory so
// dataset folders stay relocatable.
struct ManifestRecord {
    std::string block_path;
    std::string label;      // manipulation tag, or profile name for printer-id
    std::string source;     // "original" or a printer profile name
    std::string split;      // "train" | "val"
    std::string parent_id;
    int row = 0;
    int col = 0;
};

// Ordered, seeded record of every block in a dataset. Text format: a
// `psf-manifest 1` header, key=value header lines, a blank line, then one
// tab-separated record per line with fields in the order
// block, label, source, split, parent, row, col.
struct DatasetManifest {
    std::vector<ManifestRecord> records;
    std::uint64_t seed = 0;
    std::string class_set;  // "4c" | "6c" | "printer-id"
    int block_size = 0;
    std::string selection;  // "all" | "central:<k>"
    std::string full_dir;   // relative dir of full manipulated images; "" if absent
    std::string dir;        // absolute location of the manifest (not serialized)

    std::string serialize() const;
    void save(const std::string& path) const;
    static DatasetManifest load(const std::string& path);

    std::string resolve(const std::string& rel_path) const;
    std::vector<std::string> distinct_labels() const;  // sorted
    std::vector<const ManifestRecord*> split_records(const std::string& split) const;
    // True when no parent contributes to both splits.
    bool split_is_leak_free() const;
};

// Structured synthetic photos: gradient background, smooth value-noise
// texture, soft-edged shapes, mild grain. Stands in for a camera corpus so
// experiments run without external data.
imaging::ImageBuffer synth_image(int height, int width, Rng& rng);

// Writes `count` synthetic PNGs named img0000.png.. into dir.
void generate_synth_corpus(const std::string& dir, int count, int height, int width,
                           std::uint64_t seed);

struct BlockSelectionSpec {
    imaging::BlockSelection mode = imaging::BlockSelection::All;
    int central_k = 0;

    std::string str() const;
    static BlockSelectionSpec parse(const std::string& text);
};

// Applies every class in the set to every source image, blocks the results,
// writes blocks (and full manipulated images) under out_dir, and assigns the
// 75/25 train/val split by parent image.
DatasetManifest generate_dataset(const std::string& source_dir, bool six_classes,
                                 int block_size, const BlockSelectionSpec& selection,
                                 const std::string& out_dir, std::uint64_t seed,
                                 const manip::Params& params, bool keep_full = true);

// Runs every full manipulated image of `input` through the printer chain,
// re-blocks with the same geometry, and writes a new dataset under out_dir.
// Labels, parents and split assignments are preserved; source becomes the
// profile name.
DatasetManifest printscan_dataset(const DatasetManifest& input,
                                  const printscan::PrinterProfile& profile,
                                  const std::string& out_dir, std::uint64_t seed);

// Union of printer datasets (manifest only; blocks are referenced in place).
// With `original`, original blocks are added at one printer's worth so the
// mix is 75% printed-and-scanned, 25% original.
DatasetManifest build_composite(const std::vector<DatasetManifest>& parts,
                                const std::optional<DatasetManifest>& original,
                                const std::string& out_dir, std::uint64_t seed);

} // namespace psf::harness

#endif
