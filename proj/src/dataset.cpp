#include "psf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "pixelmath.hpp"
#include "psf/error.hpp"

namespace fs = std::filesystem;

namespace psf::harness {

// ---- manifest ----

namespace {

std::string field(const std::string& line, const std::string& key, int lineno) {
    const std::string needle = key + "=";
    std::size_t start = 0;
    while (start < line.size()) {
        const std::size_t end = line.find('\t', start);
        const std::string tok = line.substr(start, end == std::string::npos ? end : end - start);
        if (tok.rfind(needle, 0) == 0)
            return tok.substr(needle.size());
        if (end == std::string::npos)
            break;
        start = end + 1;
    }
    throw CorruptStreamError("manifest: missing field '" + key + "' at line " +
                             std::to_string(lineno));
}

} // namespace

std::string DatasetManifest::serialize() const {
    std::ostringstream out;
    out << "psf-manifest 1\n";
    out << "seed=" << seed << "\n";
    out << "class_set=" << class_set << "\n";
    out << "block_size=" << block_size << "\n";
    out << "selection=" << selection << "\n";
    out << "full_dir=" << full_dir << "\n";
    out << "\n";
    for (const ManifestRecord& r : records) {
        out << "block=" << r.block_path << "\tlabel=" << r.label << "\tsource=" << r.source
            << "\tsplit=" << r.split << "\tparent=" << r.parent_id << "\trow=" << r.row
            << "\tcol=" << r.col << "\n";
    }
    return out.str();
}

void DatasetManifest::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw DataError("manifest: cannot write " + path);
    out << serialize();
}

DatasetManifest DatasetManifest::load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw FileMissingError("manifest: cannot open " + path);
    DatasetManifest m;
    m.dir = fs::absolute(fs::path(path)).parent_path().string();

    std::string line;
    int lineno = 0;
    if (!std::getline(in, line) || line != "psf-manifest 1")
        throw CorruptStreamError("manifest: bad header in " + path);
    ++lineno;
    bool in_header = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (in_header) {
            if (line.empty()) {
                in_header = false;
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw CorruptStreamError("manifest: bad header line " + std::to_string(lineno));
            const std::string key = line.substr(0, eq);
            const std::string value = line.substr(eq + 1);
            if (key == "seed")
                m.seed = std::stoull(value);
            else if (key == "class_set")
                m.class_set = value;
            else if (key == "block_size")
                m.block_size = std::stoi(value);
            else if (key == "selection")
                m.selection = value;
            else if (key == "full_dir")
                m.full_dir = value;
            continue;
        }
        if (line.empty())
            continue;
        ManifestRecord r;
        r.block_path = field(line, "block", lineno);
        r.label = field(line, "label", lineno);
        r.source = field(line, "source", lineno);
        r.split = field(line, "split", lineno);
        r.parent_id = field(line, "parent", lineno);
        r.row = std::stoi(field(line, "row", lineno));
        r.col = std::stoi(field(line, "col", lineno));
        m.records.push_back(std::move(r));
    }
    return m;
}

std::string DatasetManifest::resolve(const std::string& rel_path) const {
    const fs::path p(rel_path);
    if (p.is_absolute())
        return rel_path;
    return (fs::path(dir) / p).string();
}

std::vector<std::string> DatasetManifest::distinct_labels() const {
    std::set<std::string> s;
    for (const auto& r : records)
        s.insert(r.label);
    return {s.begin(), s.end()};
}

std::vector<const ManifestRecord*> DatasetManifest::split_records(const std::string& split) const {
    std::vector<const ManifestRecord*> out;
    for (const auto& r : records)
        if (r.split == split)
            out.push_back(&r);
    return out;
}

bool DatasetManifest::split_is_leak_free() const {
    std::map<std::string, std::string> seen;
    for (const auto& r : records) {
        auto [it, inserted] = seen.emplace(r.parent_id, r.split);
        if (!inserted && it->second != r.split)
            return false;
    }
    return true;
}

// ---- synthetic corpus ----

namespace {

using detail::FloatImage;

void add_value_noise(FloatImage& img, Rng& rng, int lattice, double amplitude) {
    const int lh = img.height / lattice + 2;
    const int lw = img.width / lattice + 2;
    std::vector<double> grid(static_cast<std::size_t>(lh) * lw);
    for (double& v : grid)
        v = rng.uniform() * 2.0 - 1.0;
    // Per-channel gains keep the field mostly luminance-like.
    const double gains[3] = {0.8 + 0.4 * rng.uniform(), 0.8 + 0.4 * rng.uniform(),
                             0.8 + 0.4 * rng.uniform()};
    for (int r = 0; r < img.height; ++r) {
        const double gr = static_cast<double>(r) / lattice;
        const int r0 = static_cast<int>(gr);
        const double fr = gr - r0;
        for (int c = 0; c < img.width; ++c) {
            const double gc = static_cast<double>(c) / lattice;
            const int c0 = static_cast<int>(gc);
            const double fc = gc - c0;
            const double top = grid[static_cast<std::size_t>(r0) * lw + c0] * (1 - fc) +
                               grid[static_cast<std::size_t>(r0) * lw + c0 + 1] * fc;
            const double bot = grid[static_cast<std::size_t>(r0 + 1) * lw + c0] * (1 - fc) +
                               grid[static_cast<std::size_t>(r0 + 1) * lw + c0 + 1] * fc;
            const double v = (top * (1 - fr) + bot * fr) * amplitude;
            for (int ch = 0; ch < 3; ++ch)
                img.at(ch, r, c) += v * gains[ch];
        }
    }
}

double smoothstep(double edge0, double edge1, double x) {
    const double t = std::clamp((x - edge0) / (edge1 - edge0), 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

void add_shape(FloatImage& img, Rng& rng) {
    const bool ellipse = rng.uniform() < 0.6;
    const double cy = rng.uniform() * img.height;
    const double cx = rng.uniform() * img.width;
    const double ry = (0.05 + 0.22 * rng.uniform()) * img.height;
    const double rx = (0.05 + 0.22 * rng.uniform()) * img.width;
    const double alpha = 0.35 + 0.55 * rng.uniform();
    const double soft = 1.5 + 2.5 * rng.uniform();  // edge width, pixels
    double color[3];
    for (double& ch : color)
        ch = 20.0 + 215.0 * rng.uniform();

    const int r_lo = std::max(0, static_cast<int>(cy - ry - soft));
    const int r_hi = std::min(img.height - 1, static_cast<int>(cy + ry + soft));
    const int c_lo = std::max(0, static_cast<int>(cx - rx - soft));
    const int c_hi = std::min(img.width - 1, static_cast<int>(cx + rx + soft));
    for (int r = r_lo; r <= r_hi; ++r) {
        for (int c = c_lo; c <= c_hi; ++c) {
            double coverage;
            if (ellipse) {
                const double d = std::sqrt(((r - cy) / ry) * ((r - cy) / ry) +
                                           ((c - cx) / rx) * ((c - cx) / rx));
                coverage = 1.0 - smoothstep(1.0 - soft / std::min(rx, ry), 1.0, d);
            } else {
                const double dy = std::abs(r - cy) - ry;
                const double dx = std::abs(c - cx) - rx;
                coverage = (1.0 - smoothstep(-soft, 0.0, dy)) * (1.0 - smoothstep(-soft, 0.0, dx));
            }
            if (coverage <= 0.0)
                continue;
            const double a = alpha * coverage;
            for (int ch = 0; ch < 3; ++ch)
                img.at(ch, r, c) = img.at(ch, r, c) * (1.0 - a) + color[ch] * a;
        }
    }
}

} // namespace

imaging::ImageBuffer synth_image(int height, int width, Rng& rng) {
    FloatImage img(height, width, 3);

    // Linear gradient between two random colors, random orientation.
    double c0[3], c1[3];
    for (int ch = 0; ch < 3; ++ch) {
        c0[ch] = 30.0 + 195.0 * rng.uniform();
        c1[ch] = 30.0 + 195.0 * rng.uniform();
    }
    const double theta = rng.uniform() * 2.0 * 3.14159265358979323846;
    const double dy = std::sin(theta), dx = std::cos(theta);
    const double span = std::abs(dy) * height + std::abs(dx) * width;
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            double t = (dy * r + dx * c) / span;
            t = std::clamp(t + 0.5, 0.0, 1.0);
            for (int ch = 0; ch < 3; ++ch)
                img.at(ch, r, c) = c0[ch] * (1.0 - t) + c1[ch] * t;
        }
    }

    add_value_noise(img, rng, std::max(8, width / 16), 16.0);
    add_value_noise(img, rng, std::max(4, width / 48), 7.0);
    add_value_noise(img, rng, 3, 5.0);  // fine texture, survives mild requant

    const int shapes = 4 + static_cast<int>(rng.uniform_below(6));
    for (int i = 0; i < shapes; ++i)
        add_shape(img, rng);

    // Mild sensor-like grain so pristine content is not noise-free.
    for (auto& plane : img.planes)
        for (double& v : plane)
            v += 0.5 * rng.normal();

    return detail::to_u8(img);
}

void generate_synth_corpus(const std::string& dir, int count, int height, int width,
                           std::uint64_t seed) {
    if (count < 1)
        throw UsageError("synth corpus: count must be >= 1");
    fs::create_directories(dir);
    for (int i = 0; i < count; ++i) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
        char name[32];
        std::snprintf(name, sizeof(name), "img%04d.png", i);
        imaging::save_image(synth_image(height, width, rng), (fs::path(dir) / name).string());
    }
}

// ---- dataset generation ----

std::string BlockSelectionSpec::str() const {
    if (mode == imaging::BlockSelection::All)
        return "all";
    return "central:" + std::to_string(central_k);
}

BlockSelectionSpec BlockSelectionSpec::parse(const std::string& text) {
    BlockSelectionSpec spec;
    if (text == "all")
        return spec;
    if (text.rfind("central:", 0) == 0) {
        spec.mode = imaging::BlockSelection::Central;
        try {
            spec.central_k = std::stoi(text.substr(8));
        } catch (const std::exception&) {
            throw UsageError("bad selection spec: " + text);
        }
        if (spec.central_k < 1)
            throw UsageError("selection central:k requires k >= 1");
        return spec;
    }
    throw UsageError("bad selection spec: " + text + " (expected all or central:<k>)");
}

namespace {

std::vector<std::string> list_images(const std::string& dir) {
    if (!fs::is_directory(dir))
        throw DataError("source directory does not exist: " + dir);
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file())
            continue;
        std::string ext = entry.path().extension().string();
        for (char& c : ext)
            c = static_cast<char>(std::tolower(c));
        if (ext == ".png" || ext == ".ppm" || ext == ".pgm" || ext == ".pnm")
            files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw DataError("no images found in " + dir);
    return files;
}

// 75/25 split by parent image, seeded.
std::map<std::string, std::string> assign_splits(std::vector<std::string> parents,
                                                 std::uint64_t seed) {
    std::sort(parents.begin(), parents.end());
    Rng rng(mix_seed(seed, 0x5117));
    rng.shuffle(parents);
    const std::size_t n_train = parents.size() * 3 / 4;
    std::map<std::string, std::string> split;
    for (std::size_t i = 0; i < parents.size(); ++i)
        split[parents[i]] = i < n_train ? "train" : "val";
    return split;
}

std::string block_filename(const std::string& parent, const std::string& label, int row,
                           int col) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "__%s__r%04d_c%04d.png", label.c_str(), row, col);
    return parent + buf;
}

std::string rel_to(const fs::path& base, const fs::path& target) {
    const fs::path rel = target.lexically_relative(base);
    return rel.empty() ? target.string() : rel.string();
}

} // namespace

DatasetManifest generate_dataset(const std::string& source_dir, bool six_classes,
                                 int block_size, const BlockSelectionSpec& selection,
                                 const std::string& out_dir, std::uint64_t seed,
                                 const manip::Params& params, bool keep_full) {
    const std::vector<std::string> sources = list_images(source_dir);
    const std::vector<manip::Kind> kinds = manip::class_set(six_classes);

    fs::create_directories(fs::path(out_dir) / "blocks");
    if (keep_full)
        fs::create_directories(fs::path(out_dir) / "full");

    std::vector<std::string> parents;
    parents.reserve(sources.size());
    for (const auto& path : sources)
        parents.push_back(fs::path(path).stem().string());
    const auto split = assign_splits(parents, seed);

    DatasetManifest manifest;
    manifest.seed = seed;
    manifest.class_set = six_classes ? "6c" : "4c";
    manifest.block_size = block_size;
    manifest.selection = selection.str();
    manifest.full_dir = keep_full ? "full" : "";
    manifest.dir = fs::absolute(out_dir).string();

    std::uint64_t image_index = 0;
    for (std::size_t pi = 0; pi < sources.size(); ++pi) {
        const imaging::ImageBuffer src = imaging::load_image(sources[pi]);
        if (src.channels != 3)
            throw DataError("source image is not RGB: " + sources[pi]);
        if (src.height < block_size || src.width < block_size)
            throw DataError("source image smaller than block size: " + sources[pi]);
        const std::string& parent = parents[pi];

        for (const manip::Kind kind : kinds) {
            const std::uint64_t img_seed = seed + image_index++;
            const imaging::ImageBuffer manipulated =
                manip::apply_manipulation(src, kind, params, img_seed);
            const std::string label = manip::tag(kind);
            if (keep_full)
                imaging::save_image(manipulated, (fs::path(out_dir) / "full" /
                                                  (parent + "__" + label + ".png"))
                                                     .string());
            const auto blocks = imaging::extract_blocks(manipulated, block_size, selection.mode,
                                                        selection.central_k, parent);
            for (const auto& b : blocks) {
                const std::string name = block_filename(parent, label, b.origin_row, b.origin_col);
                imaging::save_image(b.pixels, (fs::path(out_dir) / "blocks" / name).string());
                ManifestRecord r;
                r.block_path = "blocks/" + name;
                r.label = label;
                r.source = "original";
                r.split = split.at(parent);
                r.parent_id = parent;
                r.row = b.origin_row;
                r.col = b.origin_col;
                manifest.records.push_back(std::move(r));
            }
        }
    }

    manifest.save((fs::path(out_dir) / "manifest.txt").string());
    return manifest;
}

DatasetManifest printscan_dataset(const DatasetManifest& input,
                                  const printscan::PrinterProfile& profile,
                                  const std::string& out_dir, std::uint64_t seed) {
    printscan::validate_profile(profile);
    if (input.full_dir.empty())
        throw DataError("printscan_dataset: input manifest has no full images");

    fs::create_directories(fs::path(out_dir) / "blocks");
    const BlockSelectionSpec selection = BlockSelectionSpec::parse(input.selection);

    DatasetManifest manifest;
    manifest.seed = seed;
    manifest.class_set = input.class_set;
    manifest.block_size = input.block_size;
    manifest.selection = input.selection;
    manifest.full_dir = "";
    manifest.dir = fs::absolute(out_dir).string();

    // One chain pass per full manipulated image, in record order.
    std::map<std::pair<std::string, std::string>, std::uint64_t> image_seed;
    std::uint64_t image_index = 0;
    for (const auto& r : input.records) {
        const auto key = std::make_pair(r.parent_id, r.label);
        if (!image_seed.count(key))
            image_seed[key] = seed + image_index++;
    }

    std::map<std::pair<std::string, std::string>, std::vector<imaging::Block>> blocks_by_image;
    for (const auto& [key, img_seed] : image_seed) {
        const std::string full_path =
            input.resolve(input.full_dir + "/" + key.first + "__" + key.second + ".png");
        if (!fs::exists(full_path))
            throw DataError("printscan_dataset: missing full image " + full_path);
        const imaging::ImageBuffer full = imaging::load_image(full_path);
        const imaging::ImageBuffer scanned = printscan::simulate_printscan(full, profile, img_seed);
        blocks_by_image[key] = imaging::extract_blocks(scanned, input.block_size, selection.mode,
                                                       selection.central_k, key.first);
    }

    for (const auto& r : input.records) {
        const auto& blocks = blocks_by_image.at({r.parent_id, r.label});
        const imaging::Block* match = nullptr;
        for (const auto& b : blocks)
            if (b.origin_row == r.row && b.origin_col == r.col) {
                match = &b;
                break;
            }
        if (!match)
            throw DataError("printscan_dataset: block origin not reproduced for " + r.block_path);
        const std::string name = block_filename(r.parent_id, r.label, r.row, r.col);
        imaging::save_image(match->pixels, (fs::path(out_dir) / "blocks" / name).string());
        ManifestRecord nr = r;
        nr.block_path = "blocks/" + name;
        nr.source = profile.name;
        manifest.records.push_back(std::move(nr));
    }

    manifest.save((fs::path(out_dir) / "manifest.txt").string());
    return manifest;
}

DatasetManifest build_composite(const std::vector<DatasetManifest>& parts,
                                const std::optional<DatasetManifest>& original,
                                const std::string& out_dir, std::uint64_t seed) {
    if (parts.empty())
        throw UsageError("composite: need at least one input manifest");
    for (const auto& p : parts) {
        if (p.class_set != parts[0].class_set)
            throw DataError("composite: class sets differ between inputs");
        if (p.block_size != parts[0].block_size)
            throw DataError("composite: block sizes differ between inputs");
    }

    fs::create_directories(out_dir);
    const fs::path out_abs = fs::absolute(out_dir);

    DatasetManifest manifest;
    manifest.seed = seed;
    manifest.class_set = parts[0].class_set;
    manifest.block_size = parts[0].block_size;
    manifest.selection = parts[0].selection;
    manifest.full_dir = "";
    manifest.dir = out_abs.string();

    std::size_t total = 0;
    for (const auto& part : parts) {
        for (const auto& r : part.records) {
            ManifestRecord nr = r;
            nr.block_path = rel_to(out_abs, fs::path(part.resolve(r.block_path)));
            manifest.records.push_back(std::move(nr));
        }
        total += part.records.size();
    }

    if (original) {
        // One printer's worth of original blocks, sampled evenly per class.
        const std::size_t want = total / parts.size();
        const auto labels = original->distinct_labels();
        if (labels.empty())
            throw DataError("composite: original manifest is empty");
        std::map<std::string, std::vector<const ManifestRecord*>> by_label;
        for (const auto& r : original->records)
            by_label[r.label].push_back(&r);
        Rng rng(mix_seed(seed, 0xc0117));
        const std::size_t base_count = want / labels.size();
        std::size_t remainder = want % labels.size();
        for (const auto& label : labels) {
            auto& pool = by_label[label];
            std::size_t take = base_count + (remainder > 0 ? (--remainder, 1) : 0);
            if (take > pool.size())
                throw DataError("composite: not enough original '" + label + "' blocks");
            rng.shuffle(pool);
            for (std::size_t i = 0; i < take; ++i) {
                ManifestRecord nr = *pool[i];
                nr.block_path = rel_to(out_abs, fs::path(original->resolve(pool[i]->block_path)));
                manifest.records.push_back(std::move(nr));
            }
        }
    }

    manifest.save((out_abs / "manifest.txt").string());
    return manifest;
}

} // namespace psf::harness
