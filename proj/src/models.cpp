#include "psf/models.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "psf/error.hpp"

namespace psf::models {

using nn::Model;

namespace {

int iround(double x) { return static_cast<int>(std::lround(x)); }

int scaled_width(int full, double scale, int floor_at) {
    return std::max(floor_at, iround(full * scale));
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string join_labels(const std::vector<std::string>& labels) {
    std::string out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (i) out += ",";
        out += labels[i];
    }
    return out;
}

} // namespace

const char* family_name(Family family) {
    switch (family) {
        case Family::Bayar2016: return "bayar2016";
        case Family::XceptionMini: return "xception_mini";
        case Family::Proposed: return "proposed";
    }
    throw UsageError("unknown model family");
}

Family family_from_name(const std::string& name) {
    if (name == "bayar2016") return Family::Bayar2016;
    if (name == "xception_mini") return Family::XceptionMini;
    if (name == "proposed") return Family::Proposed;
    throw UsageError("unknown model family: " + name);
}

nn::TrainConfig family_train_defaults(Family family) {
    nn::TrainConfig cfg;
    cfg.momentum = 0.9;
    if (family == Family::Bayar2016) {
        // The fully connected head collapses into dead ReLUs under larger
        // rates at batch size 8; 5e-4 with the step schedule trains cleanly.
        cfg.lr0 = 0.0005;
        cfg.schedule = nn::ScheduleKind::Step;
    } else {
        cfg.lr0 = 0.01;
        cfg.schedule = nn::ScheduleKind::Polynomial;
    }
    return cfg;
}

void ModelConfig::normalize() {
    input_channels = family == Family::Bayar2016 ? 1 : 3;
    if (!labels.empty())
        num_classes = static_cast<int>(labels.size());
}

void ModelConfig::validate() const {
    if (num_classes < 2 || num_classes > 16)
        throw UsageError("model config: num_classes must be in [2, 16]");
    if (!labels.empty() && static_cast<int>(labels.size()) != num_classes)
        throw UsageError("model config: labels do not match num_classes");
    const int expected_channels = family == Family::Bayar2016 ? 1 : 3;
    if (input_channels != expected_channels)
        throw UsageError(std::string("model config: ") + family_name(family) +
                         " requires input_channels = " + std::to_string(expected_channels));
    if (input_size < 32)
        throw UsageError("model config: input_size must be >= 32");
    if (depth_scale <= 0 || depth_scale > 1 || width_scale <= 0 || width_scale > 1)
        throw UsageError("model config: scales must be in (0, 1]");
    if (family != Family::Bayar2016 && separable_layers() < 4)
        throw UsageError("model config: depth_scale yields fewer than 4 separable layers");
}

int ModelConfig::separable_layers() const {
    // Round half to even so the quarter scale of 34 lands on 8.
    return static_cast<int>(std::nearbyint(34 * depth_scale));
}

std::string ModelConfig::serialize() const {
    std::ostringstream out;
    out << "family=" << family_name(family) << "\n"
        << "num_classes=" << num_classes << "\n"
        << "input_size=" << input_size << "\n"
        << "input_channels=" << input_channels << "\n"
        << "depth_scale=" << depth_scale << "\n"
        << "width_scale=" << width_scale << "\n"
        << "labels=" << join_labels(labels) << "\n";
    return out.str();
}

ModelConfig ModelConfig::deserialize(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos)
            kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    ModelConfig cfg;
    try {
        cfg.family = family_from_name(kv.at("family"));
        cfg.num_classes = std::stoi(kv.at("num_classes"));
        cfg.input_size = std::stoi(kv.at("input_size"));
        cfg.input_channels = std::stoi(kv.at("input_channels"));
        cfg.depth_scale = std::stod(kv.at("depth_scale"));
        cfg.width_scale = std::stod(kv.at("width_scale"));
    } catch (const std::out_of_range&) {
        throw DataError("model config: missing field");
    }
    cfg.labels.clear();
    std::istringstream ls(kv["labels"]);
    std::string label;
    while (std::getline(ls, label, ','))
        if (!label.empty())
            cfg.labels.push_back(label);
    return cfg;
}

std::uint64_t ModelConfig::digest() const {
    return fnv1a(serialize());
}

template <typename T>
std::unique_ptr<Model<T>> build_bayar(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (cfg.family != Family::Bayar2016)
        throw UsageError("build_bayar: config family mismatch");

    // Scaled copy of the constrained-conv three-layer network: constrained
    // 5x5, 7x7 stride-2 conv, 5x5 conv, two 3x3/2 max pools between them,
    // then three fully connected layers.
    const int c0 = scaled_width(12, cfg.width_scale, 3);
    const int c1 = scaled_width(64, cfg.width_scale, 8);
    const int c2 = scaled_width(48, cfg.width_scale, 8);
    const int fc = scaled_width(256, cfg.width_scale, 16);

    int dim = cfg.input_size;
    auto shrink = [&dim](int k, int s) { dim = (dim - k) / s + 1; };
    shrink(5, 1);
    shrink(7, 2);
    shrink(3, 2);
    shrink(5, 1);
    shrink(3, 2);
    if (dim < 1)
        throw UsageError("build_bayar: input_size too small for the layer stack");

    auto model = std::make_unique<Model<T>>();
    model->add(std::make_unique<nn::ConstrainedConv2d<T>>("conv1", 1, c0));
    model->add(std::make_unique<nn::Conv2d<T>>("conv2", c0, c1, 7, 2));
    model->add(std::make_unique<nn::ReLU<T>>());
    model->add(std::make_unique<nn::MaxPool2d<T>>(3, 2));
    model->add(std::make_unique<nn::Conv2d<T>>("conv3", c1, c2, 5, 1));
    model->add(std::make_unique<nn::ReLU<T>>());
    model->add(std::make_unique<nn::MaxPool2d<T>>(3, 2));
    model->add(std::make_unique<nn::Flatten<T>>());
    model->add(std::make_unique<nn::Linear<T>>("fc1", c2 * dim * dim, fc));
    model->add(std::make_unique<nn::ReLU<T>>());
    model->add(std::make_unique<nn::Linear<T>>("fc2", fc, fc));
    model->add(std::make_unique<nn::ReLU<T>>());
    model->add(std::make_unique<nn::Linear<T>>("fc3", fc, cfg.num_classes));

    Rng rng(mix_seed(seed, fnv1a("weights")));
    model->init_weights(rng);
    return model;
}

namespace {

// Shared body of proposed / xception_mini: they differ only in whether the
// first 5x5 layer is constrained.
template <typename T>
std::unique_ptr<Model<T>> build_separable_stack(const ModelConfig& cfg, std::uint64_t seed,
                                                bool constrained_first) {
    cfg.validate();
    const int c0 = scaled_width(12, cfg.width_scale, 3);
    const int base = scaled_width(32, cfg.width_scale, 4);
    const int k_total = cfg.separable_layers();

    auto model = std::make_unique<Model<T>>();
    if (constrained_first)
        model->add(std::make_unique<nn::ConstrainedConv2d<T>>("conv1", 3, c0));
    else
        model->add(std::make_unique<nn::Conv2d<T>>("conv1", 3, c0, 5, 1));
    model->add(std::make_unique<nn::ReLU<T>>());
    model->add(std::make_unique<nn::Conv2d<T>>("conv2", c0, base, 3, 1));
    model->add(std::make_unique<nn::ReLU<T>>());
    model->add(std::make_unique<nn::MaxPool2d<T>>(2, 2));

    // Four groups of separable blocks, a max pool between consecutive
    // groups, channel width doubling with each pool.
    int in_ch = base;
    int layer_idx = 0;
    for (int group = 0; group < 4; ++group) {
        const int blocks = k_total / 4 + (group < k_total % 4 ? 1 : 0);
        const int out_ch = base << (group + 1);
        for (int b = 0; b < blocks; ++b) {
            model->add(std::make_unique<nn::SeparableConv2d<T>>(
                "sep" + std::to_string(++layer_idx), in_ch, out_ch, 3, 1));
            model->add(std::make_unique<nn::ReLU<T>>());
            in_ch = out_ch;
        }
        if (group < 3)
            model->add(std::make_unique<nn::MaxPool2d<T>>(2, 2));
    }
    model->add(std::make_unique<nn::GlobalAvgPool<T>>());
    model->add(std::make_unique<nn::Linear<T>>("fc", in_ch, cfg.num_classes));

    Rng rng(mix_seed(seed, fnv1a("weights")));
    model->init_weights(rng);
    return model;
}

} // namespace

template <typename T>
std::unique_ptr<Model<T>> build_proposed(const ModelConfig& cfg, std::uint64_t seed) {
    if (cfg.family != Family::Proposed)
        throw UsageError("build_proposed: config family mismatch");
    return build_separable_stack<T>(cfg, seed, true);
}

template <typename T>
std::unique_ptr<Model<T>> build_xception_mini(const ModelConfig& cfg, std::uint64_t seed) {
    if (cfg.family != Family::XceptionMini)
        throw UsageError("build_xception_mini: config family mismatch");
    return build_separable_stack<T>(cfg, seed, false);
}

template <typename T>
std::unique_ptr<Model<T>> build_model(const ModelConfig& cfg, std::uint64_t seed) {
    switch (cfg.family) {
        case Family::Bayar2016: return build_bayar<T>(cfg, seed);
        case Family::Proposed: return build_proposed<T>(cfg, seed);
        case Family::XceptionMini: return build_xception_mini<T>(cfg, seed);
    }
    throw UsageError("unknown model family");
}

nn::Tensor<float> block_to_input(const imaging::ImageBuffer& block, const ModelConfig& cfg) {
    if (block.height != cfg.input_size || block.width != cfg.input_size)
        throw DataError("block size does not match model input_size");
    const imaging::ImageBuffer* src = &block;
    imaging::ImageBuffer green;
    if (cfg.input_channels == 1 && block.channels == 3) {
        green = imaging::green_channel(block);
        src = &green;
    } else if (block.channels != cfg.input_channels) {
        throw DataError("block channels do not match model input_channels");
    }
    nn::Tensor<float> x({1, cfg.input_channels, cfg.input_size, cfg.input_size});
    const std::size_t hw = static_cast<std::size_t>(cfg.input_size) * cfg.input_size;
    for (int ch = 0; ch < cfg.input_channels; ++ch)
        for (std::size_t i = 0; i < hw; ++i)
            x.v[static_cast<std::size_t>(ch) * hw + i] =
                normalize_sample(src->data[i * src->channels + ch]);
    return x;
}

Prediction predict(nn::Model<float>& model, const ModelConfig& cfg,
                   const imaging::ImageBuffer& block) {
    nn::Tensor<float> logits = model.forward(block_to_input(block, cfg), false);
    nn::Tensor<float> probs = nn::softmax(logits);
    Prediction pred;
    pred.probabilities.assign(probs.v.begin(), probs.v.end());
    for (std::size_t i = 1; i < pred.probabilities.size(); ++i)
        if (pred.probabilities[i] > pred.probabilities[static_cast<std::size_t>(pred.label_index)])
            pred.label_index = static_cast<int>(i);
    if (!cfg.labels.empty())
        pred.label = cfg.labels[static_cast<std::size_t>(pred.label_index)];
    return pred;
}

// ---- checkpoint I/O ----

namespace {

constexpr char kMagic[8] = {'P', 'S', 'F', 'C', 'K', 'P', 'T', '\x01'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8),
                 static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
    out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    put_u32(out, static_cast<std::uint32_t>(v));
    put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in)
        throw CorruptStreamError("checkpoint: truncated");
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
           (std::uint32_t(b[3]) << 24);
}

std::uint64_t get_u64(std::istream& in) {
    const std::uint64_t lo = get_u32(in);
    const std::uint64_t hi = get_u32(in);
    return lo | (hi << 32);
}

} // namespace

void save_checkpoint(const std::string& path, const ModelConfig& cfg, nn::Model<float>& model) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw DataError("checkpoint: cannot open for writing: " + path);
    out.write(kMagic, 8);
    put_u32(out, kVersion);
    const std::string config_text = cfg.serialize();
    put_u64(out, fnv1a(config_text));
    put_u32(out, static_cast<std::uint32_t>(config_text.size()));
    out.write(config_text.data(), static_cast<std::streamsize>(config_text.size()));

    const auto params = model.params();
    put_u32(out, static_cast<std::uint32_t>(params.size()));
    for (const nn::Param<float>* p : params) {
        put_u32(out, static_cast<std::uint32_t>(p->name.size()));
        out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
        put_u32(out, static_cast<std::uint32_t>(p->shape.size()));
        for (int d : p->shape)
            put_u32(out, static_cast<std::uint32_t>(d));
        for (float w : p->w) {
            std::uint32_t bits;
            std::memcpy(&bits, &w, 4);
            put_u32(out, bits);
        }
    }
    if (!out)
        throw DataError("checkpoint: write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FileMissingError("checkpoint: cannot open: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw CorruptStreamError("checkpoint: bad magic: " + path);
    if (get_u32(in) != kVersion)
        throw UnsupportedFormatError("checkpoint: unsupported version: " + path);

    const std::uint64_t stored_digest = get_u64(in);
    const std::uint32_t config_len = get_u32(in);
    std::string config_text(config_len, '\0');
    in.read(config_text.data(), config_len);
    if (!in)
        throw CorruptStreamError("checkpoint: truncated config");
    if (fnv1a(config_text) != stored_digest)
        throw DataError("checkpoint: config digest mismatch: " + path);

    Checkpoint ckpt;
    ckpt.config = ModelConfig::deserialize(config_text);
    ckpt.config.validate();
    ckpt.model = build_model<float>(ckpt.config, 0);

    std::map<std::string, nn::Param<float>*> by_name;
    for (nn::Param<float>* p : ckpt.model->params())
        by_name[p->name] = p;

    const std::uint32_t param_count = get_u32(in);
    if (param_count != by_name.size())
        throw DataError("checkpoint: parameter count mismatch: " + path);
    for (std::uint32_t i = 0; i < param_count; ++i) {
        const std::uint32_t name_len = get_u32(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const std::uint32_t rank = get_u32(in);
        std::vector<int> shape(rank);
        for (std::uint32_t d = 0; d < rank; ++d)
            shape[d] = static_cast<int>(get_u32(in));
        auto it = by_name.find(name);
        if (it == by_name.end())
            throw DataError("checkpoint: unknown parameter '" + name + "'");
        nn::Param<float>* p = it->second;
        if (p->shape != shape)
            throw DataError("checkpoint: shape mismatch for '" + name + "'");
        for (float& w : p->w) {
            const std::uint32_t bits = get_u32(in);
            std::memcpy(&w, &bits, 4);
        }
    }
    return ckpt;
}

template std::unique_ptr<Model<float>> build_model<float>(const ModelConfig&, std::uint64_t);
template std::unique_ptr<Model<double>> build_model<double>(const ModelConfig&, std::uint64_t);
template std::unique_ptr<Model<float>> build_bayar<float>(const ModelConfig&, std::uint64_t);
template std::unique_ptr<Model<double>> build_bayar<double>(const ModelConfig&, std::uint64_t);
template std::unique_ptr<Model<float>> build_proposed<float>(const ModelConfig&, std::uint64_t);
template std::unique_ptr<Model<double>> build_proposed<double>(const ModelConfig&, std::uint64_t);
template std::unique_ptr<Model<float>> build_xception_mini<float>(const ModelConfig&, std::uint64_t);
template std::unique_ptr<Model<double>> build_xception_mini<double>(const ModelConfig&, std::uint64_t);

} // namespace psf::models
