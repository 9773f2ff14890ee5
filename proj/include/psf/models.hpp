#ifndef PSF_MODELS_HPP
#define PSF_MODELS_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "psf/image.hpp"
#include "psf/nn/layers.hpp"
#include "psf/nn/optim.hpp"

namespace psf::models {

enum class Family { Bayar2016, XceptionMini, Proposed };

const char* family_name(Family family);
Family family_from_name(const std::string& name);

// Training hyperparameters per family: the shallow constrained network uses
// momentum 0.95 with the step schedule, the two deep separable networks use
// momentum 0.9 with polynomial decay.
nn::TrainConfig family_train_defaults(Family family);

// Desk-scale detector description. depth_scale / width_scale shrink the
// full-size architectures (34 separable layers, 299px inputs) to something
// that trains in minutes on a CPU; the defaults divide both by four.
struct ModelConfig {
    Family family = Family::Proposed;
    int num_classes = 4;
    int input_size = 64;
    int input_channels = 3;  // forced: 1 for bayar2016, 3 otherwise
    double depth_scale = 0.25;
    double width_scale = 0.25;
    std::vector<std::string> labels;

    // Fills input_channels from the family and labels-driven num_classes.
    void normalize();
    void validate() const;

    std::string serialize() const;
    static ModelConfig deserialize(const std::string& text);
    std::uint64_t digest() const;

    // Separable-block count for proposed / xception_mini.
    int separable_layers() const;
};

// All three builders produce a plain layer stack; weights are initialized
// from `seed` (constrained layers are projected at init).
template <typename T>
std::unique_ptr<nn::Model<T>> build_model(const ModelConfig& cfg, std::uint64_t seed);

template <typename T>
std::unique_ptr<nn::Model<T>> build_bayar(const ModelConfig& cfg, std::uint64_t seed);
template <typename T>
std::unique_ptr<nn::Model<T>> build_proposed(const ModelConfig& cfg, std::uint64_t seed);
template <typename T>
std::unique_ptr<nn::Model<T>> build_xception_mini(const ModelConfig& cfg, std::uint64_t seed);

// Zero-mean input scaling. The residual signals the detectors feed on are a
// few gray levels wide; dividing by 32 instead of 255 keeps them at a
// magnitude the first layers can propagate.
inline float normalize_sample(std::uint8_t v) {
    return (static_cast<float>(v) - 128.0f) / 32.0f;
}

// Block -> (N=1,C,H,W) input tensor via normalize_sample. A 3-channel block
// feeding a 1-channel model is reduced to its green layer.
nn::Tensor<float> block_to_input(const imaging::ImageBuffer& block, const ModelConfig& cfg);

struct Prediction {
    int label_index = 0;
    std::string label;
    std::vector<float> probabilities;
};

Prediction predict(nn::Model<float>& model, const ModelConfig& cfg,
                   const imaging::ImageBuffer& block);

// Checkpoint file: magic, version, config digest, serialized config, then
// per-parameter records (name, shape, float32 payload), all little-endian.
// Save/load round-trips bit-exactly; a digest mismatch on load is an error.
void save_checkpoint(const std::string& path, const ModelConfig& cfg,
                     nn::Model<float>& model);

struct Checkpoint {
    ModelConfig config;
    std::unique_ptr<nn::Model<float>> model;
};

Checkpoint load_checkpoint(const std::string& path);

} // namespace psf::models

#endif
