#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>

#include "psf/error.hpp"
#include "psf/models.hpp"
#include "testutil.hpp"

using namespace psf;
using models::Family;
using models::ModelConfig;

namespace {

ModelConfig config(Family family, int classes = 4, int input = 64) {
    ModelConfig cfg;
    cfg.family = family;
    cfg.input_size = input;
    cfg.labels.clear();
    for (int i = 0; i < classes; ++i)
        cfg.labels.push_back("c" + std::to_string(i));
    cfg.num_classes = classes;
    cfg.normalize();
    return cfg;
}

nn::Tensor<float> random_input(const ModelConfig& cfg, int batch, std::uint64_t seed) {
    Rng rng(seed);
    nn::Tensor<float> x({batch, cfg.input_channels, cfg.input_size, cfg.input_size});
    for (float& v : x.v)
        v = static_cast<float>(rng.uniform());
    return x;
}

} // namespace

TEST_CASE("bayar builder shape contract and constraint") {
    const ModelConfig cfg = config(Family::Bayar2016);
    CHECK(cfg.input_channels == 1);
    auto model = models::build_bayar<float>(cfg, 1);

    const auto logits = model->forward(random_input(cfg, 2, 5));
    CHECK(logits.shape == std::vector<int>{2, 4});
    for (float v : logits.v)
        CHECK(std::isfinite(v));

    CHECK(model->has_constrained_layer());
    CHECK(model->constrained_satisfied(1e-6));
    CHECK(model->count_kind("constrained_conv2d") == 1);
    CHECK(model->count_kind("conv2d") == 2);
    CHECK(model->count_kind("maxpool2d") == 2);
    CHECK(model->count_kind("linear") == 3);
}

TEST_CASE("bayar parameter count matches the closed form") {
    const ModelConfig cfg = config(Family::Bayar2016);
    auto model = models::build_bayar<float>(cfg, 1);

    // widths at width_scale 0.25: 3, 16, 12, fc 64; input 64px
    // conv1 5x5x1x3+3, conv2 7x7x3x16+16, conv3 5x5x16x12+12
    // spatial after the stack: 64->60->27->13->9->4, flatten 12*4*4=192
    const std::size_t expected = (5 * 5 * 1 * 3 + 3) + (7 * 7 * 3 * 16 + 16) +
                                 (5 * 5 * 16 * 12 + 12) + (192 * 64 + 64) + (64 * 64 + 64) +
                                 (64 * 4 + 4);
    CHECK(model->param_count() == expected);
}

TEST_CASE("proposed builder layer counts at full and desk depth") {
    ModelConfig cfg = config(Family::Proposed);
    cfg.depth_scale = 1.0;
    auto full = models::build_proposed<float>(cfg, 1);
    CHECK(full->count_kind("separable_conv2d") == 34);
    CHECK(full->count_kind("maxpool2d") == 4);
    CHECK(full->count_kind("global_avg_pool") == 1);
    CHECK(full->count_kind("linear") == 1);
    CHECK(full->count_kind("constrained_conv2d") == 1);
    CHECK(full->count_kind("conv2d") == 1);

    cfg.depth_scale = 0.25;
    auto mini = models::build_proposed<float>(cfg, 1);
    CHECK(mini->count_kind("separable_conv2d") == 8);
    CHECK(mini->count_kind("maxpool2d") == 4);
    CHECK(mini->count_kind("global_avg_pool") == 1);
    CHECK(mini->count_kind("linear") == 1);

    const auto logits = mini->forward(random_input(cfg, 3, 6));
    CHECK(logits.shape == std::vector<int>{3, 4});
    for (float v : logits.v)
        CHECK(std::isfinite(v));

    cfg.depth_scale = 0.05;  // K = 2 < 4
    CHECK_THROWS_AS(models::build_proposed<float>(cfg, 1), UsageError);
}

TEST_CASE("xception_mini mirrors proposed without the constraint") {
    const ModelConfig prop_cfg = config(Family::Proposed);
    const ModelConfig xcep_cfg = config(Family::XceptionMini);
    auto prop = models::build_proposed<float>(prop_cfg, 1);
    auto xcep = models::build_xception_mini<float>(xcep_cfg, 1);

    CHECK_FALSE(xcep->has_constrained_layer());
    CHECK(xcep->count_kind("constrained_conv2d") == 0);
    CHECK(xcep->count_kind("separable_conv2d") == prop->count_kind("separable_conv2d"));

    const auto pc = static_cast<double>(prop->param_count());
    const auto xc = static_cast<double>(xcep->param_count());
    CHECK(std::abs(pc - xc) / pc < 0.01);

    // negative control: the plain first layer does not satisfy the constraint
    auto* first = dynamic_cast<nn::Conv2d<float>*>(xcep->layers()[0].get());
    REQUIRE(first != nullptr);
    const auto& w = first->weight().w;
    bool satisfies = true;
    for (int oc = 0; oc < first->out_channels() && satisfies; ++oc)
        for (int ic = 0; ic < first->in_channels() && satisfies; ++ic) {
            const float center = w[((static_cast<std::size_t>(oc) * 3 + ic) * 5 + 2) * 5 + 2];
            satisfies = std::abs(center + 1.0f) < 1e-6f;
        }
    CHECK_FALSE(satisfies);

    const auto logits = xcep->forward(random_input(xcep_cfg, 2, 7));
    CHECK(logits.shape == std::vector<int>{2, 4});
}

TEST_CASE("six class configs build") {
    const ModelConfig cfg = config(Family::Proposed, 6);
    auto model = models::build_model<float>(cfg, 2);
    CHECK(model->forward(random_input(cfg, 1, 8)).shape == std::vector<int>{1, 6});
}

TEST_CASE("config validation catches mismatches") {
    ModelConfig cfg = config(Family::Bayar2016);
    cfg.input_channels = 3;
    CHECK_THROWS_AS(cfg.validate(), UsageError);

    cfg = config(Family::Proposed);
    cfg.num_classes = 1;
    cfg.labels = {"a"};
    CHECK_THROWS_AS(cfg.validate(), UsageError);

    cfg = config(Family::Proposed);
    CHECK_THROWS_AS(models::build_bayar<float>(cfg, 1), UsageError);
}

TEST_CASE("predict returns a normalized distribution and the argmax") {
    const ModelConfig cfg = config(Family::Proposed, 4, 64);
    auto model = models::build_model<float>(cfg, 3);
    const imaging::ImageBuffer block = test::random_image(64, 64, 3, 9);

    const auto pred = models::predict(*model, cfg, block);
    REQUIRE(pred.probabilities.size() == 4);
    double sum = 0.0;
    for (float p : pred.probabilities)
        sum += p;
    CHECK(std::abs(sum - 1.0) < 1e-6);
    CHECK(pred.label == cfg.labels[static_cast<std::size_t>(pred.label_index)]);

    // agrees with forward + argmax, and is deterministic
    const auto logits = model->forward(models::block_to_input(block, cfg));
    int arg = 0;
    for (int i = 1; i < 4; ++i)
        if (logits.v[static_cast<std::size_t>(i)] > logits.v[static_cast<std::size_t>(arg)])
            arg = i;
    CHECK(pred.label_index == arg);
    CHECK(models::predict(*model, cfg, block).label_index == pred.label_index);

    // green-channel reduction for 1-channel models
    const ModelConfig bayar = config(Family::Bayar2016, 4, 64);
    auto bmodel = models::build_model<float>(bayar, 3);
    CHECK_NOTHROW(models::predict(*bmodel, bayar, block));

    CHECK_THROWS_AS(models::predict(*model, cfg, test::random_image(32, 32, 3, 1)), DataError);
}

TEST_CASE("checkpoint round trip is bit exact") {
    test::TempDir tmp("ckpt");
    const ModelConfig cfg = config(Family::Proposed, 4, 64);
    auto model = models::build_model<float>(cfg, 11);
    const std::string path = tmp.file("model.ckpt");
    models::save_checkpoint(path, cfg, *model);

    auto loaded = models::load_checkpoint(path);
    CHECK(loaded.config.family == cfg.family);
    CHECK(loaded.config.labels == cfg.labels);
    const auto pa = model->params();
    const auto pb = loaded.model->params();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        CHECK(pa[i]->name == pb[i]->name);
        CHECK(pa[i]->w == pb[i]->w);  // bitwise float equality
    }
}

TEST_CASE("checkpoint digest mismatch is rejected") {
    test::TempDir tmp("ckpt2");
    const ModelConfig cfg = config(Family::Proposed, 4, 64);
    auto model = models::build_model<float>(cfg, 12);
    const std::string path = tmp.file("model.ckpt");
    models::save_checkpoint(path, cfg, *model);

    std::string bytes = test::read_file_bytes(path);
    // flip one byte inside the serialized config region
    bytes[30] = static_cast<char>(bytes[30] ^ 0x01);
    std::ofstream(path, std::ios::binary | std::ios::trunc) << bytes;
    CHECK_THROWS_AS(models::load_checkpoint(path), DataError);

    CHECK_THROWS_AS(models::load_checkpoint(tmp.file("missing.ckpt")), FileMissingError);
}

TEST_CASE("model config text round trip") {
    ModelConfig cfg = config(Family::XceptionMini, 6, 96);
    cfg.depth_scale = 0.5;
    cfg.width_scale = 0.125;
    const ModelConfig back = ModelConfig::deserialize(cfg.serialize());
    CHECK(back.family == cfg.family);
    CHECK(back.num_classes == cfg.num_classes);
    CHECK(back.input_size == cfg.input_size);
    CHECK(back.depth_scale == cfg.depth_scale);
    CHECK(back.width_scale == cfg.width_scale);
    CHECK(back.labels == cfg.labels);
    CHECK(back.digest() == cfg.digest());
}
