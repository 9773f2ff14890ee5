#ifndef PSF_NN_LAYERS_HPP
#define PSF_NN_LAYERS_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "psf/nn/tensor.hpp"
#include "psf/rng.hpp"

namespace psf::nn {

// Learnable coefficient block. `no_decay`, when non-empty, masks individual
// coefficients out of weight decay.
template <typename T>
struct Param {
    std::string name;
    std::vector<int> shape;
    std::vector<T> w;
    std::vector<T> g;
    std::vector<T> vel;
    std::vector<std::uint8_t> no_decay;

    Param() = default;
    Param(std::string n, std::vector<int> s)
        : name(std::move(n)), shape(std::move(s)) {
        const std::size_t count = Tensor<T>::numel_of(shape);
        w.assign(count, T(0));
        g.assign(count, T(0));
        vel.assign(count, T(0));
    }
    std::size_t numel() const { return w.size(); }
    void zero_grad() { std::fill(g.begin(), g.end(), T(0)); }
};

template <typename T>
class Layer {
public:
    virtual ~Layer() = default;
    virtual std::string kind() const = 0;
    // With train = true, forward() keeps whatever backward() needs; with
    // train = false it writes no layer state, so concurrent inference on a
    // frozen model is safe. backward() returns dL/dx and accumulates into
    // the parameter gradients.
    virtual Tensor<T> forward(const Tensor<T>& x, bool train) = 0;
    virtual Tensor<T> backward(const Tensor<T>& dy) = 0;
    virtual std::vector<Param<T>*> params() { return {}; }
    virtual void init_weights(Rng&) {}
    virtual bool is_constrained() const { return false; }
};

// Valid cross-correlation, NCHW, optional zero padding.
template <typename T>
class Conv2d : public Layer<T> {
public:
    Conv2d(std::string name, int in_ch, int out_ch, int ksize, int stride = 1, int pad = 0);
    std::string kind() const override { return "conv2d"; }
    Tensor<T> forward(const Tensor<T>& x, bool train) override;
    Tensor<T> backward(const Tensor<T>& dy) override;
    std::vector<Param<T>*> params() override { return {&weight_, &bias_}; }
    void init_weights(Rng& rng) override;

    Param<T>& weight() { return weight_; }
    Param<T>& bias() { return bias_; }
    int in_channels() const { return in_ch_; }
    int out_channels() const { return out_ch_; }
    int ksize() const { return k_; }

protected:
    int in_ch_, out_ch_, k_, stride_, pad_;
    Param<T> weight_;  // (out, in, k, k)
    Param<T> bias_;    // (out)
    Tensor<T> padded_input_;
};

// First-layer residual extractor: 5x5 filters projected after every
// optimizer step so that the center weight is -1 and the 24 surrounding
// weights sum to 1. The filter output is then the error of predicting the
// center pixel from its neighborhood.
template <typename T>
class ConstrainedConv2d : public Conv2d<T> {
public:
    ConstrainedConv2d(std::string name, int in_ch, int out_ch, int stride = 1);
    std::string kind() const override { return "constrained_conv2d"; }
    bool is_constrained() const override { return true; }
    void init_weights(Rng& rng) override;

    // In place, per (out, in) filter: center := -1, rest scaled to sum to 1.
    // A filter whose surround sums to ~0 cannot be scaled and is
    // reinitialized instead.
    void project();

    // True when every filter satisfies center == -1 and surround sum == 1
    // within `tol`.
    bool satisfies_constraint(double tol = 1e-6) const;

private:
    Rng reinit_rng_;
};

// Depthwise 3x3-style convolution followed by a pointwise 1x1 convolution.
template <typename T>
class SeparableConv2d : public Layer<T> {
public:
    SeparableConv2d(std::string name, int in_ch, int out_ch, int ksize, int pad);
    std::string kind() const override { return "separable_conv2d"; }
    Tensor<T> forward(const Tensor<T>& x, bool train) override;
    Tensor<T> backward(const Tensor<T>& dy) override;
    std::vector<Param<T>*> params() override { return {&depthwise_, &pointwise_, &bias_}; }
    void init_weights(Rng& rng) override;

    Param<T>& depthwise() { return depthwise_; }
    Param<T>& pointwise() { return pointwise_; }

private:
    int in_ch_, out_ch_, k_, pad_;
    Param<T> depthwise_;  // (in, 1, k, k)
    Param<T> pointwise_;  // (out, in, 1, 1)
    Param<T> bias_;       // (out)
    Tensor<T> padded_input_;
    Tensor<T> mid_;  // depthwise output, input of the pointwise stage
};

template <typename T>
class ReLU : public Layer<T> {
public:
    std::string kind() const override { return "relu"; }
    Tensor<T> forward(const Tensor<T>& x, bool train) override;
    Tensor<T> backward(const Tensor<T>& dy) override;

private:
    std::vector<std::uint8_t> mask_;
};

template <typename T>
class MaxPool2d : public Layer<T> {
public:
    explicit MaxPool2d(int window, int stride = 2) : window_(window), stride_(stride) {}
    std::string kind() const override { return "maxpool2d"; }
    Tensor<T> forward(const Tensor<T>& x, bool train) override;
    Tensor<T> backward(const Tensor<T>& dy) override;

private:
    int window_, stride_;
    std::vector<int> in_shape_;
    std::vector<std::size_t> argmax_;
};

// Mean over the spatial dimensions: (N,C,H,W) -> (N,C).
template <typename T>
class GlobalAvgPool : public Layer<T> {
public:
    std::string kind() const override { return "global_avg_pool"; }
    Tensor<T> forward(const Tensor<T>& x, bool train) override;
    Tensor<T> backward(const Tensor<T>& dy) override;

private:
    std::vector<int> in_shape_;
};

template <typename T>
class Flatten : public Layer<T> {
public:
    std::string kind() const override { return "flatten"; }
    Tensor<T> forward(const Tensor<T>& x, bool train) override;
    Tensor<T> backward(const Tensor<T>& dy) override;

private:
    std::vector<int> in_shape_;
};

template <typename T>
class Linear : public Layer<T> {
public:
    Linear(std::string name, int in_features, int out_features);
    std::string kind() const override { return "linear"; }
    Tensor<T> forward(const Tensor<T>& x, bool train) override;
    Tensor<T> backward(const Tensor<T>& dy) override;
    std::vector<Param<T>*> params() override { return {&weight_, &bias_}; }
    void init_weights(Rng& rng) override;

private:
    int in_, out_;
    Param<T> weight_;  // (out, in)
    Param<T> bias_;    // (out)
    Tensor<T> input_;
};

// Layer stack with single-path data flow.
template <typename T>
class Model {
public:
    void add(std::unique_ptr<Layer<T>> layer) { layers_.push_back(std::move(layer)); }

    Tensor<T> forward(const Tensor<T>& x, bool train = false);
    // Returns dL/d(input); only valid after forward(x, true).
    Tensor<T> backward(const Tensor<T>& dy);

    std::vector<Param<T>*> params();
    void zero_grad();
    void init_weights(Rng& rng);
    // Re-project every constrained layer; called after each optimizer step.
    void project_constrained();
    bool constrained_satisfied(double tol = 1e-6) const;
    bool has_constrained_layer() const;

    std::size_t param_count() const;
    int count_kind(const std::string& kind) const;
    const std::vector<std::unique_ptr<Layer<T>>>& layers() const { return layers_; }
    std::vector<std::unique_ptr<Layer<T>>>& layers() { return layers_; }

private:
    std::vector<std::unique_ptr<Layer<T>>> layers_;
};

// Batch-mean softmax cross-entropy. `dlogits` is ready to feed backward().
template <typename T>
struct LossResult {
    double loss = 0.0;
    Tensor<T> dlogits;
    std::vector<int> predictions;
};

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits);

template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels);

} // namespace psf::nn

#endif
