#include "psf/nn/layers.hpp"

#include <algorithm>
#include <cmath>

namespace psf::nn {

namespace {

template <typename T>
Tensor<T> zero_pad(const Tensor<T>& x, int pad) {
    if (pad == 0)
        return x;
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    Tensor<T> out({n, c, h + 2 * pad, w + 2 * pad});
    for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < c; ++ci)
            for (int r = 0; r < h; ++r) {
                const T* src = &x.v[x.idx4(ni, ci, r, 0)];
                T* dst = &out.v[out.idx4(ni, ci, r + pad, pad)];
                std::copy(src, src + w, dst);
            }
    return out;
}

template <typename T>
Tensor<T> strip_pad(const Tensor<T>& x, int pad) {
    if (pad == 0)
        return x;
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2) - 2 * pad, w = x.dim(3) - 2 * pad;
    Tensor<T> out({n, c, h, w});
    for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < c; ++ci)
            for (int r = 0; r < h; ++r) {
                const T* src = &x.v[x.idx4(ni, ci, r + pad, pad)];
                std::copy(src, src + w, &out.v[out.idx4(ni, ci, r, 0)]);
            }
    return out;
}

inline int conv_out_dim(int in, int k, int stride) { return (in - k) / stride + 1; }

template <typename T>
void kaiming_fill(Param<T>& p, int fan_in, Rng& rng, double gain = 2.0) {
    const double std_dev = std::sqrt(gain / fan_in);
    for (T& w : p.w)
        w = static_cast<T>(rng.normal() * std_dev);
    std::fill(p.vel.begin(), p.vel.end(), T(0));
}

} // namespace

// ---- Conv2d ----

template <typename T>
Conv2d<T>::Conv2d(std::string name, int in_ch, int out_ch, int ksize, int stride, int pad)
    : in_ch_(in_ch), out_ch_(out_ch), k_(ksize), stride_(stride), pad_(pad),
      weight_(name + ".weight", {out_ch, in_ch, ksize, ksize}),
      bias_(name + ".bias", {out_ch}) {
    if (in_ch <= 0 || out_ch <= 0 || ksize <= 0 || stride <= 0 || pad < 0)
        throw UsageError("conv2d: bad layer geometry");
}

template <typename T>
void Conv2d<T>::init_weights(Rng& rng) {
    kaiming_fill(weight_, in_ch_ * k_ * k_, rng);
    std::fill(bias_.w.begin(), bias_.w.end(), T(0));
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x, bool train) {
    if (x.rank() != 4 || x.dim(1) != in_ch_)
        throw DataError("conv2d: input shape mismatch, got " + shape_str(x));
    Tensor<T> padded = zero_pad(x, pad_);
    const int n = padded.dim(0);
    const int h = padded.dim(2), w = padded.dim(3);
    if (h < k_ || w < k_)
        throw DataError("conv2d: spatial dims smaller than kernel");
    const int oh = conv_out_dim(h, k_, stride_);
    const int ow = conv_out_dim(w, k_, stride_);
    Tensor<T> out({n, out_ch_, oh, ow});

    for (int ni = 0; ni < n; ++ni) {
        for (int oc = 0; oc < out_ch_; ++oc) {
            T* out_plane = &out.v[out.idx4(ni, oc, 0, 0)];
            std::fill(out_plane, out_plane + static_cast<std::size_t>(oh) * ow, bias_.w[oc]);
            for (int ic = 0; ic < in_ch_; ++ic) {
                const T* wf = &weight_.w[((static_cast<std::size_t>(oc) * in_ch_ + ic) * k_) * k_];
                for (int kr = 0; kr < k_; ++kr) {
                    for (int kc = 0; kc < k_; ++kc) {
                        const T wv = wf[kr * k_ + kc];
                        for (int r = 0; r < oh; ++r) {
                            const T* in_row = &padded.v[padded.idx4(ni, ic, r * stride_ + kr, kc)];
                            T* out_row = out_plane + static_cast<std::size_t>(r) * ow;
                            if (stride_ == 1) {
                                for (int c = 0; c < ow; ++c)
                                    out_row[c] += wv * in_row[c];
                            } else {
                                for (int c = 0; c < ow; ++c)
                                    out_row[c] += wv * in_row[c * stride_];
                            }
                        }
                    }
                }
            }
        }
    }
    if (train)
        padded_input_ = std::move(padded);
    return out;
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& dy) {
    const int n = padded_input_.dim(0);
    const int h = padded_input_.dim(2), w = padded_input_.dim(3);
    const int oh = dy.dim(2), ow = dy.dim(3);

    Tensor<T> dpad({n, in_ch_, h, w});
    for (int ni = 0; ni < n; ++ni) {
        for (int oc = 0; oc < out_ch_; ++oc) {
            const T* dy_plane = &dy.v[dy.idx4(ni, oc, 0, 0)];
            double db = 0.0;
            for (std::size_t i = 0; i < static_cast<std::size_t>(oh) * ow; ++i)
                db += static_cast<double>(dy_plane[i]);
            bias_.g[oc] += static_cast<T>(db);

            for (int ic = 0; ic < in_ch_; ++ic) {
                const T* wf = &weight_.w[((static_cast<std::size_t>(oc) * in_ch_ + ic) * k_) * k_];
                T* gf = &weight_.g[((static_cast<std::size_t>(oc) * in_ch_ + ic) * k_) * k_];
                for (int kr = 0; kr < k_; ++kr) {
                    for (int kc = 0; kc < k_; ++kc) {
                        const T wv = wf[kr * k_ + kc];
                        double dw = 0.0;
                        for (int r = 0; r < oh; ++r) {
                            const T* dy_row = dy_plane + static_cast<std::size_t>(r) * ow;
                            const T* in_row =
                                &padded_input_.v[padded_input_.idx4(ni, ic, r * stride_ + kr, kc)];
                            T* dx_row = &dpad.v[dpad.idx4(ni, ic, r * stride_ + kr, kc)];
                            if (stride_ == 1) {
                                for (int c = 0; c < ow; ++c) {
                                    dw += static_cast<double>(dy_row[c]) * in_row[c];
                                    dx_row[c] += wv * dy_row[c];
                                }
                            } else {
                                for (int c = 0; c < ow; ++c) {
                                    dw += static_cast<double>(dy_row[c]) * in_row[c * stride_];
                                    dx_row[c * stride_] += wv * dy_row[c];
                                }
                            }
                        }
                        gf[kr * k_ + kc] += static_cast<T>(dw);
                    }
                }
            }
        }
    }
    return strip_pad(dpad, pad_);
}

// ---- ConstrainedConv2d ----

template <typename T>
ConstrainedConv2d<T>::ConstrainedConv2d(std::string name, int in_ch, int out_ch, int stride)
    : Conv2d<T>(std::move(name), in_ch, out_ch, 5, stride, 0), reinit_rng_(0) {
    // Weight decay never touches the pinned center coefficient.
    auto& wp = this->weight_;
    wp.no_decay.assign(wp.numel(), 0);
    for (int oc = 0; oc < out_ch; ++oc)
        for (int ic = 0; ic < in_ch; ++ic)
            wp.no_decay[((static_cast<std::size_t>(oc) * in_ch + ic) * 5 + 2) * 5 + 2] = 1;
}

template <typename T>
void ConstrainedConv2d<T>::init_weights(Rng& rng) {
    Conv2d<T>::init_weights(rng);
    reinit_rng_ = Rng(rng.next_u64());
    // A filter whose random surround sums near zero would be blown up by the
    // projection rescale; redraw such filters before the first projection.
    const int in_ch = this->in_ch_;
    const double init_std = std::sqrt(2.0 / (in_ch * 25.0));
    for (int oc = 0; oc < this->out_ch_; ++oc) {
        for (int ic = 0; ic < in_ch; ++ic) {
            T* f = &this->weight_.w[((static_cast<std::size_t>(oc) * in_ch + ic) * 5) * 5];
            for (;;) {
                double surround = 0.0;
                for (int i = 0; i < 25; ++i)
                    if (i != 12)
                        surround += static_cast<double>(f[i]);
                if (std::abs(surround) >= 0.5)
                    break;
                for (int i = 0; i < 25; ++i)
                    f[i] = static_cast<T>(reinit_rng_.normal() * init_std);
            }
        }
    }
    project();
}

template <typename T>
void ConstrainedConv2d<T>::project() {
    auto& wp = this->weight_;
    const int in_ch = this->in_ch_;
    const double reinit_std = std::sqrt(2.0 / (in_ch * 25.0));
    for (int oc = 0; oc < this->out_ch_; ++oc) {
        for (int ic = 0; ic < in_ch; ++ic) {
            T* f = &wp.w[((static_cast<std::size_t>(oc) * in_ch + ic) * 5) * 5];
            for (int attempt = 0;; ++attempt) {
                double surround = 0.0;
                for (int i = 0; i < 25; ++i)
                    if (i != 12)
                        surround += static_cast<double>(f[i]);
                if (std::abs(surround) > 1e-12) {
                    const double scale = 1.0 / surround;
                    for (int i = 0; i < 25; ++i)
                        f[i] = i == 12 ? T(-1) : static_cast<T>(f[i] * scale);
                    break;
                }
                if (attempt >= 16)
                    throw NumericError("constrained projection: filter stuck degenerate");
                for (int i = 0; i < 25; ++i)
                    f[i] = static_cast<T>(reinit_rng_.normal() * reinit_std);
            }
        }
    }
}

template <typename T>
bool ConstrainedConv2d<T>::satisfies_constraint(double tol) const {
    const auto& wp = this->weight_;
    const int in_ch = this->in_ch_;
    for (int oc = 0; oc < this->out_ch_; ++oc) {
        for (int ic = 0; ic < in_ch; ++ic) {
            const T* f = &wp.w[((static_cast<std::size_t>(oc) * in_ch + ic) * 5) * 5];
            double surround = 0.0;
            for (int i = 0; i < 25; ++i)
                if (i != 12)
                    surround += static_cast<double>(f[i]);
            if (std::abs(static_cast<double>(f[12]) + 1.0) > tol || std::abs(surround - 1.0) > tol)
                return false;
        }
    }
    return true;
}

// ---- SeparableConv2d ----

template <typename T>
SeparableConv2d<T>::SeparableConv2d(std::string name, int in_ch, int out_ch, int ksize, int pad)
    : in_ch_(in_ch), out_ch_(out_ch), k_(ksize), pad_(pad),
      depthwise_(name + ".depthwise", {in_ch, 1, ksize, ksize}),
      pointwise_(name + ".pointwise", {out_ch, in_ch, 1, 1}),
      bias_(name + ".bias", {out_ch}) {}

template <typename T>
void SeparableConv2d<T>::init_weights(Rng& rng) {
    // No activation between the stages: unit gain for the depthwise part,
    // ReLU gain only for the pointwise part that feeds one.
    kaiming_fill(depthwise_, k_ * k_, rng, 1.0);
    kaiming_fill(pointwise_, in_ch_, rng);
    std::fill(bias_.w.begin(), bias_.w.end(), T(0));
}

template <typename T>
Tensor<T> SeparableConv2d<T>::forward(const Tensor<T>& x, bool train) {
    if (x.rank() != 4 || x.dim(1) != in_ch_)
        throw DataError("separable_conv2d: input shape mismatch, got " + shape_str(x));
    Tensor<T> padded = zero_pad(x, pad_);
    const int n = padded.dim(0);
    const int h = padded.dim(2), w = padded.dim(3);
    if (h < k_ || w < k_)
        throw DataError("separable_conv2d: spatial dims smaller than kernel");
    const int oh = conv_out_dim(h, k_, 1);
    const int ow = conv_out_dim(w, k_, 1);

    Tensor<T> mid({n, in_ch_, oh, ow});
    for (int ni = 0; ni < n; ++ni) {
        for (int ic = 0; ic < in_ch_; ++ic) {
            T* mid_plane = &mid.v[mid.idx4(ni, ic, 0, 0)];
            const T* wf = &depthwise_.w[static_cast<std::size_t>(ic) * k_ * k_];
            for (int kr = 0; kr < k_; ++kr) {
                for (int kc = 0; kc < k_; ++kc) {
                    const T wv = wf[kr * k_ + kc];
                    for (int r = 0; r < oh; ++r) {
                        const T* in_row = &padded.v[padded.idx4(ni, ic, r + kr, kc)];
                        T* mid_row = mid_plane + static_cast<std::size_t>(r) * ow;
                        for (int c = 0; c < ow; ++c)
                            mid_row[c] += wv * in_row[c];
                    }
                }
            }
        }
    }

    Tensor<T> out({n, out_ch_, oh, ow});
    const std::size_t hw = static_cast<std::size_t>(oh) * ow;
    for (int ni = 0; ni < n; ++ni) {
        for (int oc = 0; oc < out_ch_; ++oc) {
            T* out_plane = &out.v[out.idx4(ni, oc, 0, 0)];
            std::fill(out_plane, out_plane + hw, bias_.w[oc]);
            for (int ic = 0; ic < in_ch_; ++ic) {
                const T wv = pointwise_.w[static_cast<std::size_t>(oc) * in_ch_ + ic];
                const T* mid_plane = &mid.v[mid.idx4(ni, ic, 0, 0)];
                for (std::size_t i = 0; i < hw; ++i)
                    out_plane[i] += wv * mid_plane[i];
            }
        }
    }
    if (train) {
        padded_input_ = std::move(padded);
        mid_ = std::move(mid);
    }
    return out;
}

template <typename T>
Tensor<T> SeparableConv2d<T>::backward(const Tensor<T>& dy) {
    const int n = padded_input_.dim(0);
    const int h = padded_input_.dim(2), w = padded_input_.dim(3);
    const int oh = dy.dim(2), ow = dy.dim(3);
    const std::size_t hw = static_cast<std::size_t>(oh) * ow;

    // pointwise stage
    Tensor<T> dmid({n, in_ch_, oh, ow});
    for (int ni = 0; ni < n; ++ni) {
        for (int oc = 0; oc < out_ch_; ++oc) {
            const T* dy_plane = &dy.v[dy.idx4(ni, oc, 0, 0)];
            double db = 0.0;
            for (std::size_t i = 0; i < hw; ++i)
                db += static_cast<double>(dy_plane[i]);
            bias_.g[oc] += static_cast<T>(db);
            for (int ic = 0; ic < in_ch_; ++ic) {
                const T wv = pointwise_.w[static_cast<std::size_t>(oc) * in_ch_ + ic];
                const T* mid_plane = &mid_.v[mid_.idx4(ni, ic, 0, 0)];
                T* dmid_plane = &dmid.v[dmid.idx4(ni, ic, 0, 0)];
                double dw = 0.0;
                for (std::size_t i = 0; i < hw; ++i) {
                    dw += static_cast<double>(dy_plane[i]) * mid_plane[i];
                    dmid_plane[i] += wv * dy_plane[i];
                }
                pointwise_.g[static_cast<std::size_t>(oc) * in_ch_ + ic] += static_cast<T>(dw);
            }
        }
    }

    // depthwise stage
    Tensor<T> dpad({n, in_ch_, h, w});
    for (int ni = 0; ni < n; ++ni) {
        for (int ic = 0; ic < in_ch_; ++ic) {
            const T* wf = &depthwise_.w[static_cast<std::size_t>(ic) * k_ * k_];
            T* gf = &depthwise_.g[static_cast<std::size_t>(ic) * k_ * k_];
            const T* dmid_plane = &dmid.v[dmid.idx4(ni, ic, 0, 0)];
            for (int kr = 0; kr < k_; ++kr) {
                for (int kc = 0; kc < k_; ++kc) {
                    const T wv = wf[kr * k_ + kc];
                    double dw = 0.0;
                    for (int r = 0; r < oh; ++r) {
                        const T* dmid_row = dmid_plane + static_cast<std::size_t>(r) * ow;
                        const T* in_row = &padded_input_.v[padded_input_.idx4(ni, ic, r + kr, kc)];
                        T* dx_row = &dpad.v[dpad.idx4(ni, ic, r + kr, kc)];
                        for (int c = 0; c < ow; ++c) {
                            dw += static_cast<double>(dmid_row[c]) * in_row[c];
                            dx_row[c] += wv * dmid_row[c];
                        }
                    }
                    gf[kr * k_ + kc] += static_cast<T>(dw);
                }
            }
        }
    }
    return strip_pad(dpad, pad_);
}

// ---- ReLU ----

template <typename T>
Tensor<T> ReLU<T>::forward(const Tensor<T>& x, bool train) {
    Tensor<T> out = x;
    if (train) {
        mask_.assign(x.numel(), 0);
        for (std::size_t i = 0; i < out.v.size(); ++i) {
            if (out.v[i] > T(0))
                mask_[i] = 1;
            else
                out.v[i] = T(0);
        }
    } else {
        for (T& v : out.v)
            v = std::max(v, T(0));
    }
    return out;
}

template <typename T>
Tensor<T> ReLU<T>::backward(const Tensor<T>& dy) {
    Tensor<T> dx = dy;
    for (std::size_t i = 0; i < dx.v.size(); ++i)
        if (!mask_[i])
            dx.v[i] = T(0);
    return dx;
}

// ---- MaxPool2d ----

template <typename T>
Tensor<T> MaxPool2d<T>::forward(const Tensor<T>& x, bool train) {
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    if (window_ > h || window_ > w)
        throw DataError("maxpool2d: window larger than input");
    const int oh = conv_out_dim(h, window_, stride_);
    const int ow = conv_out_dim(w, window_, stride_);
    Tensor<T> out({n, c, oh, ow});
    std::vector<std::size_t> argmax;
    if (train)
        argmax.assign(out.numel(), 0);
    std::size_t oi = 0;
    for (int ni = 0; ni < n; ++ni) {
        for (int ci = 0; ci < c; ++ci) {
            for (int r = 0; r < oh; ++r) {
                for (int col = 0; col < ow; ++col, ++oi) {
                    T best{};
                    std::size_t best_idx = 0;
                    bool first = true;
                    for (int kr = 0; kr < window_; ++kr) {
                        const std::size_t row_base = x.idx4(ni, ci, r * stride_ + kr, col * stride_);
                        for (int kc = 0; kc < window_; ++kc) {
                            const T v = x.v[row_base + kc];
                            if (first || v > best) {
                                best = v;
                                best_idx = row_base + kc;
                                first = false;
                            }
                        }
                    }
                    out.v[oi] = best;
                    if (train)
                        argmax[oi] = best_idx;
                }
            }
        }
    }
    if (train) {
        in_shape_ = x.shape;
        argmax_ = std::move(argmax);
    }
    return out;
}

template <typename T>
Tensor<T> MaxPool2d<T>::backward(const Tensor<T>& dy) {
    Tensor<T> dx(in_shape_);
    for (std::size_t i = 0; i < dy.v.size(); ++i)
        dx.v[argmax_[i]] += dy.v[i];
    return dx;
}

// ---- GlobalAvgPool ----

template <typename T>
Tensor<T> GlobalAvgPool<T>::forward(const Tensor<T>& x, bool train) {
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    if (train)
        in_shape_ = x.shape;
    Tensor<T> out({n, c});
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < c; ++ci) {
            const T* plane = &x.v[x.idx4(ni, ci, 0, 0)];
            double acc = 0.0;
            for (std::size_t i = 0; i < hw; ++i)
                acc += static_cast<double>(plane[i]);
            out.v[static_cast<std::size_t>(ni) * c + ci] = static_cast<T>(acc / static_cast<double>(hw));
        }
    return out;
}

template <typename T>
Tensor<T> GlobalAvgPool<T>::backward(const Tensor<T>& dy) {
    Tensor<T> dx(in_shape_);
    const int n = in_shape_[0], c = in_shape_[1];
    const std::size_t hw = static_cast<std::size_t>(in_shape_[2]) * in_shape_[3];
    for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < c; ++ci) {
            const T d = dy.v[static_cast<std::size_t>(ni) * c + ci] / static_cast<T>(hw);
            T* plane = &dx.v[dx.idx4(ni, ci, 0, 0)];
            for (std::size_t i = 0; i < hw; ++i)
                plane[i] = d;
        }
    return dx;
}

// ---- Flatten ----

template <typename T>
Tensor<T> Flatten<T>::forward(const Tensor<T>& x, bool train) {
    if (train)
        in_shape_ = x.shape;
    Tensor<T> out = x;
    const int n = x.dim(0);
    out.shape = {n, static_cast<int>(x.numel() / static_cast<std::size_t>(n))};
    return out;
}

template <typename T>
Tensor<T> Flatten<T>::backward(const Tensor<T>& dy) {
    Tensor<T> dx = dy;
    dx.shape = in_shape_;
    return dx;
}

// ---- Linear ----

template <typename T>
Linear<T>::Linear(std::string name, int in_features, int out_features)
    : in_(in_features), out_(out_features),
      weight_(name + ".weight", {out_features, in_features}),
      bias_(name + ".bias", {out_features}) {}

template <typename T>
void Linear<T>::init_weights(Rng& rng) {
    kaiming_fill(weight_, in_, rng);
    std::fill(bias_.w.begin(), bias_.w.end(), T(0));
}

template <typename T>
Tensor<T> Linear<T>::forward(const Tensor<T>& x, bool train) {
    if (x.rank() != 2 || x.dim(1) != in_)
        throw DataError("linear: input shape mismatch, got " + shape_str(x));
    if (train)
        input_ = x;
    const int n = x.dim(0);
    Tensor<T> out({n, out_});
    for (int ni = 0; ni < n; ++ni) {
        const T* xr = &x.v[static_cast<std::size_t>(ni) * in_];
        T* yr = &out.v[static_cast<std::size_t>(ni) * out_];
        for (int o = 0; o < out_; ++o) {
            const T* wr = &weight_.w[static_cast<std::size_t>(o) * in_];
            double acc = bias_.w[o];
            for (int i = 0; i < in_; ++i)
                acc += static_cast<double>(wr[i]) * xr[i];
            yr[o] = static_cast<T>(acc);
        }
    }
    return out;
}

template <typename T>
Tensor<T> Linear<T>::backward(const Tensor<T>& dy) {
    const int n = input_.dim(0);
    Tensor<T> dx({n, in_});
    for (int ni = 0; ni < n; ++ni) {
        const T* xr = &input_.v[static_cast<std::size_t>(ni) * in_];
        const T* dyr = &dy.v[static_cast<std::size_t>(ni) * out_];
        T* dxr = &dx.v[static_cast<std::size_t>(ni) * in_];
        for (int o = 0; o < out_; ++o) {
            const T d = dyr[o];
            bias_.g[o] += d;
            T* gw = &weight_.g[static_cast<std::size_t>(o) * in_];
            const T* wr = &weight_.w[static_cast<std::size_t>(o) * in_];
            for (int i = 0; i < in_; ++i) {
                gw[i] += d * xr[i];
                dxr[i] += wr[i] * d;
            }
        }
    }
    return dx;
}

// ---- Model ----

template <typename T>
Tensor<T> Model<T>::forward(const Tensor<T>& x, bool train) {
    x.require_finite("model input");
    Tensor<T> cur = x;
    for (auto& layer : layers_) {
        cur = layer->forward(cur, train);
        cur.require_finite(layer->kind().c_str());
    }
    return cur;
}

template <typename T>
Tensor<T> Model<T>::backward(const Tensor<T>& dy) {
    Tensor<T> cur = dy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
        cur = (*it)->backward(cur);
    return cur;
}

template <typename T>
std::vector<Param<T>*> Model<T>::params() {
    std::vector<Param<T>*> out;
    for (auto& layer : layers_)
        for (Param<T>* p : layer->params())
            out.push_back(p);
    return out;
}

template <typename T>
void Model<T>::zero_grad() {
    for (Param<T>* p : params())
        p->zero_grad();
}

template <typename T>
void Model<T>::init_weights(Rng& rng) {
    for (auto& layer : layers_)
        layer->init_weights(rng);
}

template <typename T>
void Model<T>::project_constrained() {
    for (auto& layer : layers_)
        if (layer->is_constrained())
            static_cast<ConstrainedConv2d<T>*>(layer.get())->project();
}

template <typename T>
bool Model<T>::constrained_satisfied(double tol) const {
    for (const auto& layer : layers_)
        if (layer->is_constrained() &&
            !static_cast<const ConstrainedConv2d<T>*>(layer.get())->satisfies_constraint(tol))
            return false;
    return true;
}

template <typename T>
bool Model<T>::has_constrained_layer() const {
    for (const auto& layer : layers_)
        if (layer->is_constrained())
            return true;
    return false;
}

template <typename T>
std::size_t Model<T>::param_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers_)
        for (Param<T>* p : const_cast<Layer<T>*>(layer.get())->params())
            n += p->numel();
    return n;
}

template <typename T>
int Model<T>::count_kind(const std::string& kind) const {
    int n = 0;
    for (const auto& layer : layers_)
        n += layer->kind() == kind;
    return n;
}

// ---- softmax / cross entropy ----

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
    if (logits.rank() != 2)
        throw DataError("softmax: expected (batch, classes) logits");
    const int n = logits.dim(0), k = logits.dim(1);
    Tensor<T> probs({n, k});
    for (int ni = 0; ni < n; ++ni) {
        const T* row = &logits.v[static_cast<std::size_t>(ni) * k];
        T* prow = &probs.v[static_cast<std::size_t>(ni) * k];
        T m = row[0];
        for (int i = 1; i < k; ++i)
            m = std::max(m, row[i]);
        double z = 0.0;
        for (int i = 0; i < k; ++i) {
            const double e = std::exp(static_cast<double>(row[i] - m));
            prow[i] = static_cast<T>(e);
            z += e;
        }
        for (int i = 0; i < k; ++i)
            prow[i] = static_cast<T>(static_cast<double>(prow[i]) / z);
    }
    return probs;
}

template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels) {
    const int n = logits.dim(0), k = logits.dim(1);
    if (static_cast<int>(labels.size()) != n)
        throw DataError("cross entropy: label count does not match batch");
    for (int label : labels)
        if (label < 0 || label >= k)
            throw DataError("cross entropy: label out of range");

    LossResult<T> res;
    res.dlogits = softmax(logits);
    res.predictions.resize(static_cast<std::size_t>(n));
    double loss = 0.0;
    for (int ni = 0; ni < n; ++ni) {
        T* prow = &res.dlogits.v[static_cast<std::size_t>(ni) * k];
        const T* lrow = &logits.v[static_cast<std::size_t>(ni) * k];
        int arg = 0;
        for (int i = 1; i < k; ++i)
            if (lrow[i] > lrow[arg])
                arg = i;
        res.predictions[static_cast<std::size_t>(ni)] = arg;
        const double p = std::max(static_cast<double>(prow[labels[static_cast<std::size_t>(ni)]]), 1e-300);
        loss -= std::log(p);
        prow[labels[static_cast<std::size_t>(ni)]] -= T(1);
        for (int i = 0; i < k; ++i)
            prow[i] /= static_cast<T>(n);
    }
    res.loss = loss / n;
    if (!std::isfinite(res.loss))
        throw NumericError("cross entropy: non-finite loss");
    return res;
}

template class Conv2d<float>;
template class Conv2d<double>;
template class ConstrainedConv2d<float>;
template class ConstrainedConv2d<double>;
template class SeparableConv2d<float>;
template class SeparableConv2d<double>;
template class ReLU<float>;
template class ReLU<double>;
template class MaxPool2d<float>;
template class MaxPool2d<double>;
template class GlobalAvgPool<float>;
template class GlobalAvgPool<double>;
template class Flatten<float>;
template class Flatten<double>;
template class Linear<float>;
template class Linear<double>;
template class Model<float>;
template class Model<double>;
template Tensor<float> softmax<float>(const Tensor<float>&);
template Tensor<double> softmax<double>(const Tensor<double>&);
template LossResult<float> softmax_cross_entropy<float>(const Tensor<float>&, const std::vector<int>&);
template LossResult<double> softmax_cross_entropy<double>(const Tensor<double>&, const std::vector<int>&);

} // namespace psf::nn
