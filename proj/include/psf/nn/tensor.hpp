#ifndef PSF_NN_TENSOR_HPP
#define PSF_NN_TENSOR_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "psf/error.hpp"

namespace psf::nn {

// Dense row-major N-d array with an optional gradient buffer of equal size.
template <typename T>
struct Tensor {
    std::vector<int> shape;
    std::vector<T> v;
    std::vector<T> g;  // empty unless gradients were requested

    Tensor() = default;
    explicit Tensor(std::vector<int> s, T fill = T(0)) : shape(std::move(s)) {
        v.assign(numel_of(shape), fill);
    }

    static std::size_t numel_of(const std::vector<int>& s) {
        std::size_t n = 1;
        for (int d : s) {
            if (d <= 0)
                throw UsageError("tensor: dimensions must be positive");
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

    std::size_t numel() const { return v.size(); }
    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
    int rank() const { return static_cast<int>(shape.size()); }

    void alloc_grad() { g.assign(v.size(), T(0)); }
    bool has_grad() const { return !g.empty(); }

    // Flat index for NCHW access.
    std::size_t idx4(int n, int c, int h, int w) const {
        return ((static_cast<std::size_t>(n) * shape[1] + c) * shape[2] + h) * shape[3] + w;
    }

    void require_finite(const char* where) const {
        for (const T& x : v)
            if (!std::isfinite(static_cast<double>(x)))
                throw NumericError(std::string("non-finite value in ") + where);
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

template <typename T>
std::string shape_str(const Tensor<T>& t) {
    std::string s = "(";
    for (std::size_t i = 0; i < t.shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(t.shape[i]);
    }
    return s + ")";
}

} // namespace psf::nn

#endif
