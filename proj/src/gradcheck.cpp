#include "psf/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace psf::nn {

namespace {

double loss_only(Model<double>& model, const Tensor<double>& input,
                 const std::vector<int>& labels) {
    Tensor<double> logits = model.forward(input, false);
    return softmax_cross_entropy(logits, labels).loss;
}

// Deterministic coordinate subset: full range when small, strided otherwise.
std::vector<std::size_t> probe_coords(std::size_t count, std::size_t max_coords) {
    std::vector<std::size_t> coords;
    if (count <= max_coords) {
        coords.resize(count);
        for (std::size_t i = 0; i < count; ++i)
            coords[i] = i;
    } else {
        const std::size_t stride = count / max_coords;
        for (std::size_t i = 0; i < max_coords; ++i)
            coords.push_back(i * stride + stride / 2);
    }
    return coords;
}

} // namespace

double grad_rel_err(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-4});
    return std::abs(analytic - numeric) / denom;
}

double gradcheck(Model<double>& model, const Tensor<double>& input,
                 const std::vector<int>& labels,
                 std::size_t max_coords_per_tensor, double step) {
    model.zero_grad();
    Tensor<double> logits = model.forward(input, true);
    LossResult<double> res = softmax_cross_entropy(logits, labels);
    Tensor<double> dinput = model.backward(res.dlogits);

    double max_err = 0.0;

    for (Param<double>* p : model.params()) {
        for (std::size_t i : probe_coords(p->w.size(), max_coords_per_tensor)) {
            const double saved = p->w[i];
            p->w[i] = saved + step;
            const double plus = loss_only(model, input, labels);
            p->w[i] = saved - step;
            const double minus = loss_only(model, input, labels);
            p->w[i] = saved;
            const double numeric = (plus - minus) / (2.0 * step);
            max_err = std::max(max_err, grad_rel_err(p->g[i], numeric));
        }
    }

    Tensor<double> probe = input;
    for (std::size_t i : probe_coords(probe.v.size(), max_coords_per_tensor)) {
        const double saved = probe.v[i];
        probe.v[i] = saved + step;
        const double plus = loss_only(model, probe, labels);
        probe.v[i] = saved - step;
        const double minus = loss_only(model, probe, labels);
        probe.v[i] = saved;
        const double numeric = (plus - minus) / (2.0 * step);
        max_err = std::max(max_err, grad_rel_err(dinput.v[i], numeric));
    }

    return max_err;
}

} // namespace psf::nn
