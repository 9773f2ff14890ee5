#ifndef PSF_NN_GRADCHECK_HPP
#define PSF_NN_GRADCHECK_HPP

#include <vector>

#include "psf/nn/layers.hpp"

namespace psf::nn {

// Compares analytic gradients against central finite differences of the
// softmax cross-entropy loss, in double precision. Checks parameter
// gradients and the input gradient. For tensors larger than
// max_coords_per_tensor a deterministic strided subset of coordinates is
// probed. Returns the maximum relative error observed.
double gradcheck(Model<double>& model, const Tensor<double>& input,
                 const std::vector<int>& labels,
                 std::size_t max_coords_per_tensor = 64, double step = 1e-5);

// Relative error with a floor so near-zero pairs compare sanely.
double grad_rel_err(double analytic, double numeric);

} // namespace psf::nn

#endif
