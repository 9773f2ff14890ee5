#ifndef PSF_NN_OPTIM_HPP
#define PSF_NN_OPTIM_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "psf/nn/layers.hpp"

namespace psf::nn {

enum class ScheduleKind { Step, Polynomial };

struct TrainConfig {
    int batch_size = 8;
    double lr0 = 0.01;
    double momentum = 0.95;
    double weight_decay = 0.0005;
    ScheduleKind schedule = ScheduleKind::Step;
    double step_gamma = 0.7;
    int step_size = 6;
    double poly_power = 0.9;
    long poly_max_iter = 0;  // filled from epochs * iters/epoch when 0
    int epochs = 60;
    int patience = 5;
    std::uint64_t seed = 0;

    void validate() const;
    std::string schedule_str() const;
};

// Step: lr0 * gamma^floor(epoch / step_size), stepped per epoch.
// Polynomial: lr0 * (1 - iter / max_iter)^power, stepped per iteration.
double lr_schedule(const TrainConfig& cfg, long epoch_or_iter);

// velocity = momentum * velocity + grad + weight_decay * param
// param   -= lr * velocity
// Coefficients masked by Param::no_decay skip the decay term.
template <typename T>
void sgd_step(const std::vector<Param<T>*>& params, const TrainConfig& cfg, double lr);

} // namespace psf::nn

#endif
