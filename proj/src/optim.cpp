#include "psf/nn/optim.hpp"

#include <cmath>

#include "psf/error.hpp"

namespace psf::nn {

void TrainConfig::validate() const {
    if (lr0 <= 0)
        throw UsageError("train config: lr0 must be > 0");
    if (momentum < 0 || momentum >= 1)
        throw UsageError("train config: momentum must be in [0, 1)");
    if (batch_size < 1)
        throw UsageError("train config: batch size must be >= 1");
    if (weight_decay < 0)
        throw UsageError("train config: weight decay must be >= 0");
    if (epochs < 1)
        throw UsageError("train config: epochs must be >= 1");
    if (schedule == ScheduleKind::Step && step_size < 1)
        throw UsageError("train config: step size must be >= 1");
}

std::string TrainConfig::schedule_str() const {
    if (schedule == ScheduleKind::Step)
        return "step:" + std::to_string(step_gamma) + ":" + std::to_string(step_size);
    return "poly:" + std::to_string(poly_power);
}

double lr_schedule(const TrainConfig& cfg, long epoch_or_iter) {
    if (cfg.schedule == ScheduleKind::Step)
        return cfg.lr0 * std::pow(cfg.step_gamma, epoch_or_iter / cfg.step_size);
    const long max_iter = cfg.poly_max_iter > 0 ? cfg.poly_max_iter : 1;
    const double t = std::min(1.0, static_cast<double>(epoch_or_iter) / static_cast<double>(max_iter));
    return cfg.lr0 * std::pow(1.0 - t, cfg.poly_power);
}

template <typename T>
void sgd_step(const std::vector<Param<T>*>& params, const TrainConfig& cfg, double lr) {
    const T mu = static_cast<T>(cfg.momentum);
    const T wd = static_cast<T>(cfg.weight_decay);
    const T rate = static_cast<T>(lr);
    for (Param<T>* p : params) {
        const bool masked = !p->no_decay.empty();
        for (std::size_t i = 0; i < p->w.size(); ++i) {
            T g = p->g[i];
            if (wd != T(0) && (!masked || !p->no_decay[i]))
                g += wd * p->w[i];
            p->vel[i] = mu * p->vel[i] + g;
            p->w[i] -= rate * p->vel[i];
        }
    }
}

template void sgd_step<float>(const std::vector<Param<float>*>&, const TrainConfig&, double);
template void sgd_step<double>(const std::vector<Param<double>*>&, const TrainConfig&, double);

} // namespace psf::nn
