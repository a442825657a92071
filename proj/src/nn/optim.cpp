#include "cyberdial/nn/optim.hpp"

#include <cmath>

namespace cyberdial::nn {

double rms_step(ParamStore& store, const RmsPropConfig& config)
{
    const double norm = store.grad_norm();
    const double clip = (config.clip_norm > 0.0 && norm > config.clip_norm) ? config.clip_norm / norm : 1.0;
    for (std::size_t k = 0; k < store.size(); ++k) {
        Parameter& p = store[k];
        auto& v = p.value.data;
        auto& g = p.grad.data;
        auto& sq = p.sq_avg.data;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double gi = g[i] * clip;
            sq[i] = config.decay * sq[i] + (1.0 - config.decay) * gi * gi;
            v[i] -= config.lr * gi / (std::sqrt(sq[i]) + config.epsilon);
            g[i] = 0.0;
        }
    }
    store.bump_version();
    return norm;
}

}  // namespace cyberdial::nn
