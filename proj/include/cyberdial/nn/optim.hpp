#pragma once

#include "cyberdial/nn/param_store.hpp"

namespace cyberdial::nn {

struct RmsPropConfig {
    double lr = 0.0005;
    double decay = 0.99;
    double epsilon = 1e-8;
    double clip_norm = 10.0;  // global gradient norm; <= 0 disables
};

// One RMSProp update (no momentum) after global-norm clipping; gradients are
// zeroed and the store version bumped afterwards. Returns the pre-clip norm.
double rms_step(ParamStore& store, const RmsPropConfig& config);

}  // namespace cyberdial::nn
