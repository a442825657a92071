#pragma once

#include <functional>
#include <vector>

#include "cyberdial/nn/param_store.hpp"
#include "cyberdial/nn/tape.hpp"

namespace cyberdial::nn {

struct GradCheckOptions {
    double step = 1e-5;
    // Coordinates checked per parameter tensor; 0 checks every coordinate.
    int samples_per_param = 0;
    std::uint64_t sample_seed = 1;
    // Denominator floor for the relative error |a - n| / max(|a|, |n|, floor).
    double floor = 1e-6;
};

struct GradCheckResult {
    double max_relative_error = 0.0;
    double max_absolute_error = 0.0;
    int coordinates = 0;
};

// Compares reverse-mode gradients of a scalar computation against central
// differences. `loss` builds the computation on the tape it is given and must
// be deterministic in the parameter values.
GradCheckResult finite_diff_check(const std::function<Value(Tape&)>& loss, const std::vector<Parameter*>& params,
                                  const GradCheckOptions& options = {});

}  // namespace cyberdial::nn
