#include "cyberdial/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cyberdial::nn {

GradCheckResult finite_diff_check(const std::function<Value(Tape&)>& loss, const std::vector<Parameter*>& params,
                                  const GradCheckOptions& options)
{
    for (Parameter* p : params) p->grad.zero();
    {
        Tape tape;
        tape.backward(loss(tape));
    }
    std::vector<Tensor> analytic;
    for (Parameter* p : params) analytic.push_back(p->grad);

    auto evaluate = [&] {
        Tape tape(false);
        return loss(tape).item();
    };

    Rng rng(options.sample_seed);
    GradCheckResult result;
    for (std::size_t k = 0; k < params.size(); ++k) {
        Parameter& p = *params[k];
        std::vector<std::size_t> coords(p.value.size());
        std::iota(coords.begin(), coords.end(), 0);
        if (options.samples_per_param > 0 && coords.size() > static_cast<std::size_t>(options.samples_per_param)) {
            for (std::size_t i = 0; i < static_cast<std::size_t>(options.samples_per_param); ++i)
                std::swap(coords[i], coords[i + rng.index(coords.size() - i)]);
            coords.resize(options.samples_per_param);
        }
        for (std::size_t c : coords) {
            const double saved = p.value.data[c];
            p.value.data[c] = saved + options.step;
            const double up = evaluate();
            p.value.data[c] = saved - options.step;
            const double down = evaluate();
            p.value.data[c] = saved;
            const double numeric = (up - down) / (2.0 * options.step);
            const double a = analytic[k].data[c];
            const double abs_err = std::fabs(a - numeric);
            const double denom = std::max({std::fabs(a), std::fabs(numeric), options.floor});
            result.max_absolute_error = std::max(result.max_absolute_error, abs_err);
            result.max_relative_error = std::max(result.max_relative_error, abs_err / denom);
            ++result.coordinates;
        }
    }
    for (Parameter* p : params) p->grad.zero();
    return result;
}

}  // namespace cyberdial::nn
