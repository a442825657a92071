#include "cyberdial/dial/policy.hpp"

#include <algorithm>
#include <stdexcept>

namespace cyberdial::dial {

int masked_argmax(std::span<const double> q, std::span<const std::uint8_t> mask)
{
    int best = -1;
    for (std::size_t i = 0; i < q.size(); ++i)
        if (mask[i] && (best < 0 || q[i] > q[best])) best = static_cast<int>(i);
    if (best < 0) throw std::invalid_argument("masked_argmax: no allowed action");
    return best;
}

double masked_max(std::span<const double> q, std::span<const std::uint8_t> mask)
{
    return q[masked_argmax(q, mask)];
}

int select_action(std::span<const double> q, std::span<const std::uint8_t> mask, double epsilon, Rng& rng)
{
    if (q.size() != mask.size()) throw std::invalid_argument("select_action: mask size mismatch");
    if (epsilon > 0.0 && rng.uniform() < epsilon) {
        const auto allowed = static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; }));
        if (allowed == 0) throw std::invalid_argument("select_action: no allowed action");
        std::size_t pick = rng.index(allowed);
        for (std::size_t i = 0; i < mask.size(); ++i)
            if (mask[i] && pick-- == 0) return static_cast<int>(i);
    }
    return masked_argmax(q, mask);
}

double EpsilonSchedule::at(std::uint64_t timestep) const
{
    if (anneal_steps <= 0.0 || static_cast<double>(timestep) >= anneal_steps) return end;
    const double frac = std::min(1.0, static_cast<double>(timestep) / anneal_steps);
    return std::max(end, start - (start - end) * frac);
}

}  // namespace cyberdial::dial
