#pragma once

#include <cstdint>
#include <span>

#include "cyberdial/rng.hpp"

namespace cyberdial::dial {

// With probability epsilon a uniform draw over allowed actions, otherwise the
// allowed argmax (lowest index on ties). Draws nothing when epsilon is 0.
int select_action(std::span<const double> q, std::span<const std::uint8_t> mask, double epsilon, Rng& rng);

int masked_argmax(std::span<const double> q, std::span<const std::uint8_t> mask);
double masked_max(std::span<const double> q, std::span<const std::uint8_t> mask);

// Linear in environment timesteps, then held at `end`.
struct EpsilonSchedule {
    double start = 1.0;
    double end = 0.05;
    double anneal_steps = 1'000'000.0;

    double at(std::uint64_t timestep) const;
};

}  // namespace cyberdial::dial
