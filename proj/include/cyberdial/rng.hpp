#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace cyberdial {

// splitmix64 finalizer; the building block for all stream derivation.
std::uint64_t mix64(std::uint64_t x);

// Stream seed = mix64 chain over (master, lane, fnv1a(purpose)). Frozen: changing
// this breaks reproducibility of every stored run.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t lane, std::string_view purpose);

// Thin wrapper over mt19937_64 with platform-independent draws (the std
// distributions are implementation-defined, these are not).
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n); n > 0.
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

    bool bernoulli(double p) { return uniform() < p; }

    // Box-Muller; consumes exactly two draws.
    double gaussian();

    bool operator==(const Rng& other) const { return engine_ == other.engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace cyberdial
