#include "cyberdial/rng.hpp"

#include <cmath>
#include <numbers>

namespace cyberdial {

std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t lane, std::string_view purpose)
{
    std::uint64_t tag = 0xcbf29ce484222325ULL;
    for (unsigned char c : purpose) {
        tag ^= c;
        tag *= 0x100000001b3ULL;
    }
    return mix64(mix64(mix64(master) ^ lane) ^ tag);
}

double Rng::gaussian()
{
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace cyberdial
