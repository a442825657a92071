#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "cyberdial/nn/param_store.hpp"

namespace cyberdial::nn {

struct CheckpointHeader {
    std::string scenario;
    std::string algorithm;  // "dial" or "qmix"
    std::int32_t hidden_dim = 0;
    std::int32_t mixer_dim = 0;  // qmix only
    std::int32_t message_bits = 0;
    std::uint64_t train_steps = 0;

    bool operator==(const CheckpointHeader&) const = default;
};

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Layout (little-endian): magic "CYDLCKPT", u32 format version, header
// strings as u32 length + bytes, then u32 parameter count and per parameter
// name, i32 rows, i32 cols, rows*cols f64 values, rows*cols f64 optimizer state.
constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const CheckpointHeader& header, const ParamStore& store);
CheckpointHeader read_checkpoint_header(const std::filesystem::path& path);
// Loads values and optimizer state into an existing store; every stored tensor
// must exist in `store` with the same shape and vice versa.
CheckpointHeader load_checkpoint(const std::filesystem::path& path, ParamStore& store);

}  // namespace cyberdial::nn
