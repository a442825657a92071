#pragma once

#include <cstdint>
#include <vector>

#include "cyberdial/nn/ops.hpp"
#include "cyberdial/rng.hpp"

namespace cyberdial::dial {

enum class ChannelMode { Train, Exec };

// Standard normal noise for a [rows, bits] message batch, drawn row-major.
nn::Tensor draw_message_noise(int rows, int bits, Rng& rng);

// Train form: logistic(q + sigma * noise). Noise is a constant of the graph.
nn::Value dru_train(nn::Value q_msg, double sigma, const nn::Tensor& noise);

// Exec form: 1 where q > 0.
std::vector<std::uint8_t> dru_exec(const nn::Tensor& q_msg);

// Bits a train-form message would send: value > 0.5, i.e. noisy logit > 0.
std::vector<std::uint8_t> discretize(const nn::Tensor& train_message);

}  // namespace cyberdial::dial
