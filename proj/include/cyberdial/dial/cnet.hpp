#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cyberdial/nn/ops.hpp"
#include "cyberdial/nn/param_store.hpp"
#include "cyberdial/task.hpp"

namespace cyberdial::dial {

struct CNetDims {
    int agents = 0;
    std::vector<int> slot_cardinality;
    int actions = 0;
    int message_bits = 1;
    int hidden = 128;  // also the embedding width
};

CNetDims cnet_dims(const TaskLayout& layout, int hidden);

// Shared C-Net. Input embedding is the element-wise sum of one lookup per
// observation slot (per host group, then block bits), an affine map of the
// incoming message, a previous-action lookup and an agent-id lookup. The sum
// passes through ReLU, two stacked GRU layers, a ReLU hidden layer, then two
// linear heads: environment-action Q-values and message outputs.
//
// A batch stacks (lane, agent) pairs as rows.
class CNet {
public:
    struct Hidden {
        nn::Value layer1;
        nn::Value layer2;
    };
    struct Output {
        nn::Value q_env;  // [rows, actions]
        nn::Value q_msg;  // [rows, message_bits]
        Hidden hidden;
    };

    CNet(CNetDims dims, std::uint64_t init_seed);

    const CNetDims& dims() const { return dims_; }
    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }
    int slot_count() const { return static_cast<int>(dims_.slot_cardinality.size()); }

    // slots: rows x slot_count, row-major.
    nn::Value embed_input(nn::Tape& tape, std::span<const int> slots, nn::Value message_in,
                          std::span<const int> prev_action, std::span<const int> agent);
    Output forward(nn::Tape& tape, nn::Value embedding, const Hidden& hidden);
    Hidden zero_hidden(nn::Tape& tape, int rows) const;
    Hidden hidden_from(nn::Tape& tape, const nn::Tensor& layer1, const nn::Tensor& layer2) const;

private:
    nn::GruWeights gru(nn::Tape& tape, int layer);

    CNetDims dims_;
    nn::ParamStore params_;
};

}  // namespace cyberdial::dial
