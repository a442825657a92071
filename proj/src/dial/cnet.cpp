#include "cyberdial/dial/cnet.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cyberdial::dial {

CNetDims cnet_dims(const TaskLayout& layout, int hidden)
{
    CNetDims d;
    d.agents = layout.agents;
    d.slot_cardinality = layout.slot_cardinality;
    d.actions = layout.action_count;
    d.message_bits = layout.message_bits;
    d.hidden = hidden;
    return d;
}

CNet::CNet(CNetDims dims, std::uint64_t init_seed) : dims_(std::move(dims))
{
    const int h = dims_.hidden;
    Rng rng(init_seed);
    const double embed_bound = 0.08;
    auto affine_params = [&](const std::string& name, int in, int out) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        nn::init_uniform(params_.add(name + ".w", in, out), bound, rng);
        nn::init_uniform(params_.add(name + ".b", 1, out), bound, rng);
    };

    for (std::size_t s = 0; s < dims_.slot_cardinality.size(); ++s)
        nn::init_uniform(params_.add("embed.slot" + std::to_string(s), dims_.slot_cardinality[s], h), embed_bound, rng);
    affine_params("embed.message", dims_.message_bits, h);
    nn::init_uniform(params_.add("embed.prev_action", dims_.actions, h), embed_bound, rng);
    nn::init_uniform(params_.add("embed.agent", dims_.agents, h), embed_bound, rng);
    for (int layer = 0; layer < 2; ++layer) {
        const std::string name = "gru" + std::to_string(layer);
        const double bound = 1.0 / std::sqrt(static_cast<double>(h));
        nn::init_uniform(params_.add(name + ".w_input", h, 3 * h), bound, rng);
        nn::init_uniform(params_.add(name + ".w_hidden", h, 3 * h), bound, rng);
        nn::init_uniform(params_.add(name + ".b_input", 1, 3 * h), bound, rng);
        nn::init_uniform(params_.add(name + ".b_hidden", 1, 3 * h), bound, rng);
    }
    affine_params("head.hidden", h, h);
    affine_params("head.action", h, dims_.actions);
    affine_params("head.message", h, dims_.message_bits);
}

nn::Value CNet::embed_input(nn::Tape& tape, std::span<const int> slots, nn::Value message_in,
                            std::span<const int> prev_action, std::span<const int> agent)
{
    const int rows = static_cast<int>(agent.size());
    const int slot_n = slot_count();
    if (static_cast<int>(slots.size()) != rows * slot_n || static_cast<int>(prev_action.size()) != rows ||
        message_in.rows() != rows || message_in.cols() != dims_.message_bits)
        throw std::invalid_argument("embed_input: shape mismatch");
    for (int a : agent)
        if (a < 0 || a >= dims_.agents) throw std::out_of_range("embed_input: unknown agent id " + std::to_string(a));

    std::vector<nn::Value> terms;
    std::vector<int> column(rows);
    for (int s = 0; s < slot_n; ++s) {
        for (int r = 0; r < rows; ++r) column[r] = slots[r * slot_n + s];
        terms.push_back(nn::lookup(tape.param(params_.get("embed.slot" + std::to_string(s))), column));
    }
    terms.push_back(nn::affine(message_in, tape.param(params_.get("embed.message.w")),
                               tape.param(params_.get("embed.message.b"))));
    terms.push_back(nn::lookup(tape.param(params_.get("embed.prev_action")), prev_action));
    terms.push_back(nn::lookup(tape.param(params_.get("embed.agent")), agent));
    return nn::sum_elementwise(terms);
}

nn::GruWeights CNet::gru(nn::Tape& tape, int layer)
{
    const std::string name = "gru" + std::to_string(layer);
    return {tape.param(params_.get(name + ".w_input")), tape.param(params_.get(name + ".w_hidden")),
            tape.param(params_.get(name + ".b_input")), tape.param(params_.get(name + ".b_hidden"))};
}

CNet::Output CNet::forward(nn::Tape& tape, nn::Value embedding, const Hidden& hidden)
{
    if (embedding.cols() != dims_.hidden) throw std::invalid_argument("forward: embedding width mismatch");
    Output out;
    const nn::Value x = nn::relu(embedding);
    out.hidden.layer1 = nn::gru_cell(gru(tape, 0), x, hidden.layer1);
    out.hidden.layer2 = nn::gru_cell(gru(tape, 1), out.hidden.layer1, hidden.layer2);
    const nn::Value features = nn::relu(nn::affine(out.hidden.layer2, tape.param(params_.get("head.hidden.w")),
                                                   tape.param(params_.get("head.hidden.b"))));
    out.q_env = nn::affine(features, tape.param(params_.get("head.action.w")), tape.param(params_.get("head.action.b")));
    out.q_msg =
        nn::affine(features, tape.param(params_.get("head.message.w")), tape.param(params_.get("head.message.b")));
    return out;
}

CNet::Hidden CNet::zero_hidden(nn::Tape& tape, int rows) const
{
    return {tape.constant(nn::Tensor(rows, dims_.hidden)), tape.constant(nn::Tensor(rows, dims_.hidden))};
}

CNet::Hidden CNet::hidden_from(nn::Tape& tape, const nn::Tensor& layer1, const nn::Tensor& layer2) const
{
    return {tape.constant(layer1), tape.constant(layer2)};
}

}  // namespace cyberdial::dial
