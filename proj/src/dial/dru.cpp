#include "cyberdial/dial/dru.hpp"

#include <stdexcept>

namespace cyberdial::dial {

nn::Tensor draw_message_noise(int rows, int bits, Rng& rng)
{
    nn::Tensor noise(rows, bits);
    for (double& v : noise.data) v = rng.gaussian();
    return noise;
}

nn::Value dru_train(nn::Value q_msg, double sigma, const nn::Tensor& noise)
{
    if (sigma < 0.0) throw std::invalid_argument("dru: sigma must be non-negative");
    if (!noise.same_shape(q_msg.data())) throw std::invalid_argument("dru: noise shape mismatch");
    nn::Tensor shift = noise;
    for (double& v : shift.data) v *= sigma;
    return nn::logistic(nn::add_constant(q_msg, shift));
}

std::vector<std::uint8_t> dru_exec(const nn::Tensor& q_msg)
{
    std::vector<std::uint8_t> bits(q_msg.size());
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = q_msg.data[i] > 0.0 ? 1 : 0;
    return bits;
}

std::vector<std::uint8_t> discretize(const nn::Tensor& train_message)
{
    std::vector<std::uint8_t> bits(train_message.size());
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = train_message.data[i] > 0.5 ? 1 : 0;
    return bits;
}

}  // namespace cyberdial::dial
