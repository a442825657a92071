#include "cyberdial/nn/tensor.hpp"

#include <algorithm>
#include <stdexcept>

namespace cyberdial::nn {

Tensor::Tensor(int r, int c, std::vector<double> values) : rows(r), cols(c), data(std::move(values))
{
    if (data.size() != static_cast<std::size_t>(r) * c) throw std::invalid_argument("tensor data size mismatch");
}

void Tensor::zero() { std::fill(data.begin(), data.end(), 0.0); }

}  // namespace cyberdial::nn
