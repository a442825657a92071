#pragma once

#include <span>
#include <vector>

#include "cyberdial/nn/tape.hpp"

namespace cyberdial::nn {

// Rows of `table` selected by `indices` (one per output row). Index -1 yields
// a zero row and receives no gradient.
Value lookup(Value table, std::span<const int> indices);

// x[r,in] * w[in,out] + b[1,out]
Value affine(Value x, Value w, Value b);

Value relu(Value x);
Value logistic(Value x);
Value tanh(Value x);
Value abs(Value x);
Value elu(Value x);

// Element-wise sum of two or more equally shaped operands.
Value sum_elementwise(const std::vector<Value>& terms);
Value add(Value a, Value b);
Value scale(Value x, double factor);
// x + c for a constant c of the same shape (no gradient into c).
Value add_constant(Value x, const Tensor& c);

struct GruWeights {
    Value w_input;    // [in, 3h], gate order reset | update | candidate
    Value w_hidden;   // [h, 3h]
    Value b_input;    // [1, 3h]
    Value b_hidden;   // [1, 3h]
};

// r = s(x Wir + h Whr), z = s(x Wiz + h Whz), n = tanh(x Win + r (h Whn)),
// h' = (1 - z) n + z h (biases omitted).
Value gru_cell(const GruWeights& weights, Value x, Value h);

// out[r] = x[r, column[r]]; column -1 gives 0.
Value pick(Value x, std::span<const int> column);

// out[r] = sum over s in sources[r] of x[s] (rows of x).
Value route_rows(Value x, const std::vector<std::vector<int>>& sources);

// Same data viewed with a different row count.
Value reshape(Value x, int rows, int cols);

// out[b, j] = sum_i x[b, i] * w[b, i * cols + j], with x [B, n] and w [B, n * cols].
Value batched_vecmat(Value x, Value w, int cols);

// sum_r weight[r] * (pred[r] - target[r])^2 over a [R,1] prediction.
Value weighted_squared_error(Value pred, const Tensor& target, const Tensor& weight);
// Mean of (pred - target)^2 over all elements.
Value mse(Value pred, const Tensor& target);

Value sum_all(Value x);

}  // namespace cyberdial::nn
