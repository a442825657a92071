#include "cyberdial/nn/tape.hpp"

#include <stdexcept>

namespace cyberdial::nn {

const Tensor& Value::data() const { return tape_->value(id_); }
const Tensor& Value::grad() const { return tape_->grad(id_); }
bool Value::requires_grad() const { return tape_->requires_grad(id_); }

Value Tape::constant(Tensor value)
{
    nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
    return {this, static_cast<int>(nodes_.size()) - 1};
}

Value Tape::param(Parameter& p)
{
    if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return {this, it->second};
    nodes_.push_back(Node{p.value, {}, {}, &p, grad_enabled_});
    const int id = static_cast<int>(nodes_.size()) - 1;
    param_nodes_[&p] = id;
    return {this, id};
}

Value Tape::record(Tensor value, std::initializer_list<Value> inputs, Backward backward)
{
    bool needs = false;
    if (grad_enabled_)
        for (const auto& v : inputs) needs = needs || requires_grad(v.id());
    nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backward) : Backward{}, nullptr, needs});
    return {this, static_cast<int>(nodes_.size()) - 1};
}

Value Tape::record(Tensor value, const std::vector<Value>& inputs, Backward backward)
{
    bool needs = false;
    if (grad_enabled_)
        for (const auto& v : inputs) needs = needs || requires_grad(v.id());
    nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backward) : Backward{}, nullptr, needs});
    return {this, static_cast<int>(nodes_.size()) - 1};
}

Tensor& Tape::grad_accumulator(int id)
{
    Node& node = nodes_[id];
    if (node.grad.size() != node.value.size() || node.grad.rows != node.value.rows)
        node.grad = Tensor(node.value.rows, node.value.cols);
    return node.grad;
}

void Tape::backward(Value root)
{
    if (root.tape() != this) throw std::invalid_argument("root belongs to another tape");
    if (value(root.id()).size() != 1) throw std::invalid_argument("backward root must be a scalar");
    if (!requires_grad(root.id())) return;
    grad_accumulator(root.id()).data[0] += 1.0;
    for (int id = root.id(); id >= 0; --id) {
        Node& node = nodes_[id];
        if (!node.requires_grad || node.grad.size() == 0) continue;
        if (node.backward) node.backward(*this, id);
        if (node.param) {
            auto& dst = node.param->grad.data;
            const auto& src = node.grad.data;
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
        }
    }
}

}  // namespace cyberdial::nn
