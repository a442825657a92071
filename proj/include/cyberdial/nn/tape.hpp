#pragma once

#include <functional>
#include <unordered_map>
#include <vector>

#include "cyberdial/nn/param_store.hpp"
#include "cyberdial/nn/tensor.hpp"

namespace cyberdial::nn {

class Tape;

// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Value {
public:
    Value() = default;
    Value(Tape* tape, int id) : tape_(tape), id_(id) {}

    const Tensor& data() const;
    const Tensor& grad() const;  // empty tensor until backward reaches the node
    int rows() const { return data().rows; }
    int cols() const { return data().cols; }
    double item() const { return data().data.at(0); }
    bool requires_grad() const;

    Tape* tape() const { return tape_; }
    int id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

private:
    Tape* tape_ = nullptr;
    int id_ = -1;
};

// Records a computation for one reverse sweep. Nodes are appended in
// evaluation order, so reverse index order is a reverse topological order and
// each node's backward runs exactly once.
class Tape {
public:
    using Backward = std::function<void(Tape&, int self)>;

    explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool grad_enabled() const { return grad_enabled_; }

    Value constant(Tensor value);
    // Leaf bound to a parameter; one node per parameter per tape.
    Value param(Parameter& p);
    // Appends a node. The backward closure is dropped when no input needs
    // a gradient or the tape is in no-grad mode.
    Value record(Tensor value, std::initializer_list<Value> inputs, Backward backward);
    Value record(Tensor value, const std::vector<Value>& inputs, Backward backward);

    const Tensor& value(int id) const { return nodes_[id].value; }
    const Tensor& grad(int id) const { return nodes_[id].grad; }
    bool requires_grad(int id) const { return nodes_[id].requires_grad; }
    // Gradient buffer for accumulation, allocated as zeros on first use.
    Tensor& grad_accumulator(int id);

    // Seeds d(root)/d(root) = 1 (root must be 1x1), sweeps in reverse and
    // adds leaf gradients into the bound Parameter::grad buffers.
    void backward(Value root);

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        Backward backward;
        Parameter* param = nullptr;
        bool requires_grad = false;
    };

    std::vector<Node> nodes_;
    std::unordered_map<Parameter*, int> param_nodes_;
    bool grad_enabled_;
};

}  // namespace cyberdial::nn
