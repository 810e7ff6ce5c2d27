#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "cbct/ad/tensor.hpp"

namespace cbct::inline CBCT_REAL_NS::ad {

/// One vertex of the reverse-mode graph. Leaves have no backward rule.
struct Node {
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> inputs;
    /// Reads this node's grad and accumulates into the grads of `inputs`.
    std::function<void(Node&)> backward;
    const char* op = "leaf";

    /// Gradient slot, zero-filled on first use.
    Tensor& grad_buffer();
};

/// Handle to a graph node. Copies share the node.
class Var {
 public:
    Var() = default;
    explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    static Var constant(Tensor t);
    static Var parameter(Tensor t);

    bool defined() const { return node_ != nullptr; }
    const Tensor& value() const { return node_->value; }
    /// Direct access for optimizers; never call while a graph that reads this
    /// value still needs to run backward.
    Tensor& mutable_value() { return node_->value; }
    const Shape& shape() const { return node_->value.shape(); }
    std::int64_t numel() const { return node_->value.numel(); }
    real item() const { return node_->value.item(); }

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool on) { node_->requires_grad = on; }
    bool has_grad() const { return node_->has_grad; }
    /// Gradient tensor; zero-filled if nothing has been accumulated.
    const Tensor& grad() const { return node_->grad_buffer(); }
    void zero_grad();

    Var detach() const { return constant(node_->value); }
    const std::shared_ptr<Node>& node() const { return node_; }

 private:
    std::shared_ptr<Node> node_;
};

bool grad_enabled();

/// Disables graph recording on this thread for its lifetime.
class NoGradGuard {
 public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
    bool previous_;
};

/// Records an op result. Returns a constant when recording is disabled or
/// no input requires a gradient.
Var make_op(const char* name, Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backward);

/// Gradient slot of input i of `self`, or nullptr if that input needs none.
Tensor* input_grad(Node& self, std::size_t i);

/// Reverse sweep from a one-element `loss` with seed gradient 1.
/// Throws ShapeError if `loss` has more than one element.
void backward(const Var& loss);

}  // namespace cbct::inline CBCT_REAL_NS::ad
