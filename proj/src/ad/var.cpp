#include "cbct/ad/var.hpp"

#include <unordered_set>
#include <utility>

#include "cbct/errors.hpp"

namespace cbct::inline CBCT_REAL_NS::ad {
namespace {
thread_local bool g_grad_enabled = true;
}

Tensor& Node::grad_buffer() {
    if (!has_grad) {
        grad = Tensor(value.shape());
        has_grad = true;
    }
    return grad;
}

Var Var::constant(Tensor t) {
    auto n = std::make_shared<Node>();
    n->value = std::move(t);
    return Var(std::move(n));
}

Var Var::parameter(Tensor t) {
    Var v = constant(std::move(t));
    v.node_->requires_grad = true;
    return v;
}

void Var::zero_grad() {
    node_->grad_buffer().fill(real(0));
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Var make_op(const char* name, Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backward) {
    bool needs = false;
    if (g_grad_enabled) {
        for (const auto& in : inputs) needs = needs || (in.defined() && in.requires_grad());
    }
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->op = name;
    if (needs) {
        n->requires_grad = true;
        n->inputs.reserve(inputs.size());
        for (auto& in : inputs) n->inputs.push_back(in.defined() ? in.node() : nullptr);
        n->backward = std::move(backward);
    }
    return Var(std::move(n));
}

Tensor* input_grad(Node& self, std::size_t i) {
    if (i >= self.inputs.size()) return nullptr;
    Node* in = self.inputs[i].get();
    if (in == nullptr || !in->requires_grad) return nullptr;
    return &in->grad_buffer();
}

void backward(const Var& loss) {
    if (!loss.defined() || loss.numel() != 1) {
        throw ShapeError("backward needs a scalar loss, got shape " +
                         (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
    }
    Node* root = loss.node().get();
    if (!root->requires_grad) return;

    // Iterative post-order DFS: inputs precede consumers in `order`.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack{{root, 0}};
    seen.insert(root);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Node* child = node->inputs[next++].get();
            if (child != nullptr && child->requires_grad && seen.insert(child).second) {
                stack.emplace_back(child, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    root->grad_buffer().fill(real(1));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward && n->has_grad) n->backward(*n);
    }
}

}  // namespace cbct::inline CBCT_REAL_NS::ad
