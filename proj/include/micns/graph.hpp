#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "micns/tensor.hpp"

namespace micns {

enum class OpKind {
    input,       // named placeholder, bound before evaluation
    constant,    // fixed value
    param,       // named trainable leaf
    matmul,
    add,         // equal shapes, or row-broadcast of a 1xK bias
    mul,         // elementwise, or column-broadcast of a Bx1 factor
    relu,
    sigmoid,
    concat,      // along the last axis
    neg_affine,  // offset + slope * x, defaults encode strong negation 1 - x
    reduce_min,  // over the last axis, BxK -> Bx1
    reduce_max,
    bce,         // mean binary cross-entropy of predictions vs a target node
    ce,          // mean softmax cross-entropy of logits vs integer labels
    nce,         // mean cross-entropy over truth degrees renormalized to sum 1
    scale,       // constant scalar multiple
    sum,         // all elements -> 1x1
};

const char* op_kind_name(OpKind k);

/// Handle to a node in a Graph.
struct ValueId {
    std::size_t idx = static_cast<std::size_t>(-1);
};

/// Dense-tensor computation graph with reverse-mode gradients.
///
/// Nodes are appended in topological order (operands must already exist), so
/// forward evaluation is a single pass and backward a reverse pass. All graph
/// tensors are rank 1 or 2; rank-1 operands are treated as single rows.
/// Graphs are cheap to build and carry no global state; distinct instances
/// may be evaluated concurrently.
class Graph {
public:
    ValueId input(const std::string& name, std::vector<std::size_t> shape);
    ValueId constant(Tensor value);
    ValueId param(const std::string& name, Tensor value);

    ValueId matmul(ValueId a, ValueId b);
    ValueId add(ValueId a, ValueId b);
    ValueId mul(ValueId a, ValueId b);
    ValueId relu(ValueId a);
    ValueId sigmoid(ValueId a);
    ValueId concat(ValueId a, ValueId b);
    ValueId neg_affine(ValueId a, double offset = 1.0, double slope = -1.0);
    ValueId reduce_min(ValueId a);
    ValueId reduce_max(ValueId a);
    ValueId scale(ValueId a, double factor);
    ValueId sum(ValueId a);
    ValueId bce(ValueId pred, ValueId target);
    ValueId ce(ValueId logits, std::vector<std::size_t> labels);
    ValueId nce(ValueId truth, std::vector<std::size_t> labels);

    /// Binds a named input. Shape must match the declaration.
    void bind(const std::string& name, Tensor value);
    /// Overwrites the value of a named parameter (same shape).
    void set_param(const std::string& name, const Tensor& value);

    /// Evaluates all ancestors of root and returns its value.
    const Tensor& forward(ValueId root);

    /// Reverse-mode pass from a scalar root. Requires a prior forward of the
    /// same root. Afterwards every ancestor holds dRoot/dNode and every
    /// non-ancestor's gradient is zero.
    void backward(ValueId root);

    const Tensor& value(ValueId id) const;
    const Tensor& gradient(ValueId id) const;
    /// Declared output shape; known without evaluation.
    const std::vector<std::size_t>& shape(ValueId id) const;

    /// Gradients of all trainable parameters, keyed by name. Valid after backward.
    std::map<std::string, Tensor> param_gradients() const;

    std::size_t node_count() const { return nodes_.size(); }
    OpKind kind(ValueId id) const;
    /// Trainable parameter handles in insertion order.
    std::vector<ValueId> params() const;
    const std::string& node_name(ValueId id) const;

private:
    struct Node {
        OpKind kind;
        std::vector<std::size_t> parents;
        std::vector<std::size_t> shape;
        Tensor value;
        Tensor grad;
        std::string name;                  // inputs and params
        double a = 0.0, b = 0.0;           // neg_affine offset/slope, scale factor
        std::vector<std::size_t> labels;   // ce / nce
        bool bound = false;                // inputs: value assigned
    };

    std::size_t add_node(Node node);
    const Node& node(ValueId id) const;
    Node& node(ValueId id);
    void check_exists(ValueId id, const char* op) const;
    void eval_node(std::size_t i);
    void backprop_node(std::size_t i);
    std::vector<char> ancestor_mask(std::size_t root) const;

    std::vector<Node> nodes_;
    std::map<std::string, std::size_t> named_;
    std::size_t last_forward_root_ = static_cast<std::size_t>(-1);
};

}  // namespace micns
