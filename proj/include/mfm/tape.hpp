#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mfm/array.hpp"

namespace mfm {

using NodeId = std::int32_t;

enum class OpKind {
    input,
    param,
    constant,
    add,
    sub,
    mul,
    matmul,
    relu,
    gelu,
    tanh_fn,
    sum,
    mean,
    square,
    concat,
    slice,
    broadcast,
    softmax,
    layer_norm,
};

const char* op_name(OpKind kind);

struct TapeNode {
    OpKind kind;
    std::string name;  // binding name for leaves, diagnostic label otherwise
    std::vector<NodeId> inputs;
    Shape shape;
    // op attributes (meaningful per kind)
    bool trans_a = false;
    bool trans_b = false;
    std::size_t axis = 0;
    std::vector<std::size_t> starts;
    std::vector<std::size_t> sizes;
    double eps = 1e-5;
    DenseArray value;  // constants only
};

// Static computation graph. Nodes are appended in topological order (every
// node's inputs have smaller ids), shapes are resolved and checked at build
// time, and the tape itself is immutable during execution: forward and
// forward_backward keep all run state in per-call workspaces, so concurrent
// evaluations of one tape are safe.
class Tape {
  public:
    NodeId input(std::string name, Shape shape);
    NodeId param(std::string name, Shape shape);
    NodeId constant(DenseArray value, std::string name = "const");

    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    // 2-D matrix product; at most one operand may be transposed.
    NodeId matmul(NodeId a, NodeId b, bool trans_a = false, bool trans_b = false);
    NodeId relu(NodeId a);
    NodeId gelu(NodeId a);
    NodeId tanh(NodeId a);
    NodeId square(NodeId a);
    NodeId sum(NodeId a);   // full reduction -> scalar
    NodeId mean(NodeId a);  // full reduction -> scalar
    NodeId concat(const std::vector<NodeId>& parts, std::size_t axis);
    NodeId slice(NodeId a, std::vector<std::size_t> starts, std::vector<std::size_t> sizes);
    NodeId broadcast(NodeId a, Shape target);
    NodeId softmax(NodeId a);  // over the last axis, rank 1 or 2
    NodeId layer_norm(NodeId x, NodeId gamma, NodeId beta, double eps = 1e-5);

    const TapeNode& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
    std::size_t size() const { return nodes_.size(); }
    NodeId final_node() const;
    const std::vector<TapeNode>& nodes() const { return nodes_; }

    // Leaf name -> node id, for binding validation.
    const std::map<std::string, NodeId>& leaves() const { return leaves_; }

  private:
    NodeId push(TapeNode n);
    NodeId leaf(OpKind kind, std::string name, Shape shape);
    const Shape& shape_of(NodeId id) const;

    std::vector<TapeNode> nodes_;
    std::map<std::string, NodeId> leaves_;
};

using Bindings = std::map<std::string, const DenseArray*>;

struct ForwardBackwardResult {
    double value = 0.0;
    std::map<std::string, DenseArray> grads;  // parameter leaves only
};

// Evaluates the tape's final node. All input/param leaves must be bound.
DenseArray forward(const Tape& tape, const Bindings& bindings);

// Evaluates and returns the value of a chosen node (inference taps).
DenseArray forward_node(const Tape& tape, const Bindings& bindings, NodeId output);

// Reverse-mode pass; the final node must be scalar-valued. Returns
// d(value)/d(p) for every parameter leaf; non-parameter leaves get none.
ForwardBackwardResult forward_backward(const Tape& tape, const Bindings& bindings);

}  // namespace mfm
