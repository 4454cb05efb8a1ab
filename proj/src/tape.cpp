#include "mfm/tape.hpp"

#include <cmath>
#include <numbers>

namespace mfm {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

// C += A * B for the three supported transpose layouts.
void matmul_acc_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                   std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void matmul_acc_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                   std::size_t n) {
    // a: [m,k], b: [n,k]
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = b + j * k;
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
            crow[j] += s;
        }
    }
}

void matmul_acc_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                   std::size_t n) {
    // a: [k,m], b: [k,n]
    for (std::size_t p = 0; p < k; ++p) {
        const double* arow = a + p * m;
        const double* brow = b + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double av = arow[i];
            double* crow = c + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void matmul_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                std::size_t n, bool ta, bool tb) {
    if (!ta && !tb) {
        matmul_acc_nn(a, b, c, m, k, n);
    } else if (!ta && tb) {
        matmul_acc_nt(a, b, c, m, k, n);
    } else {
        matmul_acc_tn(a, b, c, m, k, n);
    }
}

// Right-aligned broadcast map: flat target index -> flat source index.
std::size_t broadcast_source_index(const Shape& src, const Shape& dst, std::size_t flat) {
    const std::size_t pad = dst.size() - src.size();
    std::size_t src_idx = 0;
    std::size_t src_stride = 1;
    std::size_t rem = flat;
    // walk axes from the innermost outwards
    for (std::size_t r = dst.size(); r-- > 0;) {
        const std::size_t coord = rem % dst[r];
        rem /= dst[r];
        if (r >= pad) {
            const std::size_t s = src[r - pad];
            if (s != 1) src_idx += coord * src_stride;
            src_stride *= s;
        }
    }
    return src_idx;
}

std::vector<std::size_t> row_major_strides(const Shape& shape) {
    std::vector<std::size_t> strides(shape.size(), 1);
    for (std::size_t r = shape.size(); r-- > 1;) strides[r - 1] = strides[r] * shape[r];
    return strides;
}

double gelu_fwd(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_grad(double x) {
    return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

}  // namespace

const char* op_name(OpKind kind) {
    switch (kind) {
        case OpKind::input: return "input";
        case OpKind::param: return "param";
        case OpKind::constant: return "constant";
        case OpKind::add: return "add";
        case OpKind::sub: return "sub";
        case OpKind::mul: return "mul";
        case OpKind::matmul: return "matmul";
        case OpKind::relu: return "relu";
        case OpKind::gelu: return "gelu";
        case OpKind::tanh_fn: return "tanh";
        case OpKind::sum: return "sum";
        case OpKind::mean: return "mean";
        case OpKind::square: return "square";
        case OpKind::concat: return "concat";
        case OpKind::slice: return "slice";
        case OpKind::broadcast: return "broadcast";
        case OpKind::softmax: return "softmax";
        case OpKind::layer_norm: return "layer_norm";
    }
    return "?";
}

NodeId Tape::push(TapeNode n) {
    const NodeId id = static_cast<NodeId>(nodes_.size());
    if (n.name.empty()) n.name = std::string(op_name(n.kind)) + "#" + std::to_string(id);
    nodes_.push_back(std::move(n));
    return id;
}

NodeId Tape::leaf(OpKind kind, std::string name, Shape shape) {
    if (name.empty()) throw ConfigError("tape leaf needs a name");
    if (leaves_.count(name)) throw ConfigError("duplicate tape leaf '" + name + "'");
    TapeNode n;
    n.kind = kind;
    n.name = std::move(name);
    n.shape = std::move(shape);
    const NodeId id = push(std::move(n));
    leaves_[nodes_.back().name] = id;
    return id;
}

NodeId Tape::input(std::string name, Shape shape) {
    return leaf(OpKind::input, std::move(name), std::move(shape));
}

NodeId Tape::param(std::string name, Shape shape) {
    return leaf(OpKind::param, std::move(name), std::move(shape));
}

NodeId Tape::constant(DenseArray value, std::string name) {
    TapeNode n;
    n.kind = OpKind::constant;
    n.name = std::move(name) + "#" + std::to_string(nodes_.size());
    n.shape = value.shape();
    n.value = std::move(value);
    return push(std::move(n));
}

const Shape& Tape::shape_of(NodeId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
        throw ConfigError("tape: node id out of range");
    }
    return nodes_[static_cast<std::size_t>(id)].shape;
}

NodeId Tape::final_node() const {
    if (nodes_.empty()) throw ConfigError("tape is empty");
    return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::add(NodeId a, NodeId b) {
    if (shape_of(a) != shape_of(b)) {
        throw ShapeError("add: shape mismatch " + shape_str(shape_of(a)) + " vs " +
                         shape_str(shape_of(b)));
    }
    TapeNode n;
    n.kind = OpKind::add;
    n.inputs = {a, b};
    n.shape = shape_of(a);
    return push(std::move(n));
}

NodeId Tape::sub(NodeId a, NodeId b) {
    if (shape_of(a) != shape_of(b)) {
        throw ShapeError("sub: shape mismatch " + shape_str(shape_of(a)) + " vs " +
                         shape_str(shape_of(b)));
    }
    TapeNode n;
    n.kind = OpKind::sub;
    n.inputs = {a, b};
    n.shape = shape_of(a);
    return push(std::move(n));
}

NodeId Tape::mul(NodeId a, NodeId b) {
    if (shape_of(a) != shape_of(b)) {
        throw ShapeError("mul: shape mismatch " + shape_str(shape_of(a)) + " vs " +
                         shape_str(shape_of(b)));
    }
    TapeNode n;
    n.kind = OpKind::mul;
    n.inputs = {a, b};
    n.shape = shape_of(a);
    return push(std::move(n));
}

NodeId Tape::matmul(NodeId a, NodeId b, bool trans_a, bool trans_b) {
    if (trans_a && trans_b) throw ConfigError("matmul: double transpose is not supported");
    const Shape& sa = shape_of(a);
    const Shape& sb = shape_of(b);
    if (sa.size() != 2 || sb.size() != 2) {
        throw ShapeError("matmul: operands must be rank 2, got " + shape_str(sa) + " and " +
                         shape_str(sb));
    }
    const std::size_t m = trans_a ? sa[1] : sa[0];
    const std::size_t ka = trans_a ? sa[0] : sa[1];
    const std::size_t kb = trans_b ? sb[1] : sb[0];
    const std::size_t nn = trans_b ? sb[0] : sb[1];
    if (ka != kb) {
        throw ShapeError("matmul: inner dimensions disagree, " + shape_str(sa) +
                         (trans_a ? "^T" : "") + " x " + shape_str(sb) + (trans_b ? "^T" : ""));
    }
    TapeNode n;
    n.kind = OpKind::matmul;
    n.inputs = {a, b};
    n.shape = {m, nn};
    n.trans_a = trans_a;
    n.trans_b = trans_b;
    return push(std::move(n));
}

NodeId Tape::relu(NodeId a) {
    TapeNode n;
    n.kind = OpKind::relu;
    n.inputs = {a};
    n.shape = shape_of(a);
    return push(std::move(n));
}

NodeId Tape::gelu(NodeId a) {
    TapeNode n;
    n.kind = OpKind::gelu;
    n.inputs = {a};
    n.shape = shape_of(a);
    return push(std::move(n));
}

NodeId Tape::tanh(NodeId a) {
    TapeNode n;
    n.kind = OpKind::tanh_fn;
    n.inputs = {a};
    n.shape = shape_of(a);
    return push(std::move(n));
}

NodeId Tape::square(NodeId a) {
    TapeNode n;
    n.kind = OpKind::square;
    n.inputs = {a};
    n.shape = shape_of(a);
    return push(std::move(n));
}

NodeId Tape::sum(NodeId a) {
    TapeNode n;
    n.kind = OpKind::sum;
    n.inputs = {a};
    n.shape = {};
    return push(std::move(n));
}

NodeId Tape::mean(NodeId a) {
    TapeNode n;
    n.kind = OpKind::mean;
    n.inputs = {a};
    n.shape = {};
    return push(std::move(n));
}

NodeId Tape::concat(const std::vector<NodeId>& parts, std::size_t axis) {
    if (parts.empty()) throw ShapeError("concat: needs at least one part");
    Shape out = shape_of(parts[0]);
    if (axis >= out.size()) throw ShapeError("concat: axis out of range");
    for (std::size_t i = 1; i < parts.size(); ++i) {
        const Shape& s = shape_of(parts[i]);
        if (s.size() != out.size()) throw ShapeError("concat: rank mismatch");
        for (std::size_t r = 0; r < s.size(); ++r) {
            if (r == axis) continue;
            if (s[r] != out[r]) {
                throw ShapeError("concat: extent mismatch on axis " + std::to_string(r));
            }
        }
        out[axis] += s[axis];
    }
    TapeNode n;
    n.kind = OpKind::concat;
    n.inputs = parts;
    n.shape = std::move(out);
    n.axis = axis;
    return push(std::move(n));
}

NodeId Tape::slice(NodeId a, std::vector<std::size_t> starts, std::vector<std::size_t> sizes) {
    const Shape& s = shape_of(a);
    if (starts.size() != s.size() || sizes.size() != s.size()) {
        throw ShapeError("slice: starts/sizes rank mismatch with " + shape_str(s));
    }
    for (std::size_t r = 0; r < s.size(); ++r) {
        if (sizes[r] == 0 || starts[r] + sizes[r] > s[r]) {
            throw ShapeError("slice: range out of bounds on axis " + std::to_string(r));
        }
    }
    TapeNode n;
    n.kind = OpKind::slice;
    n.inputs = {a};
    n.shape = Shape(sizes.begin(), sizes.end());
    n.starts = std::move(starts);
    n.sizes = std::move(sizes);
    return push(std::move(n));
}

NodeId Tape::broadcast(NodeId a, Shape target) {
    const Shape& s = shape_of(a);
    if (s.size() > target.size()) {
        throw ShapeError("broadcast: source rank exceeds target rank");
    }
    const std::size_t pad = target.size() - s.size();
    for (std::size_t r = 0; r < s.size(); ++r) {
        if (s[r] != 1 && s[r] != target[pad + r]) {
            throw ShapeError("broadcast: " + shape_str(s) + " incompatible with " +
                             shape_str(target));
        }
    }
    TapeNode n;
    n.kind = OpKind::broadcast;
    n.inputs = {a};
    n.shape = std::move(target);
    return push(std::move(n));
}

NodeId Tape::softmax(NodeId a) {
    const Shape& s = shape_of(a);
    if (s.empty() || s.size() > 2) throw ShapeError("softmax: rank must be 1 or 2");
    TapeNode n;
    n.kind = OpKind::softmax;
    n.inputs = {a};
    n.shape = s;
    return push(std::move(n));
}

NodeId Tape::layer_norm(NodeId x, NodeId gamma, NodeId beta, double eps) {
    const Shape& s = shape_of(x);
    if (s.empty() || s.size() > 2) throw ShapeError("layer_norm: rank must be 1 or 2");
    const std::size_t width = s.back();
    if (shape_of(gamma) != Shape{width} || shape_of(beta) != Shape{width}) {
        throw ShapeError("layer_norm: gamma/beta must have shape [" + std::to_string(width) + "]");
    }
    TapeNode n;
    n.kind = OpKind::layer_norm;
    n.inputs = {x, gamma, beta};
    n.shape = s;
    n.eps = eps;
    return push(std::move(n));
}

namespace {

struct Workspace {
    const Tape& tape;
    std::vector<DenseArray> vals;

    explicit Workspace(const Tape& t) : tape(t), vals(t.size()) {}

    [[noreturn]] void fail_non_finite(NodeId id) const {
        const TapeNode& n = tape.node(id);
        throw NumericError("numeric overflow: non-finite value in node #" + std::to_string(id) +
                           " (" + std::string(op_name(n.kind)) + " '" + n.name + "')");
    }

    void check_finite(NodeId id) const {
        if (!vals[static_cast<std::size_t>(id)].all_finite()) fail_non_finite(id);
    }
};

void run_forward(Workspace& ws, const Bindings& bindings, NodeId upto) {
    const Tape& tape = ws.tape;
    for (NodeId id = 0; id <= upto; ++id) {
        const TapeNode& n = tape.node(id);
        DenseArray& out = ws.vals[static_cast<std::size_t>(id)];
        switch (n.kind) {
            case OpKind::input:
            case OpKind::param: {
                auto it = bindings.find(n.name);
                if (it == bindings.end() || it->second == nullptr) {
                    throw ConfigError("forward: leaf '" + n.name + "' is not bound");
                }
                if (it->second->shape() != n.shape) {
                    throw ShapeError("forward: leaf '" + n.name + "' bound with shape " +
                                     shape_str(it->second->shape()) + ", declared " +
                                     shape_str(n.shape));
                }
                out = *it->second;
                break;
            }
            case OpKind::constant:
                out = n.value;
                break;
            case OpKind::add:
            case OpKind::sub:
            case OpKind::mul: {
                const DenseArray& a = ws.vals[n.inputs[0]];
                const DenseArray& b = ws.vals[n.inputs[1]];
                out = DenseArray(n.shape);
                const std::size_t count = out.numel();
                if (n.kind == OpKind::add) {
                    for (std::size_t i = 0; i < count; ++i) out[i] = a[i] + b[i];
                } else if (n.kind == OpKind::sub) {
                    for (std::size_t i = 0; i < count; ++i) out[i] = a[i] - b[i];
                } else {
                    for (std::size_t i = 0; i < count; ++i) out[i] = a[i] * b[i];
                }
                break;
            }
            case OpKind::matmul: {
                const DenseArray& a = ws.vals[n.inputs[0]];
                const DenseArray& b = ws.vals[n.inputs[1]];
                out = DenseArray(n.shape);
                const std::size_t m = n.shape[0];
                const std::size_t nn = n.shape[1];
                const std::size_t k = n.trans_a ? a.shape()[0] : a.shape()[1];
                matmul_acc(a.data(), b.data(), out.data(), m, k, nn, n.trans_a, n.trans_b);
                break;
            }
            case OpKind::relu: {
                const DenseArray& a = ws.vals[n.inputs[0]];
                out = DenseArray(n.shape);
                for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0;
                break;
            }
            case OpKind::gelu: {
                const DenseArray& a = ws.vals[n.inputs[0]];
                out = DenseArray(n.shape);
                for (std::size_t i = 0; i < out.numel(); ++i) out[i] = gelu_fwd(a[i]);
                break;
            }
            case OpKind::tanh_fn: {
                const DenseArray& a = ws.vals[n.inputs[0]];
                out = DenseArray(n.shape);
                for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::tanh(a[i]);
                break;
            }
            case OpKind::square: {
                const DenseArray& a = ws.vals[n.inputs[0]];
                out = DenseArray(n.shape);
                for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a[i] * a[i];
                break;
            }
            case OpKind::sum:
            case OpKind::mean: {
                const DenseArray& a = ws.vals[n.inputs[0]];
                double s = 0.0;
                for (std::size_t i = 0; i < a.numel(); ++i) s += a[i];
                if (n.kind == OpKind::mean) s /= static_cast<double>(a.numel());
                out = DenseArray::scalar(s);
                break;
            }
            case OpKind::concat: {
                out = DenseArray(n.shape);
                std::size_t inner_sz = 1;
                for (std::size_t r = n.axis + 1; r < n.shape.size(); ++r) inner_sz *= n.shape[r];
                std::size_t outer = 1;
                for (std::size_t r = 0; r < n.axis; ++r) outer *= n.shape[r];
                std::size_t offset = 0;
                for (NodeId part : n.inputs) {
                    const DenseArray& p = ws.vals[part];
                    const std::size_t ax = p.shape()[n.axis];
                    const std::size_t block = ax * inner_sz;
                    for (std::size_t o = 0; o < outer; ++o) {
                        const double* src = p.data() + o * block;
                        double* dst =
                            out.data() + o * n.shape[n.axis] * inner_sz + offset * inner_sz;
                        for (std::size_t i = 0; i < block; ++i) dst[i] = src[i];
                    }
                    offset += ax;
                }
                break;
            }
            case OpKind::slice: {
                const DenseArray& a = ws.vals[n.inputs[0]];
                out = DenseArray(n.shape);
                const auto src_strides = row_major_strides(a.shape());
                const std::size_t rank = n.shape.size();
                std::vector<std::size_t> idx(rank, 0);
                for (std::size_t flat = 0; flat < out.numel(); ++flat) {
                    std::size_t src = 0;
                    for (std::size_t r = 0; r < rank; ++r) {
                        src += (n.starts[r] + idx[r]) * src_strides[r];
                    }
                    out[flat] = a[src];
                    for (std::size_t r = rank; r-- > 0;) {
                        if (++idx[r] < n.sizes[r]) break;
                        idx[r] = 0;
                    }
                }
                break;
            }
            case OpKind::broadcast: {
                const DenseArray& a = ws.vals[n.inputs[0]];
                out = DenseArray(n.shape);
                for (std::size_t flat = 0; flat < out.numel(); ++flat) {
                    out[flat] = a[broadcast_source_index(a.shape(), n.shape, flat)];
                }
                break;
            }
            case OpKind::softmax: {
                const DenseArray& a = ws.vals[n.inputs[0]];
                out = DenseArray(n.shape);
                const std::size_t width = n.shape.back();
                const std::size_t rows = a.numel() / width;
                for (std::size_t r = 0; r < rows; ++r) {
                    const double* x = a.data() + r * width;
                    double* y = out.data() + r * width;
                    double mx = x[0];
                    for (std::size_t j = 1; j < width; ++j) mx = std::max(mx, x[j]);
                    double z = 0.0;
                    for (std::size_t j = 0; j < width; ++j) {
                        y[j] = std::exp(x[j] - mx);
                        z += y[j];
                    }
                    for (std::size_t j = 0; j < width; ++j) y[j] /= z;
                }
                break;
            }
            case OpKind::layer_norm: {
                const DenseArray& x = ws.vals[n.inputs[0]];
                const DenseArray& gamma = ws.vals[n.inputs[1]];
                const DenseArray& beta = ws.vals[n.inputs[2]];
                out = DenseArray(n.shape);
                const std::size_t width = n.shape.back();
                const std::size_t rows = x.numel() / width;
                for (std::size_t r = 0; r < rows; ++r) {
                    const double* xr = x.data() + r * width;
                    double* yr = out.data() + r * width;
                    double mu = 0.0;
                    for (std::size_t j = 0; j < width; ++j) mu += xr[j];
                    mu /= static_cast<double>(width);
                    double var = 0.0;
                    for (std::size_t j = 0; j < width; ++j) {
                        const double d = xr[j] - mu;
                        var += d * d;
                    }
                    var /= static_cast<double>(width);
                    const double inv = 1.0 / std::sqrt(var + n.eps);
                    for (std::size_t j = 0; j < width; ++j) {
                        yr[j] = gamma[j] * (xr[j] - mu) * inv + beta[j];
                    }
                }
                break;
            }
        }
        ws.check_finite(id);
    }
}

}  // namespace

DenseArray forward(const Tape& tape, const Bindings& bindings) {
    return forward_node(tape, bindings, tape.final_node());
}

DenseArray forward_node(const Tape& tape, const Bindings& bindings, NodeId output) {
    if (output < 0 || static_cast<std::size_t>(output) >= tape.size()) {
        throw ConfigError("forward_node: output id out of range");
    }
    Workspace ws(tape);
    run_forward(ws, bindings, output);
    return std::move(ws.vals[static_cast<std::size_t>(output)]);
}

ForwardBackwardResult forward_backward(const Tape& tape, const Bindings& bindings) {
    const NodeId last = tape.final_node();
    if (!tape.node(last).shape.empty()) {
        throw ShapeError("forward_backward: final node must be scalar-valued, got " +
                         shape_str(tape.node(last).shape));
    }
    Workspace ws(tape);
    run_forward(ws, bindings, last);

    std::vector<DenseArray> adj(tape.size());
    std::vector<char> has_adj(tape.size(), 0);
    auto grad_of = [&](NodeId id) -> DenseArray& {
        if (!has_adj[static_cast<std::size_t>(id)]) {
            adj[static_cast<std::size_t>(id)] = DenseArray(tape.node(id).shape);
            has_adj[static_cast<std::size_t>(id)] = 1;
        }
        return adj[static_cast<std::size_t>(id)];
    };
    grad_of(last)[0] = 1.0;

    for (NodeId id = last; id >= 0; --id) {
        if (!has_adj[static_cast<std::size_t>(id)]) continue;
        const TapeNode& n = tape.node(id);
        const DenseArray& g = adj[static_cast<std::size_t>(id)];
        switch (n.kind) {
            case OpKind::input:
            case OpKind::param:
            case OpKind::constant:
                break;
            case OpKind::add: {
                DenseArray& ga = grad_of(n.inputs[0]);
                DenseArray& gb = grad_of(n.inputs[1]);
                for (std::size_t i = 0; i < g.numel(); ++i) {
                    ga[i] += g[i];
                    gb[i] += g[i];
                }
                break;
            }
            case OpKind::sub: {
                DenseArray& ga = grad_of(n.inputs[0]);
                DenseArray& gb = grad_of(n.inputs[1]);
                for (std::size_t i = 0; i < g.numel(); ++i) {
                    ga[i] += g[i];
                    gb[i] -= g[i];
                }
                break;
            }
            case OpKind::mul: {
                const DenseArray& a = ws.vals[n.inputs[0]];
                const DenseArray& b = ws.vals[n.inputs[1]];
                DenseArray& ga = grad_of(n.inputs[0]);
                DenseArray& gb = grad_of(n.inputs[1]);
                for (std::size_t i = 0; i < g.numel(); ++i) {
                    ga[i] += g[i] * b[i];
                    gb[i] += g[i] * a[i];
                }
                break;
            }
            case OpKind::matmul: {
                const DenseArray& a = ws.vals[n.inputs[0]];
                const DenseArray& b = ws.vals[n.inputs[1]];
                DenseArray& ga = grad_of(n.inputs[0]);
                DenseArray& gb = grad_of(n.inputs[1]);
                const std::size_t m = n.shape[0];
                const std::size_t nn = n.shape[1];
                const std::size_t k = n.trans_a ? a.shape()[0] : a.shape()[1];
                if (!n.trans_a && !n.trans_b) {
                    // dA = g B^T, dB = A^T g
                    matmul_acc_nt(g.data(), b.data(), ga.data(), m, nn, k);
                    matmul_acc_tn(a.data(), g.data(), gb.data(), k, m, nn);
                } else if (!n.trans_a && n.trans_b) {
                    // C = A B^T: dA = g B, dB = g^T A
                    matmul_acc_nn(g.data(), b.data(), ga.data(), m, nn, k);
                    matmul_acc_tn(g.data(), a.data(), gb.data(), nn, m, k);
                } else {
                    // C = A^T B: dA = B g^T, dB = A g
                    matmul_acc_nt(b.data(), g.data(), ga.data(), k, nn, m);
                    matmul_acc_nn(a.data(), g.data(), gb.data(), k, m, nn);
                }
                break;
            }
            case OpKind::relu: {
                const DenseArray& a = ws.vals[n.inputs[0]];
                DenseArray& ga = grad_of(n.inputs[0]);
                for (std::size_t i = 0; i < g.numel(); ++i) {
                    if (a[i] > 0.0) ga[i] += g[i];
                }
                break;
            }
            case OpKind::gelu: {
                const DenseArray& a = ws.vals[n.inputs[0]];
                DenseArray& ga = grad_of(n.inputs[0]);
                for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * gelu_grad(a[i]);
                break;
            }
            case OpKind::tanh_fn: {
                const DenseArray& y = ws.vals[static_cast<std::size_t>(id)];
                DenseArray& ga = grad_of(n.inputs[0]);
                for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
                break;
            }
            case OpKind::square: {
                const DenseArray& a = ws.vals[n.inputs[0]];
                DenseArray& ga = grad_of(n.inputs[0]);
                for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += 2.0 * a[i] * g[i];
                break;
            }
            case OpKind::sum: {
                DenseArray& ga = grad_of(n.inputs[0]);
                const double gv = g[0];
                for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += gv;
                break;
            }
            case OpKind::mean: {
                DenseArray& ga = grad_of(n.inputs[0]);
                const double gv = g[0] / static_cast<double>(ga.numel());
                for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += gv;
                break;
            }
            case OpKind::concat: {
                std::size_t inner_sz = 1;
                for (std::size_t r = n.axis + 1; r < n.shape.size(); ++r) inner_sz *= n.shape[r];
                std::size_t outer = 1;
                for (std::size_t r = 0; r < n.axis; ++r) outer *= n.shape[r];
                std::size_t offset = 0;
                for (NodeId part : n.inputs) {
                    DenseArray& gp = grad_of(part);
                    const std::size_t ax = tape.node(part).shape[n.axis];
                    const std::size_t block = ax * inner_sz;
                    for (std::size_t o = 0; o < outer; ++o) {
                        const double* src =
                            g.data() + o * n.shape[n.axis] * inner_sz + offset * inner_sz;
                        double* dst = gp.data() + o * block;
                        for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
                    }
                    offset += ax;
                }
                break;
            }
            case OpKind::slice: {
                DenseArray& ga = grad_of(n.inputs[0]);
                const auto src_strides = row_major_strides(ga.shape());
                const std::size_t rank = n.shape.size();
                std::vector<std::size_t> idx(rank, 0);
                for (std::size_t flat = 0; flat < g.numel(); ++flat) {
                    std::size_t src = 0;
                    for (std::size_t r = 0; r < rank; ++r) {
                        src += (n.starts[r] + idx[r]) * src_strides[r];
                    }
                    ga[src] += g[flat];
                    for (std::size_t r = rank; r-- > 0;) {
                        if (++idx[r] < n.sizes[r]) break;
                        idx[r] = 0;
                    }
                }
                break;
            }
            case OpKind::broadcast: {
                DenseArray& ga = grad_of(n.inputs[0]);
                for (std::size_t flat = 0; flat < g.numel(); ++flat) {
                    ga[broadcast_source_index(ga.shape(), n.shape, flat)] += g[flat];
                }
                break;
            }
            case OpKind::softmax: {
                const DenseArray& y = ws.vals[static_cast<std::size_t>(id)];
                DenseArray& ga = grad_of(n.inputs[0]);
                const std::size_t width = n.shape.back();
                const std::size_t rows = y.numel() / width;
                for (std::size_t r = 0; r < rows; ++r) {
                    const double* yr = y.data() + r * width;
                    const double* gr = g.data() + r * width;
                    double dot = 0.0;
                    for (std::size_t j = 0; j < width; ++j) dot += yr[j] * gr[j];
                    double* gar = ga.data() + r * width;
                    for (std::size_t j = 0; j < width; ++j) gar[j] += yr[j] * (gr[j] - dot);
                }
                break;
            }
            case OpKind::layer_norm: {
                const DenseArray& x = ws.vals[n.inputs[0]];
                const DenseArray& gamma = ws.vals[n.inputs[1]];
                DenseArray& gx = grad_of(n.inputs[0]);
                DenseArray& ggamma = grad_of(n.inputs[1]);
                DenseArray& gbeta = grad_of(n.inputs[2]);
                const std::size_t width = n.shape.back();
                const std::size_t rows = x.numel() / width;
                const double wd = static_cast<double>(width);
                for (std::size_t r = 0; r < rows; ++r) {
                    const double* xr = x.data() + r * width;
                    const double* gr = g.data() + r * width;
                    double mu = 0.0;
                    for (std::size_t j = 0; j < width; ++j) mu += xr[j];
                    mu /= wd;
                    double var = 0.0;
                    for (std::size_t j = 0; j < width; ++j) {
                        const double d = xr[j] - mu;
                        var += d * d;
                    }
                    var /= wd;
                    const double inv = 1.0 / std::sqrt(var + n.eps);
                    // accumulate gamma/beta grads and the two row reductions
                    double sum_dxhat = 0.0;
                    double sum_dxhat_xhat = 0.0;
                    for (std::size_t j = 0; j < width; ++j) {
                        const double xhat = (xr[j] - mu) * inv;
                        const double dxhat = gr[j] * gamma[j];
                        ggamma[j] += gr[j] * xhat;
                        gbeta[j] += gr[j];
                        sum_dxhat += dxhat;
                        sum_dxhat_xhat += dxhat * xhat;
                    }
                    double* gxr = gx.data() + r * width;
                    for (std::size_t j = 0; j < width; ++j) {
                        const double xhat = (xr[j] - mu) * inv;
                        const double dxhat = gr[j] * gamma[j];
                        gxr[j] += inv * (dxhat - sum_dxhat / wd - xhat * sum_dxhat_xhat / wd);
                    }
                }
                break;
            }
        }
    }

    ForwardBackwardResult result;
    result.value = ws.vals[static_cast<std::size_t>(last)].scalar_value();
    for (const auto& [name, id] : tape.leaves()) {
        if (tape.node(id).kind != OpKind::param) continue;
        if (has_adj[static_cast<std::size_t>(id)]) {
            if (!adj[static_cast<std::size_t>(id)].all_finite()) {
                throw NumericError("numeric overflow: non-finite gradient for parameter '" +
                                   name + "'");
            }
            result.grads.emplace(name, std::move(adj[static_cast<std::size_t>(id)]));
        } else {
            result.grads.emplace(name, DenseArray(tape.node(id).shape));
        }
    }
    return result;
}

}  // namespace mfm
