#include "micns/graph.hpp"

#include <algorithm>
#include <cmath>

#include "micns/errors.hpp"

namespace micns {

namespace {

constexpr double kLogEps = 1e-7;  // clamp for cross-entropy logs

// Rank-1 tensors act as single rows everywhere in the graph.
std::size_t rows_of(const std::vector<std::size_t>& s) { return s.size() == 1 ? 1 : s[0]; }
std::size_t cols_of(const std::vector<std::size_t>& s) { return s.size() == 1 ? s[0] : s[1]; }

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

const char* op_kind_name(OpKind k) {
    switch (k) {
        case OpKind::input: return "input";
        case OpKind::constant: return "constant";
        case OpKind::param: return "param";
        case OpKind::matmul: return "matmul";
        case OpKind::add: return "add";
        case OpKind::mul: return "mul";
        case OpKind::relu: return "relu";
        case OpKind::sigmoid: return "sigmoid";
        case OpKind::concat: return "concat";
        case OpKind::neg_affine: return "neg-affine";
        case OpKind::reduce_min: return "reduce-min";
        case OpKind::reduce_max: return "reduce-max";
        case OpKind::bce: return "bce";
        case OpKind::ce: return "ce";
        case OpKind::nce: return "nce";
        case OpKind::scale: return "scale";
        case OpKind::sum: return "sum";
    }
    return "?";
}

std::size_t Graph::add_node(Node n) {
    nodes_.push_back(std::move(n));
    last_forward_root_ = static_cast<std::size_t>(-1);
    return nodes_.size() - 1;
}

const Graph::Node& Graph::node(ValueId id) const { return nodes_[id.idx]; }
Graph::Node& Graph::node(ValueId id) { return nodes_[id.idx]; }

void Graph::check_exists(ValueId id, const char* op) const {
    if (id.idx >= nodes_.size())
        throw ValueError(std::string(op) + ": operand id " + std::to_string(id.idx) +
                         " does not name a graph node");
}

ValueId Graph::input(const std::string& name, std::vector<std::size_t> shape) {
    if (name.empty()) throw ValueError("input name must be non-empty");
    if (named_.count(name)) throw ValueError("duplicate node name '" + name + "'");
    if (shape.empty() || shape.size() > 2)
        throw ShapeError("input '" + name + "': graph tensors have rank 1 or 2, got " +
                         shape_to_string(shape));
    Node n;
    n.kind = OpKind::input;
    n.shape = std::move(shape);
    n.name = name;
    std::size_t idx = add_node(std::move(n));
    named_[name] = idx;
    return {idx};
}

ValueId Graph::constant(Tensor value) {
    if (value.rank() > 2)
        throw ShapeError("constant: graph tensors have rank 1 or 2, got " + value.shape_str());
    Node n;
    n.kind = OpKind::constant;
    n.shape = value.shape();
    n.value = std::move(value);
    n.bound = true;
    return {add_node(std::move(n))};
}

ValueId Graph::param(const std::string& name, Tensor value) {
    if (name.empty()) throw ValueError("param name must be non-empty");
    if (named_.count(name)) throw ValueError("duplicate node name '" + name + "'");
    if (value.rank() > 2)
        throw ShapeError("param '" + name + "': graph tensors have rank 1 or 2, got " +
                         value.shape_str());
    Node n;
    n.kind = OpKind::param;
    n.shape = value.shape();
    n.value = std::move(value);
    n.name = name;
    n.bound = true;
    std::size_t idx = add_node(std::move(n));
    named_[name] = idx;
    return {idx};
}

ValueId Graph::matmul(ValueId a, ValueId b) {
    check_exists(a, "matmul");
    check_exists(b, "matmul");
    const auto& sa = node(a).shape;
    const auto& sb = node(b).shape;
    if (sb.size() != 2 || cols_of(sa) != sb[0])
        throw ShapeError("matmul: inner dimensions disagree, " + shape_to_string(sa) + " vs " +
                         shape_to_string(sb));
    Node n;
    n.kind = OpKind::matmul;
    n.parents = {a.idx, b.idx};
    n.shape = {rows_of(sa), sb[1]};
    return {add_node(std::move(n))};
}

ValueId Graph::add(ValueId a, ValueId b) {
    check_exists(a, "add");
    check_exists(b, "add");
    const auto& sa = node(a).shape;
    const auto& sb = node(b).shape;
    bool same = rows_of(sa) == rows_of(sb) && cols_of(sa) == cols_of(sb);
    bool bias = rows_of(sb) == 1 && cols_of(sa) == cols_of(sb);
    if (!same && !bias)
        throw ShapeError("add: shapes " + shape_to_string(sa) + " and " + shape_to_string(sb) +
                         " are neither equal nor row-broadcastable");
    Node n;
    n.kind = OpKind::add;
    n.parents = {a.idx, b.idx};
    n.shape = sa;
    return {add_node(std::move(n))};
}

ValueId Graph::mul(ValueId a, ValueId b) {
    check_exists(a, "mul");
    check_exists(b, "mul");
    const auto& sa = node(a).shape;
    const auto& sb = node(b).shape;
    bool same = rows_of(sa) == rows_of(sb) && cols_of(sa) == cols_of(sb);
    bool col_b = rows_of(sa) == rows_of(sb) && cols_of(sb) == 1;
    bool col_a = rows_of(sa) == rows_of(sb) && cols_of(sa) == 1;
    if (!same && !col_b && !col_a)
        throw ShapeError("mul: shapes " + shape_to_string(sa) + " and " + shape_to_string(sb) +
                         " are neither equal nor column-broadcastable");
    Node n;
    n.kind = OpKind::mul;
    n.parents = {a.idx, b.idx};
    n.shape = (!same && col_a) ? sb : sa;
    return {add_node(std::move(n))};
}

ValueId Graph::relu(ValueId a) {
    check_exists(a, "relu");
    Node n;
    n.kind = OpKind::relu;
    n.parents = {a.idx};
    n.shape = node(a).shape;
    return {add_node(std::move(n))};
}

ValueId Graph::sigmoid(ValueId a) {
    check_exists(a, "sigmoid");
    Node n;
    n.kind = OpKind::sigmoid;
    n.parents = {a.idx};
    n.shape = node(a).shape;
    return {add_node(std::move(n))};
}

ValueId Graph::concat(ValueId a, ValueId b) {
    check_exists(a, "concat");
    check_exists(b, "concat");
    const auto& sa = node(a).shape;
    const auto& sb = node(b).shape;
    if (rows_of(sa) != rows_of(sb))
        throw ShapeError("concat: row counts disagree, " + shape_to_string(sa) + " vs " +
                         shape_to_string(sb));
    Node n;
    n.kind = OpKind::concat;
    n.parents = {a.idx, b.idx};
    n.shape = {rows_of(sa), cols_of(sa) + cols_of(sb)};
    return {add_node(std::move(n))};
}

ValueId Graph::neg_affine(ValueId a, double offset, double slope) {
    check_exists(a, "neg-affine");
    Node n;
    n.kind = OpKind::neg_affine;
    n.parents = {a.idx};
    n.shape = node(a).shape;
    n.a = offset;
    n.b = slope;
    return {add_node(std::move(n))};
}

ValueId Graph::scale(ValueId a, double factor) {
    check_exists(a, "scale");
    Node n;
    n.kind = OpKind::scale;
    n.parents = {a.idx};
    n.shape = node(a).shape;
    n.a = factor;
    return {add_node(std::move(n))};
}

ValueId Graph::reduce_min(ValueId a) {
    check_exists(a, "reduce-min");
    Node n;
    n.kind = OpKind::reduce_min;
    n.parents = {a.idx};
    n.shape = {rows_of(node(a).shape), 1};
    return {add_node(std::move(n))};
}

ValueId Graph::reduce_max(ValueId a) {
    check_exists(a, "reduce-max");
    Node n;
    n.kind = OpKind::reduce_max;
    n.parents = {a.idx};
    n.shape = {rows_of(node(a).shape), 1};
    return {add_node(std::move(n))};
}

ValueId Graph::sum(ValueId a) {
    check_exists(a, "sum");
    Node n;
    n.kind = OpKind::sum;
    n.parents = {a.idx};
    n.shape = {1, 1};
    return {add_node(std::move(n))};
}

ValueId Graph::bce(ValueId pred, ValueId target) {
    check_exists(pred, "bce");
    check_exists(target, "bce");
    const auto& sp = node(pred).shape;
    const auto& st = node(target).shape;
    if (rows_of(sp) != rows_of(st) || cols_of(sp) != cols_of(st))
        throw ShapeError("bce: prediction shape " + shape_to_string(sp) +
                         " does not match target shape " + shape_to_string(st));
    Node n;
    n.kind = OpKind::bce;
    n.parents = {pred.idx, target.idx};
    n.shape = {1, 1};
    return {add_node(std::move(n))};
}

ValueId Graph::ce(ValueId logits, std::vector<std::size_t> labels) {
    check_exists(logits, "ce");
    const auto& s = node(logits).shape;
    if (labels.size() != rows_of(s))
        throw ShapeError("ce: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(rows_of(s)) + " logit rows");
    for (std::size_t y : labels)
        if (y >= cols_of(s))
            throw ValueError("ce: label " + std::to_string(y) + " out of range for " +
                             std::to_string(cols_of(s)) + " classes");
    Node n;
    n.kind = OpKind::ce;
    n.parents = {logits.idx};
    n.shape = {1, 1};
    n.labels = std::move(labels);
    return {add_node(std::move(n))};
}

ValueId Graph::nce(ValueId truth, std::vector<std::size_t> labels) {
    check_exists(truth, "nce");
    const auto& s = node(truth).shape;
    if (labels.size() != rows_of(s))
        throw ShapeError("nce: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(rows_of(s)) + " truth rows");
    for (std::size_t y : labels)
        if (y >= cols_of(s))
            throw ValueError("nce: label " + std::to_string(y) + " out of range for " +
                             std::to_string(cols_of(s)) + " classes");
    Node n;
    n.kind = OpKind::nce;
    n.parents = {truth.idx};
    n.shape = {1, 1};
    n.labels = std::move(labels);
    return {add_node(std::move(n))};
}

void Graph::bind(const std::string& name, Tensor value) {
    auto it = named_.find(name);
    if (it == named_.end() || nodes_[it->second].kind != OpKind::input)
        throw ValueError("bind: no input named '" + name + "'");
    Node& n = nodes_[it->second];
    if (value.shape() != n.shape)
        throw ShapeError("bind '" + name + "': value shape " + value.shape_str() +
                         " does not match declared " + shape_to_string(n.shape));
    n.value = std::move(value);
    n.bound = true;
    last_forward_root_ = static_cast<std::size_t>(-1);
}

void Graph::set_param(const std::string& name, const Tensor& value) {
    auto it = named_.find(name);
    if (it == named_.end() || nodes_[it->second].kind != OpKind::param)
        throw ValueError("set_param: no parameter named '" + name + "'");
    Node& n = nodes_[it->second];
    if (value.shape() != n.shape)
        throw ShapeError("set_param '" + name + "': value shape " + value.shape_str() +
                         " does not match declared " + shape_to_string(n.shape));
    n.value = value;
    last_forward_root_ = static_cast<std::size_t>(-1);
}

std::vector<char> Graph::ancestor_mask(std::size_t root) const {
    std::vector<char> mask(nodes_.size(), 0);
    mask[root] = 1;
    for (std::size_t i = root + 1; i-- > 0;) {
        if (!mask[i]) continue;
        for (std::size_t p : nodes_[i].parents) mask[p] = 1;
    }
    return mask;
}

void Graph::eval_node(std::size_t i) {
    Node& n = nodes_[i];
    switch (n.kind) {
        case OpKind::input:
            if (!n.bound)
                throw ValueError("forward: input '" + n.name + "' has not been bound");
            return;
        case OpKind::constant:
        case OpKind::param:
            return;
        default:
            break;
    }

    auto& out = n.value;
    out = Tensor(n.shape);
    const Node& pa = nodes_[n.parents.empty() ? 0 : n.parents[0]];

    switch (n.kind) {
        case OpKind::matmul: {
            const Node& pb = nodes_[n.parents[1]];
            std::size_t r = n.shape[0], c = n.shape[1], k = pb.shape[0];
            for (std::size_t i0 = 0; i0 < r; ++i0)
                for (std::size_t j0 = 0; j0 < k; ++j0) {
                    double av = pa.value[i0 * k + j0];
                    if (av == 0.0) continue;
                    for (std::size_t c0 = 0; c0 < c; ++c0)
                        out[i0 * c + c0] += av * pb.value[j0 * c + c0];
                }
            break;
        }
        case OpKind::add: {
            const Node& pb = nodes_[n.parents[1]];
            std::size_t sz = out.size(), bsz = pb.value.size();
            for (std::size_t t = 0; t < sz; ++t) out[t] = pa.value[t] + pb.value[t % bsz];
            break;
        }
        case OpKind::mul: {
            const Node& pb = nodes_[n.parents[1]];
            std::size_t r = rows_of(n.shape), c = cols_of(n.shape);
            bool bcast_a = pa.value.size() != out.size();
            bool bcast_b = pb.value.size() != out.size();
            for (std::size_t i0 = 0; i0 < r; ++i0)
                for (std::size_t j0 = 0; j0 < c; ++j0)
                    out[i0 * c + j0] = (bcast_a ? pa.value[i0] : pa.value[i0 * c + j0]) *
                                       (bcast_b ? pb.value[i0] : pb.value[i0 * c + j0]);
            break;
        }
        case OpKind::relu:
            for (std::size_t t = 0; t < out.size(); ++t)
                out[t] = pa.value[t] > 0.0 ? pa.value[t] : 0.0;
            break;
        case OpKind::sigmoid:
            for (std::size_t t = 0; t < out.size(); ++t) out[t] = stable_sigmoid(pa.value[t]);
            break;
        case OpKind::concat: {
            const Node& pb = nodes_[n.parents[1]];
            std::size_t r = n.shape[0];
            std::size_t ca = cols_of(pa.shape), cb = cols_of(pb.shape);
            for (std::size_t i0 = 0; i0 < r; ++i0) {
                for (std::size_t j0 = 0; j0 < ca; ++j0)
                    out[i0 * (ca + cb) + j0] = pa.value[i0 * ca + j0];
                for (std::size_t j0 = 0; j0 < cb; ++j0)
                    out[i0 * (ca + cb) + ca + j0] = pb.value[i0 * cb + j0];
            }
            break;
        }
        case OpKind::neg_affine:
            for (std::size_t t = 0; t < out.size(); ++t) out[t] = n.a + n.b * pa.value[t];
            break;
        case OpKind::scale:
            for (std::size_t t = 0; t < out.size(); ++t) out[t] = n.a * pa.value[t];
            break;
        case OpKind::reduce_min:
        case OpKind::reduce_max: {
            std::size_t r = n.shape[0], c = cols_of(pa.shape);
            bool want_min = n.kind == OpKind::reduce_min;
            for (std::size_t i0 = 0; i0 < r; ++i0) {
                double best = pa.value[i0 * c];
                for (std::size_t j0 = 1; j0 < c; ++j0) {
                    double v = pa.value[i0 * c + j0];
                    if (want_min ? v < best : v > best) best = v;
                }
                out[i0] = best;
            }
            break;
        }
        case OpKind::sum: {
            double acc = 0.0;
            for (double v : pa.value.data()) acc += v;
            out[0] = acc;
            break;
        }
        case OpKind::bce: {
            const Node& pt = nodes_[n.parents[1]];
            double acc = 0.0;
            std::size_t sz = pa.value.size();
            for (std::size_t t = 0; t < sz; ++t) {
                double p = std::min(std::max(pa.value[t], kLogEps), 1.0 - kLogEps);
                double y = pt.value[t];
                acc -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
            }
            out[0] = acc / static_cast<double>(sz);
            break;
        }
        case OpKind::ce: {
            std::size_t r = rows_of(pa.shape), c = cols_of(pa.shape);
            double acc = 0.0;
            for (std::size_t i0 = 0; i0 < r; ++i0) {
                double mx = pa.value[i0 * c];
                for (std::size_t j0 = 1; j0 < c; ++j0)
                    mx = std::max(mx, pa.value[i0 * c + j0]);
                double se = 0.0;
                for (std::size_t j0 = 0; j0 < c; ++j0)
                    se += std::exp(pa.value[i0 * c + j0] - mx);
                acc += mx + std::log(se) - pa.value[i0 * c + n.labels[i0]];
            }
            out[0] = acc / static_cast<double>(r);
            break;
        }
        case OpKind::nce: {
            std::size_t r = rows_of(pa.shape), c = cols_of(pa.shape);
            double acc = 0.0;
            for (std::size_t i0 = 0; i0 < r; ++i0) {
                double s = 0.0;
                for (std::size_t j0 = 0; j0 < c; ++j0)
                    s += std::max(pa.value[i0 * c + j0], kLogEps);
                double my = std::max(pa.value[i0 * c + n.labels[i0]], kLogEps);
                acc += std::log(s) - std::log(my);
            }
            out[0] = acc / static_cast<double>(r);
            break;
        }
        default:
            break;
    }
}

const Tensor& Graph::forward(ValueId root) {
    check_exists(root, "forward");
    auto mask = ancestor_mask(root.idx);
    for (std::size_t i = 0; i <= root.idx; ++i)
        if (mask[i]) eval_node(i);
    last_forward_root_ = root.idx;
    return nodes_[root.idx].value;
}

void Graph::backprop_node(std::size_t i) {
    Node& n = nodes_[i];
    if (n.parents.empty()) return;
    const Tensor& g = n.grad;
    Node& pa = nodes_[n.parents[0]];

    switch (n.kind) {
        case OpKind::matmul: {
            Node& pb = nodes_[n.parents[1]];
            std::size_t r = n.shape[0], c = n.shape[1], k = pb.shape[0];
            // dA += dC * B^T, dB += A^T * dC
            for (std::size_t i0 = 0; i0 < r; ++i0)
                for (std::size_t j0 = 0; j0 < k; ++j0) {
                    double acc = 0.0;
                    for (std::size_t c0 = 0; c0 < c; ++c0)
                        acc += g[i0 * c + c0] * pb.value[j0 * c + c0];
                    pa.grad[i0 * k + j0] += acc;
                }
            for (std::size_t j0 = 0; j0 < k; ++j0)
                for (std::size_t c0 = 0; c0 < c; ++c0) {
                    double acc = 0.0;
                    for (std::size_t i0 = 0; i0 < r; ++i0)
                        acc += pa.value[i0 * k + j0] * g[i0 * c + c0];
                    pb.grad[j0 * c + c0] += acc;
                }
            break;
        }
        case OpKind::add: {
            Node& pb = nodes_[n.parents[1]];
            std::size_t sz = g.size(), bsz = pb.grad.size();
            for (std::size_t t = 0; t < sz; ++t) {
                pa.grad[t] += g[t];
                pb.grad[t % bsz] += g[t];
            }
            break;
        }
        case OpKind::mul: {
            Node& pb = nodes_[n.parents[1]];
            std::size_t r = rows_of(n.shape), c = cols_of(n.shape);
            bool bcast_a = pa.value.size() != g.size();
            bool bcast_b = pb.value.size() != g.size();
            for (std::size_t i0 = 0; i0 < r; ++i0)
                for (std::size_t j0 = 0; j0 < c; ++j0) {
                    double gv = g[i0 * c + j0];
                    double av = bcast_a ? pa.value[i0] : pa.value[i0 * c + j0];
                    double bv = bcast_b ? pb.value[i0] : pb.value[i0 * c + j0];
                    if (bcast_a) pa.grad[i0] += gv * bv;
                    else pa.grad[i0 * c + j0] += gv * bv;
                    if (bcast_b) pb.grad[i0] += gv * av;
                    else pb.grad[i0 * c + j0] += gv * av;
                }
            break;
        }
        case OpKind::relu:
            for (std::size_t t = 0; t < g.size(); ++t)
                if (pa.value[t] > 0.0) pa.grad[t] += g[t];
            break;
        case OpKind::sigmoid:
            for (std::size_t t = 0; t < g.size(); ++t) {
                double s = n.value[t];
                pa.grad[t] += g[t] * s * (1.0 - s);
            }
            break;
        case OpKind::concat: {
            Node& pb = nodes_[n.parents[1]];
            std::size_t r = n.shape[0];
            std::size_t ca = cols_of(pa.shape), cb = cols_of(pb.shape);
            for (std::size_t i0 = 0; i0 < r; ++i0) {
                for (std::size_t j0 = 0; j0 < ca; ++j0)
                    pa.grad[i0 * ca + j0] += g[i0 * (ca + cb) + j0];
                for (std::size_t j0 = 0; j0 < cb; ++j0)
                    pb.grad[i0 * cb + j0] += g[i0 * (ca + cb) + ca + j0];
            }
            break;
        }
        case OpKind::neg_affine:
            for (std::size_t t = 0; t < g.size(); ++t) pa.grad[t] += n.b * g[t];
            break;
        case OpKind::scale:
            for (std::size_t t = 0; t < g.size(); ++t) pa.grad[t] += n.a * g[t];
            break;
        case OpKind::reduce_min:
        case OpKind::reduce_max: {
            // Full gradient goes to the extremal element; ties to the lowest index.
            std::size_t r = n.shape[0], c = cols_of(pa.shape);
            bool want_min = n.kind == OpKind::reduce_min;
            for (std::size_t i0 = 0; i0 < r; ++i0) {
                std::size_t arg = 0;
                double best = pa.value[i0 * c];
                for (std::size_t j0 = 1; j0 < c; ++j0) {
                    double v = pa.value[i0 * c + j0];
                    if (want_min ? v < best : v > best) {
                        best = v;
                        arg = j0;
                    }
                }
                pa.grad[i0 * c + arg] += g[i0];
            }
            break;
        }
        case OpKind::sum:
            for (std::size_t t = 0; t < pa.grad.size(); ++t) pa.grad[t] += g[0];
            break;
        case OpKind::bce: {
            // Targets are data; no gradient flows to them. Clamped entries are flat.
            const Node& pt = nodes_[n.parents[1]];
            std::size_t sz = pa.value.size();
            double inv_n = 1.0 / static_cast<double>(sz);
            for (std::size_t t = 0; t < sz; ++t) {
                double p = pa.value[t];
                if (p <= kLogEps || p >= 1.0 - kLogEps) continue;
                pa.grad[t] += g[0] * inv_n * (p - pt.value[t]) / (p * (1.0 - p));
            }
            break;
        }
        case OpKind::ce: {
            std::size_t r = rows_of(pa.shape), c = cols_of(pa.shape);
            double inv_r = 1.0 / static_cast<double>(r);
            for (std::size_t i0 = 0; i0 < r; ++i0) {
                double mx = pa.value[i0 * c];
                for (std::size_t j0 = 1; j0 < c; ++j0)
                    mx = std::max(mx, pa.value[i0 * c + j0]);
                double se = 0.0;
                for (std::size_t j0 = 0; j0 < c; ++j0)
                    se += std::exp(pa.value[i0 * c + j0] - mx);
                for (std::size_t j0 = 0; j0 < c; ++j0) {
                    double p = std::exp(pa.value[i0 * c + j0] - mx) / se;
                    double ind = j0 == n.labels[i0] ? 1.0 : 0.0;
                    pa.grad[i0 * c + j0] += g[0] * inv_r * (p - ind);
                }
            }
            break;
        }
        case OpKind::nce: {
            std::size_t r = rows_of(pa.shape), c = cols_of(pa.shape);
            double inv_r = 1.0 / static_cast<double>(r);
            for (std::size_t i0 = 0; i0 < r; ++i0) {
                double s = 0.0;
                for (std::size_t j0 = 0; j0 < c; ++j0)
                    s += std::max(pa.value[i0 * c + j0], kLogEps);
                double my = std::max(pa.value[i0 * c + n.labels[i0]], kLogEps);
                for (std::size_t j0 = 0; j0 < c; ++j0) {
                    if (pa.value[i0 * c + j0] <= kLogEps) continue;
                    double d = 1.0 / s - (j0 == n.labels[i0] ? 1.0 / my : 0.0);
                    pa.grad[i0 * c + j0] += g[0] * inv_r * d;
                }
            }
            break;
        }
        default:
            break;
    }
}

void Graph::backward(ValueId root) {
    check_exists(root, "backward");
    if (last_forward_root_ != root.idx)
        throw ValueError("backward requires a prior forward of the same root");
    const Node& rn = nodes_[root.idx];
    if (rn.value.size() != 1)
        throw ShapeError("backward: root must be scalar, got shape " +
                         shape_to_string(rn.shape));
    for (Node& n : nodes_) n.grad = Tensor::full(n.shape, 0.0);
    nodes_[root.idx].grad[0] = 1.0;
    auto mask = ancestor_mask(root.idx);
    for (std::size_t i = root.idx + 1; i-- > 0;)
        if (mask[i]) backprop_node(i);
}

const Tensor& Graph::value(ValueId id) const {
    check_exists(id, "value");
    return node(id).value;
}

const Tensor& Graph::gradient(ValueId id) const {
    check_exists(id, "gradient");
    return node(id).grad;
}

const std::vector<std::size_t>& Graph::shape(ValueId id) const {
    check_exists(id, "shape");
    return node(id).shape;
}

std::map<std::string, Tensor> Graph::param_gradients() const {
    std::map<std::string, Tensor> out;
    for (const Node& n : nodes_)
        if (n.kind == OpKind::param)
            out[n.name] = n.grad.empty() ? Tensor::full(n.shape, 0.0) : n.grad;
    return out;
}

OpKind Graph::kind(ValueId id) const {
    check_exists(id, "kind");
    return node(id).kind;
}

std::vector<ValueId> Graph::params() const {
    std::vector<ValueId> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].kind == OpKind::param) out.push_back({i});
    return out;
}

const std::string& Graph::node_name(ValueId id) const {
    check_exists(id, "node_name");
    return node(id).name;
}

}  // namespace micns
