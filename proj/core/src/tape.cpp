#include "ecnp/tape.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "ecnp/error.hpp"
#include "ecnp/special.hpp"

namespace ecnp {
namespace {

// Split a shape into (outer, axial, inner) extents around one axis, so a
// row-major index decomposes as (o * axial + a) * inner + i.
struct AxisSplit {
    int64_t outer = 1;
    int64_t axial = 1;
    int64_t inner = 1;
};

AxisSplit split_axis(const Shape& shape, int64_t axis) {
    if (axis < 0 || axis >= static_cast<int64_t>(shape.size()))
        raise(Error::Kind::ShapeMismatch,
              "axis " + std::to_string(axis) + " out of range for " + shape_str(shape));
    AxisSplit s;
    for (int64_t d = 0; d < axis; ++d) s.outer *= shape[static_cast<size_t>(d)];
    s.axial = shape[static_cast<size_t>(axis)];
    for (size_t d = static_cast<size_t>(axis) + 1; d < shape.size(); ++d) s.inner *= shape[d];
    return s;
}

Shape drop_axis(const Shape& shape, int64_t axis) {
    Shape out;
    out.reserve(shape.size() - 1);
    for (size_t d = 0; d < shape.size(); ++d) {
        if (static_cast<int64_t>(d) != axis) out.push_back(shape[d]);
    }
    return out;
}

// Shape of the broadcast result of an elementwise binary op: one operand's
// shape must be a suffix of the other's.
const Shape& ewise_shape(const Shape& a, const Shape& b, const char* op) {
    if (shape_is_suffix(b, a)) return a;
    if (shape_is_suffix(a, b)) return b;
    raise(Error::Kind::ShapeMismatch,
          std::string(op) + ": shapes " + shape_str(a) + " and " + shape_str(b) +
              " do not broadcast (one must be a suffix of the other)");
}

// C[n,m] += A[n,k] . B[k,m], row-major; the j-contiguous inner loop keeps the
// kernel auto-vectorizable.
void matmul_accum(const double* a, const double* b, double* c, int64_t n, int64_t k, int64_t m) {
    for (int64_t i = 0; i < n; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * m;
        for (int64_t kk = 0; kk < k; ++kk) {
            const double aik = arow[kk];
            const double* brow = b + kk * m;
            for (int64_t j = 0; j < m; ++j) crow[j] += aik * brow[j];
        }
    }
}

std::vector<double> transposed(const double* a, int64_t rows, int64_t cols) {
    std::vector<double> t(static_cast<size_t>(rows * cols));
    for (int64_t i = 0; i < rows; ++i)
        for (int64_t j = 0; j < cols; ++j) t[static_cast<size_t>(j * rows + i)] = a[i * cols + j];
    return t;
}

}  // namespace

void Tape::check_id(NodeId id) const {
    if (id < 0 || id >= static_cast<NodeId>(nodes_.size()))
        raise(Error::Kind::InvalidParams, "node id " + std::to_string(id) + " not on tape");
}

const Array& Tape::val(NodeId id) const {
    check_id(id);
    return nodes_[static_cast<size_t>(id)].value;
}

NodeId Tape::push(Node node) {
    const bool a_grad = node.a >= 0 && nodes_[static_cast<size_t>(node.a)].requires_grad;
    const bool b_grad = node.b >= 0 && nodes_[static_cast<size_t>(node.b)].requires_grad;
    if (node.op != Op::Leaf) node.requires_grad = a_grad || b_grad;
    nodes_.push_back(std::move(node));
    return static_cast<NodeId>(nodes_.size()) - 1;
}

NodeId Tape::constant(Array value) {
    Node n;
    n.op = Op::Leaf;
    n.value = std::move(value);
    n.requires_grad = false;
    return push(std::move(n));
}

NodeId Tape::leaf(Array value) {
    Node n;
    n.op = Op::Leaf;
    n.value = std::move(value);
    n.requires_grad = true;
    return push(std::move(n));
}

NodeId Tape::record_ewise(Op op, NodeId a, NodeId b) {
    const Array& xa = val(a);
    const Array& xb = val(b);
    const char* name = op == Op::Add ? "add" : op == Op::Sub ? "sub" : "mul";
    const Shape& shape = ewise_shape(xa.shape(), xb.shape(), name);
    const int64_t n = shape_size(shape);
    const int64_t na = xa.size();
    const int64_t nb = xb.size();
    Array out = Array::zeros(shape);
    const double* pa = xa.data();
    const double* pb = xb.data();
    double* po = out.data();
    // ia/ib wrap at the smaller operand's length, cycling it over the
    // result's leading axes without a per-element modulo.
    int64_t ia = 0, ib = 0;
    switch (op) {
        case Op::Add:
            for (int64_t i = 0; i < n; ++i) {
                po[i] = pa[ia] + pb[ib];
                if (++ia == na) ia = 0;
                if (++ib == nb) ib = 0;
            }
            break;
        case Op::Sub:
            for (int64_t i = 0; i < n; ++i) {
                po[i] = pa[ia] - pb[ib];
                if (++ia == na) ia = 0;
                if (++ib == nb) ib = 0;
            }
            break;
        default:
            for (int64_t i = 0; i < n; ++i) {
                po[i] = pa[ia] * pb[ib];
                if (++ia == na) ia = 0;
                if (++ib == nb) ib = 0;
            }
            break;
    }
    Node node;
    node.op = op;
    node.a = a;
    node.b = b;
    node.value = std::move(out);
    return push(std::move(node));
}

NodeId Tape::add(NodeId a, NodeId b) { return record_ewise(Op::Add, a, b); }
NodeId Tape::sub(NodeId a, NodeId b) { return record_ewise(Op::Sub, a, b); }
NodeId Tape::mul(NodeId a, NodeId b) { return record_ewise(Op::Mul, a, b); }

NodeId Tape::matmul(NodeId a, NodeId b) {
    const Array& xa = val(a);
    const Array& xb = val(b);
    if (xa.rank() != 2 || xb.rank() != 2 || xa.dim(1) != xb.dim(0))
        raise(Error::Kind::ShapeMismatch,
              "matmul: incompatible shapes " + shape_str(xa.shape()) + " x " +
                  shape_str(xb.shape()));
    const int64_t n = xa.dim(0), k = xa.dim(1), m = xb.dim(1);
    Array out = Array::zeros({n, m});
    matmul_accum(xa.data(), xb.data(), out.data(), n, k, m);
    Node node;
    node.op = Op::MatMul;
    node.a = a;
    node.b = b;
    node.value = std::move(out);
    return push(std::move(node));
}

NodeId Tape::sum_axis(NodeId x, int64_t axis) {
    const Array& xv = val(x);
    const AxisSplit s = split_axis(xv.shape(), axis);
    Array out = Array::zeros(drop_axis(xv.shape(), axis));
    const double* px = xv.data();
    double* po = out.data();
    for (int64_t o = 0; o < s.outer; ++o)
        for (int64_t a = 0; a < s.axial; ++a)
            for (int64_t i = 0; i < s.inner; ++i)
                po[o * s.inner + i] += px[(o * s.axial + a) * s.inner + i];
    Node node;
    node.op = Op::SumAxis;
    node.a = x;
    node.axis = axis;
    node.value = std::move(out);
    return push(std::move(node));
}

NodeId Tape::mean_axis(NodeId x, int64_t axis) {
    const Array& xv = val(x);
    const AxisSplit s = split_axis(xv.shape(), axis);
    if (s.axial == 0)
        raise(Error::Kind::DomainError, "mean over empty axis of " + shape_str(xv.shape()));
    Array out = Array::zeros(drop_axis(xv.shape(), axis));
    const double* px = xv.data();
    double* po = out.data();
    const double inv = 1.0 / static_cast<double>(s.axial);
    for (int64_t o = 0; o < s.outer; ++o)
        for (int64_t a = 0; a < s.axial; ++a)
            for (int64_t i = 0; i < s.inner; ++i)
                po[o * s.inner + i] += px[(o * s.axial + a) * s.inner + i] * inv;
    Node node;
    node.op = Op::MeanAxis;
    node.a = x;
    node.axis = axis;
    node.value = std::move(out);
    return push(std::move(node));
}

NodeId Tape::min_axis(NodeId x, int64_t axis) {
    const Array& xv = val(x);
    const AxisSplit s = split_axis(xv.shape(), axis);
    if (s.axial == 0)
        raise(Error::Kind::DomainError, "min over empty axis of " + shape_str(xv.shape()));
    Array out = Array::zeros(drop_axis(xv.shape(), axis));
    const double* px = xv.data();
    double* po = out.data();
    for (int64_t o = 0; o < s.outer; ++o) {
        for (int64_t i = 0; i < s.inner; ++i) {
            double best = px[(o * s.axial) * s.inner + i];
            for (int64_t a = 1; a < s.axial; ++a) {
                const double v = px[(o * s.axial + a) * s.inner + i];
                if (v < best) best = v;
            }
            po[o * s.inner + i] = best;
        }
    }
    Node node;
    node.op = Op::MinAxis;
    node.a = x;
    node.axis = axis;
    node.value = std::move(out);
    return push(std::move(node));
}

NodeId Tape::sum_all(NodeId x) {
    const Array& xv = val(x);
    double total = 0.0;
    const double* px = xv.data();
    for (int64_t i = 0; i < xv.size(); ++i) total += px[i];
    Node node;
    node.op = Op::SumAll;
    node.a = x;
    node.value = Array::scalar(total);
    return push(std::move(node));
}

NodeId Tape::record_unary(Op op, NodeId x, Array value) {
    Node node;
    node.op = op;
    node.a = x;
    node.value = std::move(value);
    return push(std::move(node));
}

NodeId Tape::relu(NodeId x) {
    const Array& xv = val(x);
    Array out = Array::zeros(xv.shape());
    for (int64_t i = 0; i < xv.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
    return record_unary(Op::Relu, x, std::move(out));
}

NodeId Tape::softplus(NodeId x) {
    const Array& xv = val(x);
    Array out = Array::zeros(xv.shape());
    for (int64_t i = 0; i < xv.size(); ++i) out[i] = ecnp::softplus(xv[i]);
    return record_unary(Op::Softplus, x, std::move(out));
}

NodeId Tape::exp(NodeId x) {
    const Array& xv = val(x);
    Array out = Array::zeros(xv.shape());
    for (int64_t i = 0; i < xv.size(); ++i) out[i] = std::exp(xv[i]);
    return record_unary(Op::Exp, x, std::move(out));
}

NodeId Tape::log(NodeId x) {
    const Array& xv = val(x);
    Array out = Array::zeros(xv.shape());
    for (int64_t i = 0; i < xv.size(); ++i) {
        if (!(xv[i] > 0.0))
            raise(Error::Kind::DomainError, "log of non-positive value " + std::to_string(xv[i]));
        out[i] = std::log(xv[i]);
    }
    return record_unary(Op::Log, x, std::move(out));
}

NodeId Tape::reciprocal(NodeId x) {
    const Array& xv = val(x);
    Array out = Array::zeros(xv.shape());
    for (int64_t i = 0; i < xv.size(); ++i) {
        if (xv[i] == 0.0) raise(Error::Kind::DomainError, "reciprocal of zero");
        out[i] = 1.0 / xv[i];
    }
    return record_unary(Op::Reciprocal, x, std::move(out));
}

NodeId Tape::square(NodeId x) {
    const Array& xv = val(x);
    Array out = Array::zeros(xv.shape());
    for (int64_t i = 0; i < xv.size(); ++i) out[i] = xv[i] * xv[i];
    return record_unary(Op::Square, x, std::move(out));
}

NodeId Tape::abs(NodeId x) {
    const Array& xv = val(x);
    Array out = Array::zeros(xv.shape());
    for (int64_t i = 0; i < xv.size(); ++i) out[i] = std::fabs(xv[i]);
    return record_unary(Op::Abs, x, std::move(out));
}

NodeId Tape::neg(NodeId x) {
    const Array& xv = val(x);
    Array out = Array::zeros(xv.shape());
    for (int64_t i = 0; i < xv.size(); ++i) out[i] = -xv[i];
    return record_unary(Op::Neg, x, std::move(out));
}

NodeId Tape::scalar_mul(NodeId x, double c) {
    const Array& xv = val(x);
    Array out = Array::zeros(xv.shape());
    for (int64_t i = 0; i < xv.size(); ++i) out[i] = xv[i] * c;
    NodeId id = record_unary(Op::ScalarMul, x, std::move(out));
    nodes_.back().scalar = c;
    return id;
}

NodeId Tape::scalar_add(NodeId x, double c) {
    const Array& xv = val(x);
    Array out = Array::zeros(xv.shape());
    for (int64_t i = 0; i < xv.size(); ++i) out[i] = xv[i] + c;
    NodeId id = record_unary(Op::ScalarAdd, x, std::move(out));
    nodes_.back().scalar = c;
    return id;
}

NodeId Tape::clamp_max(NodeId x, double c) {
    const Array& xv = val(x);
    Array out = Array::zeros(xv.shape());
    for (int64_t i = 0; i < xv.size(); ++i) out[i] = xv[i] < c ? xv[i] : c;
    NodeId id = record_unary(Op::ClampMax, x, std::move(out));
    nodes_.back().scalar = c;
    return id;
}

NodeId Tape::lgamma(NodeId x) {
    const Array& xv = val(x);
    Array out = Array::zeros(xv.shape());
    for (int64_t i = 0; i < xv.size(); ++i) out[i] = lgamma_pos(xv[i]);
    return record_unary(Op::Lgamma, x, std::move(out));
}

NodeId Tape::concat_last(NodeId a, NodeId b) {
    const Array& xa = val(a);
    const Array& xb = val(b);
    if (xa.rank() < 1 || xa.rank() != xb.rank())
        raise(Error::Kind::ShapeMismatch,
              "concat_last: ranks differ, " + shape_str(xa.shape()) + " vs " +
                  shape_str(xb.shape()));
    for (int64_t d = 0; d + 1 < xa.rank(); ++d) {
        if (xa.dim(d) != xb.dim(d))
            raise(Error::Kind::ShapeMismatch,
                  "concat_last: leading dims differ, " + shape_str(xa.shape()) + " vs " +
                      shape_str(xb.shape()));
    }
    const int64_t la = xa.dim(xa.rank() - 1);
    const int64_t lb = xb.dim(xb.rank() - 1);
    Shape shape = xa.shape();
    shape.back() = la + lb;
    Array out = Array::zeros(shape);
    const int64_t rows = xa.size() / std::max<int64_t>(la, 1);
    for (int64_t r = 0; r < rows; ++r) {
        std::memcpy(out.data() + r * (la + lb), xa.data() + r * la,
                    static_cast<size_t>(la) * sizeof(double));
        std::memcpy(out.data() + r * (la + lb) + la, xb.data() + r * lb,
                    static_cast<size_t>(lb) * sizeof(double));
    }
    Node node;
    node.op = Op::ConcatLast;
    node.a = a;
    node.b = b;
    node.extent = la;  // split point, needed by the adjoint rule
    node.value = std::move(out);
    return push(std::move(node));
}

NodeId Tape::slice_last(NodeId x, int64_t start, int64_t len) {
    const Array& xv = val(x);
    if (xv.rank() < 1)
        raise(Error::Kind::ShapeMismatch, "slice_last on rank-0 array");
    const int64_t last = xv.dim(xv.rank() - 1);
    if (start < 0 || len < 0 || start + len > last)
        raise(Error::Kind::ShapeMismatch,
              "slice_last [" + std::to_string(start) + ", " + std::to_string(start + len) +
                  ") out of range for " + shape_str(xv.shape()));
    Shape shape = xv.shape();
    shape.back() = len;
    Array out = Array::zeros(shape);
    const int64_t rows = xv.size() / std::max<int64_t>(last, 1);
    for (int64_t r = 0; r < rows; ++r)
        std::memcpy(out.data() + r * len, xv.data() + r * last + start,
                    static_cast<size_t>(len) * sizeof(double));
    Node node;
    node.op = Op::SliceLast;
    node.a = x;
    node.axis = start;
    node.extent = len;
    node.value = std::move(out);
    return push(std::move(node));
}

NodeId Tape::repeat_rows(NodeId x, int64_t n) {
    const Array& xv = val(x);
    if (n < 0) raise(Error::Kind::ShapeMismatch, "repeat_rows with negative count");
    Shape shape;
    shape.reserve(xv.shape().size() + 1);
    shape.push_back(n);
    for (int64_t d : xv.shape()) shape.push_back(d);
    Array out = Array::zeros(shape);
    for (int64_t r = 0; r < n; ++r)
        std::memcpy(out.data() + r * xv.size(), xv.data(),
                    static_cast<size_t>(xv.size()) * sizeof(double));
    Node node;
    node.op = Op::RepeatRows;
    node.a = x;
    node.extent = n;
    node.value = std::move(out);
    return push(std::move(node));
}

NodeId Tape::reshape(NodeId x, Shape shape) {
    Node node;
    node.op = Op::Reshape;
    node.a = x;
    node.value = val(x).reshaped(std::move(shape));
    return push(std::move(node));
}

void Tape::truncate(int64_t mark) {
    if (mark < 0 || mark > static_cast<int64_t>(nodes_.size()))
        raise(Error::Kind::InvalidParams, "truncate mark " + std::to_string(mark) + " out of range");
    nodes_.resize(static_cast<size_t>(mark));
}

std::vector<Array> Tape::backward(NodeId root) const {
    check_id(root);
    const Node& root_node = nodes_[static_cast<size_t>(root)];
    if (root_node.value.size() != 1)
        raise(Error::Kind::NonScalarRoot,
              "backward root has shape " + shape_str(root_node.value.shape()));
    std::vector<Array> adj(nodes_.size());
    if (!root_node.requires_grad) return adj;
    adj[static_cast<size_t>(root)] = Array::full(root_node.value.shape(), 1.0);

    auto slot = [&](NodeId p) -> Array& {
        Array& g = adj[static_cast<size_t>(p)];
        if (g.empty()) g = Array::zeros(nodes_[static_cast<size_t>(p)].value.shape());
        return g;
    };
    auto wants = [&](NodeId p) { return p >= 0 && nodes_[static_cast<size_t>(p)].requires_grad; };

    for (NodeId id = root; id >= 0; --id) {
        const Node& node = nodes_[static_cast<size_t>(id)];
        const Array& g = adj[static_cast<size_t>(id)];
        if (g.empty() || !node.requires_grad || node.op == Op::Leaf) continue;
        const double* pg = g.data();
        switch (node.op) {
            case Op::Add: {
                if (wants(node.a)) {
                    Array& ga = slot(node.a);
                    const int64_t na = ga.size();
                    for (int64_t i = 0, ia = 0; i < g.size(); ++i) {
                        ga[ia] += pg[i];
                        if (++ia == na) ia = 0;
                    }
                }
                if (wants(node.b)) {
                    Array& gb = slot(node.b);
                    const int64_t nb = gb.size();
                    for (int64_t i = 0, ib = 0; i < g.size(); ++i) {
                        gb[ib] += pg[i];
                        if (++ib == nb) ib = 0;
                    }
                }
                break;
            }
            case Op::Sub: {
                if (wants(node.a)) {
                    Array& ga = slot(node.a);
                    const int64_t na = ga.size();
                    for (int64_t i = 0, ia = 0; i < g.size(); ++i) {
                        ga[ia] += pg[i];
                        if (++ia == na) ia = 0;
                    }
                }
                if (wants(node.b)) {
                    Array& gb = slot(node.b);
                    const int64_t nb = gb.size();
                    for (int64_t i = 0, ib = 0; i < g.size(); ++i) {
                        gb[ib] -= pg[i];
                        if (++ib == nb) ib = 0;
                    }
                }
                break;
            }
            case Op::Mul: {
                const Array& xa = nodes_[static_cast<size_t>(node.a)].value;
                const Array& xb = nodes_[static_cast<size_t>(node.b)].value;
                const int64_t na = xa.size(), nb = xb.size();
                if (wants(node.a)) {
                    Array& ga = slot(node.a);
                    for (int64_t i = 0, ia = 0, ib = 0; i < g.size(); ++i) {
                        ga[ia] += pg[i] * xb[ib];
                        if (++ia == na) ia = 0;
                        if (++ib == nb) ib = 0;
                    }
                }
                if (wants(node.b)) {
                    Array& gb = slot(node.b);
                    for (int64_t i = 0, ia = 0, ib = 0; i < g.size(); ++i) {
                        gb[ib] += pg[i] * xa[ia];
                        if (++ia == na) ia = 0;
                        if (++ib == nb) ib = 0;
                    }
                }
                break;
            }
            case Op::MatMul: {
                const Array& xa = nodes_[static_cast<size_t>(node.a)].value;
                const Array& xb = nodes_[static_cast<size_t>(node.b)].value;
                const int64_t n = xa.dim(0), k = xa.dim(1), m = xb.dim(1);
                if (wants(node.a)) {
                    // dL/dA = g . B^T, via an explicit transpose so the
                    // accumulation kernel stays j-contiguous.
                    Array& ga = slot(node.a);
                    const std::vector<double> bt = transposed(xb.data(), k, m);
                    matmul_accum(pg, bt.data(), ga.data(), n, m, k);
                }
                if (wants(node.b)) {
                    // dL/dB = A^T . g
                    Array& gb = slot(node.b);
                    const std::vector<double> at = transposed(xa.data(), n, k);
                    matmul_accum(at.data(), pg, gb.data(), k, n, m);
                }
                break;
            }
            case Op::SumAxis:
            case Op::MeanAxis: {
                if (!wants(node.a)) break;
                const Array& xv = nodes_[static_cast<size_t>(node.a)].value;
                const AxisSplit s = split_axis(xv.shape(), node.axis);
                const double scale =
                    node.op == Op::MeanAxis ? 1.0 / static_cast<double>(s.axial) : 1.0;
                Array& ga = slot(node.a);
                for (int64_t o = 0; o < s.outer; ++o)
                    for (int64_t a = 0; a < s.axial; ++a)
                        for (int64_t i = 0; i < s.inner; ++i)
                            ga[(o * s.axial + a) * s.inner + i] += pg[o * s.inner + i] * scale;
                break;
            }
            case Op::MinAxis: {
                if (!wants(node.a)) break;
                const Array& xv = nodes_[static_cast<size_t>(node.a)].value;
                const AxisSplit s = split_axis(xv.shape(), node.axis);
                Array& ga = slot(node.a);
                for (int64_t o = 0; o < s.outer; ++o) {
                    for (int64_t i = 0; i < s.inner; ++i) {
                        int64_t best = 0;
                        double bv = xv[(o * s.axial) * s.inner + i];
                        for (int64_t a = 1; a < s.axial; ++a) {
                            const double v = xv[(o * s.axial + a) * s.inner + i];
                            if (v < bv) {
                                bv = v;
                                best = a;
                            }
                        }
                        ga[(o * s.axial + best) * s.inner + i] += pg[o * s.inner + i];
                    }
                }
                break;
            }
            case Op::SumAll: {
                if (!wants(node.a)) break;
                Array& ga = slot(node.a);
                const double gs = pg[0];
                for (int64_t i = 0; i < ga.size(); ++i) ga[i] += gs;
                break;
            }
            case Op::Relu: {
                if (!wants(node.a)) break;
                const Array& xv = nodes_[static_cast<size_t>(node.a)].value;
                Array& ga = slot(node.a);
                for (int64_t i = 0; i < xv.size(); ++i)
                    if (xv[i] > 0.0) ga[i] += pg[i];
                break;
            }
            case Op::Softplus: {
                if (!wants(node.a)) break;
                const Array& xv = nodes_[static_cast<size_t>(node.a)].value;
                Array& ga = slot(node.a);
                for (int64_t i = 0; i < xv.size(); ++i) ga[i] += pg[i] * sigmoid(xv[i]);
                break;
            }
            case Op::Exp: {
                if (!wants(node.a)) break;
                Array& ga = slot(node.a);
                for (int64_t i = 0; i < g.size(); ++i) ga[i] += pg[i] * node.value[i];
                break;
            }
            case Op::Log: {
                if (!wants(node.a)) break;
                const Array& xv = nodes_[static_cast<size_t>(node.a)].value;
                Array& ga = slot(node.a);
                for (int64_t i = 0; i < xv.size(); ++i) ga[i] += pg[i] / xv[i];
                break;
            }
            case Op::Reciprocal: {
                if (!wants(node.a)) break;
                Array& ga = slot(node.a);
                for (int64_t i = 0; i < g.size(); ++i)
                    ga[i] -= pg[i] * node.value[i] * node.value[i];
                break;
            }
            case Op::Square: {
                if (!wants(node.a)) break;
                const Array& xv = nodes_[static_cast<size_t>(node.a)].value;
                Array& ga = slot(node.a);
                for (int64_t i = 0; i < xv.size(); ++i) ga[i] += pg[i] * 2.0 * xv[i];
                break;
            }
            case Op::Abs: {
                if (!wants(node.a)) break;
                const Array& xv = nodes_[static_cast<size_t>(node.a)].value;
                Array& ga = slot(node.a);
                for (int64_t i = 0; i < xv.size(); ++i) {
                    if (xv[i] > 0.0) ga[i] += pg[i];
                    else if (xv[i] < 0.0) ga[i] -= pg[i];
                }
                break;
            }
            case Op::Neg: {
                if (!wants(node.a)) break;
                Array& ga = slot(node.a);
                for (int64_t i = 0; i < g.size(); ++i) ga[i] -= pg[i];
                break;
            }
            case Op::ScalarMul: {
                if (!wants(node.a)) break;
                Array& ga = slot(node.a);
                for (int64_t i = 0; i < g.size(); ++i) ga[i] += pg[i] * node.scalar;
                break;
            }
            case Op::ScalarAdd: {
                if (!wants(node.a)) break;
                Array& ga = slot(node.a);
                for (int64_t i = 0; i < g.size(); ++i) ga[i] += pg[i];
                break;
            }
            case Op::ClampMax: {
                if (!wants(node.a)) break;
                const Array& xv = nodes_[static_cast<size_t>(node.a)].value;
                Array& ga = slot(node.a);
                for (int64_t i = 0; i < xv.size(); ++i)
                    if (xv[i] < node.scalar) ga[i] += pg[i];
                break;
            }
            case Op::Lgamma: {
                if (!wants(node.a)) break;
                const Array& xv = nodes_[static_cast<size_t>(node.a)].value;
                Array& ga = slot(node.a);
                for (int64_t i = 0; i < xv.size(); ++i) ga[i] += pg[i] * digamma_pos(xv[i]);
                break;
            }
            case Op::ConcatLast: {
                const Array& xa = nodes_[static_cast<size_t>(node.a)].value;
                const Array& xb = nodes_[static_cast<size_t>(node.b)].value;
                const int64_t la = node.extent;
                const int64_t lb = xb.dim(xb.rank() - 1);
                const int64_t rows = xa.size() / std::max<int64_t>(la, 1);
                if (wants(node.a)) {
                    Array& ga = slot(node.a);
                    for (int64_t r = 0; r < rows; ++r)
                        for (int64_t j = 0; j < la; ++j)
                            ga[r * la + j] += pg[r * (la + lb) + j];
                }
                if (wants(node.b)) {
                    Array& gb = slot(node.b);
                    for (int64_t r = 0; r < rows; ++r)
                        for (int64_t j = 0; j < lb; ++j)
                            gb[r * lb + j] += pg[r * (la + lb) + la + j];
                }
                break;
            }
            case Op::SliceLast: {
                if (!wants(node.a)) break;
                const Array& xv = nodes_[static_cast<size_t>(node.a)].value;
                const int64_t last = xv.dim(xv.rank() - 1);
                const int64_t start = node.axis;
                const int64_t len = node.extent;
                const int64_t rows = xv.size() / std::max<int64_t>(last, 1);
                Array& ga = slot(node.a);
                for (int64_t r = 0; r < rows; ++r)
                    for (int64_t j = 0; j < len; ++j)
                        ga[r * last + start + j] += pg[r * len + j];
                break;
            }
            case Op::RepeatRows: {
                if (!wants(node.a)) break;
                const Array& xv = nodes_[static_cast<size_t>(node.a)].value;
                Array& ga = slot(node.a);
                for (int64_t r = 0; r < node.extent; ++r)
                    for (int64_t j = 0; j < xv.size(); ++j) ga[j] += pg[r * xv.size() + j];
                break;
            }
            case Op::Reshape: {
                if (!wants(node.a)) break;
                Array& ga = slot(node.a);
                for (int64_t i = 0; i < g.size(); ++i) ga[i] += pg[i];
                break;
            }
            case Op::Leaf:
                break;
        }
    }
    return adj;
}

double Value::scalar() const {
    const Array& v = array();
    if (v.size() != 1)
        raise(Error::Kind::ShapeMismatch, "scalar() on value of shape " + shape_str(v.shape()));
    return v[0];
}

Value matmul(Value a, Value b) { return {&a.tape(), a.tape().matmul(a.id(), b.id())}; }
Value sum_axis(Value x, int64_t axis) { return {&x.tape(), x.tape().sum_axis(x.id(), axis)}; }
Value mean_axis(Value x, int64_t axis) { return {&x.tape(), x.tape().mean_axis(x.id(), axis)}; }
Value min_axis(Value x, int64_t axis) { return {&x.tape(), x.tape().min_axis(x.id(), axis)}; }
Value sum_all(Value x) { return {&x.tape(), x.tape().sum_all(x.id())}; }
Value relu(Value x) { return {&x.tape(), x.tape().relu(x.id())}; }
Value softplus(Value x) { return {&x.tape(), x.tape().softplus(x.id())}; }
Value exp(Value x) { return {&x.tape(), x.tape().exp(x.id())}; }
Value log(Value x) { return {&x.tape(), x.tape().log(x.id())}; }
Value reciprocal(Value x) { return {&x.tape(), x.tape().reciprocal(x.id())}; }
Value square(Value x) { return {&x.tape(), x.tape().square(x.id())}; }
Value abs(Value x) { return {&x.tape(), x.tape().abs(x.id())}; }
Value clamp_max(Value x, double c) { return {&x.tape(), x.tape().clamp_max(x.id(), c)}; }
Value lgamma(Value x) { return {&x.tape(), x.tape().lgamma(x.id())}; }
Value concat_last(Value a, Value b) { return {&a.tape(), a.tape().concat_last(a.id(), b.id())}; }
Value slice_last(Value x, int64_t start, int64_t len) {
    return {&x.tape(), x.tape().slice_last(x.id(), start, len)};
}
Value repeat_rows(Value x, int64_t n) { return {&x.tape(), x.tape().repeat_rows(x.id(), n)}; }
Value reshape(Value x, Shape shape) {
    return {&x.tape(), x.tape().reshape(x.id(), std::move(shape))};
}

}  // namespace ecnp
