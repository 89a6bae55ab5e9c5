#pragma once

#include <cstdint>
#include <vector>

#include "ecnp/array.hpp"

namespace ecnp {

/// Primitive operations recorded on the tape. Each has a forward rule
/// (applied at record time) and an adjoint rule (applied by backward).
enum class Op : uint8_t {
    Leaf,
    Add,         // elementwise, broadcasting over leading axes
    Sub,         // elementwise, broadcasting over leading axes
    Mul,         // elementwise, broadcasting over leading axes
    MatMul,      // [n,k] x [k,m] -> [n,m]
    SumAxis,     // sum over one axis, axis removed
    MeanAxis,    // mean over one axis, axis removed
    MinAxis,     // min over one axis, axis removed; grad to first argmin
    SumAll,      // sum of all elements -> scalar
    Relu,
    Softplus,
    Exp,
    Log,         // requires x > 0
    Reciprocal,  // requires x != 0
    Square,
    Abs,         // grad at 0 is 0
    Neg,
    ScalarMul,   // x * c
    ScalarAdd,   // x + c
    ClampMax,    // min(x, c); grad 1 where x < c, else 0
    Lgamma,      // requires x > 0; adjoint uses digamma
    ConcatLast,  // concatenate two arrays along the last axis
    SliceLast,   // contiguous slice [start, start+len) of the last axis
    RepeatRows,  // tile an array n times along a fresh leading axis
    Reshape,     // same data, new shape
};

using NodeId = int64_t;

/// One entry on the tape. Parents always have strictly smaller ids, so the
/// node list is topologically ordered by construction.
struct Node {
    Op op = Op::Leaf;
    NodeId a = -1;
    NodeId b = -1;
    Array value;
    bool requires_grad = false;
    // Op-specific payload: reduction axis / slice start (axis), slice length
    // or repeat count (extent), scalar operand or clamp threshold (scalar).
    int64_t axis = -1;
    int64_t extent = 0;
    double scalar = 0.0;
};

/// Append-only reverse-mode autodiff tape over dense f64 arrays.
///
/// Forward values are computed eagerly at record time; backward walks nodes
/// in strictly decreasing id order exactly once, so adjoints are bitwise
/// deterministic between runs. A Tape instance is single-threaded.
class Tape {
public:
    /// Record a constant input; no gradient is tracked through it.
    NodeId constant(Array value);
    /// Record a differentiable input (parameter); backward reports its adjoint.
    NodeId leaf(Array value);

    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId matmul(NodeId a, NodeId b);
    NodeId sum_axis(NodeId x, int64_t axis);
    NodeId mean_axis(NodeId x, int64_t axis);
    NodeId min_axis(NodeId x, int64_t axis);
    NodeId sum_all(NodeId x);
    NodeId relu(NodeId x);
    NodeId softplus(NodeId x);
    NodeId exp(NodeId x);
    NodeId log(NodeId x);
    NodeId reciprocal(NodeId x);
    NodeId square(NodeId x);
    NodeId abs(NodeId x);
    NodeId neg(NodeId x);
    NodeId scalar_mul(NodeId x, double c);
    NodeId scalar_add(NodeId x, double c);
    NodeId clamp_max(NodeId x, double c);
    NodeId lgamma(NodeId x);
    NodeId concat_last(NodeId a, NodeId b);
    NodeId slice_last(NodeId x, int64_t start, int64_t len);
    NodeId repeat_rows(NodeId x, int64_t n);
    NodeId reshape(NodeId x, Shape shape);

    const Array& value(NodeId id) const { return nodes_[static_cast<size_t>(id)].value; }
    const Node& node(NodeId id) const { return nodes_[static_cast<size_t>(id)]; }
    int64_t size() const noexcept { return static_cast<int64_t>(nodes_.size()); }

    /// Run reverse-mode accumulation from a scalar root. Returns one adjoint
    /// slot per node; slots for nodes without requires_grad (or off the path
    /// from the root) are empty arrays. Raises NonScalarRoot if the root
    /// value is not a single element.
    std::vector<Array> backward(NodeId root) const;

    /// Checkpoint / rewind, for reusing one tape across training steps.
    int64_t mark() const noexcept { return static_cast<int64_t>(nodes_.size()); }
    void truncate(int64_t mark);

private:
    NodeId push(Node node);
    NodeId record_unary(Op op, NodeId x, Array value);
    NodeId record_ewise(Op op, NodeId a, NodeId b);
    const Array& val(NodeId id) const;
    void check_id(NodeId id) const;

    std::vector<Node> nodes_;
};

/// Convenience handle pairing a tape with a node id so expressions read like
/// math: `auto y = relu(w * x + b);`. Values are plain (tape, id) pairs and
/// cheap to copy.
class Value {
public:
    Value() = default;
    Value(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

    Tape& tape() const { return *tape_; }
    NodeId id() const { return id_; }
    const Array& array() const { return tape_->value(id_); }
    /// The sole element of a scalar-valued node.
    double scalar() const;

    friend Value operator+(Value a, Value b) { return {a.tape_, a.tape_->add(a.id_, b.id_)}; }
    friend Value operator-(Value a, Value b) { return {a.tape_, a.tape_->sub(a.id_, b.id_)}; }
    friend Value operator*(Value a, Value b) { return {a.tape_, a.tape_->mul(a.id_, b.id_)}; }
    friend Value operator+(Value a, double c) { return {a.tape_, a.tape_->scalar_add(a.id_, c)}; }
    friend Value operator+(double c, Value a) { return a + c; }
    friend Value operator-(Value a, double c) { return a + (-c); }
    friend Value operator-(double c, Value a) { return -a + c; }
    friend Value operator*(Value a, double c) { return {a.tape_, a.tape_->scalar_mul(a.id_, c)}; }
    friend Value operator*(double c, Value a) { return a * c; }
    friend Value operator-(Value a) { return {a.tape_, a.tape_->neg(a.id_)}; }

private:
    Tape* tape_ = nullptr;
    NodeId id_ = -1;
};

Value matmul(Value a, Value b);
Value sum_axis(Value x, int64_t axis);
Value mean_axis(Value x, int64_t axis);
Value min_axis(Value x, int64_t axis);
Value sum_all(Value x);
Value relu(Value x);
Value softplus(Value x);
Value exp(Value x);
Value log(Value x);
Value reciprocal(Value x);
Value square(Value x);
Value abs(Value x);
Value clamp_max(Value x, double c);
Value lgamma(Value x);
Value concat_last(Value a, Value b);
Value slice_last(Value x, int64_t start, int64_t len);
Value repeat_rows(Value x, int64_t n);
Value reshape(Value x, Shape shape);

}  // namespace ecnp
