#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "gnstode/tensor.hpp"

namespace gnstode {

class Tape;

/// Handle to a value recorded on a Tape.
struct Var {
  std::int32_t id = -1;
  Tape* tape = nullptr;
};

/// Gradients of one scalar with respect to every leaf of a tape.
class Gradients {
 public:
  const Tensor& at(Var leaf) const;

 private:
  friend class Tape;
  std::vector<std::int32_t> slot_;  // node id -> index into grads_, -1 if not a leaf
  std::vector<Tensor> grads_;
};

/// Append-only record of primitive operations. Nodes are stored in
/// topological order (inputs always precede their consumers) and values are
/// computed eagerly, so replaying the recorded ops reproduces every stored
/// value exactly. Single-writer: one forward pass builds and consumes a tape.
class Tape {
 public:
  Var leaf(Tensor value, bool parameter = false);
  Var constant(Tensor value) { return leaf(std::move(value), false); }
  Var constant(double value) { return leaf(Tensor::scalar(value), false); }

  const Tensor& value(Var v) const;
  bool is_parameter(Var v) const;
  std::size_t num_nodes() const { return nodes_.size(); }

  /// Reverse sweep from a scalar loss recorded on this tape. Returns
  /// d(loss)/d(leaf) for every leaf; leaves the tape unchanged.
  Gradients backward(Var loss) const;

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scalar_mul(Var a, double s);
  Var concat(int axis, std::span<const Var> parts);
  Var concat(int axis, std::initializer_list<Var> parts) {
    return concat(axis, std::span<const Var>(std::data(parts), parts.size()));
  }
  Var slice(Var a, std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1);
  Var sum(Var a, int axis);
  Var sum_all(Var a) { return sum(sum(a, 1), 0); }
  Var tanh(Var a);
  Var relu(Var a);
  /// out[index[r]] += a[r]; realizes the neighborhood aggregation.
  Var segment_sum(Var a, std::span<const std::int32_t> index, std::size_t out_rows);
  /// out[r] = a[index[r]]; adjoint of segment_sum.
  Var gather_rows(Var a, std::span<const std::int32_t> index);
  Var broadcast_row(Var row, std::size_t rows);

 private:
  enum class Op : std::uint8_t {
    Leaf, MatMul, Add, Sub, Mul, ScalarMul, Concat, Slice, Sum, Tanh, Relu,
    SegmentSum, GatherRows, BroadcastRow,
  };

  struct Node {
    Op op = Op::Leaf;
    bool parameter = false;
    double scalar = 0.0;
    std::int32_t axis = 0;
    std::size_t bounds[4] = {0, 0, 0, 0};  // slice rectangle
    std::vector<std::int32_t> inputs;
    std::vector<std::int32_t> index;
    Tensor value;
  };

  Var push(Node node);
  const Node& node_checked(Var v, const char* who) const;

  std::vector<Node> nodes_;
};

inline Var matmul(Var a, Var b) { return a.tape->matmul(a, b); }
inline Var add(Var a, Var b) { return a.tape->add(a, b); }
inline Var sub(Var a, Var b) { return a.tape->sub(a, b); }
inline Var mul(Var a, Var b) { return a.tape->mul(a, b); }
inline Var scalar_mul(Var a, double s) { return a.tape->scalar_mul(a, s); }
inline Var concat(int axis, std::span<const Var> parts) {
  return parts[0].tape->concat(axis, parts);
}
inline Var concat(int axis, std::initializer_list<Var> parts) {
  return std::data(parts)->tape->concat(axis, std::span<const Var>(std::data(parts), parts.size()));
}
inline Var slice(Var a, std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) {
  return a.tape->slice(a, r0, r1, c0, c1);
}
inline Var sum(Var a, int axis) { return a.tape->sum(a, axis); }
inline Var sum_all(Var a) { return a.tape->sum_all(a); }
inline Var tanh(Var a) { return a.tape->tanh(a); }
inline Var relu(Var a) { return a.tape->relu(a); }
inline Var segment_sum(Var a, std::span<const std::int32_t> index, std::size_t out_rows) {
  return a.tape->segment_sum(a, index, out_rows);
}
inline Var gather_rows(Var a, std::span<const std::int32_t> index) {
  return a.tape->gather_rows(a, index);
}
inline Var broadcast_row(Var row, std::size_t rows) {
  return row.tape->broadcast_row(row, rows);
}

/// Max relative discrepancy between the taped gradient of f at x and central
/// finite differences with the given step:
///   max_i |analytic_i - numeric_i| / (|analytic_i| + |numeric_i| + 1e-12)
double grad_check(const std::function<Var(Tape&, Var)>& f, const Tensor& x, double step);

}  // namespace gnstode
