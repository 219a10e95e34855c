#include "gnstode/autodiff.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gnstode {

namespace {

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " +
                              a.shape_str() + " and " + b.shape_str());
}

// C += A * B, row-major, ikj order so the inner loop is contiguous.
void matmul_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = a.row_ptr(i);
    double* crow = c.row_ptr(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = arow[p];
      const double* brow = b.row_ptr(p);
      for (std::size_t j = 0; j < m; ++j) crow[j] += aip * brow[j];
    }
  }
}

}  // namespace

const Tensor& Gradients::at(Var leaf) const {
  if (leaf.id < 0 || static_cast<std::size_t>(leaf.id) >= slot_.size() ||
      slot_[leaf.id] < 0) {
    throw std::invalid_argument("Gradients::at: node " + std::to_string(leaf.id) +
                                " is not a leaf of the differentiated tape");
  }
  return grads_[slot_[leaf.id]];
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1), this};
}

const Tape::Node& Tape::node_checked(Var v, const char* who) const {
  if (v.tape != this) {
    throw std::invalid_argument(std::string(who) + ": value belongs to a different tape");
  }
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw std::invalid_argument(std::string(who) + ": invalid node id " +
                                std::to_string(v.id));
  }
  return nodes_[v.id];
}

Var Tape::leaf(Tensor value, bool parameter) {
  Node n;
  n.op = Op::Leaf;
  n.parameter = parameter;
  n.value = std::move(value);
  return push(std::move(n));
}

const Tensor& Tape::value(Var v) const { return node_checked(v, "Tape::value").value; }

bool Tape::is_parameter(Var v) const {
  const Node& n = node_checked(v, "Tape::is_parameter");
  return n.op == Op::Leaf && n.parameter;
}

Var Tape::matmul(Var a, Var b) {
  const Tensor& ta = node_checked(a, "matmul").value;
  const Tensor& tb = node_checked(b, "matmul").value;
  if (ta.cols() != tb.rows()) shape_error("matmul", ta, tb);
  Node n;
  n.op = Op::MatMul;
  n.inputs = {a.id, b.id};
  n.value = Tensor(ta.rows(), tb.cols());
  matmul_acc(ta, tb, n.value);
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  const Tensor& ta = node_checked(a, "add").value;
  const Tensor& tb = node_checked(b, "add").value;
  if (!ta.same_shape(tb)) shape_error("add", ta, tb);
  Node n;
  n.op = Op::Add;
  n.inputs = {a.id, b.id};
  n.value = Tensor(ta.rows(), ta.cols());
  auto out = n.value.data();
  auto x = ta.data(), y = tb.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  const Tensor& ta = node_checked(a, "sub").value;
  const Tensor& tb = node_checked(b, "sub").value;
  if (!ta.same_shape(tb)) shape_error("sub", ta, tb);
  Node n;
  n.op = Op::Sub;
  n.inputs = {a.id, b.id};
  n.value = Tensor(ta.rows(), ta.cols());
  auto out = n.value.data();
  auto x = ta.data(), y = tb.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  const Tensor& ta = node_checked(a, "mul").value;
  const Tensor& tb = node_checked(b, "mul").value;
  if (!ta.same_shape(tb)) shape_error("mul", ta, tb);
  Node n;
  n.op = Op::Mul;
  n.inputs = {a.id, b.id};
  n.value = Tensor(ta.rows(), ta.cols());
  auto out = n.value.data();
  auto x = ta.data(), y = tb.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  return push(std::move(n));
}

Var Tape::scalar_mul(Var a, double s) {
  const Tensor& ta = node_checked(a, "scalar_mul").value;
  Node n;
  n.op = Op::ScalarMul;
  n.scalar = s;
  n.inputs = {a.id};
  n.value = Tensor(ta.rows(), ta.cols());
  auto out = n.value.data();
  auto x = ta.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * x[i];
  return push(std::move(n));
}

Var Tape::concat(int axis, std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  if (axis != 0 && axis != 1) {
    throw std::invalid_argument("concat: axis must be 0 or 1, got " + std::to_string(axis));
  }
  const Tensor& first = node_checked(parts[0], "concat").value;
  std::size_t rows = first.rows(), cols = first.cols();
  for (std::size_t p = 1; p < parts.size(); ++p) {
    const Tensor& t = node_checked(parts[p], "concat").value;
    if (axis == 1 && t.rows() != rows) shape_error("concat", first, t);
    if (axis == 0 && t.cols() != cols) shape_error("concat", first, t);
    if (axis == 1) cols += t.cols();
    if (axis == 0) rows += t.rows();
  }
  Node n;
  n.op = Op::Concat;
  n.axis = axis;
  for (const Var& p : parts) n.inputs.push_back(p.id);
  n.value = Tensor(rows, cols);
  if (axis == 1) {
    std::size_t off = 0;
    for (const Var& p : parts) {
      const Tensor& t = nodes_[p.id].value;
      for (std::size_t r = 0; r < rows; ++r) {
        const double* src = t.row_ptr(r);
        double* dst = n.value.row_ptr(r) + off;
        for (std::size_t c = 0; c < t.cols(); ++c) dst[c] = src[c];
      }
      off += t.cols();
    }
  } else {
    std::size_t off = 0;
    for (const Var& p : parts) {
      const Tensor& t = nodes_[p.id].value;
      for (std::size_t r = 0; r < t.rows(); ++r) {
        const double* src = t.row_ptr(r);
        double* dst = n.value.row_ptr(off + r);
        for (std::size_t c = 0; c < cols; ++c) dst[c] = src[c];
      }
      off += t.rows();
    }
  }
  return push(std::move(n));
}

Var Tape::slice(Var a, std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) {
  const Tensor& ta = node_checked(a, "slice").value;
  if (r0 >= r1 || r1 > ta.rows() || c0 >= c1 || c1 > ta.cols()) {
    throw std::invalid_argument(
        "slice: rectangle [" + std::to_string(r0) + "," + std::to_string(r1) + ")x[" +
        std::to_string(c0) + "," + std::to_string(c1) + ") out of bounds for " +
        ta.shape_str());
  }
  Node n;
  n.op = Op::Slice;
  n.bounds[0] = r0;
  n.bounds[1] = r1;
  n.bounds[2] = c0;
  n.bounds[3] = c1;
  n.inputs = {a.id};
  n.value = Tensor(r1 - r0, c1 - c0);
  for (std::size_t r = r0; r < r1; ++r) {
    const double* src = ta.row_ptr(r) + c0;
    double* dst = n.value.row_ptr(r - r0);
    for (std::size_t c = 0; c < c1 - c0; ++c) dst[c] = src[c];
  }
  return push(std::move(n));
}

Var Tape::sum(Var a, int axis) {
  const Tensor& ta = node_checked(a, "sum").value;
  if (axis != 0 && axis != 1) {
    throw std::invalid_argument("sum: axis must be 0 or 1, got " + std::to_string(axis));
  }
  Node n;
  n.op = Op::Sum;
  n.axis = axis;
  n.inputs = {a.id};
  if (axis == 0) {
    n.value = Tensor(1, ta.cols());
    for (std::size_t r = 0; r < ta.rows(); ++r) {
      const double* src = ta.row_ptr(r);
      double* dst = n.value.row_ptr(0);
      for (std::size_t c = 0; c < ta.cols(); ++c) dst[c] += src[c];
    }
  } else {
    n.value = Tensor(ta.rows(), 1);
    for (std::size_t r = 0; r < ta.rows(); ++r) {
      const double* src = ta.row_ptr(r);
      double acc = 0.0;
      for (std::size_t c = 0; c < ta.cols(); ++c) acc += src[c];
      n.value(r, 0) = acc;
    }
  }
  return push(std::move(n));
}

Var Tape::tanh(Var a) {
  const Tensor& ta = node_checked(a, "tanh").value;
  Node n;
  n.op = Op::Tanh;
  n.inputs = {a.id};
  n.value = Tensor(ta.rows(), ta.cols());
  auto out = n.value.data();
  auto x = ta.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(x[i]);
  return push(std::move(n));
}

Var Tape::relu(Var a) {
  const Tensor& ta = node_checked(a, "relu").value;
  Node n;
  n.op = Op::Relu;
  n.inputs = {a.id};
  n.value = Tensor(ta.rows(), ta.cols());
  auto out = n.value.data();
  auto x = ta.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
  return push(std::move(n));
}

Var Tape::segment_sum(Var a, std::span<const std::int32_t> index, std::size_t out_rows) {
  const Tensor& ta = node_checked(a, "segment_sum").value;
  if (index.size() != ta.rows()) {
    throw std::invalid_argument("segment_sum: " + std::to_string(index.size()) +
                                " indices for " + std::to_string(ta.rows()) + " rows");
  }
  Node n;
  n.op = Op::SegmentSum;
  n.inputs = {a.id};
  n.index.assign(index.begin(), index.end());
  n.value = Tensor(out_rows, ta.cols());
  for (std::size_t r = 0; r < index.size(); ++r) {
    const std::int32_t seg = index[r];
    if (seg < 0 || static_cast<std::size_t>(seg) >= out_rows) {
      throw std::out_of_range("segment_sum: index " + std::to_string(seg) +
                              " out of range for " + std::to_string(out_rows) +
                              " output rows");
    }
    const double* src = ta.row_ptr(r);
    double* dst = n.value.row_ptr(seg);
    for (std::size_t c = 0; c < ta.cols(); ++c) dst[c] += src[c];
  }
  return push(std::move(n));
}

Var Tape::gather_rows(Var a, std::span<const std::int32_t> index) {
  const Tensor& ta = node_checked(a, "gather_rows").value;
  Node n;
  n.op = Op::GatherRows;
  n.inputs = {a.id};
  n.index.assign(index.begin(), index.end());
  n.value = Tensor(index.size(), ta.cols());
  for (std::size_t r = 0; r < index.size(); ++r) {
    const std::int32_t src_row = index[r];
    if (src_row < 0 || static_cast<std::size_t>(src_row) >= ta.rows()) {
      throw std::out_of_range("gather_rows: index " + std::to_string(src_row) +
                              " out of range for " + std::to_string(ta.rows()) + " rows");
    }
    const double* src = ta.row_ptr(src_row);
    double* dst = n.value.row_ptr(r);
    for (std::size_t c = 0; c < ta.cols(); ++c) dst[c] = src[c];
  }
  return push(std::move(n));
}

Var Tape::broadcast_row(Var row, std::size_t rows) {
  const Tensor& tr = node_checked(row, "broadcast_row").value;
  if (tr.rows() != 1) {
    throw std::invalid_argument("broadcast_row: expected a 1xN row, got " + tr.shape_str());
  }
  Node n;
  n.op = Op::BroadcastRow;
  n.inputs = {row.id};
  n.value = Tensor(rows, tr.cols());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* src = tr.row_ptr(0);
    double* dst = n.value.row_ptr(r);
    for (std::size_t c = 0; c < tr.cols(); ++c) dst[c] = src[c];
  }
  return push(std::move(n));
}

Gradients Tape::backward(Var loss) const {
  const Node& loss_node = node_checked(loss, "backward");
  if (loss_node.value.rows() != 1 || loss_node.value.cols() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got " +
                                loss_node.value.shape_str());
  }

  std::vector<Tensor> grad(nodes_.size());
  std::vector<bool> touched(nodes_.size(), false);
  auto ensure = [&](std::int32_t id) -> Tensor& {
    if (!touched[id]) {
      grad[id] = Tensor::zeros_like(nodes_[id].value);
      touched[id] = true;
    }
    return grad[id];
  };
  ensure(loss.id)(0, 0) = 1.0;

  for (std::int32_t id = loss.id; id >= 0; --id) {
    if (!touched[id]) continue;
    const Node& n = nodes_[id];
    const Tensor& g = grad[id];
    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::MatMul: {
        const Tensor& a = nodes_[n.inputs[0]].value;
        const Tensor& b = nodes_[n.inputs[1]].value;
        Tensor& ga = ensure(n.inputs[0]);
        Tensor& gb = ensure(n.inputs[1]);
        // ga += g * b^T
        for (std::size_t i = 0; i < a.rows(); ++i) {
          const double* grow = g.row_ptr(i);
          double* garow = ga.row_ptr(i);
          for (std::size_t p = 0; p < a.cols(); ++p) {
            const double* brow = b.row_ptr(p);
            double acc = 0.0;
            for (std::size_t j = 0; j < b.cols(); ++j) acc += grow[j] * brow[j];
            garow[p] += acc;
          }
        }
        // gb += a^T * g
        for (std::size_t i = 0; i < a.rows(); ++i) {
          const double* arow = a.row_ptr(i);
          const double* grow = g.row_ptr(i);
          for (std::size_t p = 0; p < a.cols(); ++p) {
            const double aip = arow[p];
            double* gbrow = gb.row_ptr(p);
            for (std::size_t j = 0; j < b.cols(); ++j) gbrow[j] += aip * grow[j];
          }
        }
        break;
      }
      case Op::Add: {
        Tensor& ga = ensure(n.inputs[0]);
        Tensor& gb = ensure(n.inputs[1]);
        auto gs = g.data();
        auto gas = ga.data(), gbs = gb.data();
        for (std::size_t i = 0; i < gs.size(); ++i) {
          gas[i] += gs[i];
          gbs[i] += gs[i];
        }
        break;
      }
      case Op::Sub: {
        Tensor& ga = ensure(n.inputs[0]);
        Tensor& gb = ensure(n.inputs[1]);
        auto gs = g.data();
        auto gas = ga.data(), gbs = gb.data();
        for (std::size_t i = 0; i < gs.size(); ++i) {
          gas[i] += gs[i];
          gbs[i] -= gs[i];
        }
        break;
      }
      case Op::Mul: {
        const Tensor& a = nodes_[n.inputs[0]].value;
        const Tensor& b = nodes_[n.inputs[1]].value;
        Tensor& ga = ensure(n.inputs[0]);
        Tensor& gb = ensure(n.inputs[1]);
        auto gs = g.data();
        auto as = a.data(), bs = b.data();
        auto gas = ga.data(), gbs = gb.data();
        for (std::size_t i = 0; i < gs.size(); ++i) {
          gas[i] += gs[i] * bs[i];
          gbs[i] += gs[i] * as[i];
        }
        break;
      }
      case Op::ScalarMul: {
        Tensor& ga = ensure(n.inputs[0]);
        auto gs = g.data();
        auto gas = ga.data();
        for (std::size_t i = 0; i < gs.size(); ++i) gas[i] += n.scalar * gs[i];
        break;
      }
      case Op::Concat: {
        std::size_t off = 0;
        for (std::int32_t in : n.inputs) {
          const Tensor& t = nodes_[in].value;
          Tensor& gi = ensure(in);
          if (n.axis == 1) {
            for (std::size_t r = 0; r < t.rows(); ++r) {
              const double* src = g.row_ptr(r) + off;
              double* dst = gi.row_ptr(r);
              for (std::size_t c = 0; c < t.cols(); ++c) dst[c] += src[c];
            }
            off += t.cols();
          } else {
            for (std::size_t r = 0; r < t.rows(); ++r) {
              const double* src = g.row_ptr(off + r);
              double* dst = gi.row_ptr(r);
              for (std::size_t c = 0; c < t.cols(); ++c) dst[c] += src[c];
            }
            off += t.rows();
          }
        }
        break;
      }
      case Op::Slice: {
        Tensor& ga = ensure(n.inputs[0]);
        for (std::size_t r = 0; r < g.rows(); ++r) {
          const double* src = g.row_ptr(r);
          double* dst = ga.row_ptr(n.bounds[0] + r) + n.bounds[2];
          for (std::size_t c = 0; c < g.cols(); ++c) dst[c] += src[c];
        }
        break;
      }
      case Op::Sum: {
        Tensor& ga = ensure(n.inputs[0]);
        if (n.axis == 0) {
          for (std::size_t r = 0; r < ga.rows(); ++r) {
            const double* src = g.row_ptr(0);
            double* dst = ga.row_ptr(r);
            for (std::size_t c = 0; c < ga.cols(); ++c) dst[c] += src[c];
          }
        } else {
          for (std::size_t r = 0; r < ga.rows(); ++r) {
            const double gr = g(r, 0);
            double* dst = ga.row_ptr(r);
            for (std::size_t c = 0; c < ga.cols(); ++c) dst[c] += gr;
          }
        }
        break;
      }
      case Op::Tanh: {
        Tensor& ga = ensure(n.inputs[0]);
        auto gs = g.data();
        auto ys = n.value.data();
        auto gas = ga.data();
        for (std::size_t i = 0; i < gs.size(); ++i) gas[i] += gs[i] * (1.0 - ys[i] * ys[i]);
        break;
      }
      case Op::Relu: {
        const Tensor& a = nodes_[n.inputs[0]].value;
        Tensor& ga = ensure(n.inputs[0]);
        auto gs = g.data();
        auto as = a.data();
        auto gas = ga.data();
        for (std::size_t i = 0; i < gs.size(); ++i) {
          if (as[i] > 0.0) gas[i] += gs[i];
        }
        break;
      }
      case Op::SegmentSum: {
        Tensor& ga = ensure(n.inputs[0]);
        for (std::size_t r = 0; r < n.index.size(); ++r) {
          const double* src = g.row_ptr(n.index[r]);
          double* dst = ga.row_ptr(r);
          for (std::size_t c = 0; c < ga.cols(); ++c) dst[c] += src[c];
        }
        break;
      }
      case Op::GatherRows: {
        Tensor& ga = ensure(n.inputs[0]);
        for (std::size_t r = 0; r < n.index.size(); ++r) {
          const double* src = g.row_ptr(r);
          double* dst = ga.row_ptr(n.index[r]);
          for (std::size_t c = 0; c < g.cols(); ++c) dst[c] += src[c];
        }
        break;
      }
      case Op::BroadcastRow: {
        Tensor& ga = ensure(n.inputs[0]);
        double* dst = ga.row_ptr(0);
        for (std::size_t r = 0; r < g.rows(); ++r) {
          const double* src = g.row_ptr(r);
          for (std::size_t c = 0; c < g.cols(); ++c) dst[c] += src[c];
        }
        break;
      }
    }
  }

  Gradients result;
  result.slot_.assign(nodes_.size(), -1);
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    if (nodes_[id].op != Op::Leaf) continue;
    result.slot_[id] = static_cast<std::int32_t>(result.grads_.size());
    if (touched[id]) {
      result.grads_.push_back(std::move(grad[id]));
    } else {
      result.grads_.push_back(Tensor::zeros_like(nodes_[id].value));
    }
  }
  return result;
}

double grad_check(const std::function<Var(Tape&, Var)>& f, const Tensor& x, double step) {
  if (step <= 0.0) throw std::invalid_argument("grad_check: step must be positive");

  auto eval = [&](const Tensor& point, Tensor* grad_out) {
    Tape tape;
    Var xv = tape.leaf(point, /*parameter=*/true);
    Var y = f(tape, xv);
    double value = tape.value(y).item();
    if (!std::isfinite(value)) throw std::runtime_error("grad_check: non-finite output");
    if (grad_out) *grad_out = tape.backward(y).at(xv);
    return value;
  };

  Tensor analytic;
  eval(x, &analytic);

  double max_rel = 0.0;
  Tensor probe = x;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe.data()[i];
    probe.data()[i] = saved + step;
    const double fp = eval(probe, nullptr);
    probe.data()[i] = saved - step;
    const double fm = eval(probe, nullptr);
    probe.data()[i] = saved;
    const double numeric = (fp - fm) / (2.0 * step);
    const double ana = analytic.data()[i];
    const double rel = std::abs(ana - numeric) / (std::abs(ana) + std::abs(numeric) + 1e-12);
    if (rel > max_rel) max_rel = rel;
  }
  return max_rel;
}

}  // namespace gnstode
