#include "timeapn/nn/tape.hpp"

#include <atomic>

namespace apn::nn {

namespace {
std::atomic<std::uint64_t> next_parameter_id{1};
}

Parameter::Parameter(std::string name, Matrix init)
    : value(std::move(init)), name_(std::move(name)), id_(next_parameter_id++) {
  grad = Matrix::Zero(value.rows(), value.cols());
}

const Matrix& Var::value() const {
  if (!tape_) throw Error("Var: use of an empty handle");
  return tape_->value(index_);
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.op = "constant";
  return push(std::move(n));
}

Var Tape::parameter(Parameter& p) {
  Node n;
  n.value = p.value;
  n.param = &p;
  n.op = "parameter:" + p.name();
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::record(std::string_view op, Matrix value, std::vector<Var> parents, Backward backward) {
  Node n;
  n.value = std::move(value);
  n.op = op;
  n.backward = std::move(backward);
  for (const Var& p : parents) {
    if (p.tape() != this) throw Error("tape: operand of '" + n.op + "' belongs to another tape");
    n.parents.push_back(p.index());
    n.requires_grad = n.requires_grad || requires_grad(p.index());
  }
  return push(std::move(n));
}

Var Tape::opaque(std::string_view op, Matrix value, std::vector<Var> parents) {
  Var v = record(op, std::move(value), std::move(parents), nullptr);
  nodes_.back().opaque = true;
  return v;
}

Matrix& Tape::grad(int i) {
  Node& n = nodes_[static_cast<std::size_t>(i)];
  if (n.grad.size() == 0 && n.value.size() != 0) {
    n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  }
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw Error("backward: loss belongs to another tape");
  if (loss.rows() != 1 || loss.cols() != 1) throw Error("backward: loss must be a 1x1 scalar");
  for (auto& n : nodes_) n.grad.resize(0, 0);
  grad(loss.index())(0, 0) = 1.0;
  for (int i = loss.index(); i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    if (n.param) {
      n.param->grad += n.grad;
      continue;
    }
    if (n.opaque || !n.backward) {
      throw Error("backward: unsupported primitive '" + n.op + "' in graph");
    }
    n.backward(*this, i);
  }
}

}  // namespace apn::nn
