#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "timeapn/core.hpp"

namespace apn::nn {

/// A learnable tensor with its gradient accumulator.
class Parameter {
 public:
  Parameter(std::string name, Matrix init);

  std::uint64_t id() const { return id_; }
  const std::string& name() const { return name_; }
  void zero_grad() { grad.setZero(value.rows(), value.cols()); }

  Matrix value;
  Matrix grad;

 private:
  std::string name_;
  std::uint64_t id_;
};

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Tape* tape() const { return tape_; }
  int index() const { return index_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int index) : tape_(tape), index_(index) {}

  Tape* tape_ = nullptr;
  int index_ = -1;
};

/// Records a forward computation over dense matrices and replays it in reverse.
///
/// Backward closures receive the tape and the node index; they read the node's gradient and
/// accumulate into parents via grad(parent). Parents that do not require gradients are skipped
/// by checking requires_grad(parent).
class Tape {
 public:
  using Backward = std::function<void(Tape&, int)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var parameter(Parameter& p);

  /// Records a differentiable primitive.
  Var record(std::string_view op, Matrix value, std::vector<Var> parents, Backward backward);

  /// Records a value computed outside the tape. Reaching it during backward with a
  /// gradient-carrying parent is an error naming `op`.
  Var opaque(std::string_view op, Matrix value, std::vector<Var> parents);

  /// Seeds d(loss)/d(loss) = 1 and accumulates into every reachable Parameter::grad.
  void backward(Var loss);

  const Matrix& value(int i) const { return nodes_[static_cast<std::size_t>(i)].value; }
  /// Gradient buffer of node i, zero-initialised on first access.
  Matrix& grad(int i);
  bool requires_grad(int i) const { return nodes_[static_cast<std::size_t>(i)].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::vector<int> parents;
    Backward backward;
    Parameter* param = nullptr;
    std::string op;
    bool requires_grad = false;
    bool opaque = false;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
};

}  // namespace apn::nn
