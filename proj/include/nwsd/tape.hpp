#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "nwsd/matrix.hpp"

namespace nwsd {

// Reverse-mode autodiff over Matrix values.
//
// Forward calls record one node per primitive op together with whatever
// the op saved for its vector-Jacobian product. backward() seeds the loss
// node and walks the record in exact reverse order of forward execution,
// accumulating gradients into every node (leaves included).
//
// A Tape is confined to one thread and used for one forward/backward pass.
class Tape {
 public:
  struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Registers a leaf (parameter or input). Gradients of leaves are what
  // backward() ultimately produces.
  Var leaf(Matrix value);

  // Kernel-size-3 1-D convolution over rows of input (L x Din) with zero
  // padding, bias add and fused ReLU. kernel is (3*Din) x d laid out as the
  // three Din x d taps for offsets -1, 0, +1; bias is 1 x d.
  Var conv1d(Var input, Var kernel, Var bias);

  Var matmul(Var a, Var b);
  Var transpose(Var x);
  Var sigmoid(Var x);

  // Row-wise softmax with per-row max subtraction.
  Var softmax_rows(Var x);

  // Copies row r of x into a 1 x cols value. Gradient flows only into row r.
  Var select_row(Var x, int r);

  // Sum of all entries, as a 1 x 1 value.
  Var sum_all(Var x);

  // x / (s[0,0] + eps) with s a 1 x 1 value. Caller guarantees s >= 0.
  Var div_by_scalar(Var x, Var s, double eps);

  // Inverted dropout: zeroes entries where keep[i] == 0 and rescales the
  // rest by 1/keep_prob. The mask is drawn by the caller so the op stays
  // deterministic (and finite-difference checkable).
  Var dropout(Var x, const std::vector<std::uint8_t>& keep, double keep_prob);

  Var add(Var a, Var b);

  // -log(max(p[0,target], 1e-12)) for a 1 x C probability row.
  Var neg_log_prob(Var p, int target);

  // Mean over rows j of -log(max(p[j, targets[j]], 1e-12)).
  Var mean_neg_log_rows(Var p, std::vector<int> targets);

  const Matrix& value(Var v) const;

  // Gradient of the loss w.r.t. v; valid only after backward().
  const Matrix& grad(Var v) const;

  void backward(Var loss, double seed = 1.0);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    // Pulls this node's grad into its inputs' grads. Empty for leaves.
    std::function<void(Tape&)> pull;
  };

  Var push(Matrix value, std::function<void(Tape&)> pull);
  Node& node(Var v);
  const Node& node(Var v) const;

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace nwsd
