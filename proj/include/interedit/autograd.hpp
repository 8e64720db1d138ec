#pragma once

#include "interedit/common.hpp"

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace interedit::nn {

/// A trainable array. `grad` accumulates across backward passes until zeroed.
struct Parameter {
  std::string name;
  Mat value;
  Mat grad;
};

/// Owns parameters with stable addresses, in registration order.
class ParameterStore {
 public:
  Parameter& add(std::string name, Mat init);
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;
  std::vector<std::unique_ptr<Parameter>>& all() { return params_; }
  const std::vector<std::unique_ptr<Parameter>>& all() const { return params_; }
  void zero_grad();
  std::size_t scalar_count() const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Mat& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  int id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Reverse-mode tape over dense matrices. Nodes are appended in evaluation order;
/// backward() walks them in reverse. With gradients disabled no closures are recorded.
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Mat& grad_out)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Mat value);
  Var input(Mat value);
  Var param(Parameter& p);

  bool grad_enabled() const { return grad_enabled_; }
  const Mat& value(int id) const;
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }

  /// Gradient of a node after backward(); zero matrix if nothing flowed into it.
  Mat grad(Var v) const;

  /// Seeds d(objective)/d(var) for each pair and back-propagates. Parameter gradients are
  /// added into Parameter::grad.
  void backward(const std::vector<std::pair<Var, Mat>>& seeds);

  /// Records an op result. `parents` decide whether the node requires grad.
  Var push(Mat value, std::initializer_list<Var> parents, Backward backward);
  Var push(Mat value, const std::vector<Var>& parents, Backward backward);

  /// Adds `g` into the gradient of node `id` (no-op if the node does not require grad).
  void accumulate(int id, const Mat& g);
  /// Adds `g` into a block of the gradient of node `id`.
  void accumulate_block(int id, Eigen::Index row, Eigen::Index col, const Mat& g);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    const Mat* external = nullptr;
    Mat grad;
    Parameter* param = nullptr;
    bool requires_grad = false;
    Backward backward;
  };
  Mat& grad_slot(int id);

  std::vector<Node> nodes_;
  bool grad_enabled_;
};

// ---- ops -------------------------------------------------------------------

Var matmul(Var a, Var b);
/// x W + b, with W (in x out) and b (1 x out). `bias` may be invalid.
Var linear(Var x, Var weight, Var bias);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
/// Broadcast a 1 x n row over all rows of a.
Var add_row(Var a, Var row);
Var mul_row(Var a, Var row);
/// Row-wise normalization without affine parameters.
Var layer_norm(Var x, double eps = 1e-5);
Var silu(Var x);
Var gelu(Var x);
Var softmax_rows(Var x);
Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);
/// out.row(i) = a.row(index[i]); backward scatter-adds.
Var gather_rows(Var a, std::vector<int> index);
/// Same-length temporal convolution along rows. `weight` stacks `kernel` blocks of
/// (Cin x Cout) vertically; padding is (kernel-1)/2 on both ends.
Var temporal_conv(Var x, Var weight, Var bias, int kernel);
/// Scaled dot-product attention over all rows, split into `heads` column groups.
Var attention(Var q, Var k, Var v, int heads);
Var sum_all(Var a);

/// Softmax attention probabilities of one head (S x S), exposed for inspection.
Mat attention_weights(const Mat& q, const Mat& k, int heads, int head);

}  // namespace interedit::nn
