#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gsamr/rng.hpp"

namespace gsamr {

// Dense row-major tensor with reverse-mode differentiation. Values are
// 64-bit floats throughout; the gradient-check contract (rel. error <= 1e-4
// at eps = 1e-5) needs the precision and the corpus sizes this project
// targets never make 32-bit storage worth a second code path.
//
// A Tensor is a shared handle to a node in a dynamically built computation
// graph. Operations record backward closures when gradients are enabled and
// any operand requires them; otherwise results are plain constants.

using Shape = std::vector<int>;

std::string shape_str(const Shape& s);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> val;
  std::vector<double> grad;  // sized lazily during backward
  bool requires_grad = false;
  bool leaf = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad, accumulates into parents' grads.
  std::function<void(Node&)> backprop;

  ~Node();  // iterative teardown; graph chains overflow the stack otherwise

  std::int64_t numel() const { return static_cast<std::int64_t>(val.size()); }
  void ensure_grad() {
    if (grad.size() != val.size()) grad.assign(val.size(), 0.0);
  }
};

}  // namespace detail

// Gradient recording is on by default; parsing and other pure-evaluation
// paths disable it with an RAII guard to avoid building graphs.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(const Shape& shape);
  static Tensor constant(const Shape& shape, double value);
  static Tensor from_values(const Shape& shape, std::vector<double> values);
  // Leaves are the only tensors whose values may be mutated in place
  // (optimizer updates); they anchor the graph.
  static Tensor leaf(const Shape& shape, std::vector<double> values, bool requires_grad);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  int rows() const;  // rank-1 tensors count as a single row
  int cols() const;
  std::int64_t numel() const;
  const std::vector<double>& values() const;
  double scalar() const;  // numel() == 1
  double at_flat(std::int64_t i) const;

  bool requires_grad() const;
  bool is_leaf() const;
  const std::vector<double>& grad() const;
  void zero_grad();

  // Optimizer access; leaf tensors only.
  std::vector<double>& leaf_values();

  // Reverse pass from a scalar output.
  void backward() const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
  std::shared_ptr<detail::Node> node_;

  friend Tensor make_op_result(Shape shape, std::vector<double> values,
                               std::vector<Tensor> parents,
                               std::function<void(detail::Node&)> backprop,
                               const char* op_name);
};

// Extension point for custom differentiable operations: forward values plus
// a closure that accumulates parent gradients. Gradient recording follows
// the global mode and the parents' requires-grad flags; values are checked
// for finiteness.
Tensor make_op_result(Shape shape, std::vector<double> values, std::vector<Tensor> parents,
                      std::function<void(detail::Node&)> backprop, const char* op_name);

// --- elementwise and linear algebra ---------------------------------------

// add/sub broadcast a rank-1 [c] operand across the rows of a rank-2 [r,c]
// operand, and a [1] scalar across anything.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise; [1] broadcasts
Tensor scale(const Tensor& a, double c);
Tensor neg(const Tensor& a);
Tensor matmul(const Tensor& a, const Tensor& b);      // [r,k] x [k,c]
Tensor matvec(const Tensor& m, const Tensor& v);      // [r,c] x [c] -> [r]
Tensor vecmat(const Tensor& v, const Tensor& m);      // [r] x [r,c] -> [c]
Tensor transpose(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor log_of(const Tensor& a);          // elementwise; requires positive input
Tensor clamp_min(const Tensor& a, double floor);
Tensor sum_all(const Tensor& a);         // -> [1]
Tensor reshape(const Tensor& a, const Shape& shape);

// --- softmax / normalization ----------------------------------------------

// Row-wise softmax. The masked variant takes a row-major byte mask of the
// same shape (1 = attend); masked outputs are exactly zero. A row with no
// attendable position raises NumericError.
Tensor softmax_rows(const Tensor& a);
Tensor softmax_rows_masked(const Tensor& a, const std::vector<std::uint8_t>& mask);
Tensor log_softmax_vec(const Tensor& a);  // rank-1
Tensor layer_norm_rows(const Tensor& a, const Tensor& gain, const Tensor& bias,
                       double eps = 1e-5);

// --- structure -------------------------------------------------------------

Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor stack_rows(const std::vector<Tensor>& rows);  // rank-1 [c] each -> [n,c]
Tensor slice_rows(const Tensor& a, int start, int count);
Tensor slice_cols(const Tensor& a, int start, int count);
Tensor row(const Tensor& a, int i);              // -> [c]
Tensor at(const Tensor& a, int i);               // rank-1 pick -> [1]
Tensor gather_sum(const Tensor& a, const std::vector<int>& idx);  // rank-1 -> [1]
Tensor embed_rows(const Tensor& table, const std::vector<int>& ids);
Tensor max_over_rows(const Tensor& a);           // [r,c] -> [c], column max
Tensor maximum(const Tensor& a, const Tensor& b);  // elementwise; ties pick a
Tensor unfold_rows(const Tensor& a, int k);      // [r,c] -> [r-k+1, k*c]

// Inverted dropout: scales kept activations by 1/(1-rate) in training mode
// and is the identity in evaluation mode.
Tensor dropout(const Tensor& a, double rate, bool training, Rng* rng);

}  // namespace gsamr
