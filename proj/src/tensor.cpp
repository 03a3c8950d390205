#include "gsamr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "gsamr/error.hpp"

namespace gsamr {

namespace {

thread_local int g_no_grad_depth = 0;

std::int64_t shape_numel(const Shape& s) {
  std::int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

void check_shape_valid(const Shape& s, const char* op) {
  if (s.empty()) throw NumericError(std::string(op) + ": empty shape");
  for (int d : s) {
    if (d <= 0) throw NumericError(std::string(op) + ": non-positive dim in " + shape_str(s));
  }
}

void check_finite(const std::vector<double>& v, const char* op) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw NumericError(std::string("non-finite value produced by ") + op);
    }
  }
}

int rank2_rows(const Shape& s) { return s.size() == 1 ? 1 : s[0]; }
int rank2_cols(const Shape& s) { return s.size() == 1 ? s[0] : s[1]; }

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw NumericError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " +
                     shape_str(b));
}

}  // namespace

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ",";
    os << s[i];
  }
  os << "]";
  return os.str();
}

bool grad_enabled() { return g_no_grad_depth == 0; }

namespace detail {

Node::~Node() {
  // Harvest ancestors into an explicit stack so release never recurses.
  // Backprop closures capture only parent nodes, which the stack keeps
  // alive while the closure is dropped.
  std::vector<std::shared_ptr<Node>> stack;
  auto harvest = [&stack](Node& n) {
    for (auto& p : n.parents) stack.push_back(std::move(p));
    n.parents.clear();
    n.backprop = nullptr;
  };
  harvest(*this);
  while (!stack.empty()) {
    std::shared_ptr<Node> n = std::move(stack.back());
    stack.pop_back();
    if (n.use_count() == 1) harvest(*n);
  }
}

}  // namespace detail

NoGradGuard::NoGradGuard() { ++g_no_grad_depth; }
NoGradGuard::~NoGradGuard() { --g_no_grad_depth; }

Tensor make_op_result(Shape shape, std::vector<double> values, std::vector<Tensor> parents,
                      std::function<void(detail::Node&)> backprop, const char* op_name) {
  check_finite(values, op_name);
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->val = std::move(values);
  bool track = grad_enabled();
  if (track) {
    bool any = false;
    for (const Tensor& p : parents) any = any || p.requires_grad();
    track = any;
  }
  if (track) {
    node->requires_grad = true;
    node->parents.reserve(parents.size());
    for (const Tensor& p : parents) node->parents.push_back(p.node());
    node->backprop = std::move(backprop);
  }
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(const Shape& shape) {
  check_shape_valid(shape, "zeros");
  return from_values(shape, std::vector<double>(shape_numel(shape), 0.0));
}

Tensor Tensor::constant(const Shape& shape, double value) {
  check_shape_valid(shape, "constant");
  return from_values(shape, std::vector<double>(shape_numel(shape), value));
}

Tensor Tensor::from_values(const Shape& shape, std::vector<double> values) {
  check_shape_valid(shape, "from_values");
  if (static_cast<std::int64_t>(values.size()) != shape_numel(shape)) {
    throw NumericError("from_values: " + std::to_string(values.size()) +
                       " values for shape " + shape_str(shape));
  }
  check_finite(values, "from_values");
  auto node = std::make_shared<detail::Node>();
  node->shape = shape;
  node->val = std::move(values);
  return Tensor(std::move(node));
}

Tensor Tensor::leaf(const Shape& shape, std::vector<double> values, bool requires_grad) {
  Tensor t = from_values(shape, std::move(values));
  t.node_->leaf = true;
  t.node_->requires_grad = requires_grad;
  return t;
}

const Shape& Tensor::shape() const { return node_->shape; }
int Tensor::rows() const { return rank2_rows(node_->shape); }
int Tensor::cols() const { return rank2_cols(node_->shape); }
std::int64_t Tensor::numel() const { return node_->numel(); }
const std::vector<double>& Tensor::values() const { return node_->val; }

double Tensor::scalar() const {
  if (numel() != 1) throw NumericError("scalar() on tensor of shape " + shape_str(shape()));
  return node_->val[0];
}

double Tensor::at_flat(std::int64_t i) const { return node_->val[static_cast<std::size_t>(i)]; }

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }
bool Tensor::is_leaf() const { return node_ && node_->leaf; }

const std::vector<double>& Tensor::grad() const {
  node_->ensure_grad();
  return node_->grad;
}

void Tensor::zero_grad() { node_->grad.assign(node_->val.size(), 0.0); }

std::vector<double>& Tensor::leaf_values() {
  if (!is_leaf()) throw NumericError("leaf_values() on non-leaf tensor");
  return node_->val;
}

void Tensor::backward() const {
  if (numel() != 1) {
    throw NumericError("backward() requires a scalar output, got shape " + shape_str(shape()));
  }
  if (!node_->requires_grad) return;

  // Iterative post-order topological sort; training graphs form long chains
  // and must not recurse.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, idx] = stack.back();
    if (idx < n->parents.size()) {
      detail::Node* p = n->parents[idx].get();
      ++idx;
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->ensure_grad();
  node_->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (!n->backprop) continue;
    for (auto& p : n->parents) {
      if (p->requires_grad) p->ensure_grad();
    }
    n->backprop(*n);
  }
}

// ---------------------------------------------------------------------------
// elementwise / linear algebra
// ---------------------------------------------------------------------------

namespace {

enum class BroadcastKind { Same, RowVector, Scalar };

BroadcastKind broadcast_kind(const Shape& a, const Shape& b, const char* op) {
  if (a == b) return BroadcastKind::Same;
  if (shape_numel(b) == 1) return BroadcastKind::Scalar;
  if (a.size() == 2 && b.size() == 1 && b[0] == a[1]) return BroadcastKind::RowVector;
  shape_error(op, a, b);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  const auto kind = broadcast_kind(a.shape(), b.shape(), "add");
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(av.size());
  const int cols = rank2_cols(a.shape());
  switch (kind) {
    case BroadcastKind::Same:
      for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
      break;
    case BroadcastKind::Scalar:
      for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[0];
      break;
    case BroadcastKind::RowVector:
      for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i % cols];
      break;
  }
  return make_op_result(
      a.shape(), std::move(out), {a, b},
      [an = a.node(), bn = b.node(), kind, cols](detail::Node& n) {
        if (an->requires_grad) {
          for (std::size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += n.grad[i];
        }
        if (bn->requires_grad) {
          switch (kind) {
            case BroadcastKind::Same:
              for (std::size_t i = 0; i < n.grad.size(); ++i) bn->grad[i] += n.grad[i];
              break;
            case BroadcastKind::Scalar:
              for (double g : n.grad) bn->grad[0] += g;
              break;
            case BroadcastKind::RowVector:
              for (std::size_t i = 0; i < n.grad.size(); ++i) bn->grad[i % cols] += n.grad[i];
              break;
          }
        }
      },
      "add");
}

Tensor sub(const Tensor& a, const Tensor& b) { return add(a, scale(b, -1.0)); }

Tensor mul(const Tensor& a, const Tensor& b) {
  const auto kind = broadcast_kind(a.shape(), b.shape(), "mul");
  if (kind == BroadcastKind::RowVector) shape_error("mul", a.shape(), b.shape());
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(av.size());
  if (kind == BroadcastKind::Same) {
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  } else {
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[0];
  }
  return make_op_result(
      a.shape(), std::move(out), {a, b},
      [an = a.node(), bn = b.node(), kind](detail::Node& n) {
        if (kind == BroadcastKind::Same) {
          if (an->requires_grad) {
            for (std::size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += n.grad[i] * bn->val[i];
          }
          if (bn->requires_grad) {
            for (std::size_t i = 0; i < n.grad.size(); ++i) bn->grad[i] += n.grad[i] * an->val[i];
          }
        } else {
          if (an->requires_grad) {
            for (std::size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += n.grad[i] * bn->val[0];
          }
          if (bn->requires_grad) {
            for (std::size_t i = 0; i < n.grad.size(); ++i) bn->grad[0] += n.grad[i] * an->val[i];
          }
        }
      },
      "mul");
}

Tensor scale(const Tensor& a, double c) {
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * c;
  return make_op_result(
      a.shape(), std::move(out), {a},
      [an = a.node(), c](detail::Node& n) {
        for (std::size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += n.grad[i] * c;
      },
      "scale");
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[1] != b.shape()[0]) {
    shape_error("matmul", a.shape(), b.shape());
  }
  const int r = a.shape()[0], k = a.shape()[1], c = b.shape()[1];
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(static_cast<std::size_t>(r) * c, 0.0);
  for (int i = 0; i < r; ++i) {
    const double* arow = &av[static_cast<std::size_t>(i) * k];
    double* orow = &out[static_cast<std::size_t>(i) * c];
    for (int kk = 0; kk < k; ++kk) {
      const double s = arow[kk];
      if (s == 0.0) continue;
      const double* brow = &bv[static_cast<std::size_t>(kk) * c];
      for (int j = 0; j < c; ++j) orow[j] += s * brow[j];
    }
  }
  return make_op_result(
      Shape{r, c}, std::move(out), {a, b},
      [an = a.node(), bn = b.node(), r, k, c](detail::Node& n) {
        // dA = dC * B^T ; dB = A^T * dC
        if (an->requires_grad) {
          for (int i = 0; i < r; ++i) {
            const double* grow = &n.grad[static_cast<std::size_t>(i) * c];
            double* arow = &an->grad[static_cast<std::size_t>(i) * k];
            for (int kk = 0; kk < k; ++kk) {
              const double* brow = &bn->val[static_cast<std::size_t>(kk) * c];
              double acc = 0.0;
              for (int j = 0; j < c; ++j) acc += grow[j] * brow[j];
              arow[kk] += acc;
            }
          }
        }
        if (bn->requires_grad) {
          for (int i = 0; i < r; ++i) {
            const double* arow = &an->val[static_cast<std::size_t>(i) * k];
            const double* grow = &n.grad[static_cast<std::size_t>(i) * c];
            for (int kk = 0; kk < k; ++kk) {
              const double s = arow[kk];
              if (s == 0.0) continue;
              double* brow = &bn->grad[static_cast<std::size_t>(kk) * c];
              for (int j = 0; j < c; ++j) brow[j] += s * grow[j];
            }
          }
        }
      },
      "matmul");
}

Tensor matvec(const Tensor& m, const Tensor& v) {
  if (m.shape().size() != 2 || v.shape().size() != 1 || m.shape()[1] != v.shape()[0]) {
    shape_error("matvec", m.shape(), v.shape());
  }
  Tensor res = matmul(m, reshape(v, Shape{v.shape()[0], 1}));
  return reshape(res, Shape{m.shape()[0]});
}

Tensor vecmat(const Tensor& v, const Tensor& m) {
  if (m.shape().size() != 2 || v.shape().size() != 1 || m.shape()[0] != v.shape()[0]) {
    shape_error("vecmat", v.shape(), m.shape());
  }
  Tensor res = matmul(reshape(v, Shape{1, v.shape()[0]}), m);
  return reshape(res, Shape{m.shape()[1]});
}

Tensor transpose(const Tensor& a) {
  if (a.shape().size() != 2) throw NumericError("transpose: rank-2 only, got " + shape_str(a.shape()));
  const int r = a.shape()[0], c = a.shape()[1];
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out[static_cast<std::size_t>(j) * r + i] = av[static_cast<std::size_t>(i) * c + j];
  return make_op_result(
      Shape{c, r}, std::move(out), {a},
      [an = a.node(), r, c](detail::Node& n) {
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < c; ++j)
            an->grad[static_cast<std::size_t>(i) * c + j] += n.grad[static_cast<std::size_t>(j) * r + i];
      },
      "transpose");
}

Tensor relu(const Tensor& a) {
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] > 0.0 ? av[i] : 0.0;
  return make_op_result(
      a.shape(), std::move(out), {a},
      [an = a.node()](detail::Node& n) {
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
          if (an->val[i] > 0.0) an->grad[i] += n.grad[i];
        }
      },
      "relu");
}

Tensor log_of(const Tensor& a) {
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) {
    if (av[i] <= 0.0) throw NumericError("log_of: non-positive input");
    out[i] = std::log(av[i]);
  }
  return make_op_result(
      a.shape(), std::move(out), {a},
      [an = a.node()](detail::Node& n) {
        for (std::size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += n.grad[i] / an->val[i];
      },
      "log_of");
}

Tensor clamp_min(const Tensor& a, double floor) {
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] < floor ? floor : av[i];
  return make_op_result(
      a.shape(), std::move(out), {a},
      [an = a.node(), floor](detail::Node& n) {
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
          if (an->val[i] >= floor) an->grad[i] += n.grad[i];
        }
      },
      "clamp_min");
}

Tensor sum_all(const Tensor& a) {
  double s = 0.0;
  for (double x : a.values()) s += x;
  return make_op_result(
      Shape{1}, {s}, {a},
      [an = a.node()](detail::Node& n) {
        for (std::size_t i = 0; i < an->grad.size(); ++i) an->grad[i] += n.grad[0];
      },
      "sum_all");
}

Tensor reshape(const Tensor& a, const Shape& shape) {
  check_shape_valid(shape, "reshape");
  if (shape_numel(shape) != a.numel()) {
    shape_error("reshape", a.shape(), shape);
  }
  return make_op_result(
      shape, a.values(), {a},
      [an = a.node()](detail::Node& n) {
        for (std::size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += n.grad[i];
      },
      "reshape");
}

// ---------------------------------------------------------------------------
// softmax / normalization
// ---------------------------------------------------------------------------

namespace {

Tensor softmax_impl(const Tensor& a, const std::vector<std::uint8_t>* mask) {
  const int r = rank2_rows(a.shape()), c = rank2_cols(a.shape());
  if (mask && static_cast<std::int64_t>(mask->size()) != a.numel()) {
    throw NumericError("softmax: mask size mismatch");
  }
  const auto& av = a.values();
  std::vector<double> out(av.size(), 0.0);
  for (int i = 0; i < r; ++i) {
    const std::size_t off = static_cast<std::size_t>(i) * c;
    double mx = -std::numeric_limits<double>::infinity();
    int live = 0;
    for (int j = 0; j < c; ++j) {
      if (mask && !(*mask)[off + j]) continue;
      mx = std::max(mx, av[off + j]);
      ++live;
    }
    if (live == 0) throw NumericError("softmax: fully masked row " + std::to_string(i));
    double denom = 0.0;
    for (int j = 0; j < c; ++j) {
      if (mask && !(*mask)[off + j]) continue;
      out[off + j] = std::exp(av[off + j] - mx);
      denom += out[off + j];
    }
    for (int j = 0; j < c; ++j) {
      if (mask && !(*mask)[off + j]) continue;
      out[off + j] /= denom;
    }
  }
  std::vector<std::uint8_t> mask_copy;
  if (mask) mask_copy = *mask;
  return make_op_result(
      a.shape(), std::move(out), {a},
      [an = a.node(), r, c, mask_copy = std::move(mask_copy)](detail::Node& n) {
        const bool has_mask = !mask_copy.empty();
        for (int i = 0; i < r; ++i) {
          const std::size_t off = static_cast<std::size_t>(i) * c;
          double dot = 0.0;
          for (int j = 0; j < c; ++j) {
            if (has_mask && !mask_copy[off + j]) continue;
            dot += n.grad[off + j] * n.val[off + j];
          }
          for (int j = 0; j < c; ++j) {
            if (has_mask && !mask_copy[off + j]) continue;
            an->grad[off + j] += n.val[off + j] * (n.grad[off + j] - dot);
          }
        }
      },
      "softmax");
}

}  // namespace

Tensor softmax_rows(const Tensor& a) { return softmax_impl(a, nullptr); }

Tensor softmax_rows_masked(const Tensor& a, const std::vector<std::uint8_t>& mask) {
  return softmax_impl(a, &mask);
}

Tensor log_softmax_vec(const Tensor& a) {
  if (a.shape().size() != 1) throw NumericError("log_softmax_vec: rank-1 only");
  const auto& av = a.values();
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : av) mx = std::max(mx, x);
  double denom = 0.0;
  for (double x : av) denom += std::exp(x - mx);
  const double log_denom = std::log(denom) + mx;
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] - log_denom;
  return make_op_result(
      a.shape(), std::move(out), {a},
      [an = a.node()](detail::Node& n) {
        double gsum = 0.0;
        for (double g : n.grad) gsum += g;
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
          an->grad[i] += n.grad[i] - std::exp(n.val[i]) * gsum;
        }
      },
      "log_softmax_vec");
}

Tensor layer_norm_rows(const Tensor& a, const Tensor& gain, const Tensor& bias, double eps) {
  const int r = rank2_rows(a.shape()), c = rank2_cols(a.shape());
  if (gain.shape() != Shape{c} || bias.shape() != Shape{c}) {
    throw NumericError("layer_norm_rows: gain/bias must be [" + std::to_string(c) + "]");
  }
  const auto& av = a.values();
  const auto& gv = gain.values();
  const auto& bv = bias.values();
  std::vector<double> out(av.size());
  std::vector<double> xhat(av.size());
  std::vector<double> inv_std(r);
  for (int i = 0; i < r; ++i) {
    const std::size_t off = static_cast<std::size_t>(i) * c;
    double mean = 0.0;
    for (int j = 0; j < c; ++j) mean += av[off + j];
    mean /= c;
    double var = 0.0;
    for (int j = 0; j < c; ++j) {
      const double d = av[off + j] - mean;
      var += d * d;
    }
    var /= c;
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (int j = 0; j < c; ++j) {
      xhat[off + j] = (av[off + j] - mean) * inv_std[i];
      out[off + j] = gv[j] * xhat[off + j] + bv[j];
    }
  }
  return make_op_result(
      a.shape(), std::move(out), {a, gain, bias},
      [an = a.node(), gn = gain.node(), bn = bias.node(), r, c, xhat = std::move(xhat),
       inv_std = std::move(inv_std)](detail::Node& n) {
        for (int i = 0; i < r; ++i) {
          const std::size_t off = static_cast<std::size_t>(i) * c;
          if (gn->requires_grad) {
            for (int j = 0; j < c; ++j) gn->grad[j] += n.grad[off + j] * xhat[off + j];
          }
          if (bn->requires_grad) {
            for (int j = 0; j < c; ++j) bn->grad[j] += n.grad[off + j];
          }
          if (an->requires_grad) {
            double mean_gy = 0.0, mean_gyx = 0.0;
            for (int j = 0; j < c; ++j) {
              const double gy = n.grad[off + j] * gn->val[j];
              mean_gy += gy;
              mean_gyx += gy * xhat[off + j];
            }
            mean_gy /= c;
            mean_gyx /= c;
            for (int j = 0; j < c; ++j) {
              const double gy = n.grad[off + j] * gn->val[j];
              an->grad[off + j] += (gy - mean_gy - xhat[off + j] * mean_gyx) * inv_std[i];
            }
          }
        }
      },
      "layer_norm_rows");
}

// ---------------------------------------------------------------------------
// structure ops
// ---------------------------------------------------------------------------

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw NumericError("concat_cols: no parts");
  const int r = rank2_rows(parts[0].shape());
  int total = 0;
  for (const Tensor& p : parts) {
    if (rank2_rows(p.shape()) != r) shape_error("concat_cols", parts[0].shape(), p.shape());
    total += rank2_cols(p.shape());
  }
  const bool rank1 = parts[0].shape().size() == 1 && r == 1;
  std::vector<double> out(static_cast<std::size_t>(r) * total);
  int col_off = 0;
  for (const Tensor& p : parts) {
    const int pc = rank2_cols(p.shape());
    const auto& pv = p.values();
    for (int i = 0; i < r; ++i) {
      std::memcpy(&out[static_cast<std::size_t>(i) * total + col_off],
                  &pv[static_cast<std::size_t>(i) * pc], sizeof(double) * pc);
    }
    col_off += pc;
  }
  std::vector<int> widths;
  for (const Tensor& p : parts) widths.push_back(rank2_cols(p.shape()));
  Shape out_shape = rank1 ? Shape{total} : Shape{r, total};
  return make_op_result(
      out_shape, std::move(out), parts,
      [r, total, widths](detail::Node& n) {
        int off = 0;
        for (std::size_t pi = 0; pi < n.parents.size(); ++pi) {
          auto& p = n.parents[pi];
          const int pc = widths[pi];
          if (p->requires_grad) {
            for (int i = 0; i < r; ++i) {
              for (int j = 0; j < pc; ++j) {
                p->grad[static_cast<std::size_t>(i) * pc + j] +=
                    n.grad[static_cast<std::size_t>(i) * total + off + j];
              }
            }
          }
          off += pc;
        }
      },
      "concat_cols");
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw NumericError("concat_rows: no parts");
  const int c = rank2_cols(parts[0].shape());
  int total_rows = 0;
  for (const Tensor& p : parts) {
    if (rank2_cols(p.shape()) != c) shape_error("concat_rows", parts[0].shape(), p.shape());
    total_rows += rank2_rows(p.shape());
  }
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(total_rows) * c);
  for (const Tensor& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
  std::vector<std::int64_t> sizes;
  for (const Tensor& p : parts) sizes.push_back(p.numel());
  return make_op_result(
      Shape{total_rows, c}, std::move(out), parts,
      [sizes](detail::Node& n) {
        std::size_t off = 0;
        for (std::size_t pi = 0; pi < n.parents.size(); ++pi) {
          auto& p = n.parents[pi];
          const std::size_t sz = static_cast<std::size_t>(sizes[pi]);
          if (p->requires_grad) {
            for (std::size_t i = 0; i < sz; ++i) p->grad[i] += n.grad[off + i];
          }
          off += sz;
        }
      },
      "concat_rows");
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw NumericError("stack_rows: no rows");
  std::vector<Tensor> shaped;
  shaped.reserve(rows.size());
  for (const Tensor& t : rows) {
    shaped.push_back(t.shape().size() == 1 ? reshape(t, Shape{1, t.shape()[0]}) : t);
  }
  return concat_rows(shaped);
}

Tensor slice_rows(const Tensor& a, int start, int count) {
  if (a.shape().size() != 2) throw NumericError("slice_rows: rank-2 only");
  const int r = a.shape()[0], c = a.shape()[1];
  if (start < 0 || count <= 0 || start + count > r) {
    throw NumericError("slice_rows: range [" + std::to_string(start) + "," +
                       std::to_string(start + count) + ") out of " + std::to_string(r));
  }
  const auto& av = a.values();
  std::vector<double> out(av.begin() + static_cast<std::size_t>(start) * c,
                          av.begin() + static_cast<std::size_t>(start + count) * c);
  return make_op_result(
      Shape{count, c}, std::move(out), {a},
      [an = a.node(), start, c](detail::Node& n) {
        const std::size_t off = static_cast<std::size_t>(start) * c;
        for (std::size_t i = 0; i < n.grad.size(); ++i) an->grad[off + i] += n.grad[i];
      },
      "slice_rows");
}

Tensor slice_cols(const Tensor& a, int start, int count) {
  if (a.shape().size() != 2) throw NumericError("slice_cols: rank-2 only");
  const int r = a.shape()[0], c = a.shape()[1];
  if (start < 0 || count <= 0 || start + count > c) {
    throw NumericError("slice_cols: range out of " + std::to_string(c) + " columns");
  }
  const auto& av = a.values();
  std::vector<double> out(static_cast<std::size_t>(r) * count);
  for (int i = 0; i < r; ++i) {
    std::memcpy(&out[static_cast<std::size_t>(i) * count],
                &av[static_cast<std::size_t>(i) * c + start], sizeof(double) * count);
  }
  return make_op_result(
      Shape{r, count}, std::move(out), {a},
      [an = a.node(), r, c, start, count](detail::Node& n) {
        for (int i = 0; i < r; ++i) {
          for (int j = 0; j < count; ++j) {
            an->grad[static_cast<std::size_t>(i) * c + start + j] +=
                n.grad[static_cast<std::size_t>(i) * count + j];
          }
        }
      },
      "slice_cols");
}

Tensor row(const Tensor& a, int i) {
  if (a.shape().size() != 2) throw NumericError("row: rank-2 only");
  return reshape(slice_rows(a, i, 1), Shape{a.shape()[1]});
}

Tensor at(const Tensor& a, int i) {
  if (a.shape().size() != 1) throw NumericError("at: rank-1 only");
  return gather_sum(a, {i});
}

Tensor gather_sum(const Tensor& a, const std::vector<int>& idx) {
  if (a.shape().size() != 1) throw NumericError("gather_sum: rank-1 only");
  const int n_elems = a.shape()[0];
  double s = 0.0;
  for (int i : idx) {
    if (i < 0 || i >= n_elems) throw NumericError("gather_sum: index out of range");
    s += a.values()[i];
  }
  return make_op_result(
      Shape{1}, {s}, {a},
      [an = a.node(), idx](detail::Node& n) {
        for (int i : idx) an->grad[i] += n.grad[0];
      },
      "gather_sum");
}

Tensor embed_rows(const Tensor& table, const std::vector<int>& ids) {
  if (table.shape().size() != 2) throw NumericError("embed_rows: table must be rank-2");
  const int v = table.shape()[0], d = table.shape()[1];
  if (ids.empty()) throw NumericError("embed_rows: no ids");
  std::vector<double> out(ids.size() * static_cast<std::size_t>(d));
  const auto& tv = table.values();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= v) throw NumericError("embed_rows: id out of range");
    std::memcpy(&out[i * d], &tv[static_cast<std::size_t>(ids[i]) * d], sizeof(double) * d);
  }
  return make_op_result(
      Shape{static_cast<int>(ids.size()), d}, std::move(out), {table},
      [tn = table.node(), ids, d](detail::Node& n) {
        for (std::size_t i = 0; i < ids.size(); ++i) {
          for (int j = 0; j < d; ++j) {
            tn->grad[static_cast<std::size_t>(ids[i]) * d + j] += n.grad[i * d + j];
          }
        }
      },
      "embed_rows");
}

Tensor max_over_rows(const Tensor& a) {
  if (a.shape().size() != 2) throw NumericError("max_over_rows: rank-2 only");
  const int r = a.shape()[0], c = a.shape()[1];
  const auto& av = a.values();
  std::vector<double> out(c, -std::numeric_limits<double>::infinity());
  std::vector<int> arg(c, 0);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) {
      const double x = av[static_cast<std::size_t>(i) * c + j];
      if (x > out[j]) {
        out[j] = x;
        arg[j] = i;
      }
    }
  }
  return make_op_result(
      Shape{c}, std::move(out), {a},
      [an = a.node(), arg, c](detail::Node& n) {
        for (int j = 0; j < c; ++j) {
          an->grad[static_cast<std::size_t>(arg[j]) * c + j] += n.grad[j];
        }
      },
      "max_over_rows");
}

Tensor maximum(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("maximum", a.shape(), b.shape());
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(av.size());
  std::vector<std::uint8_t> pick_a(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) {
    pick_a[i] = av[i] >= bv[i];
    out[i] = pick_a[i] ? av[i] : bv[i];
  }
  return make_op_result(
      a.shape(), std::move(out), {a, b},
      [an = a.node(), bn = b.node(), pick_a = std::move(pick_a)](detail::Node& n) {
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
          if (pick_a[i]) {
            if (an->requires_grad) an->grad[i] += n.grad[i];
          } else {
            if (bn->requires_grad) bn->grad[i] += n.grad[i];
          }
        }
      },
      "maximum");
}

Tensor unfold_rows(const Tensor& a, int k) {
  if (a.shape().size() != 2) throw NumericError("unfold_rows: rank-2 only");
  const int r = a.shape()[0], c = a.shape()[1];
  if (k <= 0 || k > r) throw NumericError("unfold_rows: window " + std::to_string(k) +
                                          " over " + std::to_string(r) + " rows");
  const int windows = r - k + 1;
  const auto& av = a.values();
  std::vector<double> out(static_cast<std::size_t>(windows) * k * c);
  for (int w = 0; w < windows; ++w) {
    std::memcpy(&out[static_cast<std::size_t>(w) * k * c], &av[static_cast<std::size_t>(w) * c],
                sizeof(double) * k * c);
  }
  return make_op_result(
      Shape{windows, k * c}, std::move(out), {a},
      [an = a.node(), windows, k, c](detail::Node& n) {
        for (int w = 0; w < windows; ++w) {
          for (int i = 0; i < k * c; ++i) {
            an->grad[static_cast<std::size_t>(w) * c + i] +=
                n.grad[static_cast<std::size_t>(w) * k * c + i];
          }
        }
      },
      "unfold_rows");
}

Tensor dropout(const Tensor& a, double rate, bool training, Rng* rng) {
  if (rate < 0.0 || rate >= 1.0) throw NumericError("dropout: rate must be in [0,1)");
  if (!training || rate == 0.0) return a;
  if (!rng) throw NumericError("dropout: training mode requires an Rng");
  const double keep = 1.0 - rate;
  const auto& av = a.values();
  std::vector<double> mask(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) {
    mask[i] = rng->uniform() < rate ? 0.0 : 1.0 / keep;
  }
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * mask[i];
  return make_op_result(
      a.shape(), std::move(out), {a},
      [an = a.node(), mask = std::move(mask)](detail::Node& n) {
        for (std::size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += n.grad[i] * mask[i];
      },
      "dropout");
}

}  // namespace gsamr
