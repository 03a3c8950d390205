#include "gsamr/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "gsamr/error.hpp"

namespace gsamr {

double grad_check(const std::function<Tensor(const std::vector<Tensor>&)>& fn,
                  const std::vector<Tensor>& inputs, double eps) {
  // Analytic gradients.
  std::vector<Tensor> leaves;
  leaves.reserve(inputs.size());
  for (const Tensor& t : inputs) {
    leaves.push_back(Tensor::leaf(t.shape(), t.values(), true));
  }
  Tensor out = fn(leaves);
  if (out.numel() != 1) throw NumericError("grad_check: fn must return a scalar");
  out.backward();

  // Numeric gradients, one element at a time.
  double max_rel = 0.0;
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    const std::vector<double>& analytic = leaves[k].grad();
    std::vector<double> base = leaves[k].values();
    for (std::size_t i = 0; i < base.size(); ++i) {
      auto eval_at = [&](double v) {
        NoGradGuard ng;
        std::vector<Tensor> probe;
        probe.reserve(leaves.size());
        for (std::size_t j = 0; j < leaves.size(); ++j) {
          std::vector<double> vals = leaves[j].values();
          if (j == k) vals[i] = v;
          probe.push_back(Tensor::leaf(leaves[j].shape(), std::move(vals), false));
        }
        return fn(probe).scalar();
      };
      const double plus = eval_at(base[i] + eps);
      const double minus = eval_at(base[i] - eps);
      const double numeric = (plus - minus) / (2.0 * eps);
      const double denom = std::max({std::fabs(analytic[i]), std::fabs(numeric), 1.0});
      max_rel = std::max(max_rel, std::fabs(analytic[i] - numeric) / denom);
    }
  }
  return max_rel;
}

double grad_check_params(const std::function<Tensor()>& fn, const std::vector<Tensor>& params,
                         double eps) {
  for (Tensor p : params) p.zero_grad();
  Tensor out = fn();
  if (out.numel() != 1) throw NumericError("grad_check_params: fn must return a scalar");
  out.backward();
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const Tensor& p : params) analytic.push_back(p.grad());

  double max_rel = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor p = params[k];
    std::vector<double>& vals = p.leaf_values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double orig = vals[i];
      double plus, minus;
      {
        NoGradGuard ng;
        vals[i] = orig + eps;
        plus = fn().scalar();
        vals[i] = orig - eps;
        minus = fn().scalar();
      }
      vals[i] = orig;
      const double numeric = (plus - minus) / (2.0 * eps);
      const double a = analytic[k][i];
      const double denom = std::max({std::fabs(a), std::fabs(numeric), 1.0});
      max_rel = std::max(max_rel, std::fabs(a - numeric) / denom);
    }
  }
  return max_rel;
}

}  // namespace gsamr
