#pragma once

#include <functional>
#include <vector>

#include "gsamr/tensor.hpp"

namespace gsamr {

// Central-difference verification of the reverse pass. `fn` must build a
// scalar output from the given leaf tensors; it is re-invoked with perturbed
// copies, so it must not capture the inputs by value elsewhere. Returns the
// maximum relative error max |analytic - numeric| / max(|analytic|, |numeric|, 1).
double grad_check(const std::function<Tensor(const std::vector<Tensor>&)>& fn,
                  const std::vector<Tensor>& inputs, double eps = 1e-5);

// Same check for existing leaf tensors (model parameters): `fn` rebuilds the
// forward pass from current parameter values each call, and the checker
// perturbs the leaves in place for the numeric side.
double grad_check_params(const std::function<Tensor()>& fn, const std::vector<Tensor>& params,
                         double eps = 1e-5);

}  // namespace gsamr
