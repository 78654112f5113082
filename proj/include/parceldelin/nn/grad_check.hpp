#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "parceldelin/nn/autograd.hpp"

namespace parceldelin::nn {

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    std::size_t checked = 0;
    std::size_t kinks = 0;  // elements dropped by the kink guard
};

// Compares backward() against central finite differences, in double precision.
// `loss` must rebuild the graph on the given tape and be deterministic.
// Relative error per element: |a - n| / max(1e-8, |a| + |n|).
// `skip(param_index, element)` removes elements from the check set (e.g. points
// where the function is not differentiable at the probe scale).
// With `kink_guard`, an element whose forward and backward one-sided slopes
// disagree (relu or max switching inside [x - eps, x + eps]) is counted in
// `kinks` instead of being compared. A wrong backward on a smooth piece still
// shows up, since there both slopes agree with each other but not with it.
GradCheckResult grad_check(const std::function<Var<double>(Tape<double>&)>& loss,
                           const std::vector<Parameter<double>>& params, double eps = 1e-3,
                           const std::function<bool(std::size_t, std::size_t)>& skip = {},
                           bool kink_guard = false);

}  // namespace parceldelin::nn
