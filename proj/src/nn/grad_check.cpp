#include "parceldelin/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace parceldelin::nn {

GradCheckResult grad_check(const std::function<Var<double>(Tape<double>&)>& loss,
                           const std::vector<Parameter<double>>& params, double eps,
                           const std::function<bool(std::size_t, std::size_t)>& skip, bool kink_guard) {
    zero_grad(params);
    {
        Tape<double> tape;
        tape.backward(loss(tape));
    }
    std::vector<Tensor<double>> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) analytic.push_back(p.var->grad);

    auto evaluate = [&] {
        Tape<double> tape(false);
        return loss(tape)->value[0];
    };

    const double centre = kink_guard ? evaluate() : 0.0;
    GradCheckResult result;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& value = params[pi].var->value;
        for (std::size_t i = 0; i < value.numel(); ++i) {
            if (skip && skip(pi, i)) continue;
            const double saved = value[i];
            value[i] = saved + eps;
            const double up = evaluate();
            value[i] = saved - eps;
            const double down = evaluate();
            value[i] = saved;
            if (kink_guard) {
                const double fwd = (up - centre) / eps, bwd = (centre - down) / eps;
                if (std::abs(fwd - bwd) > 1e-3 * (std::abs(fwd) + std::abs(bwd)) + 1e-7) {
                    ++result.kinks;
                    continue;
                }
            }
            const double numeric = (up - down) / (2.0 * eps);
            const double a = analytic[pi][i];
            const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
            ++result.checked;
            if (rel > result.max_rel_error || result.checked == 1) {
                result.max_rel_error = std::max(result.max_rel_error, rel);
                if (rel >= result.max_rel_error) {
                    result.worst_param = params[pi].name;
                    result.worst_index = i;
                    result.analytic = a;
                    result.numeric = numeric;
                }
            }
        }
    }
    return result;
}

}  // namespace parceldelin::nn
