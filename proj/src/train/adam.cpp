#include "parceldelin/train/adam.hpp"

#include <cmath>

#include "parceldelin/common/error.hpp"

namespace parceldelin::train {

template <typename T>
AdamState<T> make_adam_state(const std::vector<nn::Parameter<T>>& params, AdamOptions options) {
    AdamState<T> s;
    s.options = options;
    for (const auto& p : params) {
        s.m.emplace_back(p.var->value.shape());
        s.v.emplace_back(p.var->value.shape());
    }
    return s;
}

template <typename T>
void adam_step(const std::vector<nn::Parameter<T>>& params, AdamState<T>& state, double lr) {
    if (state.m.size() != params.size() || state.v.size() != params.size()) {
        throw ShapeError("adam_step: optimizer state holds " + std::to_string(state.m.size()) +
                         " moments for " + std::to_string(params.size()) + " parameters");
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
        const auto& p = params[k];
        if (state.m[k].shape() != p.var->value.shape() || state.v[k].shape() != p.var->value.shape()) {
            throw ShapeError("adam_step: moment shape mismatch for '" + p.name + "'");
        }
        const auto& g = p.var->grad_buffer();
        for (std::size_t i = 0; i < g.numel(); ++i) {
            if (!std::isfinite(static_cast<double>(g[i]))) {
                throw TrainingError("non-finite gradient in parameter '" + p.name + "' at element " +
                                    std::to_string(i));
            }
        }
    }
    const auto& o = state.options;
    state.t += 1;
    const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.t));
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& theta = params[k].var->value;
        const auto& g = params[k].var->grad;
        auto& m = state.m[k];
        auto& v = state.v[k];
        for (std::size_t i = 0; i < theta.numel(); ++i) {
            const double gi = static_cast<double>(g[i]);
            const double mi = o.beta1 * static_cast<double>(m[i]) + (1.0 - o.beta1) * gi;
            const double vi = o.beta2 * static_cast<double>(v[i]) + (1.0 - o.beta2) * gi * gi;
            m[i] = static_cast<T>(mi);
            v[i] = static_cast<T>(vi);
            const double step = lr * (mi / c1) / (std::sqrt(vi / c2) + o.eps);
            theta[i] = static_cast<T>(static_cast<double>(theta[i]) - step);
        }
    }
}

template AdamState<float> make_adam_state(const std::vector<nn::Parameter<float>>&, AdamOptions);
template AdamState<double> make_adam_state(const std::vector<nn::Parameter<double>>&, AdamOptions);
template void adam_step(const std::vector<nn::Parameter<float>>&, AdamState<float>&, double);
template void adam_step(const std::vector<nn::Parameter<double>>&, AdamState<double>&, double);

}  // namespace parceldelin::train
