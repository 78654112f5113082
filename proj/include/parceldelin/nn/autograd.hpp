#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "parceldelin/nn/tensor.hpp"

namespace parceldelin::nn {

// A value in the computation graph. Leaves created with requires_grad are the
// trainable parameters; their grad survives across passes until zeroed.
template <typename T>
struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;

    // Lazily allocates the gradient buffer.
    Tensor<T>& grad_buffer() {
        if (grad.shape() != value.shape()) {
            grad = Tensor<T>(value.shape());
        }
        return grad;
    }
};

template <typename T>
using Var = std::shared_ptr<Node<T>>;

template <typename T>
Var<T> constant(Tensor<T> value) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    return n;
}

template <typename T>
Var<T> parameter(Tensor<T> value) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    n->requires_grad = true;
    n->grad = Tensor<T>(n->value.shape());
    return n;
}

template <typename T>
struct Parameter {
    std::string name;
    Var<T> var;
};

// Records operations in execution order; backward replays them in exact
// reverse order, accumulating gradients additively into inputs.
template <typename T>
class Tape {
public:
    // Receives the gradient and the value of the op's output.
    using BackwardFn = std::function<void(const Tensor<T>& out_grad, const Tensor<T>& out_value)>;

    Tape() = default;
    explicit Tape(bool recording) : recording_(recording) {}

    bool recording() const noexcept { return recording_; }

    // Wraps `value` as an op output. The backward closure is kept only when
    // recording is on and some input needs a gradient.
    Var<T> record(Tensor<T> value, std::initializer_list<Var<T>> inputs, BackwardFn backward);

    // Seeds d(loss)/d(loss) = 1 and runs every recorded closure in reverse.
    void backward(const Var<T>& loss);

    std::size_t size() const noexcept { return entries_.size(); }
    void clear() { entries_.clear(); }

private:
    struct Entry {
        Var<T> output;
        BackwardFn backward;
    };
    bool recording_ = true;
    std::vector<Entry> entries_;
};

template <typename T>
void zero_grad(const std::vector<Parameter<T>>& params) {
    for (const auto& p : params) {
        p.var->grad_buffer().fill(T(0));
    }
}

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace parceldelin::nn
