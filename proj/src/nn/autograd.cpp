#include "parceldelin/nn/autograd.hpp"

#include "parceldelin/common/error.hpp"

namespace parceldelin::nn {

template <typename T>
Var<T> Tape<T>::record(Tensor<T> value, std::initializer_list<Var<T>> inputs, BackwardFn backward) {
    auto out = std::make_shared<Node<T>>();
    out->value = std::move(value);
    if (!recording_) {
        return out;
    }
    for (const auto& in : inputs) {
        if (in && in->requires_grad) {
            out->requires_grad = true;
            break;
        }
    }
    if (out->requires_grad) {
        entries_.push_back(Entry{out, std::move(backward)});
    }
    return out;
}

template <typename T>
void Tape<T>::backward(const Var<T>& loss) {
    if (loss->value.numel() != 1) {
        throw ShapeError("backward: loss must be a scalar, got shape " + shape_str(loss->value.shape()));
    }
    if (!loss->requires_grad) {
        return;
    }
    loss->grad_buffer().fill(T(1));
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
        const Node<T>& out = *it->output;
        if (out.grad.shape() != out.value.shape()) {
            continue;  // no gradient flowed into this op
        }
        it->backward(out.grad, out.value);
    }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace parceldelin::nn
