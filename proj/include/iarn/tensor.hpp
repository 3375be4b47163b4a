#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "iarn/common.hpp"

namespace iarn {

// Reverse-mode autodiff over dense row-major arrays. Tensors are immutable
// once used in an expression; only leaf values (parameters) may be rewritten
// between optimizer steps, and gradient buffers accumulate with +=.
template <class S>
struct TensorImpl {
    std::vector<int> shape;
    std::vector<S> values;
    bool requires_grad = false;
    std::vector<S> grad;  // empty until first accumulation

    // Graph links, populated only when the node participates in a gradient
    // computation. Cleared after backward() consumes the graph.
    std::vector<std::shared_ptr<TensorImpl>> parents;
    std::function<void()> backward_fn;
    uint64_t id = 0;
    bool consumed = false;
    bool is_leaf = true;

    int64_t size() const { return static_cast<int64_t>(values.size()); }
    void ensure_grad() {
        if (grad.empty()) grad.assign(values.size(), S(0));
    }
};

template <class S>
class BasicTensor {
public:
    BasicTensor() = default;

    static BasicTensor zeros(std::vector<int> shape, bool requires_grad = false);
    static BasicTensor full(std::vector<int> shape, S value, bool requires_grad = false);
    static BasicTensor from_values(std::vector<int> shape, std::vector<S> values,
                                   bool requires_grad = false);
    static BasicTensor scalar(S value);

    bool defined() const { return impl_ != nullptr; }
    const std::vector<int>& shape() const { return impl_->shape; }
    int64_t size() const { return impl_->size(); }
    int dim(int axis) const { return impl_->shape.at(static_cast<size_t>(axis)); }
    int rank() const { return static_cast<int>(impl_->shape.size()); }
    bool is_scalar() const { return size() == 1; }

    bool requires_grad() const { return impl_->requires_grad; }
    bool is_leaf() const { return impl_->is_leaf; }

    std::span<const S> values() const { return impl_->values; }
    // Leaf values only; rewriting an interior node would corrupt recorded
    // gradients.
    std::span<S> mutable_values();

    bool has_grad() const { return !impl_->grad.empty(); }
    std::span<const S> grad() const { return impl_->grad; }
    std::span<S> mutable_grad();
    void zero_grad();

    S item() const;

    std::shared_ptr<TensorImpl<S>>& impl() { return impl_; }
    const std::shared_ptr<TensorImpl<S>>& impl() const { return impl_; }

private:
    std::shared_ptr<TensorImpl<S>> impl_;
};

using Tensor = BasicTensor<float>;
using TensorF64 = BasicTensor<double>;

// 3x3 convolution descriptor; padding equals dilation so spatial size is
// preserved.
struct ConvSpec {
    int in_channels = 0;
    int out_channels = 0;
    int dilation = 1;

    static constexpr int kernel = 3;
    int padding() const { return dilation; }
    int64_t weight_size() const {
        return static_cast<int64_t>(out_channels) * in_channels * kernel * kernel;
    }
    int64_t param_count() const { return weight_size() + out_channels; }
};

namespace ops {

template <class S> BasicTensor<S> add(const BasicTensor<S>& a, const BasicTensor<S>& b);
template <class S> BasicTensor<S> sub(const BasicTensor<S>& a, const BasicTensor<S>& b);
template <class S> BasicTensor<S> mul(const BasicTensor<S>& a, const BasicTensor<S>& b);
template <class S> BasicTensor<S> add(const BasicTensor<S>& a, S b);
template <class S> BasicTensor<S> mul(const BasicTensor<S>& a, S b);
template <class S> BasicTensor<S> neg(const BasicTensor<S>& a);
template <class S> BasicTensor<S> exp(const BasicTensor<S>& a);
template <class S> BasicTensor<S> sigmoid(const BasicTensor<S>& a);
template <class S> BasicTensor<S> leaky_relu(const BasicTensor<S>& a, S negative_slope = S(0.2));
template <class S> BasicTensor<S> abs(const BasicTensor<S>& a);
template <class S> BasicTensor<S> square(const BasicTensor<S>& a);
template <class S> BasicTensor<S> sum(const BasicTensor<S>& a);
template <class S> BasicTensor<S> mean(const BasicTensor<S>& a);

// Concatenation along the channel axis of [N,C,H,W] tensors.
template <class S> BasicTensor<S> concat_channels(const std::vector<BasicTensor<S>>& parts);

// input [N,C,H,W], weight [O,C,3,3], bias [O] -> [N,O,H,W]; zero padding of
// width `dilation` on each border. Per-pixel accumulation runs channel-major,
// then kernel row, then kernel column.
template <class S>
BasicTensor<S> conv2d(const BasicTensor<S>& input, const ConvSpec& spec,
                      const BasicTensor<S>& weight, const BasicTensor<S>& bias);

// Replicates [1,C,H,W] along the batch axis; constant (non-differentiable).
template <class S> BasicTensor<S> tile_batch(const BasicTensor<S>& a, int n);

template <class S> bool all_finite(const BasicTensor<S>& a);

}  // namespace ops

// Accumulates d(loss)/d(leaf) into the grad buffer of every requires_grad
// leaf. The loss must be scalar; the recorded graph is consumed.
template <class S> void backward(const BasicTensor<S>& loss);

std::string shape_string(const std::vector<int>& shape);

}  // namespace iarn
