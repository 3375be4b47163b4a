#include "iarn/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace iarn {

namespace {

std::atomic<uint64_t> g_next_node_id{1};

int64_t shape_product(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw ShapeError("non-positive extent in " + shape_string(shape));
        n *= d;
    }
    return n;
}

}  // namespace

std::string shape_string(const std::vector<int>& shape) {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

template <class S>
static std::shared_ptr<TensorImpl<S>> make_impl(std::vector<int> shape, std::vector<S> values,
                                                bool requires_grad) {
    auto impl = std::make_shared<TensorImpl<S>>();
    impl->shape = std::move(shape);
    impl->values = std::move(values);
    impl->requires_grad = requires_grad;
    impl->id = g_next_node_id.fetch_add(1, std::memory_order_relaxed);
    return impl;
}

template <class S>
BasicTensor<S> BasicTensor<S>::zeros(std::vector<int> shape, bool requires_grad) {
    int64_t n = shape_product(shape);
    BasicTensor t;
    t.impl_ = make_impl<S>(std::move(shape), std::vector<S>(static_cast<size_t>(n), S(0)),
                           requires_grad);
    return t;
}

template <class S>
BasicTensor<S> BasicTensor<S>::full(std::vector<int> shape, S value, bool requires_grad) {
    int64_t n = shape_product(shape);
    BasicTensor t;
    t.impl_ = make_impl<S>(std::move(shape), std::vector<S>(static_cast<size_t>(n), value),
                           requires_grad);
    return t;
}

template <class S>
BasicTensor<S> BasicTensor<S>::from_values(std::vector<int> shape, std::vector<S> values,
                                           bool requires_grad) {
    int64_t n = shape_product(shape);
    if (n != static_cast<int64_t>(values.size()))
        throw ShapeError("value count " + std::to_string(values.size()) + " does not match " +
                         shape_string(shape));
    BasicTensor t;
    t.impl_ = make_impl<S>(std::move(shape), std::move(values), requires_grad);
    return t;
}

template <class S>
BasicTensor<S> BasicTensor<S>::scalar(S value) {
    return from_values({1}, {value});
}

template <class S>
std::span<S> BasicTensor<S>::mutable_values() {
    if (!impl_->is_leaf) throw GraphError("mutable_values on a non-leaf tensor");
    return impl_->values;
}

template <class S>
std::span<S> BasicTensor<S>::mutable_grad() {
    impl_->ensure_grad();
    return impl_->grad;
}

template <class S>
void BasicTensor<S>::zero_grad() {
    if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), S(0));
}

template <class S>
S BasicTensor<S>::item() const {
    if (size() != 1) throw ShapeError("item() on tensor of shape " + shape_string(shape()));
    return impl_->values[0];
}

template class BasicTensor<float>;
template class BasicTensor<double>;

namespace ops {

namespace {

// Builds the output node; records graph links only when a gradient will flow.
template <class S>
BasicTensor<S> make_node(std::vector<int> shape, std::vector<S> values,
                         std::vector<BasicTensor<S>> parents,
                         std::function<void()> (*bind_backward)(TensorImpl<S>*,
                                                                std::vector<BasicTensor<S>>&)) {
    bool needs_grad = false;
    for (const auto& p : parents) needs_grad = needs_grad || p.requires_grad();

    BasicTensor<S> out = BasicTensor<S>::from_values(std::move(shape), std::move(values));
    out.impl()->is_leaf = false;
    if (needs_grad) {
        out.impl()->requires_grad = true;
        out.impl()->backward_fn = bind_backward(out.impl().get(), parents);
        for (auto& p : parents) out.impl()->parents.push_back(p.impl());
    }
    return out;
}

template <class S>
void check_same_shape(const char* op, const BasicTensor<S>& a, const BasicTensor<S>& b) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(op) + ": operand shapes " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()) + " differ");
}

enum class Broadcast { none, a_scalar, b_scalar };

template <class S>
Broadcast binary_broadcast(const char* op, const BasicTensor<S>& a, const BasicTensor<S>& b) {
    if (a.shape() == b.shape()) return Broadcast::none;
    if (a.is_scalar()) return Broadcast::a_scalar;
    if (b.is_scalar()) return Broadcast::b_scalar;
    throw ShapeError(std::string(op) + ": operand shapes " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()) + " differ and neither is scalar");
}

template <class S>
void accumulate(TensorImpl<S>* node, const S* src, int64_t n) {
    node->ensure_grad();
    S* g = node->grad.data();
    for (int64_t i = 0; i < n; ++i) g[i] += src[i];
}

template <class S>
void accumulate_scaled(TensorImpl<S>* node, const S* src, S k, int64_t n) {
    node->ensure_grad();
    S* g = node->grad.data();
    for (int64_t i = 0; i < n; ++i) g[i] += k * src[i];
}

}  // namespace

template <class S>
BasicTensor<S> add(const BasicTensor<S>& a, const BasicTensor<S>& b) {
    Broadcast bc = binary_broadcast("add", a, b);
    const auto& av = a.values();
    const auto& bv = b.values();
    int64_t n = bc == Broadcast::a_scalar ? b.size() : a.size();
    std::vector<S> out(static_cast<size_t>(n));
    if (bc == Broadcast::none) {
        for (int64_t i = 0; i < n; ++i) out[i] = av[i] + bv[i];
    } else if (bc == Broadcast::a_scalar) {
        for (int64_t i = 0; i < n; ++i) out[i] = av[0] + bv[i];
    } else {
        for (int64_t i = 0; i < n; ++i) out[i] = av[i] + bv[0];
    }
    auto shape = bc == Broadcast::a_scalar ? b.shape() : a.shape();
    return make_node<S>(
        shape, std::move(out), {a, b}, +[](TensorImpl<S>* self, std::vector<BasicTensor<S>>& ps) {
            auto pa = ps[0].impl();
            auto pb = ps[1].impl();
            return std::function<void()>([self, pa, pb]() {
                int64_t n = self->size();
                const S* g = self->grad.data();
                if (pa->requires_grad) {
                    if (pa->size() == n) {
                        accumulate(pa.get(), g, n);
                    } else {
                        S total = 0;
                        for (int64_t i = 0; i < n; ++i) total += g[i];
                        pa->ensure_grad();
                        pa->grad[0] += total;
                    }
                }
                if (pb->requires_grad) {
                    if (pb->size() == n) {
                        accumulate(pb.get(), g, n);
                    } else {
                        S total = 0;
                        for (int64_t i = 0; i < n; ++i) total += g[i];
                        pb->ensure_grad();
                        pb->grad[0] += total;
                    }
                }
            });
        });
}

template <class S>
BasicTensor<S> sub(const BasicTensor<S>& a, const BasicTensor<S>& b) {
    return add(a, neg(b));
}

template <class S>
BasicTensor<S> mul(const BasicTensor<S>& a, const BasicTensor<S>& b) {
    Broadcast bc = binary_broadcast("mul", a, b);
    const auto& av = a.values();
    const auto& bv = b.values();
    int64_t n = bc == Broadcast::a_scalar ? b.size() : a.size();
    std::vector<S> out(static_cast<size_t>(n));
    if (bc == Broadcast::none) {
        for (int64_t i = 0; i < n; ++i) out[i] = av[i] * bv[i];
    } else if (bc == Broadcast::a_scalar) {
        for (int64_t i = 0; i < n; ++i) out[i] = av[0] * bv[i];
    } else {
        for (int64_t i = 0; i < n; ++i) out[i] = av[i] * bv[0];
    }
    auto shape = bc == Broadcast::a_scalar ? b.shape() : a.shape();
    return make_node<S>(
        shape, std::move(out), {a, b}, +[](TensorImpl<S>* self, std::vector<BasicTensor<S>>& ps) {
            auto pa = ps[0].impl();
            auto pb = ps[1].impl();
            return std::function<void()>([self, pa, pb]() {
                int64_t n = self->size();
                const S* g = self->grad.data();
                const S* av = pa->values.data();
                const S* bv = pb->values.data();
                if (pa->requires_grad) {
                    pa->ensure_grad();
                    S* ga = pa->grad.data();
                    if (pa->size() == n) {
                        if (pb->size() == n) {
                            for (int64_t i = 0; i < n; ++i) ga[i] += g[i] * bv[i];
                        } else {
                            for (int64_t i = 0; i < n; ++i) ga[i] += g[i] * bv[0];
                        }
                    } else {
                        S total = 0;
                        for (int64_t i = 0; i < n; ++i) total += g[i] * bv[i];
                        ga[0] += total;
                    }
                }
                if (pb->requires_grad) {
                    pb->ensure_grad();
                    S* gb = pb->grad.data();
                    if (pb->size() == n) {
                        if (pa->size() == n) {
                            for (int64_t i = 0; i < n; ++i) gb[i] += g[i] * av[i];
                        } else {
                            for (int64_t i = 0; i < n; ++i) gb[i] += g[i] * av[0];
                        }
                    } else {
                        S total = 0;
                        for (int64_t i = 0; i < n; ++i) total += g[i] * av[i];
                        gb[0] += total;
                    }
                }
            });
        });
}

template <class S>
BasicTensor<S> add(const BasicTensor<S>& a, S b) {
    return add(a, BasicTensor<S>::scalar(b));
}

template <class S>
BasicTensor<S> mul(const BasicTensor<S>& a, S b) {
    return mul(a, BasicTensor<S>::scalar(b));
}

namespace {

// Unary elementwise node: fwd computes out[i], dfn computes dout/din from
// (input value, output value).
template <class S, class Fwd, class Dfn>
BasicTensor<S> unary_op(const BasicTensor<S>& a, Fwd fwd, Dfn dfn) {
    int64_t n = a.size();
    const auto& av = a.values();
    std::vector<S> out(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) out[i] = fwd(av[i]);

    BasicTensor<S> result = BasicTensor<S>::from_values(a.shape(), std::move(out));
    result.impl()->is_leaf = false;
    if (a.requires_grad()) {
        result.impl()->requires_grad = true;
        auto pa = a.impl();
        TensorImpl<S>* self = result.impl().get();
        result.impl()->backward_fn = [self, pa, dfn]() {
            int64_t n = self->size();
            const S* g = self->grad.data();
            const S* in = pa->values.data();
            const S* out = self->values.data();
            pa->ensure_grad();
            S* ga = pa->grad.data();
            for (int64_t i = 0; i < n; ++i) ga[i] += g[i] * dfn(in[i], out[i]);
        };
        result.impl()->parents.push_back(pa);
    }
    return result;
}

}  // namespace

template <class S>
BasicTensor<S> neg(const BasicTensor<S>& a) {
    return unary_op<S>(
        a, [](S x) { return -x; }, [](S, S) { return S(-1); });
}

template <class S>
BasicTensor<S> exp(const BasicTensor<S>& a) {
    return unary_op<S>(
        a, [](S x) { return std::exp(x); }, [](S, S y) { return y; });
}

template <class S>
BasicTensor<S> sigmoid(const BasicTensor<S>& a) {
    return unary_op<S>(
        a,
        [](S x) {
            if (x >= S(0)) return S(1) / (S(1) + std::exp(-x));
            S e = std::exp(x);
            return e / (S(1) + e);
        },
        [](S, S y) { return y * (S(1) - y); });
}

template <class S>
BasicTensor<S> leaky_relu(const BasicTensor<S>& a, S negative_slope) {
    return unary_op<S>(
        a, [negative_slope](S x) { return x > S(0) ? x : negative_slope * x; },
        [negative_slope](S x, S) { return x > S(0) ? S(1) : negative_slope; });
}

template <class S>
BasicTensor<S> abs(const BasicTensor<S>& a) {
    return unary_op<S>(
        a, [](S x) { return std::abs(x); },
        [](S x, S) { return x > S(0) ? S(1) : (x < S(0) ? S(-1) : S(0)); });
}

template <class S>
BasicTensor<S> square(const BasicTensor<S>& a) {
    return unary_op<S>(
        a, [](S x) { return x * x; }, [](S x, S) { return S(2) * x; });
}

template <class S>
BasicTensor<S> sum(const BasicTensor<S>& a) {
    const auto& av = a.values();
    S total = 0;
    for (int64_t i = 0; i < a.size(); ++i) total += av[i];

    BasicTensor<S> result = BasicTensor<S>::from_values({1}, {total});
    result.impl()->is_leaf = false;
    if (a.requires_grad()) {
        result.impl()->requires_grad = true;
        auto pa = a.impl();
        TensorImpl<S>* self = result.impl().get();
        result.impl()->backward_fn = [self, pa]() {
            S g = self->grad[0];
            pa->ensure_grad();
            S* ga = pa->grad.data();
            int64_t n = pa->size();
            for (int64_t i = 0; i < n; ++i) ga[i] += g;
        };
        result.impl()->parents.push_back(pa);
    }
    return result;
}

template <class S>
BasicTensor<S> mean(const BasicTensor<S>& a) {
    return mul(sum(a), S(1) / static_cast<S>(a.size()));
}

template <class S>
BasicTensor<S> concat_channels(const std::vector<BasicTensor<S>>& parts) {
    if (parts.empty()) throw ShapeError("concat_channels: no inputs");
    for (const auto& p : parts)
        if (p.rank() != 4)
            throw ShapeError("concat_channels: expected rank-4 input, got " +
                             shape_string(p.shape()));
    int n = parts[0].dim(0), h = parts[0].dim(2), w = parts[0].dim(3);
    int c_total = 0;
    for (const auto& p : parts) {
        if (p.dim(0) != n || p.dim(2) != h || p.dim(3) != w)
            throw ShapeError("concat_channels: mismatched batch/spatial dims " +
                             shape_string(p.shape()) + " vs " + shape_string(parts[0].shape()));
        c_total += p.dim(1);
    }

    int64_t plane = static_cast<int64_t>(h) * w;
    std::vector<S> out(static_cast<size_t>(n) * c_total * plane);
    bool needs_grad = false;
    for (const auto& p : parts) needs_grad = needs_grad || p.requires_grad();

    int64_t c_off = 0;
    for (const auto& p : parts) {
        int c = p.dim(1);
        const S* src = p.values().data();
        for (int b = 0; b < n; ++b) {
            S* dst = out.data() + (static_cast<int64_t>(b) * c_total + c_off) * plane;
            std::copy(src + static_cast<int64_t>(b) * c * plane,
                      src + static_cast<int64_t>(b + 1) * c * plane, dst);
        }
        c_off += c;
    }

    BasicTensor<S> result = BasicTensor<S>::from_values({n, c_total, h, w}, std::move(out));
    result.impl()->is_leaf = false;
    if (needs_grad) {
        result.impl()->requires_grad = true;
        std::vector<std::shared_ptr<TensorImpl<S>>> ps;
        for (const auto& p : parts) ps.push_back(p.impl());
        TensorImpl<S>* self = result.impl().get();
        int c_total_c = c_total;
        result.impl()->backward_fn = [self, ps, n, plane, c_total_c]() {
            const S* g = self->grad.data();
            int64_t c_off = 0;
            for (const auto& p : ps) {
                int c = p->shape[1];
                if (p->requires_grad) {
                    p->ensure_grad();
                    for (int b = 0; b < n; ++b) {
                        const S* src = g + (static_cast<int64_t>(b) * c_total_c + c_off) * plane;
                        S* dst = p->grad.data() + static_cast<int64_t>(b) * c * plane;
                        int64_t m = static_cast<int64_t>(c) * plane;
                        for (int64_t i = 0; i < m; ++i) dst[i] += src[i];
                    }
                }
                c_off += c;
            }
        };
        result.impl()->parents = std::move(ps);
    }
    return result;
}

namespace {

// Zero-pads each [H,W] plane by `pad` on every border.
template <class S>
std::vector<S> pad_planes(const S* src, int planes, int h, int w, int pad) {
    int ph = h + 2 * pad, pw = w + 2 * pad;
    std::vector<S> out(static_cast<size_t>(planes) * ph * pw, S(0));
    for (int p = 0; p < planes; ++p) {
        const S* sp = src + static_cast<int64_t>(p) * h * w;
        S* dp = out.data() + static_cast<int64_t>(p) * ph * pw;
        for (int y = 0; y < h; ++y)
            std::copy(sp + static_cast<int64_t>(y) * w, sp + static_cast<int64_t>(y + 1) * w,
                      dp + static_cast<int64_t>(y + pad) * pw + pad);
    }
    return out;
}

template <class S>
void conv2d_forward_kernel(const S* padded, const S* weight, const S* bias, S* out, int n_batch,
                           int c_in, int c_out, int h, int w, int d) {
    const int pw = w + 2 * d;
    const int ph = h + 2 * d;
    for (int n = 0; n < n_batch; ++n) {
        const S* pad_n = padded + static_cast<int64_t>(n) * c_in * ph * pw;
        for (int o = 0; o < c_out; ++o) {
            S* out_plane = out + (static_cast<int64_t>(n) * c_out + o) * h * w;
            std::fill(out_plane, out_plane + static_cast<int64_t>(h) * w, bias[o]);
            for (int c = 0; c < c_in; ++c) {
                const S* pad_c = pad_n + static_cast<int64_t>(c) * ph * pw;
                const S* w_oc = weight + (static_cast<int64_t>(o) * c_in + c) * 9;
                for (int ky = 0; ky < 3; ++ky) {
                    // kx taps applied left to right keeps the per-pixel
                    // accumulation order at (c, ky, kx).
                    const S w0 = w_oc[ky * 3 + 0];
                    const S w1 = w_oc[ky * 3 + 1];
                    const S w2 = w_oc[ky * 3 + 2];
                    for (int y = 0; y < h; ++y) {
                        const S* __restrict prow =
                            pad_c + static_cast<int64_t>(y + ky * d) * pw;
                        S* __restrict orow = out_plane + static_cast<int64_t>(y) * w;
                        for (int x = 0; x < w; ++x)
                            orow[x] = ((orow[x] + w0 * prow[x]) + w1 * prow[x + d]) +
                                      w2 * prow[x + 2 * d];
                    }
                }
            }
        }
    }
}

}  // namespace

template <class S>
BasicTensor<S> conv2d(const BasicTensor<S>& input, const ConvSpec& spec,
                      const BasicTensor<S>& weight, const BasicTensor<S>& bias) {
    if (input.rank() != 4)
        throw ShapeError("conv2d: input must be [N,C,H,W], got " + shape_string(input.shape()));
    if (weight.rank() != 4 || weight.dim(2) != 3 || weight.dim(3) != 3)
        throw ShapeError("conv2d: weight must be [O,C,3,3], got " + shape_string(weight.shape()));
    if (spec.dilation < 1) throw ShapeError("conv2d: dilation must be positive");
    if (input.dim(1) != spec.in_channels)
        throw ShapeError("conv2d: input channel dim is " + std::to_string(input.dim(1)) +
                         ", spec expects " + std::to_string(spec.in_channels));
    if (weight.dim(0) != spec.out_channels || weight.dim(1) != spec.in_channels)
        throw ShapeError("conv2d: weight dims " + shape_string(weight.shape()) +
                         " do not match spec [" + std::to_string(spec.out_channels) + "," +
                         std::to_string(spec.in_channels) + ",3,3]");
    if (bias.rank() != 1 || bias.dim(0) != spec.out_channels)
        throw ShapeError("conv2d: bias dim is " + shape_string(bias.shape()) + ", expected [" +
                         std::to_string(spec.out_channels) + "]");

    const int n_batch = input.dim(0), c_in = input.dim(1), h = input.dim(2), w = input.dim(3);
    const int c_out = spec.out_channels, d = spec.dilation;

    std::vector<S> padded = pad_planes(input.values().data(), n_batch * c_in, h, w, d);
    std::vector<S> out(static_cast<size_t>(n_batch) * c_out * h * w);
    conv2d_forward_kernel(padded.data(), weight.values().data(), bias.values().data(), out.data(),
                          n_batch, c_in, c_out, h, w, d);

    BasicTensor<S> result = BasicTensor<S>::from_values({n_batch, c_out, h, w}, std::move(out));
    result.impl()->is_leaf = false;

    bool needs_grad = input.requires_grad() || weight.requires_grad() || bias.requires_grad();
    if (!needs_grad) return result;

    result.impl()->requires_grad = true;
    auto pin = input.impl();
    auto pwt = weight.impl();
    auto pbs = bias.impl();
    TensorImpl<S>* self = result.impl().get();
    auto shared_padded = std::make_shared<std::vector<S>>(std::move(padded));
    result.impl()->backward_fn = [self, pin, pwt, pbs, shared_padded, n_batch, c_in, c_out, h, w,
                                  d]() {
        const S* g = self->grad.data();
        const int ph = h + 2 * d, pw = w + 2 * d;
        const int64_t plane = static_cast<int64_t>(h) * w;
        const int64_t pplane = static_cast<int64_t>(ph) * pw;

        if (pbs->requires_grad) {
            pbs->ensure_grad();
            for (int o = 0; o < c_out; ++o) {
                S total = 0;
                for (int n = 0; n < n_batch; ++n) {
                    const S* gp = g + (static_cast<int64_t>(n) * c_out + o) * plane;
                    for (int64_t i = 0; i < plane; ++i) total += gp[i];
                }
                pbs->grad[o] += total;
            }
        }

        if (pwt->requires_grad) {
            pwt->ensure_grad();
            const S* pad = shared_padded->data();
            S* gw = pwt->grad.data();
            // Nine lane-accumulator rows per (c, o) pair gather all kernel
            // taps in one pass over the planes; the serial fold over lanes
            // keeps the result deterministic while the x loops vectorize.
            std::vector<S> lanes(static_cast<size_t>(9) * w);
            for (int c = 0; c < c_in; ++c) {
                for (int o = 0; o < c_out; ++o) {
                    std::fill(lanes.begin(), lanes.end(), S(0));
                    for (int n = 0; n < n_batch; ++n) {
                        const S* gp = g + (static_cast<int64_t>(n) * c_out + o) * plane;
                        const S* pp = pad + (static_cast<int64_t>(n) * c_in + c) * pplane;
                        for (int y = 0; y < h; ++y) {
                            const S* __restrict grow = gp + static_cast<int64_t>(y) * w;
                            for (int ky = 0; ky < 3; ++ky) {
                                const S* prow_base =
                                    pp + static_cast<int64_t>(y + ky * d) * pw;
                                for (int kx = 0; kx < 3; ++kx) {
                                    const S* __restrict prow = prow_base + kx * d;
                                    S* __restrict lane =
                                        lanes.data() + static_cast<size_t>(ky * 3 + kx) * w;
                                    for (int x = 0; x < w; ++x) lane[x] += grow[x] * prow[x];
                                }
                            }
                        }
                    }
                    for (int k = 0; k < 9; ++k) {
                        const S* lane = lanes.data() + static_cast<size_t>(k) * w;
                        S total = 0;
                        for (int x = 0; x < w; ++x) total += lane[x];
                        gw[(static_cast<int64_t>(o) * c_in + c) * 9 + k] += total;
                    }
                }
            }
        }

        if (pin->requires_grad) {
            pin->ensure_grad();
            // d(input) is a correlation of the padded output gradient with
            // the kernel flipped and transposed over (o, c); reuse the
            // forward kernel.
            const S* wt = pwt->values.data();
            std::vector<S> flipped(static_cast<size_t>(c_in) * c_out * 9);
            for (int o = 0; o < c_out; ++o)
                for (int c = 0; c < c_in; ++c)
                    for (int k = 0; k < 9; ++k)
                        flipped[(static_cast<int64_t>(c) * c_out + o) * 9 + k] =
                            wt[(static_cast<int64_t>(o) * c_in + c) * 9 + (8 - k)];
            std::vector<S> gpad = pad_planes(g, n_batch * c_out, h, w, d);
            std::vector<S> zero_bias(static_cast<size_t>(c_in), S(0));
            std::vector<S> din(static_cast<size_t>(n_batch) * c_in * plane);
            conv2d_forward_kernel(gpad.data(), flipped.data(), zero_bias.data(), din.data(),
                                  n_batch, c_out, c_in, h, w, d);
            S* gi = pin->grad.data();
            const int64_t total = static_cast<int64_t>(n_batch) * c_in * plane;
            for (int64_t i = 0; i < total; ++i) gi[i] += din[i];
        }
    };
    result.impl()->parents = {pin, pwt, pbs};
    return result;
}

template <class S>
BasicTensor<S> tile_batch(const BasicTensor<S>& a, int n) {
    if (a.rank() != 4 || a.dim(0) != 1)
        throw ShapeError("tile_batch: expected [1,C,H,W], got " + shape_string(a.shape()));
    int64_t m = a.size();
    std::vector<S> out(static_cast<size_t>(m) * n);
    for (int b = 0; b < n; ++b)
        std::copy(a.values().begin(), a.values().end(), out.begin() + b * m);
    auto result =
        BasicTensor<S>::from_values({n, a.dim(1), a.dim(2), a.dim(3)}, std::move(out));
    result.impl()->is_leaf = false;
    return result;
}

template <class S>
bool all_finite(const BasicTensor<S>& a) {
    for (S v : a.values())
        if (!std::isfinite(v)) return false;
    return true;
}

#define IARN_INSTANTIATE_OPS(S)                                                              \
    template BasicTensor<S> add(const BasicTensor<S>&, const BasicTensor<S>&);               \
    template BasicTensor<S> sub(const BasicTensor<S>&, const BasicTensor<S>&);               \
    template BasicTensor<S> mul(const BasicTensor<S>&, const BasicTensor<S>&);               \
    template BasicTensor<S> add(const BasicTensor<S>&, S);                                   \
    template BasicTensor<S> mul(const BasicTensor<S>&, S);                                   \
    template BasicTensor<S> neg(const BasicTensor<S>&);                                      \
    template BasicTensor<S> exp(const BasicTensor<S>&);                                      \
    template BasicTensor<S> sigmoid(const BasicTensor<S>&);                                  \
    template BasicTensor<S> leaky_relu(const BasicTensor<S>&, S);                            \
    template BasicTensor<S> abs(const BasicTensor<S>&);                                      \
    template BasicTensor<S> square(const BasicTensor<S>&);                                   \
    template BasicTensor<S> sum(const BasicTensor<S>&);                                      \
    template BasicTensor<S> mean(const BasicTensor<S>&);                                     \
    template BasicTensor<S> concat_channels(const std::vector<BasicTensor<S>>&);             \
    template BasicTensor<S> conv2d(const BasicTensor<S>&, const ConvSpec&,                   \
                                   const BasicTensor<S>&, const BasicTensor<S>&);            \
    template BasicTensor<S> tile_batch(const BasicTensor<S>&, int);                          \
    template bool all_finite(const BasicTensor<S>&);

IARN_INSTANTIATE_OPS(float)
IARN_INSTANTIATE_OPS(double)

}  // namespace ops

template <class S>
void backward(const BasicTensor<S>& loss) {
    if (!loss.is_scalar())
        throw ShapeError("backward: loss must be scalar, got " + shape_string(loss.shape()));
    auto root = loss.impl();
    if (root->consumed) throw GraphError("backward: graph already consumed");
    if (!root->requires_grad) return;  // nothing tracked

    // Reachable graph nodes, processed in reverse creation order so every
    // node's output gradient is complete before its backward function runs.
    // Shared ownership keeps nodes alive while graph edges are torn down.
    std::vector<std::shared_ptr<TensorImpl<S>>> nodes;
    std::unordered_set<TensorImpl<S>*> seen;
    std::vector<std::shared_ptr<TensorImpl<S>>> stack{root};
    seen.insert(root.get());
    while (!stack.empty()) {
        std::shared_ptr<TensorImpl<S>> cur = stack.back();
        stack.pop_back();
        if (cur->consumed)
            throw GraphError("backward: graph already consumed (node " +
                             std::to_string(cur->id) + ")");
        nodes.push_back(cur);
        for (const auto& p : cur->parents)
            if (!p->is_leaf && seen.insert(p.get()).second) stack.push_back(p);
    }
    std::sort(nodes.begin(), nodes.end(),
              [](const std::shared_ptr<TensorImpl<S>>& a,
                 const std::shared_ptr<TensorImpl<S>>& b) { return a->id > b->id; });

    root->ensure_grad();
    root->grad[0] = S(1);
    for (const auto& node : nodes) {
        if (node->backward_fn) node->backward_fn();
        node->consumed = true;
    }
    // Release the graph; leaf gradients stay behind.
    for (const auto& node : nodes) {
        node->backward_fn = nullptr;
        node->parents.clear();
        node->grad.clear();
        node->grad.shrink_to_fit();
    }
}

template void backward(const BasicTensor<float>&);
template void backward(const BasicTensor<double>&);

}  // namespace iarn
