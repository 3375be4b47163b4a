#include "iarn/resampler.hpp"

#include <algorithm>
#include <cmath>

namespace iarn {

SizeHW output_size(int in_h, int in_w, ScalePair scale, Direction dir) {
    if (in_h < 1 || in_w < 1) throw ShapeError("output_size: input extents must be >= 1");
    if (scale.h <= 0.0 || scale.v <= 0.0)
        throw ShapeError("output_size: scale factors must be positive");
    SizeHW out;
    if (dir == Direction::down) {
        out.h = std::max(1, round_half_up(static_cast<double>(in_h) / scale.v));
        out.w = std::max(1, round_half_up(static_cast<double>(in_w) / scale.h));
    } else {
        out.h = round_half_up(static_cast<double>(in_h) * scale.v);
        out.w = round_half_up(static_cast<double>(in_w) * scale.h);
    }
    return out;
}

ScalePair realized_scale(int hr_h, int hr_w, int lr_h, int lr_w) {
    return {static_cast<double>(hr_w) / static_cast<double>(lr_w),
            static_cast<double>(hr_h) / static_cast<double>(lr_h)};
}

double bicubic_kernel(double t) {
    constexpr double a = -0.5;
    double x = std::abs(t);
    if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
    return 0.0;
}

AxisTaps make_axis_taps(int n_in, int n_out, ResampleMethod method) {
    if (n_in < 1 || n_out < 1) throw ShapeError("resample: zero-size axis");
    AxisTaps taps;
    taps.count = method == ResampleMethod::nearest ? 1
                 : method == ResampleMethod::bilinear ? 2
                                                      : 4;
    taps.index.resize(static_cast<size_t>(n_out) * taps.count);
    taps.weight.resize(static_cast<size_t>(n_out) * taps.count);

    const double ratio = static_cast<double>(n_in) / static_cast<double>(n_out);
    auto clamp_idx = [n_in](int i) { return std::min(n_in - 1, std::max(0, i)); };

    for (int j = 0; j < n_out; ++j) {
        const double src = (j + 0.5) * ratio - 0.5;
        int* idx = taps.index.data() + static_cast<size_t>(j) * taps.count;
        double* w = taps.weight.data() + static_cast<size_t>(j) * taps.count;
        switch (method) {
            case ResampleMethod::nearest: {
                idx[0] = clamp_idx(static_cast<int>(std::floor(src + 0.5)));
                w[0] = 1.0;
                break;
            }
            case ResampleMethod::bilinear: {
                const double f = std::floor(src);
                const int i0 = static_cast<int>(f);
                const double frac = src - f;
                idx[0] = clamp_idx(i0);
                idx[1] = clamp_idx(i0 + 1);
                w[0] = 1.0 - frac;
                w[1] = frac;
                break;
            }
            case ResampleMethod::bicubic: {
                const double f = std::floor(src);
                const int i0 = static_cast<int>(f);
                const double frac = src - f;
                for (int k = 0; k < 4; ++k) {
                    idx[k] = clamp_idx(i0 - 1 + k);
                    w[k] = bicubic_kernel(frac + 1.0 - k);
                }
                break;
            }
        }
    }
    return taps;
}

namespace detail {

template <class S>
void resample_plane(const S* in, int in_h, int in_w, S* out, int out_h, int out_w,
                    const AxisTaps& ht, const AxisTaps& vt, std::vector<S>& mid) {
    mid.assign(static_cast<size_t>(in_h) * out_w, S(0));
    for (int y = 0; y < in_h; ++y) {
        const S* irow = in + static_cast<int64_t>(y) * in_w;
        S* mrow = mid.data() + static_cast<int64_t>(y) * out_w;
        for (int j = 0; j < out_w; ++j) {
            const int* idx = ht.index.data() + static_cast<size_t>(j) * ht.count;
            const double* w = ht.weight.data() + static_cast<size_t>(j) * ht.count;
            if (ht.count == 1) {
                mrow[j] = irow[idx[0]];
            } else {
                S acc = 0;
                for (int k = 0; k < ht.count; ++k) acc += static_cast<S>(w[k]) * irow[idx[k]];
                mrow[j] = acc;
            }
        }
    }
    for (int i = 0; i < out_h; ++i) {
        const int* idx = vt.index.data() + static_cast<size_t>(i) * vt.count;
        const double* w = vt.weight.data() + static_cast<size_t>(i) * vt.count;
        S* orow = out + static_cast<int64_t>(i) * out_w;
        if (vt.count == 1) {
            const S* mrow = mid.data() + static_cast<int64_t>(idx[0]) * out_w;
            std::copy(mrow, mrow + out_w, orow);
        } else {
            std::fill(orow, orow + out_w, S(0));
            for (int k = 0; k < vt.count; ++k) {
                const S wk = static_cast<S>(w[k]);
                const S* mrow = mid.data() + static_cast<int64_t>(idx[k]) * out_w;
                for (int x = 0; x < out_w; ++x) orow[x] += wk * mrow[x];
            }
        }
    }
}

template void resample_plane<float>(const float*, int, int, float*, int, int, const AxisTaps&,
                                    const AxisTaps&, std::vector<float>&);
template void resample_plane<double>(const double*, int, int, double*, int, int, const AxisTaps&,
                                     const AxisTaps&, std::vector<double>&);

}  // namespace detail

Image resample_to(const Image& img, int out_h, int out_w, ResampleMethod method) {
    if (out_h < 1 || out_w < 1) throw ShapeError("resample: zero-size output");
    if (img.channels != 1 && img.channels != 3)
        throw ShapeError("resample: image must have 1 or 3 channels");
    AxisTaps ht = make_axis_taps(img.width, out_w, method);
    AxisTaps vt = make_axis_taps(img.height, out_h, method);
    Image out(img.channels, out_h, out_w);
    out.colorspace = img.colorspace;
    std::vector<float> mid;
    for (int c = 0; c < img.channels; ++c)
        detail::resample_plane(img.plane(c), img.height, img.width, out.plane(c), out_h, out_w,
                               ht, vt, mid);
    return out;
}

Image resample(const Image& img, ScalePair scale, Direction dir, ResampleMethod method) {
    SizeHW sz = output_size(img.height, img.width, scale, dir);
    return resample_to(img, sz.h, sz.w, method);
}

template <class S>
BasicTensor<S> resample2d(const BasicTensor<S>& t, int out_h, int out_w, ResampleMethod method) {
    if (t.rank() != 4)
        throw ShapeError("resample2d: expected [N,C,H,W], got " + shape_string(t.shape()));
    if (out_h < 1 || out_w < 1) throw ShapeError("resample: zero-size output");
    const int n = t.dim(0), c = t.dim(1), in_h = t.dim(2), in_w = t.dim(3);

    auto ht = std::make_shared<AxisTaps>(make_axis_taps(in_w, out_w, method));
    auto vt = std::make_shared<AxisTaps>(make_axis_taps(in_h, out_h, method));

    std::vector<S> out(static_cast<size_t>(n) * c * out_h * out_w);
    std::vector<S> mid;
    for (int p = 0; p < n * c; ++p)
        detail::resample_plane(t.values().data() + static_cast<int64_t>(p) * in_h * in_w, in_h,
                               in_w, out.data() + static_cast<int64_t>(p) * out_h * out_w, out_h,
                               out_w, *ht, *vt, mid);

    BasicTensor<S> result = BasicTensor<S>::from_values({n, c, out_h, out_w}, std::move(out));
    result.impl()->is_leaf = false;
    if (!t.requires_grad()) return result;

    result.impl()->requires_grad = true;
    auto pin = t.impl();
    TensorImpl<S>* self = result.impl().get();
    result.impl()->backward_fn = [self, pin, ht, vt, n, c, in_h, in_w, out_h, out_w]() {
        pin->ensure_grad();
        const S* g = self->grad.data();
        std::vector<S> gmid(static_cast<size_t>(in_h) * out_w);
        for (int p = 0; p < n * c; ++p) {
            const S* gp = g + static_cast<int64_t>(p) * out_h * out_w;
            S* gi = pin->grad.data() + static_cast<int64_t>(p) * in_h * in_w;
            std::fill(gmid.begin(), gmid.end(), S(0));
            for (int i = 0; i < out_h; ++i) {
                const int* idx = vt->index.data() + static_cast<size_t>(i) * vt->count;
                const double* w = vt->weight.data() + static_cast<size_t>(i) * vt->count;
                const S* grow = gp + static_cast<int64_t>(i) * out_w;
                for (int k = 0; k < vt->count; ++k) {
                    const S wk = static_cast<S>(w[k]);
                    S* mrow = gmid.data() + static_cast<int64_t>(idx[k]) * out_w;
                    for (int x = 0; x < out_w; ++x) mrow[x] += wk * grow[x];
                }
            }
            for (int y = 0; y < in_h; ++y) {
                const S* mrow = gmid.data() + static_cast<int64_t>(y) * out_w;
                S* irow = gi + static_cast<int64_t>(y) * in_w;
                for (int j = 0; j < out_w; ++j) {
                    const int* idx = ht->index.data() + static_cast<size_t>(j) * ht->count;
                    const double* w = ht->weight.data() + static_cast<size_t>(j) * ht->count;
                    for (int k = 0; k < ht->count; ++k)
                        irow[idx[k]] += static_cast<S>(w[k]) * mrow[j];
                }
            }
        }
    };
    result.impl()->parents.push_back(pin);
    return result;
}

template BasicTensor<float> resample2d(const BasicTensor<float>&, int, int, ResampleMethod);
template BasicTensor<double> resample2d(const BasicTensor<double>&, int, int, ResampleMethod);

const char* to_string(ResampleMethod method) {
    switch (method) {
        case ResampleMethod::nearest: return "nearest";
        case ResampleMethod::bilinear: return "bilinear";
        case ResampleMethod::bicubic: return "bicubic";
    }
    return "?";
}

ResampleMethod resample_method_from_string(const std::string& name) {
    if (name == "nearest" || name == "nn") return ResampleMethod::nearest;
    if (name == "bilinear") return ResampleMethod::bilinear;
    if (name == "bicubic") return ResampleMethod::bicubic;
    throw ConfigError("unknown resample method '" + name + "'");
}

}  // namespace iarn
