#pragma once

#include <vector>

#include "iarn/image.hpp"
#include "iarn/tensor.hpp"

namespace iarn {

enum class ResampleMethod { nearest, bilinear, bicubic };

enum class Direction { down, up };

// Horizontal (h) and vertical (v) scale factors, both > 0. Training samples
// from [1,4]; inference accepts up to 8.
struct ScalePair {
    double h = 2.0;
    double v = 2.0;

    bool symmetric() const { return h == v; }
    bool operator==(const ScalePair&) const = default;
};

struct SizeHW {
    int h = 0;
    int w = 0;
    bool operator==(const SizeHW&) const = default;
};

// Round-half-up size rule; down-direction results are clamped to >= 1.
SizeHW output_size(int in_h, int in_w, ScalePair scale, Direction dir);

// The scale actually realized by integer sizes (HR extent / LR extent); both
// the encoder and the resampler consume this so they agree exactly.
ScalePair realized_scale(int hr_h, int hr_w, int lr_h, int lr_w);

// Catmull-Rom kernel, a = -0.5.
double bicubic_kernel(double t);

// Per-axis source taps under the half-pixel-center convention
// src = (j + 0.5) * (n_in / n_out) - 0.5, with clamp-to-edge indices.
struct AxisTaps {
    int count = 0;              // taps per output sample: 1, 2 or 4
    std::vector<int> index;     // [n_out * count]
    std::vector<double> weight; // [n_out * count], sums to 1 per sample
};

AxisTaps make_axis_taps(int n_in, int n_out, ResampleMethod method);

Image resample_to(const Image& img, int out_h, int out_w, ResampleMethod method);
Image resample(const Image& img, ScalePair scale, Direction dir, ResampleMethod method);

// Differentiable resize of a [N,C,H,W] tensor (horizontal pass, then
// vertical).
template <class S>
BasicTensor<S> resample2d(const BasicTensor<S>& t, int out_h, int out_w, ResampleMethod method);

const char* to_string(ResampleMethod method);
ResampleMethod resample_method_from_string(const std::string& name);

}  // namespace iarn
