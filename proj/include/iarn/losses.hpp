#pragma once

#include "iarn/image.hpp"
#include "iarn/tensor.hpp"

namespace iarn {

// Weights of the four-term objective
//   L = w_r * L_r + w_g * L_g + w_d * L_d + w_i * L_i
// L_d is disabled by default; with zero latent replacement it has little
// effect on learning.
struct LossWeights {
    double r = 1.0;
    double g = 16.0;
    double d = 0.0;
    double i = 2.0;

    bool operator==(const LossWeights&) const = default;
};

struct LossReport {
    double total = 0.0;
    double l_r = 0.0;
    double l_g = 0.0;
    double l_d = 0.0;
    double l_i = 0.0;
};

// L1 reconstruction loss of the restored HR output.
template <class S>
BasicTensor<S> loss_r(const BasicTensor<S>& x_hat, const BasicTensor<S>& x);
// L2 guidance loss pulling the generated LR toward the bicubic reference.
template <class S>
BasicTensor<S> loss_g(const BasicTensor<S>& y_l, const BasicTensor<S>& y_bar_l);
// L2 toward the zero latent reference.
template <class S>
BasicTensor<S> loss_d(const BasicTensor<S>& z);
// L2 between the rescaling round trip u(d(y_H)) and y_H.
template <class S>
BasicTensor<S> loss_i(const BasicTensor<S>& y_hat_h, const BasicTensor<S>& y_h);

template <class S>
BasicTensor<S> weighted_total(const LossWeights& w, const BasicTensor<S>& r,
                              const BasicTensor<S>& g, const BasicTensor<S>& d,
                              const BasicTensor<S>& i);

// BT.601 full-range luminance on the [0,1] scale:
// (65.481 R + 128.553 G + 24.966 B + 16) / 255.
Image luminance(const Image& img);

enum class PsnrMode { y_channel, rgb };

// -10 log10(MSE); +inf for identical inputs.
double psnr(const Image& a, const Image& b, PsnrMode mode);

// Single-scale SSIM on luminance: 11x11 Gaussian window, sigma 1.5,
// K1 = 0.01, K2 = 0.03, L = 1, mean over the valid (un-padded) region.
double ssim(const Image& a, const Image& b);

}  // namespace iarn
