#pragma once

#include <cmath>
#include <vector>

#include "iarn/image.hpp"
#include "iarn/resampler.hpp"
#include "iarn/tensor.hpp"

namespace testsup {

// Quintuple-loop convolution reference with the same per-pixel summation
// order (channel, then kernel row, then kernel column) as the production
// kernel, kept deliberately naive.
template <class S>
iarn::BasicTensor<S> naive_conv2d(const iarn::BasicTensor<S>& input,
                                  const iarn::BasicTensor<S>& weight,
                                  const iarn::BasicTensor<S>& bias, int dilation) {
    const int n_batch = input.dim(0), c_in = input.dim(1), h = input.dim(2), w = input.dim(3);
    const int c_out = weight.dim(0), d = dilation;
    auto in = input.values();
    auto wt = weight.values();
    auto bs = bias.values();
    std::vector<S> out(static_cast<size_t>(n_batch) * c_out * h * w);
    auto in_at = [&](int n, int c, int y, int x) -> S {
        if (y < 0 || y >= h || x < 0 || x >= w) return S(0);
        return in[((static_cast<int64_t>(n) * c_in + c) * h + y) * w + x];
    };
    for (int n = 0; n < n_batch; ++n)
        for (int o = 0; o < c_out; ++o)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    S acc = bs[o];
                    for (int c = 0; c < c_in; ++c)
                        for (int ky = 0; ky < 3; ++ky)
                            for (int kx = 0; kx < 3; ++kx)
                                acc += wt[((static_cast<int64_t>(o) * c_in + c) * 3 + ky) * 3 +
                                          kx] *
                                       in_at(n, c, y + (ky - 1) * d, x + (kx - 1) * d);
                    out[((static_cast<int64_t>(n) * c_out + o) * h + y) * w + x] = acc;
                }
    return iarn::BasicTensor<S>::from_values({n_batch, c_out, h, w}, std::move(out));
}

// Direct per-window SSIM on luminance: no separable filtering, every window
// accumulated from scratch in double.
inline double naive_ssim(const iarn::Image& a, const iarn::Image& b) {
    iarn::Image ya = iarn::luminance(a);
    iarn::Image yb = iarn::luminance(b);
    const int h = ya.height, w = ya.width;
    const int win = 11;
    const double sigma = 1.5;
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;

    double kernel[11][11];
    double ksum = 0.0;
    for (int i = 0; i < win; ++i)
        for (int j = 0; j < win; ++j) {
            double dy = i - 5.0, dx = j - 5.0;
            kernel[i][j] = std::exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma));
            ksum += kernel[i][j];
        }
    for (int i = 0; i < win; ++i)
        for (int j = 0; j < win; ++j) kernel[i][j] /= ksum;

    double total = 0.0;
    int count = 0;
    for (int y0 = 0; y0 + win <= h; ++y0)
        for (int x0 = 0; x0 + win <= w; ++x0) {
            double ma = 0, mb = 0, maa = 0, mbb = 0, mab = 0;
            for (int i = 0; i < win; ++i)
                for (int j = 0; j < win; ++j) {
                    double va = ya.at(0, y0 + i, x0 + j);
                    double vb = yb.at(0, y0 + i, x0 + j);
                    double k = kernel[i][j];
                    ma += k * va;
                    mb += k * vb;
                    maa += k * va * va;
                    mbb += k * vb * vb;
                    mab += k * va * vb;
                }
            double var_a = maa - ma * ma, var_b = mbb - mb * mb, cov = mab - ma * mb;
            total += ((2 * ma * mb + c1) * (2 * cov + c2)) /
                     ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
            ++count;
        }
    return total / count;
}

inline iarn::Image random_image(iarn::Rng& rng, int channels, int h, int w) {
    iarn::Image img(channels, h, w);
    for (float& v : img.data) v = static_cast<float>(rng.next_unit());
    return img;
}

// Deterministic "natural-ish" test image: smooth low-frequency base, a few
// soft-blended rectangles, and a faint sinusoidal texture.
inline iarn::Image synth_image(uint64_t seed, int h, int w) {
    using iarn::Image;
    iarn::Rng rng(seed);
    int gh = 5 + static_cast<int>(rng.uniform_int(4));
    int gw = 5 + static_cast<int>(rng.uniform_int(4));
    Image grid(3, gh, gw);
    for (float& v : grid.data) v = static_cast<float>(rng.uniform(0.1, 0.9));
    Image img = iarn::resample_to(grid, h, w, iarn::ResampleMethod::bicubic);

    int nrect = 3 + static_cast<int>(rng.uniform_int(4));
    for (int r = 0; r < nrect; ++r) {
        int y0 = static_cast<int>(rng.uniform_int(h - 8));
        int x0 = static_cast<int>(rng.uniform_int(w - 8));
        int rh = 6 + static_cast<int>(rng.uniform_int(h / 2));
        int rw = 6 + static_cast<int>(rng.uniform_int(w / 2));
        float col[3] = {static_cast<float>(rng.uniform(0, 1)),
                        static_cast<float>(rng.uniform(0, 1)),
                        static_cast<float>(rng.uniform(0, 1))};
        float alpha = static_cast<float>(rng.uniform(0.4, 0.9));
        for (int c = 0; c < 3; ++c)
            for (int y = y0; y < std::min(h, y0 + rh); ++y)
                for (int x = x0; x < std::min(w, x0 + rw); ++x)
                    img.at(c, y, x) = (1 - alpha) * img.at(c, y, x) + alpha * col[c];
    }

    double fy = rng.uniform(0.05, 0.45), fx = rng.uniform(0.05, 0.45);
    double phase = rng.uniform(0.0, 2.0 * M_PI);
    float amp = static_cast<float>(rng.uniform(0.03, 0.10));
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                float v = img.at(c, y, x) +
                          amp * std::sin(2.0 * M_PI * (fy * y + fx * x) + phase + c);
                img.at(c, y, x) = std::min(1.0f, std::max(0.0f, v));
            }
    return img;
}

}  // namespace testsup
