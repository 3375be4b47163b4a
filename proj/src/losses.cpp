#include "iarn/losses.hpp"

#include <cmath>
#include <limits>

namespace iarn {

template <class S>
BasicTensor<S> loss_r(const BasicTensor<S>& x_hat, const BasicTensor<S>& x) {
    return ops::mean(ops::abs(ops::sub(x_hat, x)));
}

template <class S>
BasicTensor<S> loss_g(const BasicTensor<S>& y_l, const BasicTensor<S>& y_bar_l) {
    return ops::mean(ops::square(ops::sub(y_l, y_bar_l)));
}

template <class S>
BasicTensor<S> loss_d(const BasicTensor<S>& z) {
    return ops::mean(ops::square(z));
}

template <class S>
BasicTensor<S> loss_i(const BasicTensor<S>& y_hat_h, const BasicTensor<S>& y_h) {
    return ops::mean(ops::square(ops::sub(y_hat_h, y_h)));
}

template <class S>
BasicTensor<S> weighted_total(const LossWeights& w, const BasicTensor<S>& r,
                              const BasicTensor<S>& g, const BasicTensor<S>& d,
                              const BasicTensor<S>& i) {
    BasicTensor<S> total = ops::mul(r, static_cast<S>(w.r));
    total = ops::add(total, ops::mul(g, static_cast<S>(w.g)));
    total = ops::add(total, ops::mul(d, static_cast<S>(w.d)));
    total = ops::add(total, ops::mul(i, static_cast<S>(w.i)));
    return total;
}

#define IARN_INSTANTIATE_LOSSES(S)                                                          \
    template BasicTensor<S> loss_r(const BasicTensor<S>&, const BasicTensor<S>&);           \
    template BasicTensor<S> loss_g(const BasicTensor<S>&, const BasicTensor<S>&);           \
    template BasicTensor<S> loss_d(const BasicTensor<S>&);                                  \
    template BasicTensor<S> loss_i(const BasicTensor<S>&, const BasicTensor<S>&);           \
    template BasicTensor<S> weighted_total(const LossWeights&, const BasicTensor<S>&,       \
                                           const BasicTensor<S>&, const BasicTensor<S>&,    \
                                           const BasicTensor<S>&);

IARN_INSTANTIATE_LOSSES(float)
IARN_INSTANTIATE_LOSSES(double)

Image luminance(const Image& img) {
    if (img.channels == 1) return img;
    if (img.channels != 3) throw ShapeError("luminance: image must have 1 or 3 channels");
    Image out(1, img.height, img.width);
    out.colorspace = Image::Colorspace::luminance;
    const float* r = img.plane(0);
    const float* g = img.plane(1);
    const float* b = img.plane(2);
    for (size_t i = 0; i < out.plane_size(); ++i)
        out.data[i] = (65.481f * r[i] + 128.553f * g[i] + 24.966f * b[i] + 16.0f) / 255.0f;
    return out;
}

double psnr(const Image& a, const Image& b, PsnrMode mode) {
    if (!a.same_shape(b)) throw ShapeError("psnr: image shapes differ");
    const Image* pa = &a;
    const Image* pb = &b;
    Image ya, yb;
    if (mode == PsnrMode::y_channel && a.channels == 3) {
        ya = luminance(a);
        yb = luminance(b);
        pa = &ya;
        pb = &yb;
    }
    double se = 0.0;
    for (size_t i = 0; i < pa->data.size(); ++i) {
        double d = static_cast<double>(pa->data[i]) - static_cast<double>(pb->data[i]);
        se += d * d;
    }
    double mse = se / static_cast<double>(pa->data.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(mse);
}

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimC1 = 0.01 * 0.01;  // (K1 * L)^2
constexpr double kSsimC2 = 0.03 * 0.03;  // (K2 * L)^2

std::vector<double> gaussian_window() {
    std::vector<double> w(kSsimWindow);
    double total = 0.0;
    for (int k = 0; k < kSsimWindow; ++k) {
        double d = k - (kSsimWindow - 1) / 2.0;
        w[k] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
        total += w[k];
    }
    for (double& v : w) v /= total;
    return w;
}

// Valid-region separable filtering: rows first, then columns.
std::vector<double> filter_valid(const std::vector<double>& img, int h, int w,
                                 const std::vector<double>& win) {
    const int vw = w - kSsimWindow + 1;
    const int vh = h - kSsimWindow + 1;
    std::vector<double> mid(static_cast<size_t>(h) * vw);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < vw; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kSsimWindow; ++k)
                acc += win[k] * img[static_cast<size_t>(y) * w + x + k];
            mid[static_cast<size_t>(y) * vw + x] = acc;
        }
    std::vector<double> out(static_cast<size_t>(vh) * vw);
    for (int y = 0; y < vh; ++y)
        for (int x = 0; x < vw; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kSsimWindow; ++k)
                acc += win[k] * mid[static_cast<size_t>(y + k) * vw + x];
            out[static_cast<size_t>(y) * vw + x] = acc;
        }
    return out;
}

}  // namespace

double ssim(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw ShapeError("ssim: image shapes differ");
    if (a.height < kSsimWindow || a.width < kSsimWindow)
        throw ShapeError("ssim: image smaller than the 11x11 window");

    Image ya = luminance(a);
    Image yb = luminance(b);
    const int h = ya.height, w = ya.width;
    const size_t n = ya.plane_size();

    std::vector<double> xa(n), xb(n), xaa(n), xbb(n), xab(n);
    for (size_t i = 0; i < n; ++i) {
        double va = ya.data[i], vb = yb.data[i];
        xa[i] = va;
        xb[i] = vb;
        xaa[i] = va * va;
        xbb[i] = vb * vb;
        xab[i] = va * vb;
    }

    const std::vector<double> win = gaussian_window();
    std::vector<double> mu_a = filter_valid(xa, h, w, win);
    std::vector<double> mu_b = filter_valid(xb, h, w, win);
    std::vector<double> e_aa = filter_valid(xaa, h, w, win);
    std::vector<double> e_bb = filter_valid(xbb, h, w, win);
    std::vector<double> e_ab = filter_valid(xab, h, w, win);

    double total = 0.0;
    for (size_t i = 0; i < mu_a.size(); ++i) {
        double ma = mu_a[i], mb = mu_b[i];
        double var_a = e_aa[i] - ma * ma;
        double var_b = e_bb[i] - mb * mb;
        double cov = e_ab[i] - ma * mb;
        double num = (2.0 * ma * mb + kSsimC1) * (2.0 * cov + kSsimC2);
        double den = (ma * ma + mb * mb + kSsimC1) * (var_a + var_b + kSsimC2);
        total += num / den;
    }
    return total / static_cast<double>(mu_a.size());
}

}  // namespace iarn
