#include "iarn/scale_encoding.hpp"

#include <cmath>

namespace iarn {

double encode_distance(int index, double s) {
    // Smallest k with k*s - index >= 0, evaluated in the same floating
    // arithmetic as the candidate distances so the result matches a direct
    // minimization exactly even when index/s rounds across an integer.
    double k = std::ceil(static_cast<double>(index) / s);
    while (k > 0.0 && (k - 1.0) * s - index >= 0.0) k -= 1.0;
    while (k * s - index < 0.0) k += 1.0;
    return k * s - static_cast<double>(index);
}

ScaleEncodingField encode(int h, int w, ScalePair scale) {
    if (h < 1 || w < 1) throw ShapeError("encode: extents must be >= 1");
    if (scale.h <= 0.0 || scale.v <= 0.0)
        throw ShapeError("encode: scale factors must be positive");

    std::vector<float> values(static_cast<size_t>(4) * h * w);
    const size_t plane = static_cast<size_t>(h) * w;

    std::fill(values.begin(), values.begin() + plane, static_cast<float>(scale.h));
    std::fill(values.begin() + plane, values.begin() + 2 * plane, static_cast<float>(scale.v));

    std::vector<float> dh(w), dv(h);
    for (int i = 0; i < w; ++i)
        dh[i] = static_cast<float>(encode_distance(i, scale.h) / scale.h);
    for (int j = 0; j < h; ++j)
        dv[j] = static_cast<float>(encode_distance(j, scale.v) / scale.v);

    float* ch2 = values.data() + 2 * plane;
    float* ch3 = values.data() + 3 * plane;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            ch2[static_cast<size_t>(y) * w + x] = dh[x];
            ch3[static_cast<size_t>(y) * w + x] = dv[y];
        }

    ScaleEncodingField field;
    field.field = Tensor::from_values({4, h, w}, std::move(values));
    field.scale = scale;
    return field;
}

bool crop_consistency_check(const ScaleEncodingField& a, const ScaleEncodingField& b) {
    if (a.scale != b.scale)
        throw ShapeError("crop_consistency_check: fields come from different scales");
    if (b.height() > a.height() || b.width() > a.width())
        throw ShapeError("crop_consistency_check: second field must not be larger");
    const auto av = a.field.values();
    const auto bv = b.field.values();
    const int ah = a.height(), aw = a.width();
    const int bh = b.height(), bw = b.width();
    for (int c = 0; c < 4; ++c)
        for (int y = 0; y < bh; ++y)
            for (int x = 0; x < bw; ++x) {
                float va = av[(static_cast<size_t>(c) * ah + y) * aw + x];
                float vb = bv[(static_cast<size_t>(c) * bh + y) * bw + x];
                if (va != vb) return false;
            }
    return true;
}

}  // namespace iarn
