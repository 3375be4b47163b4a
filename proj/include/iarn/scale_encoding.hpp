#pragma once

#include "iarn/resampler.hpp"
#include "iarn/tensor.hpp"

namespace iarn {

// Per-pixel 4-channel conditioning field: channels 0/1 hold the raw
// horizontal/vertical scale factors, channels 2/3 the distance from each
// pixel to the closest resampled pixel at or beyond it, normalized by the
// resampled pixel size so values lie in [0,1).
struct ScaleEncodingField {
    Tensor field;  // [4,H,W]
    ScalePair scale;

    int height() const { return field.dim(1); }
    int width() const { return field.dim(2); }
};

// `scale` is the realized scale (HR extent / LR extent); the input pixel
// size is 1 and the resampled pixel size equals the scale factor.
ScaleEncodingField encode(int h, int w, ScalePair scale);

// True iff fieldA's top-left sub-field equals fieldB exactly. Fields from
// different scales are not comparable.
bool crop_consistency_check(const ScaleEncodingField& a, const ScaleEncodingField& b);

// Distance for a single index, same arithmetic as encode() uses.
double encode_distance(int index, double resampled_pixel_size);

}  // namespace iarn
