#pragma once

#include "iarn/image.hpp"
#include "iarn/resampler.hpp"

namespace iarn {

// Decomposition of an image into a rescaling-invertible low-frequency part
// lf = u(d(x)) and the residual hf = x - lf. merge() inverts by addition.
struct SplitPair {
    Image lf;
    Image hf;
    ScalePair scale;
    ResampleMethod method = ResampleMethod::nearest;
};

SplitPair split(const Image& x, ScalePair scale, ResampleMethod method);

// Ablation variant: lf = x, hf = 0 (backbone receives the raw image on the
// LF branch and zeros on the HF branch).
SplitPair split_disabled(const Image& x, ScalePair scale, ResampleMethod method);

Image merge(const SplitPair& pair);

}  // namespace iarn
