#include "iarn/channel_split.hpp"

namespace iarn {

SplitPair split(const Image& x, ScalePair scale, ResampleMethod method) {
    SizeHW lr = output_size(x.height, x.width, scale, Direction::down);
    if (lr.h < 1 || lr.w < 1) throw ShapeError("split: LR side collapses to zero");
    Image down = resample_to(x, lr.h, lr.w, method);
    Image lf = resample_to(down, x.height, x.width, method);

    Image hf(x.channels, x.height, x.width);
    hf.colorspace = x.colorspace;
    for (size_t i = 0; i < hf.data.size(); ++i) hf.data[i] = x.data[i] - lf.data[i];

    return SplitPair{std::move(lf), std::move(hf), scale, method};
}

SplitPair split_disabled(const Image& x, ScalePair scale, ResampleMethod method) {
    Image hf(x.channels, x.height, x.width, 0.0f);
    hf.colorspace = x.colorspace;
    return SplitPair{x, std::move(hf), scale, method};
}

Image merge(const SplitPair& pair) {
    if (!pair.lf.same_shape(pair.hf))
        throw ShapeError("merge: lf and hf shapes differ");
    Image out = pair.lf;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += pair.hf.data[i];
    return out;
}

}  // namespace iarn
